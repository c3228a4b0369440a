//! Rasterization of planar interface curves onto a grid.

use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use super::curve::{polyline, InterfaceCurveSpec, P2};
use crate::grid::Grid;
use crate::{Error, Result};

/// Cell label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Plus,
    Minus,
    /// Cell meeting the curve.
    Gamma,
}

/// Node-level description of a rasterized interface.
#[derive(Clone, Debug)]
pub struct Partition {
    pub grid: Grid,
    /// `+1` / `-1` by side of the curve, `0` for nodes on the curve.
    pub side: Vec<i8>,
    /// Whether the node's cell meets the curve.
    pub gamma: Vec<bool>,
    /// Crossings on edges `(node, node + e_axis)` joining opposite sides:
    /// fractions of the edge from each end to the nearest crossing.
    pub cuts: BTreeMap<(usize, usize), (f64, f64)>,
    /// Nodes cut off from the grid boundary by the rasterized curve, moved to side 0.
    pub pocket_nodes: usize,
    /// Polyline used, for reference.
    pub curve: Vec<P2>,
}

impl Partition {
    pub fn label(&self, idx: usize) -> Label {
        if self.gamma[idx] || self.side[idx] == 0 {
            Label::Gamma
        } else if self.side[idx] > 0 {
            Label::Plus
        } else {
            Label::Minus
        }
    }

    pub fn count(&self, label: Label) -> usize {
        (0..self.side.len()).filter(|&i| self.label(i) == label).count()
    }
}

fn closure(curve: &[P2], radius: f64) -> Vec<P2> {
    let s = curve[0];
    let e = *curve.last().unwrap();
    let ang = |p: P2| p[1].atan2(p[0]);
    let a0 = ang(e);
    let mut a1 = ang(s);
    while a1 <= a0 {
        a1 += 2.0 * PI;
    }
    let steps = 256;
    let mut out = Vec::with_capacity(steps + 3);
    for k in 0..=steps {
        let a = a0 + (a1 - a0) * k as f64 / steps as f64;
        out.push([radius * a.cos(), radius * a.sin()]);
    }
    out
}

fn point_segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

/// Whether segment `ab` meets the closed box `[lo, hi]` (Liang–Barsky).
fn segment_meets_box(a: P2, b: P2, lo: P2, hi: P2) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        if d[k] == 0.0 {
            if a[k] < lo[k] || a[k] > hi[k] {
                return false;
            }
        } else {
            let (mut ta, mut tb) = ((lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]);
            if ta > tb {
                core::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Parameter along `pq` where it meets segment `ab`, if it does.
fn segment_intersection(p: P2, q: P2, a: P2, b: P2) -> Option<f64> {
    let r = [q[0] - p[0], q[1] - p[1]];
    let s = [b[0] - a[0], b[1] - a[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let w = [a[0] - p[0], a[1] - p[1]];
    let t = (w[0] * s[1] - w[1] * s[0]) / den;
    let u = (w[0] * r[1] - w[1] * r[0]) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(t)
}

fn segments_cross(a: P2, b: P2, c: P2, d: P2) -> bool {
    segment_intersection(a, b, c, d).is_some()
}

/// Rasterizes `spec` on a two-dimensional grid.
pub fn rasterize_interface(spec: &InterfaceCurveSpec, grid: &Grid) -> Result<Partition> {
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    let h = grid.spacing();
    let lo = [grid.origin()[0], grid.origin()[1]];
    let hi = [grid.upper(0), grid.upper(1)];
    let mut reach = 0.0f64;
    for c in [[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]] {
        reach = reach.max((c[0] * c[0] + c[1] * c[1]).sqrt());
    }
    let half_width = 0.5 * (hi[0] - lo[0]);
    let curve = polyline(spec, reach, half_width, h)?;
    let box_lo = [lo[0] - 2.0 * h, lo[1] - 2.0 * h];
    let box_hi = [hi[0] + 2.0 * h, hi[1] + 2.0 * h];

    // segments touching the grid
    let segs: Vec<usize> = (0..curve.len() - 1)
        .filter(|&i| segment_meets_box(curve[i], curve[i + 1], box_lo, box_hi))
        .collect();
    check_self_intersection(&curve, &segs)?;

    // register segments with the nodes around their samples
    let mut reg: Vec<(usize, u32)> = Vec::new();
    let nx = grid.counts()[0] as i64;
    let ny = grid.counts()[1] as i64;
    for &si in &segs {
        let (a, b) = (curve[si], curve[si + 1]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let steps = (len / (0.25 * h)).ceil().max(1.0) as usize;
        let mut last = usize::MAX;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            if p[0] < box_lo[0] || p[0] > box_hi[0] || p[1] < box_lo[1] || p[1] > box_hi[1] {
                continue;
            }
            let i = ((p[0] - lo[0]) / h).round() as i64;
            let j = ((p[1] - lo[1]) / h).round() as i64;
            let key = (i.clamp(-5, nx + 5) * (ny + 11) + j.clamp(-5, ny + 5)) as usize;
            if key == last {
                continue;
            }
            last = key;
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (ii, jj) = (i + di, j + dj);
                    if ii >= 0 && jj >= 0 && ii < nx && jj < ny {
                        reg.push((grid.index(&[ii as usize, jj as usize]), si as u32));
                    }
                }
            }
        }
    }
    reg.sort_unstable();
    reg.dedup();
    let segs_at = |node: usize| -> &[(usize, u32)] {
        let start = reg.partition_point(|&(n, _)| n < node);
        let end = reg.partition_point(|&(n, _)| n <= node);
        &reg[start..end]
    };

    // side by scanline parity over the closed polygon
    let mut poly = curve.clone();
    poly.extend(closure(&curve, 4.0 * reach));
    let mut side = vec![0i8; grid.len()];
    let mut xs: Vec<f64> = Vec::new();
    for i1 in 0..grid.counts()[1] {
        let y = grid.coordinate(1, i1);
        xs.clear();
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            if (a[1] <= y && y < b[1]) || (b[1] <= y && y < a[1]) {
                xs.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut c = 0;
        for i0 in 0..grid.counts()[0] {
            let x = grid.coordinate(0, i0);
            while c < xs.len() && xs[c] < x {
                c += 1;
            }
            side[grid.index(&[i0, i1])] = if c % 2 == 1 { 1 } else { -1 };
        }
    }

    // nodes on the curve and cells meeting it
    let mut gamma = vec![false; grid.len()];
    let mut node = 0usize;
    while node < grid.len() {
        let here = segs_at(node);
        if here.is_empty() {
            let next = reg.partition_point(|&(n, _)| n <= node);
            node = if next < reg.len() { reg[next].0 } else { grid.len() };
            continue;
        }
        let p = [grid.coordinate(0, node / grid.strides()[0]), grid.coordinate(1, node % grid.strides()[0])];
        let cell_lo = [p[0] - 0.5 * h, p[1] - 0.5 * h];
        let cell_hi = [p[0] + 0.5 * h, p[1] + 0.5 * h];
        for &(_, si) in here {
            let (a, b) = (curve[si as usize], curve[si as usize + 1]);
            if point_segment_distance(p, a, b) <= 1e-9 * h {
                side[node] = 0;
            }
            if segment_meets_box(a, b, cell_lo, cell_hi) {
                gamma[node] = true;
            }
        }
        node += 1;
    }

    let pocket_nodes = remove_pockets(grid, &mut side);
    let plus = side.iter().filter(|&&s| s > 0).count();
    let minus = side.iter().filter(|&&s| s < 0).count();
    if plus == 0 || minus == 0 {
        return Err(Error::DegenerateInterface("one phase is empty on the grid"));
    }
    if pocket_nodes * 100 > plus.min(minus) {
        return Err(Error::DegenerateInterface("rasterized curve encloses pockets"));
    }
    for i in 0..grid.len() {
        if side[i] == 0 {
            gamma[i] = true;
        }
    }

    // crossing fractions on edges joining opposite sides
    let mut cuts = BTreeMap::new();
    for p in 0..grid.len() {
        if side[p] == 0 {
            continue;
        }
        for axis in 0..2 {
            let Some(q) = grid.neighbor(p, axis, true) else { continue };
            if side[q] != -side[p] {
                continue;
            }
            let pp = grid.node_position(p);
            let qq = grid.node_position(q);
            let (pp, qq) = ([pp[0], pp[1]], [qq[0], qq[1]]);
            let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(_, si) in segs_at(p).iter().chain(segs_at(q)) {
                let (a, b) = (curve[si as usize], curve[si as usize + 1]);
                if let Some(t) = segment_intersection(pp, qq, a, b) {
                    tmin = tmin.min(t);
                    tmax = tmax.max(t);
                }
            }
            if !tmin.is_finite() {
                tmin = 0.5;
                tmax = 0.5;
            }
            cuts.insert((p, axis), (tmin, 1.0 - tmax));
        }
    }
    Ok(Partition { grid: grid.clone(), side, gamma, cuts, pocket_nodes, curve })
}

fn check_self_intersection(curve: &[P2], segs: &[usize]) -> Result<()> {
    for (x, &i) in segs.iter().enumerate() {
        let (a, b) = (curve[i], curve[i + 1]);
        let (xmin, xmax) = (a[0].min(b[0]), a[0].max(b[0]));
        let (ymin, ymax) = (a[1].min(b[1]), a[1].max(b[1]));
        for &j in &segs[x + 1..] {
            if j <= i + 1 {
                continue;
            }
            let (c, d) = (curve[j], curve[j + 1]);
            if c[0].max(d[0]) < xmin || c[0].min(d[0]) > xmax || c[1].max(d[1]) < ymin || c[1].min(d[1]) > ymax {
                continue;
            }
            if segments_cross(a, b, c, d) {
                return Err(Error::DegenerateInterface("curve self-intersects"));
            }
        }
    }
    Ok(())
}

/// Moves nodes not connected to the grid boundary within their own side to
/// side 0 and returns how many were moved.
fn remove_pockets(grid: &Grid, side: &mut [i8]) -> usize {
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::new();
    for i in 0..grid.len() {
        if side[i] != 0 && !grid.is_interior(i) {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for axis in 0..grid.dim() {
            for fwd in [true, false] {
                if let Some(j) = grid.neighbor(i, axis, fwd) {
                    if !seen[j] && side[j] == side[i] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    let mut moved = 0;
    for i in 0..grid.len() {
        if side[i] != 0 && !seen[i] {
            side[i] = 0;
            moved += 1;
        }
    }
    moved
}
