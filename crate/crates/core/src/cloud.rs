//! Interface point clouds and a bucket index for ball queries.
//!
//! A point is placed on every grid edge that leaves the support of `u` or
//! of `v`, at the crossing reconstructed from the field values. Each point
//! carries `h^{n-1} |ν_i|` for an edge along axis `i`, `ν` the unit normal
//! from the gradient of `u - v`; summed over all edges this is a
//! Crofton-type estimate of surface measure. Where the `u` and `v`
//! crossings of an edge coincide the edge gives one point.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::energy::crossing_fraction;
use crate::grid::{GridField, MAX_DIM};
use crate::pair::AdmissiblePair;

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceCloud {
    pub dim: usize,
    /// Flat coordinates, `dim` per point.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub provenance: String,
}

impl InterfaceCloud {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>, provenance: String) -> Self {
        assert_eq!(points.len(), dim * weights.len());
        InterfaceCloud { dim, points, weights, provenance }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The cloud with point `i` kept iff `keep[i]`.
    pub fn filtered(&self, keep: &[bool]) -> InterfaceCloud {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for i in 0..self.len() {
            if keep[i] {
                points.extend_from_slice(self.point(i));
                weights.push(self.weights[i]);
            }
        }
        InterfaceCloud { dim: self.dim, points, weights, provenance: self.provenance.clone() }
    }

    /// Every coordinate multiplied by `s` and every weight by `s^{n-1}`.
    pub fn dilated(&self, s: f64) -> InterfaceCloud {
        let w = s.powi(self.dim as i32 - 1);
        InterfaceCloud {
            dim: self.dim,
            points: self.points.iter().map(|p| p * s).collect(),
            weights: self.weights.iter().map(|x| x * w).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Crossing location along an edge leaving `f`'s support: fraction of the
/// edge from node `p` (inside) toward its neighbor in direction `forward`.
fn support_crossing(f: &GridField, p: usize, axis: usize, forward: bool) -> f64 {
    let far = f.grid().neighbor(p, axis, !forward).map(|m| f.value(m));
    crossing_fraction(f.value(p), far)
}

/// Normal of `u - v` at the midpoint of the edge `(p, q)`, `q` the forward node.
fn edge_normal(pair: &AdmissiblePair, p: usize, q: usize, axis: usize) -> [f64; MAX_DIM] {
    let g = pair.grid();
    let n = g.dim();
    let h = g.spacing();
    let w = |i: usize| pair.signed(i);
    let mut d = [0.0f64; MAX_DIM];
    for k in 0..n {
        if k == axis {
            d[k] = (w(q) - w(p)) / h;
            continue;
        }
        let mut acc = 0.0;
        let mut cnt = 0.0;
        for node in [p, q] {
            match (g.neighbor(node, k, true), g.neighbor(node, k, false)) {
                (Some(a), Some(b)) => {
                    acc += (w(a) - w(b)) / (2.0 * h);
                    cnt += 1.0;
                }
                (Some(a), None) => {
                    acc += (w(a) - w(node)) / h;
                    cnt += 1.0;
                }
                (None, Some(b)) => {
                    acc += (w(node) - w(b)) / h;
                    cnt += 1.0;
                }
                (None, None) => {}
            }
        }
        d[k] = if cnt > 0.0 { acc / cnt } else { 0.0 };
    }
    let norm = d[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in d[..n].iter_mut() {
            *x /= norm;
        }
    } else {
        d[axis] = 1.0;
    }
    d
}

/// Interface cloud of `pair`.
pub fn extract_interface(pair: &AdmissiblePair) -> InterfaceCloud {
    extract_interface_tagged(pair, String::new())
}

pub fn extract_interface_tagged(pair: &AdmissiblePair, provenance: String) -> InterfaceCloud {
    let g = pair.grid();
    let n = g.dim();
    let h = g.spacing();
    let hn1 = h.powi(n as i32 - 1);
    // keyed by quantized coordinates so coincident points merge
    let mut merged: BTreeMap<Vec<i64>, (Vec<f64>, f64)> = BTreeMap::new();
    let quant = 1e-7 * h;
    let mut add = |pos: &[f64], w: f64| {
        let key: Vec<i64> = pos.iter().map(|x| (x / quant).round() as i64).collect();
        let e = merged.entry(key).or_insert_with(|| (pos.to_vec(), 0.0));
        e.1 = e.1.max(w);
    };
    let mut pos_p = vec![0.0; n];
    for p in 0..g.len() {
        g.position(p, &mut pos_p);
        for axis in 0..n {
            let Some(q) = g.neighbor(p, axis, true) else { continue };
            let (up, uq, vp, vq) = (pair.u.value(p), pair.u.value(q), pair.v.value(p), pair.v.value(q));
            let u_leaves = (up > 0.0) != (uq > 0.0);
            let v_leaves = (vp > 0.0) != (vq > 0.0);
            if !u_leaves && !v_leaves {
                continue;
            }
            let nrm = edge_normal(pair, p, q, axis);
            let w = hn1 * nrm[axis].abs();
            if w == 0.0 {
                continue;
            }
            // fractions from p toward q
            let tu = u_leaves.then(|| if up > 0.0 { support_crossing(&pair.u, p, axis, true) } else { 1.0 - support_crossing(&pair.u, q, axis, false) });
            let tv = v_leaves.then(|| if vp > 0.0 { support_crossing(&pair.v, p, axis, true) } else { 1.0 - support_crossing(&pair.v, q, axis, false) });
            let opposite = u_leaves && v_leaves && ((up > 0.0 && vq > 0.0) || (vp > 0.0 && uq > 0.0));
            let mut place = |t: f64| {
                let mut y = pos_p.clone();
                y[axis] += t * h;
                add(&y, w);
            };
            match (tu, tv) {
                (Some(a), Some(b)) if opposite => place(0.5 * (a + b)),
                (Some(a), Some(b)) => {
                    place(a);
                    place(b);
                }
                (Some(a), None) | (None, Some(a)) => place(a),
                (None, None) => {}
            }
        }
    }
    let mut points = Vec::with_capacity(merged.len() * n);
    let mut weights = Vec::with_capacity(merged.len());
    for (_, (pos, w)) in merged {
        points.extend_from_slice(&pos);
        weights.push(w);
    }
    InterfaceCloud { dim: n, points, weights, provenance }
}

/// Uniform bucket grid over a cloud's bounding box.
#[derive(Clone, Debug)]
pub struct CloudIndex {
    dim: usize,
    origin: Vec<f64>,
    cell: f64,
    counts: Vec<usize>,
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl CloudIndex {
    pub fn new(cloud: &InterfaceCloud, cell: f64) -> Self {
        let n = cloud.dim;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for i in 0..cloud.len() {
            for k in 0..n {
                lo[k] = lo[k].min(cloud.point(i)[k]);
                hi[k] = hi[k].max(cloud.point(i)[k]);
            }
        }
        if cloud.is_empty() {
            lo = vec![0.0; n];
            hi = vec![0.0; n];
        }
        let counts: Vec<usize> = (0..n).map(|k| ((hi[k] - lo[k]) / cell).floor() as usize + 1).collect();
        let total: usize = counts.iter().product();
        let bucket = |p: &[f64]| {
            let mut b = 0;
            for k in 0..n {
                let c = (((p[k] - lo[k]) / cell).floor() as usize).min(counts[k] - 1);
                b = b * counts[k] + c;
            }
            b
        };
        let mut sizes = vec![0usize; total + 1];
        for i in 0..cloud.len() {
            sizes[bucket(cloud.point(i)) + 1] += 1;
        }
        for b in 0..total {
            sizes[b + 1] += sizes[b];
        }
        let starts = sizes.clone();
        let mut fill = sizes;
        let mut items = vec![0usize; cloud.len()];
        for i in 0..cloud.len() {
            let b = bucket(cloud.point(i));
            items[fill[b]] = i;
            fill[b] += 1;
        }
        CloudIndex { dim: n, origin: lo, cell, counts, starts, items }
    }

    /// Indices of points with `|y - x| ≤ r`, ascending.
    pub fn ball(&self, cloud: &InterfaceCloud, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_in_ball(cloud, x, r, |i| out.push(i));
        out.sort_unstable();
        out
    }

    pub fn for_each_in_ball(&self, cloud: &InterfaceCloud, x: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let n = self.dim;
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for k in 0..n {
            let a = ((x[k] - r - self.origin[k]) / self.cell).floor();
            let b = ((x[k] + r - self.origin[k]) / self.cell).floor();
            let max = (self.counts[k] - 1) as f64;
            if b < 0.0 || a > max {
                return;
            }
            lo[k] = a.max(0.0) as usize;
            hi[k] = b.min(max) as usize;
        }
        let r2 = r * r;
        let mut m = lo;
        loop {
            let mut b = 0;
            for k in 0..n {
                b = b * self.counts[k] + m[k];
            }
            for &i in &self.items[self.starts[b]..self.starts[b + 1]] {
                let p = cloud.point(i);
                let d2: f64 = (0..n).map(|k| (p[k] - x[k]).powi(2)).sum();
                if d2 <= r2 {
                    f(i);
                }
            }
            let mut k = n;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if m[k] < hi[k] {
                    m[k] += 1;
                    break;
                }
                m[k] = lo[k];
            }
        }
    }

    /// `μ(B_r(x))`.
    pub fn mass(&self, cloud: &InterfaceCloud, x: &[f64], r: f64) -> f64 {
        let mut m = 0.0;
        let mut idx = Vec::new();
        self.for_each_in_ball(cloud, x, r, |i| idx.push(i));
        idx.sort_unstable();
        for i in idx {
            m += cloud.weights[i];
        }
        m
    }
}

/// A cloud together with its bucket index.
#[derive(Clone, Debug)]
pub struct IndexedCloud {
    pub cloud: InterfaceCloud,
    pub index: CloudIndex,
}

impl IndexedCloud {
    /// Buckets of side `cell`; a good choice is the typical query radius.
    pub fn new(cloud: InterfaceCloud, cell: f64) -> Self {
        let index = CloudIndex::new(&cloud, cell);
        IndexedCloud { cloud, index }
    }

    pub fn ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        self.index.ball(&self.cloud, x, r)
    }

    pub fn mass(&self, x: &[f64], r: f64) -> f64 {
        self.index.mass(&self.cloud, x, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{make_truncated_linear_pair, TruncatedLinearPairSpec};
    use crate::grid::Grid;
    use crate::pair::{validate_pair, Tolerances};

    #[test]
    fn exact_pair_cloud_lies_on_the_line() {
        let g = Grid::cube(2, 1.0, 65).unwrap();
        let p = make_truncated_linear_pair(&TruncatedLinearPairSpec::axis(2, 2.0, 3.0), &g).unwrap();
        let c = extract_interface(&p);
        assert_eq!(c.len(), 65);
        assert!((0..c.len()).all(|i| c.point(i)[1] == 0.0));
        assert!((c.total_mass() - 2.0).abs() < 2.0 * g.spacing() + 1e-12);
    }

    #[test]
    fn oblique_line_mass() {
        let g = Grid::cube(2, 1.0, 129).unwrap();
        let t = 0.4f64;
        let spec = TruncatedLinearPairSpec { a: 1.0, b: 1.0, nu: vec![-t.sin(), t.cos()], center: vec![0.013, 0.0] };
        let p = make_truncated_linear_pair(&spec, &g).unwrap();
        let c = extract_interface(&p);
        let idx = CloudIndex::new(&c, 0.1);
        let m = idx.mass(&c, &[0.013, 0.0], 0.5);
        assert!((m - 1.0).abs() < 0.03, "{m}");
        // boundary edges have no node behind them to reconstruct from
        for i in 0..c.len() {
            let y = c.point(i);
            if y.iter().any(|t| t.abs() > 1.0 - 2.0 * g.spacing()) {
                continue;
            }
            assert!(spec.height(y).abs() < 1e-12, "{y:?} {}", spec.height(y));
        }
    }

    #[test]
    fn empty_interface() {
        let g = Grid::cube(2, 1.0, 17).unwrap();
        let u = GridField::from_fn(g.clone(), |_| 1.0);
        let p = validate_pair(u, GridField::zeros(g), &Tolerances::default()).unwrap();
        assert!(extract_interface(&p).is_empty());
    }

    #[test]
    fn index_matches_brute_force() {
        let pts: Vec<f64> = (0..400).flat_map(|i| {
            let t = i as f64 * 0.7;
            [t.sin() * (1.0 + 0.1 * t.cos()), (1.3 * t).cos()]
        }).collect();
        let cloud = InterfaceCloud::new(2, pts, vec![1.0; 400], String::new());
        let idx = CloudIndex::new(&cloud, 0.17);
        for (x, r) in [([0.0, 0.0], 0.3), ([0.9, -0.4], 0.5), ([5.0, 5.0], 0.1)] {
            let brute: Vec<usize> = (0..400)
                .filter(|&i| (cloud.point(i)[0] - x[0]).powi(2) + (cloud.point(i)[1] - x[1]).powi(2) <= r * r)
                .collect();
            assert_eq!(idx.ball(&cloud, &x, r), brute);
        }
    }
}
