//! Planar interface curves as polylines.
//!
//! Every curve is an open polyline whose two ends leave the box of interest;
//! the region to the left of its direction of travel is the positive phase.
//! For the line, the wedge, the spiral and the Koch arcs the positive phase
//! is the upper side.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::{Error, Result};

pub type P2 = [f64; 2];

/// Graph profile `y = f(|t|)` of a wedge interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WedgeProfile {
    /// `f(t) = s|t|`.
    Linear { slope: f64 },
    /// `f(t) = c|t| / sqrt(ln(T/|t|))`: `f(t)/t → 0` too slowly for
    /// `(f(t)/t)²` to be Dini integrable.
    NonDini { amplitude: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveKind {
    Line,
    Wedge(WedgeProfile),
    /// Two nearly radial arms at polar angles `θ(r)` and `θ(r) + π` with
    /// `θ(r) = λ ln ln(1/r)` for `r < 1/e` and `θ = 0` beyond.
    Spiral { lambda: f64 },
    /// Koch arc after `depth` iterations, apex of the first bump at the origin.
    Koch { depth: u32 },
    /// Koch arc where, per stage, all but one segment are frozen and the
    /// remaining one is refined until its length doubles.
    ModifiedKoch { stages: u32 },
}

/// Rotation (radians) followed by translation.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RigidMotion {
    pub angle: f64,
    pub shift: P2,
}

impl RigidMotion {
    pub fn apply(&self, p: P2) -> P2 {
        let (s, c) = self.angle.sin_cos();
        [c * p[0] - s * p[1] + self.shift[0], s * p[0] + c * p[1] + self.shift[1]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceCurveSpec {
    pub kind: CurveKind,
    pub transform: RigidMotion,
}

impl InterfaceCurveSpec {
    pub fn new(kind: CurveKind) -> Self {
        InterfaceCurveSpec { kind, transform: RigidMotion::default() }
    }
}

/// Spiral arm angle.
pub fn spiral_angle(lambda: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return f64::INFINITY;
    }
    let l = (1.0 / r).ln();
    if l <= 1.0 {
        0.0
    } else {
        lambda * l.ln()
    }
}

fn log_radii(r_min: f64, r_max: f64, ratio: f64) -> Vec<f64> {
    let mut out = vec![r_min];
    let mut r = r_min;
    while r < r_max {
        r = (r * ratio).min(r_max);
        out.push(r);
    }
    out
}

fn koch_refine(points: &[P2]) -> Vec<P2> {
    let mut out = Vec::with_capacity(4 * points.len());
    let (s, c) = (PI / 3.0).sin_cos();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
        let p1 = [a[0] + d[0], a[1] + d[1]];
        let p3 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1]];
        // left turn of the middle third: the bump points to the positive side
        let p2 = [p1[0] + c * d[0] - s * d[1], p1[1] + s * d[0] + c * d[1]];
        out.extend_from_slice(&[a, p1, p2, p3]);
    }
    out.push(*points.last().unwrap());
    out
}

fn seg_len(a: P2, b: P2) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Koch arc on `[-half, half]` with upward bumps, shifted down so that the
/// first apex (the highest point) sits at the origin.
fn koch_points(depth: u32, half: f64) -> Vec<P2> {
    let mut pts = vec![[-half, 0.0], [half, 0.0]];
    for _ in 0..depth.max(1) {
        pts = koch_refine(&pts);
    }
    let apex = half / 3.0f64.sqrt();
    pts.iter().map(|p| [p[0], p[1] - apex]).collect()
}

/// Interior vertices of the depth-`depth` Koch arc on `[-half_width, half_width]`,
/// in the coordinates of [`CurveKind::Koch`] before any rigid motion. Every
/// vertex at depth `d` stays a corner at all depths `≥ d`.
pub fn koch_corners(depth: u32, half_width: f64) -> Vec<P2> {
    let v = koch_points(depth, half_width);
    v[1..v.len() - 1].to_vec()
}

fn modified_koch_points(stages: u32, half: f64, min_seg: f64) -> Vec<P2> {
    let mut pts = koch_refine(&[[-half, 0.0], [half, 0.0]]);
    let apex = half / 3.0f64.sqrt();
    for p in pts.iter_mut() {
        p[1] -= apex;
    }
    // active segment: the one ending at the apex (index 1..2)
    let mut active = 1usize;
    for _ in 0..stages {
        let (a, b) = (pts[active], pts[active + 1]);
        let base = seg_len(a, b);
        let mut piece = vec![a, b];
        while piece.windows(2).map(|w| seg_len(w[0], w[1])).sum::<f64>() <= 2.0 * base {
            let next = koch_refine(&piece);
            if seg_len(next[0], next[1]) < min_seg {
                break;
            }
            piece = next;
        }
        if piece.len() == 2 {
            break;
        }
        // continue on the piece segment closest to the origin
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, w) in piece.windows(2).enumerate() {
            let m = [(w[0][0] + w[1][0]) / 2.0, (w[0][1] + w[1][1]) / 2.0];
            let d = m[0] * m[0] + m[1] * m[1];
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let mut next = Vec::with_capacity(pts.len() + piece.len());
        next.extend_from_slice(&pts[..active]);
        next.extend_from_slice(&piece[..piece.len() - 1]);
        next.extend_from_slice(&pts[active + 1..]);
        pts = next;
        active += best;
    }
    pts
}

/// Builds the polyline for `spec`. `reach` is a radius beyond which the curve
/// may be truncated (ends are extended past it), `h` the grid spacing used to
/// choose sampling density.
pub fn polyline(spec: &InterfaceCurveSpec, reach: f64, half_width: f64, h: f64) -> Result<Vec<P2>> {
    let far = 2.0 * reach;
    let mut pts: Vec<P2> = match spec.kind {
        CurveKind::Line => vec![[-far, 0.0], [far, 0.0]],
        CurveKind::Wedge(WedgeProfile::Linear { slope }) => {
            if !slope.is_finite() || slope < 0.0 {
                return Err(Error::InvalidInput("wedge slope must be nonnegative"));
            }
            vec![[-far, slope * far], [0.0, 0.0], [far, slope * far]]
        }
        CurveKind::Wedge(WedgeProfile::NonDini { amplitude }) => {
            let t_ref = core::f64::consts::E * far;
            let f = |t: f64| amplitude * t / (t_ref / t).ln().sqrt();
            let radii = log_radii(h / 16.0, far, 1.02);
            let mut v: Vec<P2> = radii.iter().rev().map(|&t| [-t, f(t)]).collect();
            v.push([0.0, 0.0]);
            v.extend(radii.iter().map(|&t| [t, f(t)]));
            v
        }
        CurveKind::Spiral { lambda } => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidInput("spiral rate must be nonnegative"));
            }
            let radii = log_radii(h / 16.0, far, 1.01);
            let arm = |r: f64, flip: f64| {
                let a = spiral_angle(lambda, r) + flip;
                [r * a.cos(), r * a.sin()]
            };
            let mut v: Vec<P2> = radii.iter().rev().map(|&r| arm(r, PI)).collect();
            v.push([0.0, 0.0]);
            v.extend(radii.iter().map(|&r| arm(r, 0.0)));
            v
        }
        CurveKind::Koch { depth } => {
            let mut v = koch_points(depth, half_width);
            let y = v[0][1];
            v.insert(0, [-far, y]);
            v.push([far, y]);
            v
        }
        CurveKind::ModifiedKoch { stages } => {
            let mut v = modified_koch_points(stages, half_width, 4.0 * h);
            let y = v[0][1];
            v.insert(0, [-far, y]);
            v.push([far, y]);
            v
        }
    };
    for p in pts.iter_mut() {
        *p = spec.transform.apply(*p);
    }
    pts.dedup();
    Ok(pts)
}

/// Minimal radial distance between successive turns of the spiral arms over
/// `[r_min, r_max]`; `None` when the arms turn by less than `π` there.
pub fn spiral_turn_gap(lambda: f64, r_min: f64, r_max: f64) -> Option<f64> {
    if spiral_angle(lambda, r_min) - spiral_angle(lambda, r_max) < PI {
        return None;
    }
    // both arms together repeat every π of rotation
    let mut gap = f64::INFINITY;
    for r1 in log_radii(r_min, r_max, 1.05) {
        let target = spiral_angle(lambda, r1) + PI;
        if spiral_angle(lambda, r_min) < target {
            continue;
        }
        let (mut lo, mut hi) = (r_min, r1);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if spiral_angle(lambda, mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        gap = gap.min(r1 - hi);
    }
    Some(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn koch_lengths_scale_by_four_thirds() {
        for depth in 1..5 {
            let a = koch_points(depth, 1.0);
            let b = koch_points(depth + 1, 1.0);
            let len = |v: &[P2]| v.windows(2).map(|w| seg_len(w[0], w[1])).sum::<f64>();
            assert!((len(&b) / len(&a) - 4.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn koch_apex_at_origin_and_highest() {
        let v = koch_points(4, 1.0);
        assert!(v.iter().any(|p| p[0].abs() < 1e-12 && p[1].abs() < 1e-12));
        assert!(v.iter().all(|p| p[1] <= 1e-12));
    }

    #[test]
    fn spiral_law() {
        assert_eq!(spiral_angle(0.5, 0.5), 0.0);
        let t = spiral_angle(0.5, 2f64.powi(-6)) - spiral_angle(0.5, 0.25);
        assert!((t - 0.5 * ((64f64).ln().ln() - 4f64.ln().ln())).abs() < 1e-12);
        assert!(spiral_turn_gap(0.5, 1e-3, 1.0).is_none());
        assert!(spiral_turn_gap(3.0, 1e-6, 1.0).is_some());
    }

    #[test]
    fn modified_koch_keeps_segments_resolved() {
        let v = modified_koch_points(3, 1.0, 0.01);
        assert!(v.windows(2).all(|w| seg_len(w[0], w[1]) >= 0.01 - 1e-12));
        assert!(v.len() > 5);
    }

    #[test]
    fn rigid_motion() {
        let m = RigidMotion { angle: PI / 2.0, shift: [1.0, 0.0] };
        let p = m.apply([1.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
    }
}
