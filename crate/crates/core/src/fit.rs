//! Least-squares fits of truncated linear pairs on annuli.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::acf::log_ratio;
use crate::energy::PairEnergy;
use crate::grid::MAX_DIM;
use crate::pair::AdmissiblePair;
use crate::quadrature::cell_fraction;
use crate::{Error, Result};

/// Coarse angular grid of the 2D normal search.
pub const ANGLE_GRID: usize = 256;
/// Final angular tolerance in radians.
pub const ANGLE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedLinearFit {
    pub a: f64,
    pub b: f64,
    pub nu: Vec<f64>,
    pub center: Vec<f64>,
    pub rho: f64,
    pub big_r: f64,
    /// `∫_{B_R∖B_ρ} (u - a ℓ⁺)² + (v - b ℓ⁻)²`.
    pub residual: f64,
    /// `L²(B_R)` norms of `u` and `v`.
    pub u_norm: f64,
    pub v_norm: f64,
}

impl TruncatedLinearFit {
    /// Normal angle in 2D.
    pub fn angle(&self) -> f64 {
        self.nu[1].atan2(self.nu[0])
    }
}

/// Quadrature samples of a pair on an annulus: offsets from the center,
/// values and cell weights (including `h^n`).
#[derive(Clone, Debug)]
pub struct AnnulusSamples {
    pub dim: usize,
    pub offsets: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// `∫_{B_R} u²` and `∫_{B_R} v²`.
    pub ball_u2: f64,
    pub ball_v2: f64,
}

impl AnnulusSamples {
    pub fn new(pair: &AdmissiblePair, x: &[f64], rho: f64, big_r: f64) -> Result<Self> {
        let g = pair.grid();
        let n = g.dim();
        let h = g.spacing();
        if !(rho >= 0.0 && big_r > rho) {
            return Err(Error::InvalidInput("annulus needs 0 <= rho < R"));
        }
        if big_r - rho < 8.0 * h {
            return Err(Error::UnderResolved { radius: big_r - rho, min: 8.0 * h });
        }
        if x.len() != n || !g.contains_box(x, big_r + h) {
            return Err(Error::Domain);
        }
        let hn = h.powi(n as i32);
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        g.node_range(x, big_r + h, &mut lo[..n], &mut hi[..n]);
        let mut s = AnnulusSamples { dim: n, offsets: Vec::new(), u: Vec::new(), v: Vec::new(), w: Vec::new(), ball_u2: 0.0, ball_v2: 0.0 };
        let mut delta = [0.0f64; MAX_DIM];
        g.for_each_in_box(&lo[..n], &hi[..n], |idx, m| {
            for k in 0..n {
                delta[k] = g.coordinate(k, m[k]) - x[k];
            }
            let fr = cell_fraction(&delta[..n], big_r, h);
            if fr == 0.0 {
                return;
            }
            let (uu, vv) = (pair.u.value(idx), pair.v.value(idx));
            s.ball_u2 += fr * hn * uu * uu;
            s.ball_v2 += fr * hn * vv * vv;
            let w = fr - if rho > 0.0 { cell_fraction(&delta[..n], rho, h) } else { 0.0 };
            if w > 0.0 {
                s.offsets.extend_from_slice(&delta[..n]);
                s.u.push(uu);
                s.v.push(vv);
                s.w.push(w * hn);
            }
        });
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    #[inline]
    fn height(&self, i: usize, nu: &[f64]) -> f64 {
        let o = &self.offsets[i * self.dim..(i + 1) * self.dim];
        o.iter().zip(nu).map(|(a, b)| a * b).sum()
    }

    /// Optimal clamped slopes and the residual for a fixed normal.
    pub fn slopes(&self, nu: &[f64]) -> (f64, f64, f64) {
        let (mut uu, mut vv, mut ul, mut vl, mut ll_p, mut ll_m) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.len() {
            let s = self.height(i, nu);
            let w = self.w[i];
            let (u, v) = (self.u[i], self.v[i]);
            uu += w * u * u;
            vv += w * v * v;
            if s > 0.0 {
                ul += w * u * s;
                ll_p += w * s * s;
            } else {
                vl -= w * v * s;
                ll_m += w * s * s;
            }
        }
        let a = if ll_p > 0.0 { (ul / ll_p).max(0.0) } else { 0.0 };
        let b = if ll_m > 0.0 { (vl / ll_m).max(0.0) } else { 0.0 };
        let res = (uu - 2.0 * a * ul + a * a * ll_p) + (vv - 2.0 * b * vl + b * b * ll_m);
        (a, b, res.max(0.0))
    }

    /// `∫ (u/a - ℓ⁺)² + (v/b - ℓ⁻)²`.
    pub fn normalized_error(&self, a: f64, b: f64, nu: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len() {
            let s = self.height(i, nu);
            let du = self.u[i] / a - s.max(0.0);
            let dv = self.v[i] / b - (-s).max(0.0);
            acc += self.w[i] * (du * du + dv * dv);
        }
        acc
    }
}

fn unit(v: &mut [f64]) {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= n);
}

fn search_2d(obj: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let at = |t: f64| obj(&[t.cos(), t.sin()]);
    let step = 2.0 * PI / ANGLE_GRID as f64;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..ANGLE_GRID {
        let f = at(k as f64 * step);
        if f < best.1 {
            best = (k, f);
        }
    }
    let (mut lo, mut hi) = ((best.0 as f64 - 1.0) * step, (best.0 as f64 + 1.0) * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fc, mut fd) = (at(c), at(d));
    while hi - lo > ANGLE_TOL {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = at(d);
        }
    }
    let t = if fc <= fd { c } else { d };
    let t = if best.1 < at(t) { best.0 as f64 * step } else { t };
    vec![t.cos(), t.sin()]
}

/// Coarse directions `±e_i`, `(±e_i ± e_j)/√2`, then a pattern search on
/// the sphere with halving steps.
fn search_nd(n: usize, obj: &dyn Fn(&[f64]) -> f64, levels: usize) -> Vec<f64> {
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            cands.push(e);
        }
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut e = vec![0.0; n];
                e[i] = si;
                e[j] = sj;
                unit(&mut e);
                cands.push(e);
            }
        }
    }
    let mut best = cands[0].clone();
    let mut fbest = obj(&best);
    for c in &cands[1..] {
        let f = obj(c);
        if f < fbest {
            fbest = f;
            best = c.clone();
        }
    }
    let mut step = 0.5;
    let mut level = 0;
    while step > ANGLE_TOL && level < 64 * levels.max(1) {
        let mut improved = false;
        for k in 0..n {
            for s in [step, -step] {
                let mut t = best.clone();
                t[k] += s;
                unit(&mut t);
                let f = obj(&t);
                if f < fbest {
                    fbest = f;
                    best = t;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
        level += 1;
    }
    best
}

/// Best truncated linear pair on `B_R(x) ∖ B_ρ(x)`; `ρ = 0` fits the full ball.
pub fn fit_truncated_pair(pair: &AdmissiblePair, x: &[f64], rho: f64, big_r: f64) -> Result<TruncatedLinearFit> {
    let s = AnnulusSamples::new(pair, x, rho, big_r)?;
    fit_samples(&s, x, rho, big_r)
}

pub fn fit_samples(s: &AnnulusSamples, x: &[f64], rho: f64, big_r: f64) -> Result<TruncatedLinearFit> {
    let mass: f64 = (0..s.len()).map(|i| s.w[i] * (s.u[i] * s.u[i] + s.v[i] * s.v[i])).sum();
    if !(mass > 0.0) {
        return Err(Error::DegenerateFit);
    }
    let obj = |nu: &[f64]| s.slopes(nu).2;
    let nu = if s.dim == 2 { search_2d(&obj) } else { search_nd(s.dim, &obj, 3) };
    let (a, b, residual) = s.slopes(&nu);
    Ok(TruncatedLinearFit {
        a,
        b,
        nu,
        center: x.to_vec(),
        rho,
        big_r,
        residual,
        u_norm: s.ball_u2.sqrt(),
        v_norm: s.ball_v2.sqrt(),
    })
}

/// Gauge-normalized annulus error `∫ (u/a - ℓ⁺)² + (v/b - ℓ⁻)²` divided by
/// `R^{n+2}`, the scaling of the integrand's natural size.
pub fn normalized_fit_error(pair: &AdmissiblePair, fit: &TruncatedLinearFit) -> Result<f64> {
    if !(fit.a > 0.0 && fit.b > 0.0) {
        return Err(Error::DegenerateFit);
    }
    let s = AnnulusSamples::new(pair, &fit.center, fit.rho, fit.big_r)?;
    Ok(s.normalized_error(fit.a, fit.b, &fit.nu) / fit.big_r.powi(pair.dim() as i32 + 2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperplaneReport {
    /// `L²` distance between the two model pairs on the first fit's annulus.
    pub l2_gap: f64,
    /// Distance from the second center to the first zero hyperplane.
    pub plane_distance: f64,
    /// `plane_distance / √l2_gap` (0 when both vanish).
    pub ratio: f64,
}

/// Lattice points per axis for model-pair integrals.
fn lattice_points(n: usize) -> usize {
    match n {
        2 => 257,
        3 => 65,
        _ => 17,
    }
}

pub fn hyperplane_distance_check(f1: &TruncatedLinearFit, f2: &TruncatedLinearFit, c: f64) -> Result<HyperplaneReport> {
    let n = f1.nu.len();
    if f2.nu.len() != n || !(f1.a.max(f1.b) >= c) || !(c > 0.0) {
        return Err(Error::DegenerateFit);
    }
    let k = lattice_points(n);
    let h = 2.0 * f1.big_r / (k - 1) as f64;
    let hn = h.powi(n as i32);
    let mut idx = vec![0usize; n];
    let mut y = vec![0.0; n];
    let mut gap = 0.0;
    'outer: loop {
        let mut r2 = 0.0;
        for d in 0..n {
            let off = -f1.big_r + idx[d] as f64 * h;
            y[d] = f1.center[d] + off;
            r2 += off * off;
        }
        if r2 <= f1.big_r * f1.big_r && r2 >= f1.rho * f1.rho {
            let s1: f64 = (0..n).map(|d| (y[d] - f1.center[d]) * f1.nu[d]).sum();
            let s2: f64 = (0..n).map(|d| (y[d] - f2.center[d]) * f2.nu[d]).sum();
            let du = f1.a * s1.max(0.0) - f2.a * s2.max(0.0);
            let dv = f1.b * (-s1).max(0.0) - f2.b * (-s2).max(0.0);
            gap += (du * du + dv * dv) * hn;
        }
        for d in 0..n {
            idx[d] += 1;
            if idx[d] < k {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    let dist = (0..n).map(|d| (f2.center[d] - f1.center[d]) * f1.nu[d]).sum::<f64>().abs();
    let ratio = if dist == 0.0 { 0.0 } else if gap > 0.0 { dist / gap.sqrt() } else { f64::INFINITY };
    Ok(HyperplaneReport { l2_gap: gap, plane_distance: dist, ratio })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyReport {
    /// The constant the pair was multiplied by.
    pub normalization: f64,
    pub qualifying: Vec<(Vec<f64>, f64)>,
    /// Centers whose log-drop exceeded `κ`, with the drop.
    pub excluded: Vec<(Vec<f64>, f64)>,
    pub min_slope_sum: f64,
    pub floor: f64,
    pub holds: bool,
}

/// Radius of the normalization ball.
pub const NORMALIZATION_RADIUS: f64 = 8.0;

/// Fits `(a_z, b_z)` on `B_R(z) ∖ B_ρ(z)` at centers with
/// `log(J_z(R)/J_z(ρ)) ≤ κ`, after scaling the pair so that
/// `‖u + v‖_{L²(B)} = 1` on the largest ball `B` about the origin of radius
/// at most 8 inside the grid.
pub fn nondegeneracy_probe(
    pair: &AdmissiblePair,
    centers: &[Vec<f64>],
    kappa: f64,
    rho: f64,
    big_r: f64,
    floor: f64,
) -> Result<NondegeneracyReport> {
    let g = pair.grid();
    let n = g.dim();
    let mut reach = NORMALIZATION_RADIUS;
    for k in 0..n {
        reach = reach.min(-g.origin()[k] - g.spacing()).min(g.upper(k) - g.spacing());
    }
    let zero = vec![0.0; n];
    let s = AnnulusSamples::new(pair, &zero, 0.0, reach)?;
    let norm = (s.ball_u2 + s.ball_v2).sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateFit);
    }
    // supports are disjoint, so ‖u + v‖² = ‖u‖² + ‖v‖²
    let scaled = pair.scaled(1.0 / norm);
    let energy = PairEnergy::new(&scaled);
    let mut qualifying = Vec::new();
    let mut excluded = Vec::new();
    for z in centers {
        let drop = log_ratio(energy.acf(z, big_r)?, energy.acf(z, rho)?);
        if drop <= kappa {
            let f = fit_truncated_pair(&scaled, z, rho, big_r)?;
            qualifying.push((z.clone(), f.a + f.b));
        } else {
            excluded.push((z.clone(), drop));
        }
    }
    if qualifying.is_empty() {
        return Err(Error::Empty("no center passes the log-drop gate"));
    }
    let min_slope_sum = qualifying.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
    Ok(NondegeneracyReport { normalization: 1.0 / norm, qualifying, excluded, min_slope_sum, floor, holds: min_slope_sum >= floor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{make_truncated_linear_pair, TruncatedLinearPairSpec};
    use crate::grid::{Grid, GridField};
    use crate::pair::{validate_pair, Tolerances};

    fn exact(a: f64, b: f64, angle: f64) -> AdmissiblePair {
        let g = Grid::cube(2, 1.0, 129).unwrap();
        let spec = TruncatedLinearPairSpec { a, b, nu: vec![angle.cos(), angle.sin()], center: vec![0.0, 0.0] };
        make_truncated_linear_pair(&spec, &g).unwrap()
    }

    #[test]
    fn exact_pair_is_recovered() {
        let p = exact(2.0, 3.0, PI / 2.0);
        let f = fit_truncated_pair(&p, &[0.0, 0.0], 0.2, 0.8).unwrap();
        assert!((f.a - 2.0).abs() < 1e-9 && (f.b - 3.0).abs() < 1e-9, "{f:?}");
        assert!((f.angle() - PI / 2.0).abs() < 1e-6);
        assert!(f.residual < 1e-10 * 9.0);
        assert!(normalized_fit_error(&p, &f).unwrap() < 1e-12);
    }

    #[test]
    fn rotation_and_translation_equivariance() {
        let g = Grid::cube(2, 1.0, 129).unwrap();
        for (t, c) in [(0.3, [0.1, -0.1]), (2.0, [-0.2, 0.05])] {
            let spec = TruncatedLinearPairSpec { a: 1.0, b: 2.0, nu: vec![t.cos(), t.sin()], center: c.to_vec() };
            let p = make_truncated_linear_pair(&spec, &g).unwrap();
            let f = fit_truncated_pair(&p, &c, 0.1, 0.5).unwrap();
            assert!((f.angle() - t).abs() < 1e-5, "{f:?}");
            assert!((f.a - 1.0).abs() < 1e-9 && (f.b - 2.0).abs() < 1e-9);
            assert_eq!(f.center, c.to_vec());
        }
    }

    #[test]
    fn one_sided_pair() {
        let g = Grid::cube(2, 1.0, 65).unwrap();
        let u = GridField::from_fn(g.clone(), |p| p[1].max(0.0));
        let p = validate_pair(u, GridField::zeros(g), &Tolerances::default()).unwrap();
        let f = fit_truncated_pair(&p, &[0.0, 0.0], 0.2, 0.8).unwrap();
        assert!((f.a - 1.0).abs() < 1e-9 && f.b == 0.0 && f.residual < 1e-12);
        assert_eq!(normalized_fit_error(&p, &f), Err(Error::DegenerateFit));
    }

    #[test]
    fn zero_pair_is_degenerate() {
        let g = Grid::cube(2, 1.0, 65).unwrap();
        let p = validate_pair(GridField::zeros(g.clone()), GridField::zeros(g), &Tolerances::default()).unwrap();
        assert_eq!(fit_truncated_pair(&p, &[0.0, 0.0], 0.2, 0.8), Err(Error::DegenerateFit));
    }

    #[test]
    fn annulus_checks() {
        let p = exact(1.0, 1.0, 1.0);
        assert!(matches!(fit_truncated_pair(&p, &[0.0, 0.0], 0.5, 0.55), Err(Error::UnderResolved { .. })));
        assert_eq!(fit_truncated_pair(&p, &[0.5, 0.0], 0.0, 0.8), Err(Error::Domain));
    }

    #[test]
    fn three_dimensional_fit() {
        let g = Grid::cube(3, 1.0, 33).unwrap();
        let mut nu = vec![0.3, -0.5, 0.8];
        unit(&mut nu);
        let spec = TruncatedLinearPairSpec { a: 1.5, b: 0.5, nu: nu.clone(), center: vec![0.0; 3] };
        let p = make_truncated_linear_pair(&spec, &g).unwrap();
        let f = fit_truncated_pair(&p, &[0.0; 3], 0.0, 0.8).unwrap();
        let dot: f64 = f.nu.iter().zip(&nu).map(|(a, b)| a * b).sum();
        assert!(dot > 1.0 - 1e-9, "{f:?}");
        assert!((f.a - 1.5).abs() < 1e-6 && (f.b - 0.5).abs() < 1e-6);
    }

    fn model(a: f64, b: f64, angle: f64, center: [f64; 2]) -> TruncatedLinearFit {
        TruncatedLinearFit {
            a,
            b,
            nu: vec![angle.cos(), angle.sin()],
            center: center.to_vec(),
            rho: 0.0,
            big_r: 1.0,
            residual: 0.0,
            u_norm: 0.0,
            v_norm: 0.0,
        }
    }

    #[test]
    fn hyperplane_checks() {
        let f = model(1.0, 1.0, PI / 2.0, [0.0, 0.0]);
        let r = hyperplane_distance_check(&f, &f, 0.5).unwrap();
        assert_eq!((r.l2_gap, r.plane_distance, r.ratio), (0.0, 0.0, 0.0));
        // a shifted kink pair with equal slopes differs by δ on the whole disc
        for delta in [0.01, 0.02] {
            let g = model(1.0, 1.0, PI / 2.0, [0.0, delta]);
            let r = hyperplane_distance_check(&f, &g, 0.5).unwrap();
            assert!((r.plane_distance - delta).abs() < 1e-15);
            assert!((r.l2_gap / (PI * delta * delta) - 1.0).abs() < 0.03, "{}", r.l2_gap);
        }
        let g = model(1.0, 1.0, PI / 2.0 + 0.05, [0.0, 0.0]);
        let r = hyperplane_distance_check(&f, &g, 0.5).unwrap();
        assert!(r.plane_distance == 0.0 && r.l2_gap > 0.0 && r.ratio == 0.0);
        assert!(hyperplane_distance_check(&model(0.1, 0.1, 0.0, [0.0, 0.0]), &g, 0.5).is_err());
    }

    #[test]
    fn nondegenerate_exact_pair() {
        let p = exact(2.0, 3.0, PI / 2.0);
        let centers: Vec<Vec<f64>> = (0..3).map(|i| vec![-0.2 + 0.2 * i as f64, 0.0]).collect();
        let rep = nondegeneracy_probe(&p, &centers, 0.1, 0.1, 0.4, 0.0).unwrap();
        assert!(rep.excluded.is_empty() && rep.holds);
        for (_, s) in &rep.qualifying {
            assert!((s - 5.0 * rep.normalization).abs() < 1e-9);
        }
    }
}
