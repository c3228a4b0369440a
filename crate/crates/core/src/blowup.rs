//! Rescalings `u(x + r z) / r`, blowup fit trajectories, energy convergence
//! diagnostics, and Laplacian-mass densities on the interface.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::acf::{estimate_j0plus, radial_profile, J0Estimate, Trend, TREND_TOL};
use crate::c_star;
use crate::cloud::IndexedCloud;
use crate::energy::PairEnergy;
use crate::fit::{fit_truncated_pair, TruncatedLinearFit};
use crate::generators::{make_truncated_linear_pair, TruncatedLinearPairSpec};
use crate::grid::{Grid, GridField, MAX_DIM};
use crate::pair::{validate_pair, AdmissiblePair, Tolerances};
use crate::quadrature::{ball_integral, check_ball, Kernel};
use crate::{Error, Result};

/// Half-width of the rescaled box when the source grid allows it.
pub const RESCALE_HALF_WIDTH: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Rescaled {
    pub pair: AdmissiblePair,
    /// Half-width of the box `[-L, L]^n` the rescaling lives on.
    pub half_width: f64,
    /// Set when `L` fell short of [`RESCALE_HALF_WIDTH`].
    pub coverage_note: Option<String>,
}

/// Resamples `(u, v)(x + r z) / r` on `target`, or on a box with the source
/// node count and the largest half-width `≤ 10` that maps inside the source.
///
/// `u - v` is interpolated and split into its positive and negative parts,
/// which keeps the supports disjoint.
pub fn rescale_pair(pair: &AdmissiblePair, x: &[f64], r: f64, target: Option<&Grid>) -> Result<Rescaled> {
    let g = pair.grid();
    let n = g.dim();
    if x.len() != n || !(r > 0.0) {
        return Err(Error::InvalidInput("rescaling needs a center in the grid and r > 0"));
    }
    let room = (0..n)
        .map(|k| (x[k] - g.origin()[k]).min(g.upper(k) - x[k]))
        .fold(f64::INFINITY, f64::min)
        / r;
    let grid = match target {
        Some(t) => t.clone(),
        None => {
            if !(room > 0.0) {
                return Err(Error::Domain);
            }
            Grid::cube(n, room.min(RESCALE_HALF_WIDTH), g.counts()[0])?
        }
    };
    let half_width = (0..n)
        .map(|k| (-grid.origin()[k]).min(grid.upper(k)))
        .fold(f64::INFINITY, f64::min);
    if half_width > room * (1.0 + 1e-12) {
        return Err(Error::Domain);
    }
    let mut y = [0.0f64; MAX_DIM];
    let mut w = Vec::with_capacity(grid.len());
    let mut z = vec![0.0; n];
    for i in 0..grid.len() {
        grid.position(i, &mut z);
        for k in 0..n {
            y[k] = x[k] + r * z[k];
        }
        let u = pair.u.interpolate(&y[..n]).ok_or(Error::Domain)?;
        let v = pair.v.interpolate(&y[..n]).ok_or(Error::Domain)?;
        w.push((u - v) / r);
    }
    let u = GridField::new(grid.clone(), w.iter().map(|&t| t.max(0.0)).collect())?;
    let v = GridField::new(grid, w.iter().map(|&t| (-t).max(0.0)).collect())?;
    let tol = Tolerances { disjoint: Some(0.0), subharmonic: f64::INFINITY, negative: 0.0 };
    let pair = validate_pair(u, v, &tol)?;
    let coverage_note = (half_width < RESCALE_HALF_WIDTH * (1.0 - 1e-12))
        .then(|| alloc::format!("rescaled box has half-width {half_width:.4} < {RESCALE_HALF_WIDTH}"));
    Ok(Rescaled { pair, half_width, coverage_note })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupTrajectory {
    pub center: Vec<f64>,
    /// Decreasing scales.
    pub radii: Vec<f64>,
    pub fits: Vec<TruncatedLinearFit>,
    /// Continuously unwrapped normal angles (2D); empty otherwise.
    pub angles: Vec<f64>,
    pub acf: Vec<f64>,
    pub products: Vec<f64>,
}

impl BlowupTrajectory {
    /// `max - min` of the unwrapped normal angle, in degrees.
    pub fn angle_variation_deg(&self) -> f64 {
        if self.angles.is_empty() {
            return 0.0;
        }
        let hi = self.angles.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.angles.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi - lo).to_degrees()
    }

    /// Angle change between the two finest scales, in degrees.
    pub fn last_step_deg(&self) -> f64 {
        match self.angles.len() {
            0 | 1 => 0.0,
            k => (self.angles[k - 1] - self.angles[k - 2]).abs().to_degrees(),
        }
    }

    /// Largest angle, in degrees, from any fitted normal to `{ν, -ν}`.
    pub fn two_valued_spread_deg(&self, nu: &[f64]) -> f64 {
        self.fits
            .iter()
            .map(|f| {
                let c: f64 = f.nu.iter().zip(nu).map(|(a, b)| a * b).sum();
                c.abs().min(1.0).acos().to_degrees()
            })
            .fold(0.0, f64::max)
    }
}

/// Full-ball truncated linear fits of the rescalings at `x`.
///
/// By 1-homogeneity of the model class, the unit-ball fit of `u^{x,r}` is
/// the `B_r(x)` fit of `u` with the same slopes and normal, so the fit runs
/// on the source grid and avoids a resampling per scale.
pub fn blowup_trajectory(pair: &AdmissiblePair, x: &[f64], ladder: &[f64]) -> Result<BlowupTrajectory> {
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("ladder must be strictly decreasing"));
    }
    let energy = PairEnergy::new(pair);
    let mut fits = Vec::with_capacity(ladder.len());
    let mut acf = Vec::with_capacity(ladder.len());
    for &r in ladder {
        fits.push(fit_truncated_pair(pair, x, 0.0, r)?);
        acf.push(energy.acf(x, r)?);
    }
    let mut angles = Vec::new();
    if pair.dim() == 2 {
        for f in &fits {
            let mut t = f.angle();
            if let Some(&prev) = angles.last() {
                while t - prev > PI {
                    t -= 2.0 * PI;
                }
                while t - prev < -PI {
                    t += 2.0 * PI;
                }
            }
            angles.push(t);
        }
    }
    let products = fits.iter().map(|f| f.a * f.b).collect();
    Ok(BlowupTrajectory { center: x.to_vec(), radii: ladder.to_vec(), fits, angles, acf, products })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceEntry {
    /// `‖u - u_∞‖_{L²(B_R)} + ‖v - v_∞‖_{L²(B_R)}`.
    pub l2_distance: f64,
    /// `|∫_{B_R} |∇u|² - |∇u_∞|²| + |∫_{B_R} |∇v|² - |∇v_∞|²|`.
    pub energy_gap: f64,
    pub acf: f64,
    /// `|J_0(R) - c_* a² b²| / J_0(R)`.
    pub acf_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub radius: f64,
    pub limit_acf: f64,
    pub entries: Vec<ConvergenceEntry>,
    /// No element's `acf_gap` exceeds its predecessor's by more than [`TREND_TOL`].
    pub decaying: bool,
}

/// Distances of each pair (all on one grid) to the truncated linear `limit`
/// on `B_R(0)`.
pub fn energy_convergence_probe(pairs: &[AdmissiblePair], limit: &TruncatedLinearPairSpec, radius: f64) -> Result<ConvergenceReport> {
    let Some(first) = pairs.first() else {
        return Err(Error::Empty("sequence"));
    };
    let grid = first.grid().clone();
    let n = grid.dim();
    let lim = make_truncated_linear_pair(limit, &grid)?;
    let lim_energy = PairEnergy::new(&lim);
    let origin = vec![0.0; n];
    let limit_acf = c_star(n) * (limit.a * limit.b).powi(2);
    let (lu, lv) = dirichlet(&lim_energy, &origin, radius)?;
    let mut entries = Vec::with_capacity(pairs.len());
    for p in pairs {
        if p.grid() != &grid {
            return Err(Error::IncompatibleGrid);
        }
        let l2 = |f: &GridField, g: &GridField| -> Result<f64> {
            let s = ball_integral(&grid, |i| (f.value(i) - g.value(i)).powi(2), &origin, radius, Kernel::None)?;
            Ok(s.sqrt())
        };
        let l2_distance = l2(&p.u, &lim.u)? + l2(&p.v, &lim.v)?;
        let e = PairEnergy::new(p);
        let (pu, pv) = dirichlet(&e, &origin, radius)?;
        let acf = e.acf(&origin, radius)?;
        entries.push(ConvergenceEntry {
            l2_distance,
            energy_gap: (pu - lu).abs() + (pv - lv).abs(),
            acf,
            acf_gap: if acf > 0.0 { (acf - limit_acf).abs() / acf } else { f64::INFINITY },
        });
    }
    let decaying = entries.windows(2).all(|w| w[1].acf_gap <= w[0].acf_gap + TREND_TOL);
    Ok(ConvergenceReport { radius, limit_acf, entries, decaying })
}

fn dirichlet(e: &PairEnergy, x: &[f64], r: f64) -> Result<(f64, f64)> {
    check_ball(e.pair.grid(), x, r)?;
    Ok((e.du.ball_energy(&e.pair.u, x, r, Kernel::None), e.dv.ball_energy(&e.pair.v, x, r, Kernel::None)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplacianMass {
    pub mu_u: f64,
    pub mu_v: f64,
    /// Negative mass dropped by clamping each node's contribution at 0.
    pub clamped_u: f64,
    pub clamped_v: f64,
}

/// `Σ_{|y - x| ≤ r} max(Δ_h f(y), 0) h^n` for `f = u, v`.
pub fn laplacian_measure_mass(pair: &AdmissiblePair, x: &[f64], r: f64) -> Result<LaplacianMass> {
    let g = pair.grid();
    let n = g.dim();
    let h = g.spacing();
    if r < 4.0 * h {
        return Err(Error::UnderResolved { radius: r, min: 4.0 * h });
    }
    if x.len() != n || !g.contains_box(x, r + h) {
        return Err(Error::Domain);
    }
    let hn = h.powi(n as i32);
    let mut lo = [0usize; MAX_DIM];
    let mut hi = [0usize; MAX_DIM];
    g.node_range(x, r, &mut lo[..n], &mut hi[..n]);
    let mut m = LaplacianMass { mu_u: 0.0, mu_v: 0.0, clamped_u: 0.0, clamped_v: 0.0 };
    let mut pos = [0.0f64; MAX_DIM];
    let mut err = None;
    g.for_each_in_box(&lo[..n], &hi[..n], |idx, _| {
        g.position(idx, &mut pos[..n]);
        let d2: f64 = (0..n).map(|k| (pos[k] - x[k]).powi(2)).sum();
        if d2 > r * r {
            return;
        }
        match (pair.u.laplacian(idx), pair.v.laplacian(idx)) {
            (Ok(lu), Ok(lv)) => {
                let (lu, lv) = (lu * hn, lv * hn);
                if lu >= 0.0 { m.mu_u += lu } else { m.clamped_u -= lu }
                if lv >= 0.0 { m.mu_v += lv } else { m.clamped_v -= lv }
            }
            (Err(e), _) | (_, Err(e)) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(m),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaEstimate {
    pub value: f64,
    pub trend: Trend,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub center: Vec<f64>,
    /// Scales with positive cloud mass, decreasing.
    pub radii: Vec<f64>,
    pub skipped: Vec<f64>,
    pub mu_u: Vec<f64>,
    pub mu_v: Vec<f64>,
    pub nu: Vec<f64>,
    pub zeta_u: Vec<f64>,
    pub zeta_v: Vec<f64>,
    pub zeta_u_limit: Option<ZetaEstimate>,
    pub zeta_v_limit: Option<ZetaEstimate>,
    /// Full-ball blowup slopes at the finest scale.
    pub slopes: Option<(f64, f64)>,
    pub j0: Option<J0Estimate>,
    /// `|ζ_u ζ_v − √(J(0⁺)/c_*)| / √(J(0⁺)/c_*)`.
    pub sqrt_relation_error: Option<f64>,
    /// `|ζ_u ζ_v − c_* J(0⁺)| / (c_* J(0⁺))`.
    pub linear_relation_error: Option<f64>,
}

fn zeta_limit(values: &[f64]) -> Option<ZetaEstimate> {
    let k = values.len();
    let value = *values.last()?;
    let trend = if k < 3 {
        Trend::Noisy
    } else {
        let d1 = log_step(values[k - 2], values[k - 1]);
        let d2 = log_step(values[k - 3], values[k - 2]);
        if d1.abs() <= TREND_TOL && d2.abs() <= TREND_TOL {
            Trend::Converged
        } else if d1 > 0.0 && d2 > 0.0 {
            Trend::StillDecreasing
        } else {
            Trend::Noisy
        }
    };
    Some(ZetaEstimate { value, trend })
}

fn log_step(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 { (a / b).ln() } else { f64::INFINITY }
}

/// `ζ_u(r) = μ_u(B_r(x)) / ν(B_r(x))` and `ζ_v(r)` along `ladder`, with the
/// blowup slopes and both candidate relations between `ζ_u ζ_v` and `J(0⁺)`.
pub fn density_trajectory(pair: &AdmissiblePair, measure: &IndexedCloud, x: &[f64], ladder: &[f64]) -> Result<DensityEstimate> {
    let mut est = DensityEstimate {
        center: x.to_vec(),
        radii: Vec::new(),
        skipped: Vec::new(),
        mu_u: Vec::new(),
        mu_v: Vec::new(),
        nu: Vec::new(),
        zeta_u: Vec::new(),
        zeta_v: Vec::new(),
        zeta_u_limit: None,
        zeta_v_limit: None,
        slopes: None,
        j0: None,
        sqrt_relation_error: None,
        linear_relation_error: None,
    };
    for &r in ladder {
        let nu = measure.mass(x, r);
        if !(nu > 0.0) {
            est.skipped.push(r);
            continue;
        }
        let m = laplacian_measure_mass(pair, x, r)?;
        est.radii.push(r);
        est.mu_u.push(m.mu_u);
        est.mu_v.push(m.mu_v);
        est.nu.push(nu);
        est.zeta_u.push(m.mu_u / nu);
        est.zeta_v.push(m.mu_v / nu);
    }
    est.zeta_u_limit = zeta_limit(&est.zeta_u);
    est.zeta_v_limit = zeta_limit(&est.zeta_v);
    if let Some(&r) = est.radii.last() {
        if let Ok(f) = fit_truncated_pair(pair, x, 0.0, r) {
            est.slopes = Some((f.a, f.b));
        }
    }
    if est.radii.len() >= 3 {
        let energy = PairEnergy::new(pair);
        let j0 = estimate_j0plus(&radial_profile(&energy, x, &est.radii)?)?;
        let cs = c_star(pair.dim());
        let prod = est.zeta_u.last().unwrap() * est.zeta_v.last().unwrap();
        let sq = (j0.value / cs).sqrt();
        est.sqrt_relation_error = Some((prod - sq).abs() / sq);
        est.linear_relation_error = Some((prod - cs * j0.value).abs() / (cs * j0.value));
        est.j0 = Some(j0);
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::extract_interface;

    fn exact(a: f64, b: f64, nodes: usize) -> AdmissiblePair {
        let g = Grid::cube(2, 1.0, nodes).unwrap();
        make_truncated_linear_pair(&TruncatedLinearPairSpec::axis(2, a, b), &g).unwrap()
    }

    #[test]
    fn exact_pair_is_a_rescaling_fixed_point() {
        let p = exact(2.0, 3.0, 129);
        let target = p.grid().clone();
        let s = rescale_pair(&p, &[0.0, 0.0], 0.5, Some(&Grid::cube(2, 1.0, 129).unwrap())).unwrap();
        assert_eq!(s.pair.grid(), &target);
        for i in 0..target.len() {
            assert!((s.pair.u.value(i) - p.u.value(i)).abs() <= 1e-10);
            assert!((s.pair.v.value(i) - p.v.value(i)).abs() <= 1e-10);
        }
        assert!(s.coverage_note.is_some());
        let id = rescale_pair(&p, &[0.0, 0.0], 1.0, None).unwrap();
        assert!((id.half_width - 1.0).abs() < 1e-12);
        for i in 0..target.len() {
            assert!((id.pair.u.value(i) - p.u.value(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn kink_mass_and_densities() {
        for nodes in [129, 257] {
            let p = exact(2.0, 3.0, nodes);
            let m = laplacian_measure_mass(&p, &[0.0, 0.0], 0.5).unwrap();
            let h = p.grid().spacing();
            assert!((m.mu_u - 2.0).abs() <= 2.0 * 2.0 * h + 1e-12, "{m:?}");
            assert!((m.mu_v - 3.0).abs() <= 3.0 * 2.0 * h + 1e-12);
            assert_eq!(m.clamped_u + m.clamped_v, 0.0);
        }
        let p = exact(2.0, 3.0, 257);
        let cloud = IndexedCloud::new(extract_interface(&p), 0.1);
        let d = density_trajectory(&p, &cloud, &[0.0, 0.0], &[0.5, 0.25, 0.125, 0.0625]).unwrap();
        assert!((d.zeta_u_limit.unwrap().value - 2.0).abs() < 0.1);
        assert!((d.zeta_v_limit.unwrap().value - 3.0).abs() < 0.15);
        assert!(d.sqrt_relation_error.unwrap() < 0.05);
    }

    #[test]
    fn interior_point_has_no_mass() {
        let p = exact(1.0, 1.0, 129);
        let m = laplacian_measure_mass(&p, &[0.0, 0.5], 0.25).unwrap();
        assert!(m.mu_u.abs() < 1e-9 && m.mu_v == 0.0);
    }

    #[test]
    fn exact_trajectory_is_constant() {
        let p = exact(2.0, 3.0, 257);
        let t = blowup_trajectory(&p, &[0.0, 0.0], &[0.5, 0.25, 0.125]).unwrap();
        assert!(t.angle_variation_deg() < 1e-3);
        for f in &t.fits {
            assert!((f.a - 2.0).abs() < 1e-9 && (f.b - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_sequence_has_no_gap() {
        let p = exact(2.0, 3.0, 129);
        let r = energy_convergence_probe(&[p.clone(), p], &TruncatedLinearPairSpec::axis(2, 2.0, 3.0), 0.5).unwrap();
        for e in &r.entries {
            assert!(e.l2_distance == 0.0 && e.energy_gap == 0.0);
        }
        assert!(r.decaying);
    }
}
