//! The ACF functional, radial profiles, and the square functions built on them.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::energy::PairEnergy;
use crate::pair::AdmissiblePair;
use crate::quadrature::MIN_CELLS;
use crate::{Error, Result};

/// Per-dyadic log-drop below which a profile counts as flat.
pub const TREND_TOL: f64 = 0.03;

/// `J_x(r)` for a single ball. Builds the energy densities on every call;
/// use [`PairEnergy`] for repeated evaluation.
pub fn acf_value(pair: &AdmissiblePair, x: &[f64], r: f64) -> Result<f64> {
    PairEnergy::new(pair).acf(x, r)
}

/// `r_max · 2^{-j}` for `j = 0..=depth`.
pub fn dyadic_ladder(r_max: f64, depth: usize) -> Vec<f64> {
    (0..=depth).map(|j| r_max * 0.5f64.powi(j as i32)).collect()
}

/// Largest `depth` with `r_max 2^{-depth} ≥ 4h`.
pub fn resolved_depth(h: f64, r_max: f64) -> usize {
    let mut depth = 0;
    while r_max * 0.5f64.powi(depth as i32 + 1) >= MIN_CELLS * h * (1.0 - 1e-12) {
        depth += 1;
    }
    depth
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub half_energies: Vec<(f64, f64)>,
    /// `max(0, J(r_{j+1}) - J(r_j))` per step.
    pub monotone_defects: Vec<f64>,
    /// Defects divided by `J(r_j)` (0 where `J(r_j) = 0`).
    pub relative_defects: Vec<f64>,
}

impl RadialProfile {
    pub fn worst_relative_defect(&self) -> f64 {
        self.relative_defects.iter().cloned().fold(0.0, f64::max)
    }

    /// `log(J(r_j) / J(r_{j+1}))` with `log(R/0) = +∞`.
    pub fn log_drops(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| log_ratio(w[0], w[1])).collect()
    }
}

/// `log(big / small)`; `+∞` when only `small` vanishes, 0 when both do.
pub fn log_ratio(big: f64, small: f64) -> f64 {
    if small > 0.0 {
        (big / small).ln()
    } else if big > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

pub fn radial_profile(energy: &PairEnergy, x: &[f64], radii: &[f64]) -> Result<RadialProfile> {
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("radii must be strictly decreasing"));
    }
    let mut values = Vec::with_capacity(radii.len());
    let mut half_energies = Vec::with_capacity(radii.len());
    for &r in radii {
        let (a, b) = energy.factors(x, r)?;
        half_energies.push((a, b));
        values.push(a * b);
    }
    let monotone_defects: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let relative_defects = monotone_defects
        .iter()
        .zip(&values)
        .map(|(d, j)| if *j > 0.0 { d / j } else { 0.0 })
        .collect();
    Ok(RadialProfile { center: x.to_vec(), radii: radii.to_vec(), values, half_energies, monotone_defects, relative_defects })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Converged,
    StillDecreasing,
    Noisy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct J0Estimate {
    /// `J` at the smallest scale, an upper bound for `J(0⁺)` by monotonicity.
    pub value: f64,
    pub trend: Trend,
    /// The last two per-step log-drops.
    pub last_drops: [f64; 2],
}

/// Smallest-scale value with a trend flag from the last two log-drops.
pub fn estimate_j0plus(profile: &RadialProfile) -> Result<J0Estimate> {
    estimate_j0plus_with(profile, TREND_TOL)
}

pub fn estimate_j0plus_with(profile: &RadialProfile, tol: f64) -> Result<J0Estimate> {
    let v = &profile.values;
    if v.len() < 3 {
        return Err(Error::InvalidInput("profile needs at least three scales"));
    }
    let k = v.len();
    let d = [log_ratio(v[k - 3], v[k - 2]), log_ratio(v[k - 2], v[k - 1])];
    let trend = if (v[k - 1] == 0.0 && v[k - 2] == 0.0) || d.iter().all(|x| x.abs() <= tol) {
        Trend::Converged
    } else if d.iter().all(|x| *x > tol) {
        Trend::StillDecreasing
    } else {
        Trend::Noisy
    };
    Ok(J0Estimate { value: v[k - 1], trend, last_drops: d })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceKind {
    LogDrop,
    Carleson,
    Spectral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareFunctionTrace {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub kind: TraceKind,
    pub entries: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

fn partial_sums(entries: &[f64]) -> Vec<f64> {
    entries
        .iter()
        .scan(0.0, |s, e| {
            *s += e;
            Some(*s)
        })
        .collect()
}

/// Log-drop trace; entry `j` belongs to the step `r_j → r_{j+1}`.
pub fn log_drop_trace(profile: &RadialProfile) -> SquareFunctionTrace {
    let entries = profile.log_drops();
    SquareFunctionTrace {
        center: profile.center.clone(),
        radii: profile.radii[..profile.radii.len().saturating_sub(1)].to_vec(),
        kind: TraceKind::LogDrop,
        partial_sums: partial_sums(&entries),
        entries,
    }
}

/// Carleson `ε²` or spectral `λ²` trace over `radii`.
pub fn arc_trace(pair: &AdmissiblePair, x: &[f64], radii: &[f64], kind: TraceKind) -> Result<SquareFunctionTrace> {
    let mut entries = Vec::with_capacity(radii.len());
    for &r in radii {
        entries.push(match kind {
            TraceKind::Carleson => carleson_epsilon(pair, x, r)?.powi(2),
            TraceKind::Spectral => spectral_lambda2(pair, x, r)?,
            TraceKind::LogDrop => return Err(Error::InvalidInput("log-drops come from a profile")),
        });
    }
    Ok(SquareFunctionTrace { center: x.to_vec(), radii: radii.to_vec(), kind, partial_sums: partial_sums(&entries), entries })
}

/// Angular samples on circles.
pub const ARC_SAMPLES: usize = 1 << 14;

/// Longest arcs `(I⁺, I⁻)` of `∂B_r(x)` inside `{u > 0}` and `{v > 0}`.
pub fn arc_lengths(pair: &AdmissiblePair, x: &[f64], r: f64) -> Result<(f64, f64)> {
    let g = pair.grid();
    if g.dim() != 2 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    let min = 64.0 * g.spacing() / (2.0 * PI);
    if !(r >= min) {
        return Err(Error::UnderResolved { radius: r, min });
    }
    let m = ARC_SAMPLES;
    let mut w = vec![0.0; m];
    for (k, wk) in w.iter_mut().enumerate() {
        let t = 2.0 * PI * k as f64 / m as f64;
        let p = [x[0] + r * t.cos(), x[1] + r * t.sin()];
        let (a, b) = (pair.u.interpolate(&p), pair.v.interpolate(&p));
        match (a, b) {
            (Some(a), Some(b)) => *wk = a - b,
            _ => return Err(Error::Domain),
        }
    }
    let plus = longest_arc(&w, 1.0) * r;
    let minus = longest_arc(&w, -1.0) * r;
    Ok((plus, minus))
}

/// Longest angular run (radians) where `sign · w > 0` on a periodic sample
/// sequence, with crossings placed by linear interpolation.
fn longest_arc(w: &[f64], sign: f64) -> f64 {
    let m = w.len();
    let dt = 2.0 * PI / m as f64;
    let pos = |k: usize| sign * w[k % m] > 0.0;
    if (0..m).all(pos) {
        return 2.0 * PI;
    }
    let Some(start) = (0..m).find(|&k| !pos(k)) else { return 2.0 * PI };
    // zero of the linear interpolant between samples k and k+1, as a fraction
    let cross = |k: usize| {
        let (a, b) = (sign * w[k % m], sign * w[(k + 1) % m]);
        if a == b {
            0.5
        } else {
            (a / (a - b)).clamp(0.0, 1.0)
        }
    };
    let mut best = 0.0f64;
    let mut k = start;
    let end = start + m;
    while k < end {
        if pos(k + 1) {
            let enter = k as f64 + cross(k);
            let mut j = k + 1;
            while pos(j + 1) {
                j += 1;
            }
            let leave = j as f64 + cross(j);
            best = best.max((leave - enter) * dt);
            k = j + 1;
        } else {
            k += 1;
        }
    }
    best
}

/// `max(|I⁺/r - π|, |I⁻/r - π|)`.
pub fn carleson_epsilon(pair: &AdmissiblePair, x: &[f64], r: f64) -> Result<f64> {
    let (p, m) = arc_lengths(pair, x, r)?;
    Ok((p / r - PI).abs().max((m / r - PI).abs()))
}

/// First Dirichlet eigenvalue of an arc of angle `l` on the unit circle.
pub fn arc_eigenvalue(l: f64) -> f64 {
    if l > 0.0 {
        (PI / l).powi(2)
    } else {
        f64::INFINITY
    }
}

/// `|λ₁(arc⁺) - 1|² + |λ₁(arc⁻) - 1|²`; `+∞` if either arc is empty.
pub fn spectral_lambda2(pair: &AdmissiblePair, x: &[f64], r: f64) -> Result<f64> {
    if pair.dim() != 2 {
        return Err(Error::UnsupportedDimension(pair.dim()));
    }
    let (p, m) = arc_lengths(pair, x, r)?;
    Ok((arc_eigenvalue(p / r) - 1.0).powi(2) + (arc_eigenvalue(m / r) - 1.0).powi(2))
}

/// Arc angles `I/r` together with the homogeneities `π / (I/r)` of the
/// corresponding sector harmonic functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcAlphas {
    pub angle_u: f64,
    pub angle_v: f64,
    pub homogeneity_u: f64,
    pub homogeneity_v: f64,
}

pub fn arc_alphas(pair: &AdmissiblePair, x: &[f64], r: f64) -> Result<ArcAlphas> {
    let (p, m) = arc_lengths(pair, x, r)?;
    let (au, av) = (p / r, m / r);
    let hom = |a: f64| if a > 0.0 { PI / a } else { f64::INFINITY };
    Ok(ArcAlphas { angle_u: au, angle_v: av, homogeneity_u: hom(au), homogeneity_v: hom(av) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UscReport {
    pub values: Vec<f64>,
    /// Largest value over the second half of the sequence.
    pub limsup: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Compares `limsup J_{x_i}(r_i)` with a `J(0⁺)` estimate at the limit point.
pub fn usc_probe(energy: &PairEnergy, seq: &[(Vec<f64>, f64)], reference: &J0Estimate, rel_tol: f64) -> Result<UscReport> {
    if seq.is_empty() {
        return Err(Error::Empty("ball sequence"));
    }
    let mut values = Vec::with_capacity(seq.len());
    for (x, r) in seq {
        values.push(energy.acf(x, *r)?);
    }
    let tail = &values[values.len() / 2..];
    let limsup = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tolerance = rel_tol * reference.value.max(f64::MIN_POSITIVE);
    Ok(UscReport { limsup, reference: reference.value, tolerance, holds: limsup <= reference.value + tolerance, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{make_truncated_linear_pair, TruncatedLinearPairSpec};
    use crate::grid::{Grid, GridField};
    use crate::pair::{validate_pair, Tolerances};

    fn exact(a: f64, b: f64, nodes: usize, half: f64) -> AdmissiblePair {
        let g = Grid::cube(2, half, nodes).unwrap();
        make_truncated_linear_pair(&TruncatedLinearPairSpec::axis(2, a, b), &g).unwrap()
    }

    #[test]
    fn exact_pair_value() {
        let p = exact(1.0, 1.0, 129, 2.0);
        let j = acf_value(&p, &[0.0, 0.0], 1.0).unwrap();
        assert!((j / (PI * PI / 4.0) - 1.0).abs() < 0.02, "{j}");
        let j = acf_value(&p, &[0.3, 0.0], 0.5).unwrap();
        assert!((j / (PI * PI / 4.0) - 1.0).abs() < 0.02, "{j}");
    }

    #[test]
    fn one_sided_pair_vanishes() {
        let g = Grid::cube(2, 2.0, 65).unwrap();
        let u = GridField::from_fn(g.clone(), |p| p[1].max(0.0));
        let p = validate_pair(u, GridField::zeros(g), &Tolerances::default()).unwrap();
        assert_eq!(acf_value(&p, &[0.0, 0.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn scale_errors() {
        let p = exact(1.0, 1.0, 65, 2.0);
        assert!(matches!(acf_value(&p, &[0.0, 0.0], 0.05), Err(Error::UnderResolved { .. })));
        assert_eq!(acf_value(&p, &[1.5, 0.0], 1.0), Err(Error::Domain));
    }

    #[test]
    fn exact_profile_is_flat() {
        let p = exact(2.0, 3.0, 257, 2.0);
        let e = PairEnergy::new(&p);
        let radii = dyadic_ladder(1.0, resolved_depth(p.grid().spacing(), 1.0));
        assert_eq!(radii.len(), 5);
        let prof = radial_profile(&e, &[0.0, 0.0], &radii).unwrap();
        assert!(prof.worst_relative_defect() < 0.005);
        let est = estimate_j0plus(&prof).unwrap();
        assert_eq!(est.trend, Trend::Converged);
        assert!((est.value / (9.0 * PI * PI) - 1.0).abs() < 0.02);
        let trace = log_drop_trace(&prof);
        assert_eq!(trace.entries.len(), 4);
        assert!(trace.partial_sums.last().unwrap().abs() < 0.02);
    }

    #[test]
    fn trend_flags() {
        let mk = |values: Vec<f64>| RadialProfile {
            center: vec![0.0, 0.0],
            radii: dyadic_ladder(1.0, values.len() - 1),
            monotone_defects: vec![],
            relative_defects: vec![],
            half_energies: vec![],
            values,
        };
        assert_eq!(estimate_j0plus(&mk(vec![1.0, 0.5, 0.25])).unwrap().trend, Trend::StillDecreasing);
        assert_eq!(estimate_j0plus(&mk(vec![1.0, 0.5, 0.5])).unwrap().trend, Trend::Noisy);
        assert_eq!(estimate_j0plus(&mk(vec![1.0, 0.999, 1.0])).unwrap().trend, Trend::Converged);
        assert!(estimate_j0plus(&mk(vec![1.0, 0.5])).is_err());
        assert_eq!(log_ratio(1.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn half_plane_arcs() {
        let p = exact(1.0, 1.0, 257, 1.0);
        let (a, b) = arc_lengths(&p, &[0.0, 0.0], 0.5).unwrap();
        assert!((a - 0.5 * PI).abs() < 1e-3 && (b - 0.5 * PI).abs() < 1e-3, "{a} {b}");
        assert!(carleson_epsilon(&p, &[0.0, 0.0], 0.5).unwrap() < 1e-3);
        assert!(spectral_lambda2(&p, &[0.0, 0.0], 0.5).unwrap() < 1e-3);
        let inside = [0.0, 0.7];
        let (a, b) = arc_lengths(&p, &inside, 0.25).unwrap();
        assert!((a - 2.0 * PI * 0.25).abs() < 1e-12 && b == 0.0);
        assert!((carleson_epsilon(&p, &inside, 0.25).unwrap() - PI).abs() < 1e-12);
        assert_eq!(spectral_lambda2(&p, &inside, 0.25).unwrap(), f64::INFINITY);
    }

    #[test]
    fn arc_resolution_check() {
        let p = exact(1.0, 1.0, 65, 1.0);
        assert!(matches!(arc_lengths(&p, &[0.0, 0.0], 0.1), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn longest_arc_picks_the_longest_run() {
        let m = 360;
        let w: Vec<f64> = (0..m)
            .map(|k| if (10..20).contains(&k) || (100..200).contains(&k) { 1.0 } else { -1.0 })
            .collect();
        let l = longest_arc(&w, 1.0);
        assert!((l - 100.0 * 2.0 * PI / 360.0).abs() < 1e-12, "{l}");
        let l = longest_arc(&w, -1.0);
        assert!((l - 170.0 * 2.0 * PI / 360.0).abs() < 1e-12, "{l}");
    }

    #[test]
    fn usc_on_exact_pair() {
        let p = exact(1.0, 1.0, 257, 2.0);
        let e = PairEnergy::new(&p);
        let prof = radial_profile(&e, &[0.0, 0.0], &dyadic_ladder(1.0, 4)).unwrap();
        let est = estimate_j0plus(&prof).unwrap();
        let seq: Vec<(Vec<f64>, f64)> = (0..6).map(|i| (vec![0.5f64.powi(i), 0.0], 0.25)).collect();
        let rep = usc_probe(&e, &seq, &est, 0.02).unwrap();
        assert!(rep.holds, "{rep:?}");
        let inside: Vec<(Vec<f64>, f64)> = (0..4).map(|i| (vec![0.0, 0.5 + 0.1 * i as f64], 0.1)).collect();
        let rep = usc_probe(&e, &inside, &est, 0.0).unwrap();
        assert_eq!(rep.limsup, 0.0);
    }
}
