//! Stopping-time covers of quantitative strata.
//!
//! Radii are measured in units of `CoverParams::unit`, so `r = 1` is a ball
//! of physical radius `unit`. All `J` values come from the monotone envelope
//! of a [`StratumField`], which also supplies values below the finest
//! resolved scale by clamping.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::cloud::InterfaceCloud;
use crate::grid::Grid;
use crate::strata::{select_stratum, StratumField};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CoverParams {
    pub epsilon: f64,
    pub eta_bar: f64,
    pub rho_bar: f64,
    pub eta: f64,
    /// Physical length of the unit scale.
    pub unit: f64,
    /// Center of the unit ball being covered.
    pub center: Vec<f64>,
    /// `J̄`; `None` selects [`j_bar`].
    pub j_bar: Option<f64>,
}

impl CoverParams {
    /// `η̄ = ε/10`, `ρ̄ = η̄/10`, `η = min(η̄, 1/10)`.
    pub fn defaults(epsilon: f64, unit: f64, dim: usize) -> Self {
        let eta_bar = epsilon / 10.0;
        CoverParams {
            epsilon,
            eta_bar,
            rho_bar: eta_bar / 10.0,
            eta: eta_bar.min(0.1),
            unit,
            center: vec![0.0; dim],
            j_bar: None,
        }
    }

    /// `{η̄, η̄/4, η̄/16}`.
    pub fn eta_schedule(&self) -> [f64; 3] {
        [self.eta_bar, self.eta_bar / 4.0, self.eta_bar / 16.0]
    }

    fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.epsilon) && pos(self.eta_bar) && pos(self.eta) && pos(self.unit)) {
            return Err(Error::InvalidInput("cover parameters must be positive"));
        }
        if !(self.rho_bar > 0.0 && self.rho_bar <= 1.0) {
            return Err(Error::InvalidInput("rho_bar must lie in (0, 1]"));
        }
        if self.eta > 0.25 {
            return Err(Error::InvalidInput("eta must not exceed 1/4"));
        }
        Ok(())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `J̄`: `params.j_bar` if set, else `max J̃_y(1)` over cloud points `y` in
/// the unit ball.
pub fn j_bar(field: &StratumField, cloud: &InterfaceCloud, params: &CoverParams) -> f64 {
    if let Some(j) = params.j_bar {
        return j;
    }
    let r = params.unit.min(field.ladder[0]);
    (0..field.len())
        .filter(|&i| dist(cloud.point(i), &params.center) <= params.unit)
        .filter_map(|i| field.envelope(i, r))
        .fold(0.0, f64::max)
}

/// `J̃` of point `i` at normalized scale `s`, the scale clamped to the
/// coarsest ladder entry.
fn jt(field: &StratumField, i: usize, s: f64, unit: f64) -> f64 {
    let r = (s * unit).min(field.ladder[0]);
    field.envelope(i, r).unwrap_or(f64::NAN)
}

/// `r_k = top 2^{-k}` above `bottom`, then `bottom`.
fn stopping_ladder(top: f64, bottom: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = top;
    while r > bottom * (1.0 + 1e-12) {
        out.push(r);
        r *= 0.5;
    }
    out.push(bottom);
    out
}

/// `inf {r ∈ ladder ∩ [R, top] : J̃(ρ̄ r) > J̄ − η̄}`, equal to `top` when the
/// condition fails at `top`. With `(ladder value above, value below)`
/// bracketing the threshold crossing.
fn stopping(field: &StratumField, i: usize, top: f64, bottom: f64, jbar: f64, p: &CoverParams) -> (f64, (f64, f64)) {
    let thr = jbar - p.eta_bar;
    let ladder = stopping_ladder(top, bottom);
    let cond = |r: f64| jt(field, i, p.rho_bar * r, p.unit) > thr;
    if !cond(top) {
        let j = jt(field, i, p.rho_bar * top, p.unit);
        return (top, (j, j));
    }
    let mut k = 0;
    while k + 1 < ladder.len() && cond(ladder[k + 1]) {
        k += 1;
    }
    let above = jt(field, i, p.rho_bar * ladder[k], p.unit);
    let below = if k + 1 < ladder.len() { jt(field, i, p.rho_bar * ladder[k + 1], p.unit) } else { above };
    (ladder[k], (above, below))
}

/// Stopping radius `r̂` of cloud point `i` over `[R, 1]`.
pub fn stopping_radius(field: &StratumField, cloud: &InterfaceCloud, i: usize, bottom: f64, params: &CoverParams) -> Result<f64> {
    params.validate()?;
    if field.envelope(i, field.ladder[0]).is_none() {
        return Err(Error::Domain);
    }
    Ok(stopping(field, i, 1.0, bottom, j_bar(field, cloud, params), params).0)
}

/// Greedy Vitali selection: by decreasing radius (ties by index), keep a
/// ball iff its fifth-radius core misses every kept core. Returns kept
/// indices in selection order.
pub fn vitali_subcover(centers: &[Vec<f64>], radii: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[b].partial_cmp(&radii[a]).unwrap().then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| dist(&centers[i], &centers[k]) >= (radii[i] + radii[k]) / 5.0) {
            kept.push(i);
        }
    }
    kept
}

/// Maximal `r/2`-disjoint subset of `seeds` followed by `points`, taken
/// greedily in that order.
fn greedy_net(cloud: &InterfaceCloud, seeds: &[usize], points: &[usize], r: f64) -> Vec<usize> {
    let mut net: Vec<usize> = Vec::new();
    for &i in seeds.iter().chain(points) {
        if net.iter().all(|&k| dist(cloud.point(i), cloud.point(k)) >= r) {
            net.push(i);
        }
    }
    net
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BallClass {
    /// `r̂ = R`.
    G,
    /// `R < r̂ < 1`.
    A,
    /// `r̂ = 1`.
    V,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallEntry {
    /// Cloud index of the center.
    pub point: usize,
    pub center: Vec<f64>,
    /// Normalized radius.
    pub radius: f64,
    pub class: BallClass,
    /// Stopping radius of the Vitali ball this entry came from.
    pub parent_radius: f64,
    /// `J̃` one ladder step above and at `r̂` of the parent.
    pub bracket: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub active_in: usize,
    pub balls_out: usize,
    pub max_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallCover {
    pub entries: Vec<BallEntry>,
    pub bottom: f64,
    pub params: CoverParams,
    pub j_bar: f64,
    /// Stratum points in the unit ball.
    pub stratum: Vec<usize>,
    pub packing_sum: f64,
    /// Every stratum point lies in some entry.
    pub covers: bool,
    pub uncovered: usize,
    /// Vitali fifth-radius cores and net half-radius cores pairwise disjoint.
    pub disjoint: bool,
    pub iterations: usize,
    pub budget: usize,
    pub terminated: bool,
    pub trace: Vec<IterationRecord>,
}

impl BallCover {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `N R^{n-1}`.
    pub fn normalized_count(&self, dim: usize) -> f64 {
        self.entries.len() as f64 * self.bottom.powi(dim as i32 - 1)
    }
}

struct Stage {
    entries: Vec<BallEntry>,
    disjoint: bool,
}

/// One packing step inside `B_top(x0)` (normalized).
fn packing_stage(
    field: &StratumField,
    cloud: &InterfaceCloud,
    pts: &[usize],
    top: f64,
    bottom: f64,
    jbar: f64,
    p: &CoverParams,
) -> Stage {
    let unit = p.unit;
    let stops: Vec<(f64, (f64, f64))> = pts.iter().map(|&i| stopping(field, i, top, bottom, jbar, p)).collect();
    let centers: Vec<Vec<f64>> = pts.iter().map(|&i| cloud.point(i).to_vec()).collect();
    let radii: Vec<f64> = stops.iter().map(|s| s.0 * unit).collect();
    let kept = vitali_subcover(&centers, &radii);
    let mut disjoint = true;
    for (a, &i) in kept.iter().enumerate() {
        for &j in &kept[a + 1..] {
            if dist(&centers[i], &centers[j]) < (radii[i] + radii[j]) / 5.0 {
                disjoint = false;
            }
        }
    }
    let is_bottom = |r: f64| (r - bottom).abs() <= 1e-12 * bottom;
    let mut best: Vec<Option<BallEntry>> = vec![None; cloud.len()];
    // net points already placed, reused as seeds by later nets of equal radius
    let mut placed: Vec<(usize, f64)> = Vec::new();
    let mut entries = Vec::new();
    for &k in &kept {
        let (rhat, bracket) = stops[k];
        let y = pts[k];
        if is_bottom(rhat) {
            entries.push(BallEntry {
                point: y,
                center: centers[k].clone(),
                radius: bottom,
                class: BallClass::G,
                parent_radius: rhat,
                bracket,
            });
            continue;
        }
        let class = if (rhat - top).abs() <= 1e-12 * top { BallClass::V } else { BallClass::A };
        let ry = bottom.max(p.eta * rhat);
        let inside: Vec<usize> = pts.iter().copied().filter(|&i| dist(cloud.point(i), &centers[k]) <= rhat * unit).collect();
        let seeds: Vec<usize> = placed
            .iter()
            .filter(|&&(i, r)| r == ry && dist(cloud.point(i), &centers[k]) <= rhat * unit)
            .map(|&(i, _)| i)
            .collect();
        let net = greedy_net(cloud, &seeds, &inside, ry * unit);
        placed.extend(net.iter().filter(|i| !seeds.contains(i)).map(|&i| (i, ry)));
        for (a, &i) in net.iter().enumerate() {
            for &j in &net[a + 1..] {
                if dist(cloud.point(i), cloud.point(j)) < ry * unit {
                    disjoint = false;
                }
            }
        }
        for i in net {
            let e = BallEntry { point: i, center: cloud.point(i).to_vec(), radius: ry, class, parent_radius: rhat, bracket };
            match &best[i] {
                Some(b) if b.radius <= ry => {}
                _ => best[i] = Some(e),
            }
        }
    }
    entries.extend(best.into_iter().flatten());
    Stage { entries, disjoint }
}

/// Stratum `Γ*_{ε, ηR}` inside the normalized ball `B_r(x)`.
fn stratum_in(members: &[bool], cloud: &InterfaceCloud, x: &[f64], r: f64) -> Vec<usize> {
    (0..cloud.len()).filter(|&i| members[i] && dist(cloud.point(i), x) <= r * (1.0 + 1e-12)).collect()
}

fn audit_cover(cloud: &InterfaceCloud, stratum: &[usize], entries: &[BallEntry], unit: f64) -> usize {
    stratum
        .iter()
        .filter(|&&i| !entries.iter().any(|e| dist(cloud.point(i), &e.center) <= e.radius * unit * (1.0 + 1e-12)))
        .count()
}

fn setup(field: &StratumField, cloud: &InterfaceCloud, bottom: f64, p: &CoverParams) -> Result<(f64, Vec<bool>, Vec<usize>)> {
    p.validate()?;
    if field.len() != cloud.len() {
        return Err(Error::InvalidInput("stratum field and cloud differ"));
    }
    if !(bottom > 0.0 && bottom <= 1.0) {
        return Err(Error::InvalidInput("bottom scale must lie in (0, 1]"));
    }
    if p.unit > field.ladder[0] * (1.0 + 1e-12) {
        return Err(Error::InvalidInput("unit scale exceeds the ladder"));
    }
    let jbar = j_bar(field, cloud, p);
    let members = select_stratum(field, p.epsilon, p.eta * bottom * p.unit)?.members;
    let stratum = stratum_in(&members, cloud, &p.center, p.unit);
    Ok((jbar, members, stratum))
}

/// Packing cover of `Γ*_{ε,ηR} ∩ B_1`: stopping radii, Vitali
/// subcover, and nets of radius `max(R, η r̂)` inside the non-`G` balls.
pub fn main_packing_cover(field: &StratumField, cloud: &InterfaceCloud, bottom: f64, params: &CoverParams) -> Result<BallCover> {
    let (jbar, _, stratum) = setup(field, cloud, bottom, params)?;
    let stage = packing_stage(field, cloud, &stratum, 1.0, bottom, jbar, params);
    Ok(finish(cloud, stage.entries, stage.disjoint, stratum, bottom, params, jbar, 1, 1, true, Vec::new()))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    cloud: &InterfaceCloud,
    entries: Vec<BallEntry>,
    disjoint: bool,
    stratum: Vec<usize>,
    bottom: f64,
    params: &CoverParams,
    jbar: f64,
    iterations: usize,
    budget: usize,
    terminated: bool,
    trace: Vec<IterationRecord>,
) -> BallCover {
    let n = cloud.dim as i32;
    let packing_sum = entries.iter().map(|e| e.radius.powi(n - 1)).sum();
    let uncovered = audit_cover(cloud, &stratum, &entries, params.unit);
    BallCover {
        entries,
        bottom,
        params: params.clone(),
        j_bar: jbar,
        stratum,
        packing_sum,
        covers: uncovered == 0,
        uncovered,
        disjoint,
        iterations,
        budget,
        terminated,
        trace,
    }
}

/// Re-applies the packing lemma inside every ball of radius above `R`, with
/// `J̄` replaced by the local supremum `max_{y ∈ B_{4r}(x)} J̃_y(4r)`, until
/// all radii equal `R` or `⌈J̄/η⌉ + 1` rounds have run.
pub fn iterated_cover(field: &StratumField, cloud: &InterfaceCloud, bottom: f64, params: &CoverParams) -> Result<BallCover> {
    let (jbar, members, stratum) = setup(field, cloud, bottom, params)?;
    let budget = (jbar / params.eta).ceil() as usize + 1;
    let unit = params.unit;
    let is_bottom = |r: f64| (r - bottom).abs() <= 1e-12 * bottom;
    let first = packing_stage(field, cloud, &stratum, 1.0, bottom, jbar, params);
    let mut disjoint = first.disjoint;
    let mut done: Vec<BallEntry> = Vec::new();
    let mut active: Vec<BallEntry> = Vec::new();
    for e in first.entries {
        if is_bottom(e.radius) { done.push(e) } else { active.push(e) }
    }
    let mut trace = vec![IterationRecord {
        active_in: stratum.len(),
        balls_out: done.len() + active.len(),
        max_radius: done.iter().chain(&active).map(|e| e.radius).fold(0.0, f64::max),
    }];
    let mut iterations = 1;
    while !active.is_empty() && iterations < budget {
        iterations += 1;
        let mut next = Vec::new();
        let active_in = active.len();
        for ball in &active {
            let r = ball.radius;
            let pts = stratum_in(&members, cloud, &ball.center, r * unit);
            let local = (0..cloud.len())
                .filter(|&i| dist(cloud.point(i), &ball.center) <= 4.0 * r * unit)
                .filter_map(|i| field.envelope(i, (4.0 * r * unit).min(field.ladder[0])))
                .fold(0.0, f64::max);
            let stage = packing_stage(field, cloud, &pts, r, bottom, local, params);
            disjoint &= stage.disjoint;
            next.extend(stage.entries);
        }
        active.clear();
        let out = next.len();
        for e in next {
            if is_bottom(e.radius) { done.push(e) } else { active.push(e) }
        }
        trace.push(IterationRecord {
            active_in,
            balls_out: out,
            max_radius: done.iter().chain(&active).map(|e| e.radius).fold(0.0, f64::max),
        });
    }
    let terminated = active.is_empty();
    done.extend(active);
    Ok(finish(cloud, done, disjoint, stratum, bottom, params, jbar, iterations, budget, terminated, trace))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DichotomyCase {
    /// `J̃_y(ρ̄ r) > J̄ − η̄` at every stratum point of `B_{2r}(x₀)`.
    SmallDrop,
    /// `J̃_y(4ηr) ≤ J̄ − η` at every such point.
    DefiniteDrop,
    /// Neither alternative holds everywhere.
    Mixed,
    /// No stratum point in `B_{2r}(x₀)`.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyAttempt {
    pub eta: f64,
    pub case: DichotomyCase,
    /// Stratum points violating the first alternative.
    pub small_drop_violations: Vec<usize>,
    /// Stratum points violating the second.
    pub definite_drop_violations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub j_bar: f64,
    pub points: usize,
    /// One attempt per `η` of the schedule, stopping at the first clean case.
    pub attempts: Vec<DichotomyAttempt>,
    pub case: DichotomyCase,
}

impl DichotomyReport {
    pub fn violation(&self) -> bool {
        self.case == DichotomyCase::Mixed
    }
}

/// Classifies the stratum points of `B_{2r}(x₀)` (normalized `r`) under
/// the two alternatives, walking the `η` schedule while the outcome is mixed.
pub fn dichotomy_probe(field: &StratumField, cloud: &InterfaceCloud, x0: &[f64], r: f64, params: &CoverParams) -> Result<DichotomyReport> {
    params.validate()?;
    let jbar = j_bar(field, cloud, params);
    let unit = params.unit;
    let mut attempts = Vec::new();
    let mut points = 0;
    for eta in params.eta_schedule() {
        let members = select_stratum(field, params.epsilon, (eta * r * unit).min(field.ladder[0]))?.members;
        let pts = stratum_in(&members, cloud, x0, 2.0 * r * unit);
        points = pts.len();
        let small: Vec<usize> = pts.iter().copied().filter(|&i| !(jt(field, i, params.rho_bar * r, unit) > jbar - params.eta_bar)).collect();
        let definite: Vec<usize> = pts.iter().copied().filter(|&i| !(jt(field, i, 4.0 * eta * r, unit) <= jbar - eta)).collect();
        let case = if pts.is_empty() {
            DichotomyCase::Vacuous
        } else if small.is_empty() {
            DichotomyCase::SmallDrop
        } else if definite.is_empty() {
            DichotomyCase::DefiniteDrop
        } else {
            DichotomyCase::Mixed
        };
        attempts.push(DichotomyAttempt { eta, case, small_drop_violations: small, definite_drop_violations: definite });
        if case != DichotomyCase::Mixed {
            break;
        }
    }
    let case = attempts.last().unwrap().case;
    Ok(DichotomyReport { center: x0.to_vec(), radius: r, j_bar: jbar, points, attempts, case })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PackingAudit {
    /// Balls with `J̃_p(η̄ r_p) ≥ J̄ − η̄`.
    pub holds: usize,
    pub total: usize,
    pub failing: Vec<usize>,
    pub packing_sum: f64,
}

/// Checks `J̃_p(η̄ r_p) ≥ J̄ − η̄` at every ball of `cover`.
pub fn packing_hypothesis_audit(field: &StratumField, cover: &BallCover) -> PackingAudit {
    let p = &cover.params;
    let failing: Vec<usize> = (0..cover.entries.len())
        .filter(|&k| {
            let e = &cover.entries[k];
            !(jt(field, e.point, p.eta_bar * e.radius, p.unit) >= cover.j_bar - p.eta_bar)
        })
        .collect();
    PackingAudit { holds: cover.entries.len() - failing.len(), total: cover.entries.len(), failing, packing_sum: cover.packing_sum }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinkowskiReport {
    /// `|B_R(Γ*_{ε,R}) ∩ B_1|` in normalized units.
    pub volume: f64,
    /// `volume / R`.
    pub constant: f64,
    pub points: usize,
}

/// Volume of the `R`-neighborhood of `Γ*_{ε,R}` inside the unit ball, by
/// counting grid nodes, normalized by `unit^n`.
pub fn minkowski_check(field: &StratumField, cloud: &InterfaceCloud, grid: &Grid, bottom: f64, params: &CoverParams) -> Result<MinkowskiReport> {
    params.validate()?;
    let unit = params.unit;
    let rr = bottom * unit;
    let sel = select_stratum(field, params.epsilon, rr.min(field.ladder[0]))?;
    let n = grid.dim();
    let mut mark = vec![false; grid.len()];
    let mut pts = 0;
    let mut lo = vec![0usize; n];
    let mut hi = vec![0usize; n];
    let mut pos = vec![0.0; n];
    for i in sel.indices() {
        let y = cloud.point(i);
        if dist(y, &params.center) > unit + rr {
            continue;
        }
        pts += 1;
        grid.node_range(y, rr, &mut lo, &mut hi);
        grid.for_each_in_box(&lo, &hi, |node, _| {
            grid.position(node, &mut pos);
            if dist(&pos, y) <= rr && dist(&pos, &params.center) <= unit {
                mark[node] = true;
            }
        });
    }
    let cells = mark.iter().filter(|&&m| m).count() as f64;
    let volume = cells * (grid.spacing() / unit).powi(n as i32);
    Ok(MinkowskiReport { volume, constant: volume / bottom, points: pts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vitali_examples() {
        let c = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert_eq!(vitali_subcover(&c, &[1.0, 0.5]), vec![0]);
        let grid: Vec<Vec<f64>> = (0..25).map(|i| vec![(i % 5) as f64, (i / 5) as f64]).collect();
        assert_eq!(vitali_subcover(&grid, &[0.1; 25]).len(), 25);
    }

    #[test]
    fn ladder_ends_at_bottom() {
        assert_eq!(stopping_ladder(1.0, 0.125), vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(stopping_ladder(0.3, 0.125), vec![0.3, 0.15, 0.125]);
        assert_eq!(stopping_ladder(0.125, 0.125), vec![0.125]);
    }
}
