//! Experiment registry, criterion evaluators and reports.
//!
//! Each registered experiment evaluates one acceptance criterion. The
//! evaluators take their setup from a [`Config`] (defaults below) and their
//! tolerances from the constants in this module; tolerances are not
//! configurable.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use acf_core::acf::{arc_alphas, arc_lengths, carleson_epsilon, dyadic_ladder, log_ratio, radial_profile, resolved_depth, spectral_lambda2};
use acf_core::beta::{beta_for_plane, beta_number, l2_subspace_inequality_probe, square_function_sum, Hyperplane};
use acf_core::blowup::{blowup_trajectory, density_trajectory};
use acf_core::cloud::{extract_interface, IndexedCloud, InterfaceCloud};
use acf_core::cover::{dichotomy_probe, iterated_cover, j_bar, minkowski_check, packing_hypothesis_audit, CoverParams, DichotomyCase};
use acf_core::energy::PairEnergy;
use acf_core::fit::{fit_truncated_pair, normalized_fit_error};
use acf_core::generators::{koch_corners, SolverConfig, SolverMethod};
use acf_core::quadrature::MIN_CELLS;
use acf_core::strata::{select_stratum, StratumField};
use acf_core::{c_star, AdmissiblePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::io::{num, opt, write_json, Table};
use crate::pairs::{PairCache, PairKind, PairSpec};
use crate::LabError;

pub const EXACT_ACF_TOL: f64 = 0.02;
pub const SANITY_RUNTIME_S: f64 = 10.0;
pub const MONOTONE_TOL: f64 = 0.05;
pub const EXACT_MONOTONE_TOL: f64 = 0.005;
/// Relative tolerance standing in for "machine precision".
pub const GAUGE_TOL: f64 = 1e-12;
pub const ROTATION_TOL_DEG: f64 = 0.5;
pub const TWO_MASS_TOL: f64 = 1e-6;
/// Floating-point slack when comparing the closed form with sampled planes.
pub const ORACLE_ROUNDOFF: f64 = 1e-12;
pub const ARC_TOL: f64 = 1e-3;
pub const WEDGE_ARC_TOL: f64 = 0.01;
pub const STABILITY_SPREAD: f64 = 10.0;
pub const SUBSPACE_MEDIAN_FACTOR: f64 = 5.0;
pub const COVER_SPREAD: f64 = 2.0;
pub const MINKOWSKI_SPREAD: f64 = 2.0;
pub const UNIQUE_ANGLE_DEG: f64 = 2.0;
pub const NONUNIQUE_ANGLE_DEG: f64 = 30.0;
pub const UNSETTLED_STEP_DEG: f64 = 5.0;
pub const ZETA_TOL: f64 = 0.05;
pub const SQRT_RELATION_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug)]
pub struct ExperimentInfo {
    pub id: &'static str,
    pub criterion: u32,
    pub description: &'static str,
    /// Config keys besides the common ones.
    pub keys: &'static [&'static str],
}

const COMMON_KEYS: &[&str] = &["experiment", "seed", "output.dir", "solver.method", "solver.residual_tol", "solver.max_sweeps"];

static REGISTRY: [ExperimentInfo; 12] = [
    ExperimentInfo {
        id: "exact-pair-sanity",
        criterion: 1,
        description: "J of the exact pair (a=2, b=3) against c_* a^2 b^2 on a 513^2 grid",
        keys: &["grid.nodes", "grid.half_width", "pair.a", "pair.b", "acf.scales"],
    },
    ExperimentInfo {
        id: "monotonicity-audit",
        criterion: 2,
        description: "relative monotone defect of every generator on a dyadic ladder",
        keys: &["grid.nodes", "grid.half_width", "ladder.r_max"],
    },
    ExperimentInfo {
        id: "gauge-symmetry",
        criterion: 3,
        description: "swap and gauge invariance of J; fitted normals follow rotations",
        keys: &["grid.nodes", "grid.half_width", "acf.scales", "gauge.factors", "rotation.angles_deg"],
    },
    ExperimentInfo {
        id: "beta-oracle",
        criterion: 4,
        description: "closed-form beta numbers against seeded random plane sweeps",
        keys: &["oracle.clouds", "oracle.max_points", "oracle.planes", "oracle.two_mass_d"],
    },
    ExperimentInfo {
        id: "wedge-carleson",
        criterion: 5,
        description: "Carleson epsilon and spectral lambda^2 on half-plane and wedge interfaces",
        keys: &["grid.nodes", "grid.half_width", "wedge.slope", "arc.scales"],
    },
    ExperimentInfo {
        id: "stability-wedge-family",
        criterion: 6,
        description: "normalized fit error over log-drop on the harmonic wedge family",
        keys: &["grid.nodes", "grid.half_width", "wedge.slopes", "fit.R", "fit.rho_divisors"],
    },
    ExperimentInfo {
        id: "l2-subspace",
        criterion: 7,
        description: "beta^2 against the averaged log-drop near the singular point",
        keys: &["grid.nodes", "grid.half_width", "subspace.scales", "subspace.kappa", "subspace.centers", "spiral.lambda"],
    },
    ExperimentInfo {
        id: "covering",
        criterion: 8,
        description: "iterated stratum cover, packing counts and Minkowski content",
        keys: &["grid.nodes", "grid.half_width", "cover.epsilon", "cover.unit", "cover.scales", "spiral.lambda"],
    },
    ExperimentInfo {
        id: "dichotomy",
        criterion: 9,
        description: "small-drop / definite-drop dichotomy on exact and Koch pairs",
        keys: &["grid.nodes", "grid.half_width", "dichotomy.exact_epsilon", "dichotomy.koch_epsilon", "dichotomy.unit", "dichotomy.scales", "koch.depth"],
    },
    ExperimentInfo {
        id: "spiral-nonunique-blowup",
        criterion: 10,
        description: "fitted normal along the blowup ladder, line against spiral",
        keys: &["grid.nodes", "grid.half_width", "blowup.r_max", "blowup.depth", "spiral.lambda"],
    },
    ExperimentInfo {
        id: "density-slope",
        criterion: 11,
        description: "Laplacian densities zeta_u, zeta_v and the a b / J(0+) relation",
        keys: &["grid.nodes", "grid.half_width", "blowup.r_max", "blowup.depth", "pair.a", "pair.b"],
    },
    ExperimentInfo {
        id: "koch-nonrect",
        criterion: 12,
        description: "beta square-function growth and stratum shrinkage on the Koch pair",
        keys: &["grid.nodes", "grid.half_width", "koch.depth", "koch.scales", "koch.epsilon"],
    },
];

/// Registered experiments in stable order.
pub fn registry() -> &'static [ExperimentInfo] {
    &REGISTRY
}

pub fn lookup(id: &str) -> Option<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.id == id)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: String,
    pub relation: String,
    pub bound: String,
    pub pass: bool,
}

fn check(name: impl Into<String>, value: f64, relation: &str, bound: f64) -> Check {
    let pass = match relation {
        "<=" => value <= bound,
        "<" => value < bound,
        ">=" => value >= bound,
        ">" => value > bound,
        "==" => value == bound,
        _ => unreachable!("unknown relation {relation}"),
    };
    Check { name: name.into(), value: num(value), relation: relation.into(), bound: num(bound), pass }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The evaluator aborted with an error.
    Error,
    NotRun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: u32,
    pub experiment: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl CriterionResult {
    fn new(info: &ExperimentInfo, checks: Vec<Check>, notes: Vec<String>) -> Self {
        let status = if !checks.is_empty() && checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
        CriterionResult { criterion: info.criterion, experiment: info.id.into(), status, checks, notes }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// One summary line, failing checks first.
    pub fn summary(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
            Status::NotRun => "SKIP",
        };
        let failing: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} = {} (needs {} {})", c.name, c.value, c.relation, c.bound))
            .collect();
        let detail = if failing.is_empty() {
            format!("{} checks", self.checks.len())
        } else {
            failing.join("; ")
        };
        format!("criterion {:2} [{tag}] {}: {detail}", self.criterion, self.experiment)
    }
}

/// Result of one evaluator: the criterion verdict and its data tables.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: CriterionResult,
    pub tables: Vec<Table>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub wall_clock_s: f64,
    /// `false` when a stage aborted.
    pub complete: bool,
    pub error: Option<String>,
    /// One entry per registered criterion, in registry order.
    pub criteria: Vec<CriterionResult>,
    /// CSV files written next to the report.
    pub tables: Vec<String>,
}

impl ExperimentReport {
    /// `true` iff every executed criterion passed.
    pub fn passed(&self) -> bool {
        self.complete && self.criteria.iter().all(|c| matches!(c.status, Status::Pass | Status::NotRun))
    }
}

pub fn solver_from_config(cfg: &Config) -> Result<SolverConfig, LabError> {
    let mut s = SolverConfig::default();
    s.method = match cfg.get("solver.method").unwrap_or("mgcg") {
        "mgcg" => SolverMethod::MultigridCg,
        "sor" => SolverMethod::RedBlackSor,
        other => return Err(LabError::Config(format!("solver.method: unknown {other:?} (mgcg|sor)"))),
    };
    s.residual_tol = cfg.f64_or("solver.residual_tol", s.residual_tol)?;
    s.max_sweeps = cfg.usize_or("solver.max_sweeps", s.max_sweeps)?;
    Ok(s)
}

/// Checks the experiment id and that every key belongs to it.
pub fn validate_config(cfg: &Config) -> Result<&'static ExperimentInfo, LabError> {
    let id = cfg.get("experiment").ok_or_else(|| LabError::Config("missing key `experiment`".into()))?;
    let info = lookup(id).ok_or_else(|| LabError::Config(format!("unknown experiment {id:?}")))?;
    for k in cfg.keys() {
        if !COMMON_KEYS.contains(&k) && !info.keys.contains(&k) {
            return Err(LabError::Config(format!("key {k:?} does not apply to {id}")));
        }
    }
    solver_from_config(cfg)?;
    Ok(info)
}

/// Evaluates one experiment's criterion using pairs from `cache`.
pub fn evaluate(info: &ExperimentInfo, cfg: &Config, cache: &PairCache) -> Result<Outcome, LabError> {
    let (checks, notes, tables) = match info.criterion {
        1 => exact_pair_sanity(cfg, cache)?,
        2 => monotonicity_audit(cfg, cache)?,
        3 => gauge_symmetry(cfg, cache)?,
        4 => beta_oracle(cfg)?,
        5 => wedge_carleson(cfg, cache)?,
        6 => stability_wedge_family(cfg, cache)?,
        7 => l2_subspace(cfg, cache)?,
        8 => covering(cfg, cache)?,
        9 => dichotomy(cfg, cache)?,
        10 => nonunique_blowup(cfg, cache)?,
        11 => density_slope(cfg, cache)?,
        12 => koch_nonrect(cfg, cache)?,
        _ => unreachable!(),
    };
    Ok(Outcome { result: CriterionResult::new(info, checks, notes), tables })
}

/// Validates `cfg`, evaluates it, and writes `report.json` plus one CSV per
/// table into `out_dir` when given.
pub fn run_experiment(cfg: &Config, out_dir: Option<&Path>) -> Result<ExperimentReport, LabError> {
    let info = validate_config(cfg)?;
    let cache = PairCache::new(solver_from_config(cfg)?);
    let seed = cfg.u64_or("seed", DEFAULT_SEED)?;
    let start = Instant::now();
    let outcome = evaluate(info, cfg, &cache);
    let wall_clock_s = start.elapsed().as_secs_f64();
    let mut criteria: Vec<CriterionResult> = REGISTRY
        .iter()
        .map(|e| CriterionResult { criterion: e.criterion, experiment: e.id.into(), status: Status::NotRun, checks: vec![], notes: vec![] })
        .collect();
    let slot = (info.criterion - 1) as usize;
    let mut report = ExperimentReport {
        experiment: info.id.into(),
        config_hash: cfg.provenance_hash(),
        seed,
        wall_clock_s,
        complete: true,
        error: None,
        criteria: vec![],
        tables: vec![],
    };
    let tables = match outcome {
        Ok(o) => {
            criteria[slot] = o.result;
            o.tables
        }
        Err(e) => {
            criteria[slot].status = Status::Error;
            criteria[slot].notes.push(e.to_string());
            report.complete = false;
            report.error = Some(e.to_string());
            vec![]
        }
    };
    report.criteria = criteria;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for t in &tables {
            let name = format!("{}.csv", t.name);
            t.write_csv(&dir.join(&name))?;
            report.tables.push(name);
        }
        write_json(&dir.join("report.json"), &report)?;
    } else {
        report.tables = tables.iter().map(|t| format!("{}.csv", t.name)).collect();
    }
    Ok(report)
}

/// Output directory for a config: `output.dir` (default `out`) joined with
/// the experiment id.
pub fn output_dir(cfg: &Config, info: &ExperimentInfo) -> PathBuf {
    Path::new(cfg.get("output.dir").unwrap_or("out")).join(info.id)
}

pub const DEFAULT_SEED: u64 = 20_240_917;

type Evaluated = (Vec<Check>, Vec<String>, Vec<Table>);

fn grid_of(cfg: &Config, nodes: usize, half_width: f64) -> Result<(usize, f64), LabError> {
    let n = cfg.usize_or("grid.nodes", nodes)?;
    let w = cfg.f64_or("grid.half_width", half_width)?;
    if n < 17 || !(w > 0.0) {
        return Err(LabError::Config("grid needs at least 17 nodes and a positive half width".into()));
    }
    Ok((n, w))
}

/// Every scale must span at least four cells.
fn require_resolved(what: &str, scales: &[f64], h: f64) -> Result<(), LabError> {
    if scales.is_empty() {
        return Err(LabError::Config(format!("{what}: empty schedule")));
    }
    for &r in scales {
        if !(r >= MIN_CELLS * h * (1.0 - 1e-12)) {
            return Err(LabError::Config(format!("{what}: scale {r} is below 4h = {}", MIN_CELLS * h)));
        }
    }
    Ok(())
}

fn spacing(nodes: usize, half_width: f64) -> f64 {
    2.0 * half_width / (nodes - 1) as f64
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn exact_pair_sanity(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let start = Instant::now();
    let (nodes, half) = grid_of(cfg, 513, 4.0)?;
    let (a, b) = (cfg.f64_or("pair.a", 2.0)?, cfg.f64_or("pair.b", 3.0)?);
    let scales = cfg.list_or("acf.scales", &[0.25, 0.5, 1.0])?;
    require_resolved("acf.scales", &scales, spacing(nodes, half))?;
    let pair = cache.get(&PairSpec::exact(a, b, nodes, half))?;
    let energy = PairEnergy::new(&pair);
    let target = c_star(2) * a * a * b * b;
    let mut table = Table::new("profile", &["r", "J", "target", "relative_error"]);
    let mut checks = vec![check("pair admissible", pair.report.pass as u8 as f64, "==", 1.0)];
    for &r in &scales {
        let j = energy.acf(&[0.0, 0.0], r)?;
        let rel = (j / target - 1.0).abs();
        table.push(vec![num(r), num(j), num(target), num(rel)]);
        checks.push(check(format!("|J(0,{r})/c_*a²b² - 1|"), rel, "<=", EXACT_ACF_TOL));
    }
    checks.push(check("runtime seconds", start.elapsed().as_secs_f64(), "<", SANITY_RUNTIME_S));
    Ok((checks, vec![format!("c_* a² b² = {target}")], vec![table]))
}

fn generator_family(a: f64, b: f64, nodes: usize, half: f64) -> Vec<PairSpec> {
    [
        PairKind::Linear { a, b, angle_deg: 90.0 },
        PairKind::Line,
        PairKind::Wedge { slope: 0.2 },
        PairKind::NonDini { amplitude: 0.5 },
        PairKind::Spiral { lambda: 0.75 },
        PairKind::Koch { depth: 4 },
        PairKind::ModKoch { stages: 3 },
    ]
    .into_iter()
    .map(|k| PairSpec::new(k, nodes, half))
    .collect()
}

fn monotonicity_audit(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 513, 1.0)?;
    let h = spacing(nodes, half);
    let r_max = cfg.f64_or("ladder.r_max", 0.5)?;
    let ladder = dyadic_ladder(r_max, resolved_depth(h, r_max));
    require_resolved("ladder", &ladder, h)?;
    let mut table = Table::new("monotonicity", &["generator", "r", "J", "relative_defect"]);
    let mut checks = Vec::new();
    for spec in generator_family(2.0, 3.0, nodes, half) {
        let pair = cache.get(&spec)?;
        let prof = radial_profile(&PairEnergy::new(&pair), &[0.0, 0.0], &ladder)?;
        for (k, (&r, &j)) in prof.radii.iter().zip(&prof.values).enumerate() {
            table.push(vec![spec.label().into(), num(r), num(j), opt(prof.relative_defects.get(k).copied())]);
        }
        let tol = if matches!(spec.kind, PairKind::Linear { .. }) { EXACT_MONOTONE_TOL } else { MONOTONE_TOL };
        checks.push(check(format!("{} admissible", spec.label()), pair.report.pass as u8 as f64, "==", 1.0));
        checks.push(check(format!("{} worst relative defect", spec.label()), prof.worst_relative_defect(), "<=", tol));
    }
    Ok((checks, vec![], vec![table]))
}

fn angle_error_deg(fitted: f64, expected: f64) -> f64 {
    let d = (fitted - expected).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d).to_degrees()
}

fn gauge_symmetry(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 513, 1.0)?;
    let scales = cfg.list_or("acf.scales", &[0.125, 0.25, 0.5])?;
    let factors = cfg.list_or("gauge.factors", &[0.1, 3.0, 1000.0])?;
    let angles = cfg.list_or("rotation.angles_deg", &[0.0, 10.0, 33.0, 45.0, 90.0, 137.0, 210.0, 300.0])?;
    require_resolved("acf.scales", &scales, spacing(nodes, half))?;
    let mut checks = Vec::new();
    let mut inv = Table::new("invariance", &["pair", "r", "J", "swap_gap", "worst_gauge_gap"]);
    for spec in [PairSpec::exact(2.0, 3.0, nodes, half), PairSpec::new(PairKind::Line, nodes, half), PairSpec::new(PairKind::Wedge { slope: 0.2 }, nodes, half)] {
        let pair = cache.get(&spec)?;
        let e = PairEnergy::new(&pair);
        let swapped = pair.swapped();
        let es = PairEnergy::new(&swapped);
        let gauged: Vec<AdmissiblePair> = factors.iter().map(|&c| pair.gauged(c)).collect();
        let (mut worst_swap, mut worst_gauge) = (0.0f64, 0.0f64);
        for &r in &scales {
            let j = e.acf(&[0.0, 0.0], r)?;
            let swap = relative_gap(j, es.acf(&[0.0, 0.0], r)?);
            let mut g = 0.0f64;
            for gp in &gauged {
                g = g.max(relative_gap(j, PairEnergy::new(gp).acf(&[0.0, 0.0], r)?));
            }
            inv.push(vec![spec.label().into(), num(r), num(j), num(swap), num(g)]);
            worst_swap = worst_swap.max(swap);
            worst_gauge = worst_gauge.max(g);
        }
        checks.push(check(format!("{} swap relative gap", spec.label()), worst_swap, "<=", GAUGE_TOL));
        checks.push(check(format!("{} gauge relative gap", spec.label()), worst_gauge, "<=", GAUGE_TOL));
    }
    let mut rot = Table::new("rotation", &["angle_deg", "fitted_deg", "error_deg", "a", "b"]);
    let mut worst = 0.0f64;
    for &deg in &angles {
        let spec = PairSpec::new(PairKind::Linear { a: 2.0, b: 3.0, angle_deg: deg }, 257, 1.0);
        let pair = spec.build(cache.solver())?;
        let f = fit_truncated_pair(&pair, &[0.0, 0.0], 0.2, 0.8)?;
        let err = angle_error_deg(f.angle(), deg.to_radians());
        rot.push(vec![num(deg), num(f.angle().to_degrees()), num(err), num(f.a), num(f.b)]);
        worst = worst.max(err);
    }
    checks.push(check("worst fitted-normal error (deg)", worst, "<=", ROTATION_TOL_DEG));
    Ok((checks, vec![], vec![inv, rot]))
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Points near a random hyperplane through the unit ball, with random
/// thickness and weights.
fn random_cloud(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> InterfaceCloud {
    let normal = unit_vector(rng, dim);
    let offset = rng.gen_range(-0.3..0.3);
    let thickness = rng.gen_range(0.0..0.4);
    let mut points = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        let mut y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: f64 = y.iter().zip(&normal).map(|(a, b)| a * b).sum();
        let target = offset + thickness * rng.gen_range(-1.0..1.0);
        for (yk, nk) in y.iter_mut().zip(&normal) {
            *yk += (target - h) * nk;
        }
        points.extend_from_slice(&y);
        weights.push(rng.gen_range(0.1..2.0));
    }
    InterfaceCloud::new(dim, points, weights, "seeded random cloud".into())
}

/// Smallest sampled-plane cost: half the planes have a uniform offset, the
/// other half pass through a random cloud point.
fn sweep_minimum(rng: &mut ChaCha8Rng, m: &IndexedCloud, x: &[f64], r: f64, planes: usize) -> f64 {
    let cloud = &m.cloud;
    let mut best = f64::INFINITY;
    for k in 0..planes {
        let normal = unit_vector(rng, cloud.dim);
        let offset = if k % 2 == 0 || cloud.is_empty() {
            rng.gen_range(-r..r)
        } else {
            let y = cloud.point(rng.gen_range(0..cloud.len()));
            normal.iter().zip(y).map(|(a, b)| a * b).sum()
        };
        best = best.min(beta_for_plane(m, x, r, &Hyperplane { normal, offset }));
    }
    best
}

fn beta_oracle(cfg: &Config) -> Result<Evaluated, LabError> {
    let seed = cfg.u64_or("seed", DEFAULT_SEED)?;
    let clouds = cfg.usize_or("oracle.clouds", 20)?;
    let max_points = cfg.usize_or("oracle.max_points", 1000)?;
    let planes = cfg.usize_or("oracle.planes", 10_000)?;
    let ds = cfg.list_or("oracle.two_mass_d", &[0.1, 0.3])?;
    if clouds == 0 || planes == 0 || max_points < 3 {
        return Err(LabError::Config("oracle needs clouds, planes and at least 3 points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new("oracle", &["cloud", "dim", "points", "beta2", "sweep_min", "excess"]);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_consistency = 0.0f64;
    for c in 0..clouds {
        let dim = if c % 4 == 3 { 3 } else { 2 };
        let count = rng.gen_range(3..=max_points);
        let m = IndexedCloud::new(random_cloud(&mut rng, dim, count), 0.25);
        let (b, plane) = beta_number(&m, &vec![0.0; dim], 1.0);
        let sweep = sweep_minimum(&mut rng, &m, &vec![0.0; dim], 1.0, planes);
        // closed form over sweep, in units of the sweep minimum
        let excess = (b - sweep) / sweep;
        if let Some(p) = plane {
            worst_consistency = worst_consistency.max(relative_gap(b, beta_for_plane(&m, &vec![0.0; dim], 1.0, &p)));
        }
        worst_excess = worst_excess.max(excess);
        table.push(vec![c.to_string(), dim.to_string(), count.to_string(), num(b), num(sweep), num(excess)]);
    }
    let mut checks = vec![
        check("max (β² - sweep min) / sweep min", worst_excess, "<=", ORACLE_ROUNDOFF),
        check("closed form vs its own plane, relative gap", worst_consistency, "<=", ORACLE_ROUNDOFF),
    ];
    let mut two = Table::new("two_mass", &["d", "beta2", "expected", "cost_of_x2_axis", "normal_x1", "normal_x2", "sweep_min"]);
    for &d in &ds {
        let m = IndexedCloud::new(InterfaceCloud::new(2, vec![0.0, d, 0.0, -d], vec![1.0, 1.0], "two masses".into()), 0.25);
        let (b, plane) = beta_number(&m, &[0.0, 0.0], 1.0);
        let horizontal = beta_for_plane(&m, &[0.0, 0.0], 1.0, &Hyperplane { normal: vec![0.0, 1.0], offset: 0.0 });
        let sweep = sweep_minimum(&mut rng, &m, &[0.0, 0.0], 1.0, planes);
        let n = plane.map(|p| p.normal).unwrap_or_default();
        two.push(vec![num(d), num(b), num(2.0 * d * d), num(horizontal), opt(n.first().copied()), opt(n.get(1).copied()), num(sweep)]);
        checks.push(check(format!("two masses d={d}: |β² - 2d²|"), (b - 2.0 * d * d).abs(), "<=", TWO_MASS_TOL));
        checks.push(check(format!("two masses d={d}: β² - sweep min"), b - sweep, "<=", 0.0));
    }
    let notes = vec![
        format!("seed {seed}, {clouds} clouds, {planes} planes per cloud"),
        "the line x1 = 0 carries both point masses, so the infimum over lines is 0; 2d² is the cost of x2 = 0".into(),
    ];
    Ok((checks, notes, vec![table, two]))
}

fn wedge_carleson(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 513, 1.0)?;
    let slope = cfg.f64_or("wedge.slope", 0.2)?;
    let scales = cfg.list_or("arc.scales", &[0.125, 0.25, 0.5])?;
    require_resolved("arc.scales", &scales, spacing(nodes, half))?;
    let mut table = Table::new("arcs", &["pair", "r", "epsilon", "lambda2", "I_plus", "I_minus", "expected_I_plus", "alpha_u", "alpha_v"]);
    let mut checks = Vec::new();
    for spec in [PairSpec::exact(2.0, 3.0, nodes, half), PairSpec::new(PairKind::Line, nodes, half)] {
        let pair = cache.get(&spec)?;
        let (mut eps, mut lam) = (0.0f64, 0.0f64);
        for &r in &scales {
            let (ip, im) = arc_lengths(&pair, &[0.0, 0.0], r)?;
            let e = carleson_epsilon(&pair, &[0.0, 0.0], r)?;
            let l = spectral_lambda2(&pair, &[0.0, 0.0], r)?;
            let al = arc_alphas(&pair, &[0.0, 0.0], r)?;
            table.push(vec![spec.label().into(), num(r), num(e), num(l), num(ip), num(im), num(PI * r), num(al.homogeneity_u), num(al.homogeneity_v)]);
            eps = eps.max(e);
            lam = lam.max(l);
        }
        checks.push(check(format!("{} half-plane max epsilon", spec.label()), eps, "<=", ARC_TOL));
        checks.push(check(format!("{} half-plane max lambda²", spec.label()), lam, "<=", ARC_TOL));
    }
    let pair = cache.get(&PairSpec::new(PairKind::Wedge { slope }, nodes, half))?;
    let mut worst = 0.0f64;
    for &r in &scales {
        let (ip, im) = arc_lengths(&pair, &[0.0, 0.0], r)?;
        let expected = r * (PI - 2.0 * slope.atan());
        let al = arc_alphas(&pair, &[0.0, 0.0], r)?;
        let e = carleson_epsilon(&pair, &[0.0, 0.0], r)?;
        let l = spectral_lambda2(&pair, &[0.0, 0.0], r)?;
        table.push(vec!["wedge".into(), num(r), num(e), num(l), num(ip), num(im), num(expected), num(al.homogeneity_u), num(al.homogeneity_v)]);
        worst = worst.max((ip / expected - 1.0).abs());
    }
    checks.push(check(format!("wedge s={slope} worst |I⁺/(r(π - 2 arctan s)) - 1|"), worst, "<=", WEDGE_ARC_TOL));
    Ok((checks, vec![], vec![table]))
}

fn stability_wedge_family(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 513, 1.0)?;
    let slopes = cfg.list_or("wedge.slopes", &[0.05, 0.1, 0.2, 0.4])?;
    let big_r = cfg.f64_or("fit.R", 0.5)?;
    let divisors = cfg.list_or("fit.rho_divisors", &[2.0, 4.0, 8.0])?;
    let rhos: Vec<f64> = divisors.iter().map(|d| big_r / d).collect();
    require_resolved("fit.rho", &rhos, spacing(nodes, half))?;
    let mut table = Table::new("stability", &["slope", "rho", "R", "fit_error", "log_drop", "ratio", "a", "b", "nu_deg"]);
    let mut ratios = Vec::new();
    for &s in &slopes {
        let pair = cache.get(&PairSpec::new(PairKind::Wedge { slope: s }, nodes, half))?;
        let e = PairEnergy::new(&pair);
        let j_big = e.acf(&[0.0, 0.0], big_r)?;
        for &rho in &rhos {
            let f = fit_truncated_pair(&pair, &[0.0, 0.0], rho, big_r)?;
            let err = normalized_fit_error(&pair, &f)?;
            let drop = log_ratio(j_big, e.acf(&[0.0, 0.0], rho)?);
            let ratio = err / drop;
            table.push(vec![num(s), num(rho), num(big_r), num(err), num(drop), num(ratio), num(f.a), num(f.b), num(f.angle().to_degrees())]);
            ratios.push(ratio);
        }
    }
    let bad = ratios.iter().filter(|r| !(r.is_finite() && **r > 0.0)).count();
    let mut checks = vec![check("ratios not finite and positive", bad as f64, "==", 0.0)];
    if bad == 0 {
        checks.push(check("max ratio / min ratio", spread(&ratios), "<=", STABILITY_SPREAD));
    }
    Ok((checks, vec![], vec![table]))
}

/// The singular point and up to `extra` cloud points within `r/2` of it.
fn centers_near(m: &IndexedCloud, x: &[f64], r: f64, extra: usize) -> Vec<Vec<f64>> {
    let mut out = vec![x.to_vec()];
    let idx = m.ball(x, r / 2.0);
    if let Some(step) = idx.len().checked_div(extra) {
        for &i in idx.iter().step_by(step.max(1)).take(extra) {
            out.push(m.cloud.point(i).to_vec());
        }
    }
    out
}

fn l2_subspace(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 1025, 0.5)?;
    let scales = cfg.list_or("subspace.scales", &[1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0])?;
    let kappa = cfg.f64_or("subspace.kappa", 1.0)?;
    let extra = cfg.usize_or("subspace.centers", 8)?;
    let lambda = cfg.f64_or("spiral.lambda", 0.75)?;
    require_resolved("subspace.scales", &scales, spacing(nodes, half))?;
    let mut table = Table::new("subspace", &["pair", "r", "x1", "x2", "gate_drop", "gated_out", "left", "right", "ratio"]);
    let mut checks = Vec::new();
    for spec in [
        PairSpec::new(PairKind::Line, nodes, half),
        PairSpec::new(PairKind::Wedge { slope: 0.2 }, nodes, half),
        PairSpec::new(PairKind::Spiral { lambda }, nodes, half),
    ] {
        let pair = cache.get(&spec)?;
        let e = PairEnergy::new(&pair);
        let m = IndexedCloud::new(extract_interface(&pair), 0.02);
        let mut ratios = Vec::new();
        for &r in &scales {
            for x in centers_near(&m, &[0.0, 0.0], r, extra) {
                let rep = l2_subspace_inequality_probe(&e, &m, &x, r, kappa)?;
                table.push(vec![
                    spec.label().into(),
                    num(r),
                    num(x[0]),
                    num(x[1]),
                    num(rep.gate_drop),
                    rep.gated_out.to_string(),
                    num(rep.left),
                    num(rep.right),
                    num(rep.ratio),
                ]);
                if !rep.gated_out {
                    ratios.push(rep.ratio);
                }
            }
        }
        let label = spec.label();
        checks.push(check(format!("{label} gated centers"), ratios.len() as f64, ">", 0.0));
        let infinite = ratios.iter().filter(|r| !r.is_finite()).count();
        checks.push(check(format!("{label} non-finite ratios"), infinite as f64, "==", 0.0));
        if !ratios.is_empty() && infinite == 0 {
            let med = median(&ratios);
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            checks.push(check(format!("{label} max ratio - {SUBSPACE_MEDIAN_FACTOR} × median"), max - SUBSPACE_MEDIAN_FACTOR * med, "<=", 0.0));
        }
    }
    Ok((checks, vec![], vec![table]))
}

/// Stratum field on the cloud, normalized so that the local `J̄` is 1.
fn normalized_field(pair: &AdmissiblePair, cloud: &InterfaceCloud, unit: f64) -> Result<(StratumField, f64), LabError> {
    let h = pair.grid().spacing();
    let ladder = dyadic_ladder(unit, resolved_depth(h, unit));
    let field = StratumField::new(&PairEnergy::new(pair), cloud, &ladder)?;
    let jb = j_bar(&field, cloud, &CoverParams::defaults(1.0, unit, pair.dim()));
    if !(jb > 0.0) {
        return Err(LabError::Core(acf_core::Error::Empty("J vanishes on the unit ball")));
    }
    Ok((field.normalized(jb), jb))
}

fn covering(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 1025, 0.5)?;
    let eps = cfg.f64_or("cover.epsilon", 0.075)?;
    let unit = cfg.f64_or("cover.unit", 0.125)?;
    let scales = cfg.list_or("cover.scales", &[0.125, 0.0625, 0.03125, 0.015625, 0.0078125])?;
    let lambda = cfg.f64_or("spiral.lambda", 0.75)?;
    // cover radii are in units of `unit`; J below the finest ladder scale is clamped
    require_resolved("cover.unit", &[unit], spacing(nodes, half))?;
    if scales.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(LabError::Config("cover.scales must lie in (0, 1]".into()));
    }
    let mut table = Table::new(
        "cover",
        &["pair", "R", "balls", "NR", "iterations", "budget", "terminated", "covers", "disjoint", "packing_sum", "packing_hypothesis", "minkowski_volume", "minkowski_constant"],
    );
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for spec in [PairSpec::new(PairKind::Line, nodes, half), PairSpec::new(PairKind::Spiral { lambda }, nodes, half)] {
        let pair = cache.get(&spec)?;
        let grid = pair.grid().clone();
        let cloud = extract_interface(&pair);
        let (field, jb) = normalized_field(&pair, &cloud, unit)?;
        let params = CoverParams::defaults(eps, unit, 2);
        notes.push(format!("{}: J̄ = {jb}, η = {}, η̄ = {}, ρ̄ = {}", spec.label(), params.eta, params.eta_bar, params.rho_bar));
        let (mut counts, mut consts) = (Vec::new(), Vec::new());
        let (mut over_budget, mut uncovered, mut overlapping) = (0usize, 0usize, 0usize);
        for &r in &scales {
            let c = iterated_cover(&field, &cloud, r, &params)?;
            let mk = minkowski_check(&field, &cloud, &grid, r, &params)?;
            let audit = packing_hypothesis_audit(&field, &c);
            let nr = c.normalized_count(2);
            table.push(vec![
                spec.label().into(),
                num(r),
                c.len().to_string(),
                num(nr),
                c.iterations.to_string(),
                c.budget.to_string(),
                c.terminated.to_string(),
                c.covers.to_string(),
                c.disjoint.to_string(),
                num(c.packing_sum),
                format!("{}/{}", audit.holds, audit.total),
                num(mk.volume),
                num(mk.constant),
            ]);
            over_budget += (!c.terminated || c.iterations > c.budget) as usize;
            uncovered += (!c.covers) as usize;
            overlapping += (!c.disjoint) as usize;
            counts.push(nr);
            consts.push(mk.constant);
        }
        let label = spec.label();
        checks.push(check(format!("{label} covers over budget or unterminated"), over_budget as f64, "==", 0.0));
        checks.push(check(format!("{label} covers failing the cover audit"), uncovered as f64, "==", 0.0));
        checks.push(check(format!("{label} covers failing core disjointness"), overlapping as f64, "==", 0.0));
        checks.push(check(format!("{label} N·R spread"), spread(&counts), "<=", COVER_SPREAD));
        checks.push(check(format!("{label} Minkowski constant spread"), spread(&consts), "<=", MINKOWSKI_SPREAD));
    }
    Ok((checks, notes, vec![table]))
}

fn dichotomy(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 1025, 1.0)?;
    let exact_eps = cfg.f64_or("dichotomy.exact_epsilon", 0.1)?;
    let koch_eps = cfg.f64_or("dichotomy.koch_epsilon", 1e-4)?;
    let unit = cfg.f64_or("dichotomy.unit", 0.25)?;
    let scales = cfg.list_or("dichotomy.scales", &[1.0, 0.5, 0.25])?;
    let depth = cfg.usize_or("koch.depth", 4)? as u32;
    require_resolved("dichotomy.unit", &[unit], spacing(nodes, half))?;
    let mut table = Table::new("dichotomy", &["pair", "x1", "x2", "r", "points", "attempts", "first_case", "final_case", "final_eta"]);
    let mut checks = Vec::new();
    let cases = |spec: PairSpec, eps: f64, centers: Vec<[f64; 2]>, table: &mut Table| -> Result<Vec<DichotomyCase>, LabError> {
        let pair = cache.get(&spec)?;
        let cloud = extract_interface(&pair);
        let (field, _) = normalized_field(&pair, &cloud, unit)?;
        let params = CoverParams::defaults(eps, unit, 2);
        let mut out = Vec::new();
        for c in &centers {
            for &r in &scales {
                let d = dichotomy_probe(&field, &cloud, c, r, &params)?;
                let last = d.attempts.last().map(|a| a.eta);
                table.push(vec![
                    spec.label().into(),
                    num(c[0]),
                    num(c[1]),
                    num(r),
                    d.points.to_string(),
                    d.attempts.len().to_string(),
                    d.attempts.first().map(|a| format!("{:?}", a.case)).unwrap_or_default(),
                    format!("{:?}", d.case),
                    opt(last),
                ]);
                out.push(d.case);
            }
        }
        Ok(out)
    };
    let exact = cases(PairSpec::exact(2.0, 3.0, nodes, half), exact_eps, vec![[-0.5, 0.0], [0.0, 0.0], [0.5, 0.0]], &mut table)?;
    let not_small = exact.iter().filter(|c| **c != DichotomyCase::SmallDrop).count();
    checks.push(check("exact-pair balls not in case 1 (small drop)", not_small as f64, "==", 0.0));
    let corners: Vec<[f64; 2]> = koch_corners(1, 1.0);
    let koch = cases(PairSpec::new(PairKind::Koch { depth }, nodes, half), koch_eps, corners, &mut table)?;
    let mixed = koch.iter().filter(|c| **c == DichotomyCase::Mixed).count();
    let not_definite = koch.iter().filter(|c| **c != DichotomyCase::DefiniteDrop).count();
    checks.push(check("koch corner balls mixed after the final η", mixed as f64, "==", 0.0));
    checks.push(check("koch corner balls not in case 2 (definite drop)", not_definite as f64, "==", 0.0));
    Ok((checks, vec![format!("ε = {exact_eps} (exact), {koch_eps} (koch), in units of the local J̄")], vec![table]))
}

fn blowup_ladder(cfg: &Config) -> Result<Vec<f64>, LabError> {
    let r_max = cfg.f64_or("blowup.r_max", 0.25)?;
    let depth = cfg.usize_or("blowup.depth", 5)?;
    Ok(dyadic_ladder(r_max, depth))
}

fn nonunique_blowup(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 1025, 0.5)?;
    let lambda = cfg.f64_or("spiral.lambda", 0.75)?;
    let ladder = blowup_ladder(cfg)?;
    require_resolved("blowup ladder", &ladder, spacing(nodes, half))?;
    let mut table = Table::new("trajectory", &["pair", "r", "a", "b", "nu_deg", "residual", "J"]);
    let mut traj = |spec: PairSpec| -> Result<_, LabError> {
        let pair = cache.get(&spec)?;
        let t = blowup_trajectory(&pair, &[0.0, 0.0], &ladder)?;
        for (k, f) in t.fits.iter().enumerate() {
            table.push(vec![spec.label().into(), num(t.radii[k]), num(f.a), num(f.b), num(t.angles[k].to_degrees()), num(f.residual), num(t.acf[k])]);
        }
        Ok(t)
    };
    let line = traj(PairSpec::new(PairKind::Line, nodes, half))?;
    let spiral = traj(PairSpec::new(PairKind::Spiral { lambda }, nodes, half))?;
    let checks = vec![
        check("line normal-angle variation (deg)", line.angle_variation_deg(), "<=", UNIQUE_ANGLE_DEG),
        check("spiral normal-angle variation (deg)", spiral.angle_variation_deg(), ">=", NONUNIQUE_ANGLE_DEG),
        check("spiral last-step angle change (deg)", spiral.last_step_deg(), ">=", UNSETTLED_STEP_DEG),
    ];
    Ok((checks, vec![format!("spiral λ = {lambda}")], vec![table]))
}

fn density_slope(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 1025, 0.5)?;
    let (a, b) = (cfg.f64_or("pair.a", 2.0)?, cfg.f64_or("pair.b", 3.0)?);
    let ladder = blowup_ladder(cfg)?;
    require_resolved("blowup ladder", &ladder, spacing(nodes, half))?;
    let mut table = Table::new("density", &["pair", "r", "mu_u", "mu_v", "zeta_u", "zeta_v"]);
    let mut est = |spec: PairSpec| -> Result<_, LabError> {
        let pair = cache.get(&spec)?;
        let m = IndexedCloud::new(extract_interface(&pair), 0.02);
        let d = density_trajectory(&pair, &m, &[0.0, 0.0], &ladder)?;
        for k in 0..d.radii.len() {
            table.push(vec![spec.label().into(), num(d.radii[k]), num(d.mu_u[k]), num(d.mu_v[k]), num(d.zeta_u[k]), num(d.zeta_v[k])]);
        }
        Ok(d)
    };
    let exact = est(PairSpec::exact(a, b, nodes, half))?;
    let line = est(PairSpec::new(PairKind::Line, nodes, half))?;
    let mut checks = Vec::new();
    let k = exact.radii.len();
    if k < 2 {
        return Err(LabError::Core(acf_core::Error::Empty("fewer than two resolved density scales")));
    }
    for j in k - 2..k {
        let r = exact.radii[j];
        checks.push(check(format!("exact |ζ_u/a - 1| at r={r}"), (exact.zeta_u[j] / a - 1.0).abs(), "<=", ZETA_TOL));
        checks.push(check(format!("exact |ζ_v/b - 1| at r={r}"), (exact.zeta_v[j] / b - 1.0).abs(), "<=", ZETA_TOL));
    }
    checks.push(check("line sqrt-relation error |ab / sqrt(J(0+)/c_*) - 1|", line.sqrt_relation_error.unwrap_or(f64::INFINITY), "<=", SQRT_RELATION_TOL));
    let notes = vec![format!(
        "line: sqrt relation error {}, linear relation ab = c_* J(0+) error {}; J(0+) ≈ {:?}",
        opt(line.sqrt_relation_error),
        opt(line.linear_relation_error),
        line.j0
    )];
    Ok((checks, notes, vec![table]))
}

fn koch_nonrect(cfg: &Config, cache: &PairCache) -> Result<Evaluated, LabError> {
    let (nodes, half) = grid_of(cfg, 1025, 1.0)?;
    let depth = cfg.usize_or("koch.depth", 4)? as u32;
    let scales = cfg.list_or("koch.scales", &[0.25, 0.125, 0.0625])?;
    let eps = cfg.f64_or("koch.epsilon", 0.1)?;
    let h = spacing(nodes, half);
    require_resolved("koch.scales", &scales, h)?;
    if scales.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LabError::Config("koch.scales must decrease".into()));
    }
    let pair = cache.get(&PairSpec::new(PairKind::Koch { depth }, nodes, half))?;
    let cloud = extract_interface(&pair);
    let m = IndexedCloud::new(cloud.clone(), 0.02);
    let top = 2.0 * scales[0];
    let ladder = dyadic_ladder(top, resolved_depth(h, top));
    let mut sq = Table::new("square_function", &["x1", "x2", "r", "sum", "ratio"]);
    let mut checks = Vec::new();
    for c in koch_corners(1, 1.0) {
        let ratios: Vec<f64> = scales
            .iter()
            .map(|&r| {
                let s = square_function_sum(&m, &c, r, &ladder);
                sq.push(vec![num(c[0]), num(c[1]), num(r), num(s.sum), num(s.ratio)]);
                s.ratio
            })
            .collect();
        let growth = ratios.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        checks.push(check(format!("corner ({:.3}, {:.3}) smallest ratio increase as r halves", c[0], c[1]), growth, ">", 0.0));
    }
    let field = StratumField::new(&PairEnergy::new(&pair), &cloud, &ladder)?;
    let mut st = Table::new("strata", &["r", "selected", "available", "fraction"]);
    let fractions: Vec<f64> = scales
        .iter()
        .map(|&r| {
            let s = select_stratum(&field, eps, r)?;
            st.push(vec![num(r), s.count().to_string(), field.available().to_string(), num(s.fraction())]);
            Ok(s.fraction())
        })
        .collect::<Result<_, LabError>>()?;
    let shrink = fractions.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    checks.push(check(format!("smallest Γ* fraction decrease at ε={eps} as r halves"), shrink, ">", 0.0));
    Ok((checks, vec![format!("koch depth {depth}: {} cloud points, mass {}", cloud.len(), cloud.total_mass())], vec![sq, st]))
}
