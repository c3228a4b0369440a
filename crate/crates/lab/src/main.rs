#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acf_core::acf::{carleson_epsilon, dyadic_ladder, log_ratio, radial_profile, resolved_depth, spectral_lambda2};
use acf_core::beta::beta_number;
use acf_core::blowup::{blowup_trajectory, density_trajectory};
use acf_core::cloud::{extract_interface_tagged, IndexedCloud};
use acf_core::cover::{iterated_cover, j_bar, minkowski_check, packing_hypothesis_audit, CoverParams};
use acf_core::energy::PairEnergy;
use acf_core::fit::{fit_truncated_pair, normalized_fit_error};
use acf_core::generators::SolverConfig;
use acf_core::strata::StratumField;
use acf_lab::config::Config;
use acf_lab::experiments::{output_dir, registry, run_experiment, solver_from_config, validate_config, ExperimentReport};
use acf_lab::io::{self, num, opt, Table};
use acf_lab::pairs::{PairKind, PairSpec};
use acf_lab::LabError;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "acf-lab", version, about = "Two-phase monotonicity-formula experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Linear,
    Line,
    Wedge,
    Spiral,
    Koch,
    Modkoch,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Linear,
    Nondini,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a pair and write it as ACF1 with a JSON sidecar.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 513)]
        nodes: usize,
        #[arg(long, default_value_t = 1.0)]
        half_width: f64,
        /// Dimension (exact linear pairs only).
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Normal angle of the linear pair, degrees.
        #[arg(long, default_value_t = 90.0)]
        angle_deg: f64,
        #[arg(long, value_enum, default_value = "linear")]
        profile: Profile,
        #[arg(long, default_value_t = 0.2)]
        slope: f64,
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.75)]
        lambda: f64,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[arg(long, default_value_t = 3)]
        stages: u32,
        /// Rotation of the interface about the origin, degrees.
        #[arg(long, default_value_t = 0.0)]
        rotation_deg: f64,
        /// `mgcg` or `sor`.
        #[arg(long, default_value = "mgcg")]
        solver: String,
        /// Also write the extracted interface cloud as CSV.
        #[arg(long)]
        cloud: Option<PathBuf>,
        /// Also write `u - v` as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Radial profile of J with factors, defects, log-drops and arc terms.
    Acf {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        /// `r_max,depth`.
        #[arg(long)]
        ladder: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Truncated linear fit on `B_R ∖ B_rho`.
    Fit {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long)]
        rho: f64,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Beta numbers at every cloud point and ladder scale.
    Beta {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        ladder: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterated stratum cover down to normalized radius `R`.
    Cover {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        cloud: PathBuf,
        /// In units of the local J̄.
        #[arg(long)]
        epsilon: f64,
        #[arg(long = "R")]
        big_r: f64,
        /// Physical radius of the unit ball.
        #[arg(long, default_value_t = 0.125)]
        unit: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits, J and Laplacian densities along a ladder.
    Blowup {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long)]
        ladder: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a configured experiment; exit code 0 iff its criterion passes.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`/<experiment>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Registered experiments.
    List,
    /// Summarize every report.json below a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn parse_ladder(s: &str) -> Result<Vec<f64>, LabError> {
    let bad = || LabError::Config(format!("ladder {s:?}: expected r_max,depth"));
    let (r, d) = s.split_once(',').ok_or_else(bad)?;
    let r: f64 = r.trim().parse().map_err(|_| bad())?;
    let d: usize = d.trim().parse().map_err(|_| bad())?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(bad());
    }
    Ok(dyadic_ladder(r, d))
}

fn check_center(center: &[f64], dim: usize) -> Result<(), LabError> {
    if center.len() != dim {
        return Err(LabError::Config(format!("center needs {dim} coordinates, got {}", center.len())));
    }
    Ok(())
}

fn generate(cmd: Cmd) -> Result<(), LabError> {
    let Cmd::Generate { kind, out, nodes, half_width, dim, a, b, angle_deg, profile, slope, amplitude, lambda, depth, stages, rotation_deg, solver, cloud, csv } = cmd else {
        unreachable!()
    };
    let kind = match kind {
        Kind::Linear => PairKind::Linear { a, b, angle_deg },
        Kind::Line => PairKind::Line,
        Kind::Wedge => match profile {
            Profile::Linear => PairKind::Wedge { slope },
            Profile::Nondini => PairKind::NonDini { amplitude },
        },
        Kind::Spiral => PairKind::Spiral { lambda },
        Kind::Koch => PairKind::Koch { depth },
        Kind::Modkoch => PairKind::ModKoch { stages },
    };
    if dim != 2 && !matches!(kind, PairKind::Linear { .. }) {
        return Err(LabError::Config("only linear pairs support dim != 2".into()));
    }
    let spec = PairSpec { kind, dim, nodes, half_width, rotation_deg };
    let solver_cfg: SolverConfig = solver_from_config(&Config::from_pairs(&[("solver.method", &solver)]))?;
    let pair = spec.build(&solver_cfg)?;
    io::save_pair(&out, &pair)?;
    let r = pair.report;
    let mut sidecar = json!({
        "spec": spec,
        "solver": {"method": solver, "residual_tol": solver_cfg.residual_tol, "max_sweeps": solver_cfg.max_sweeps},
        "validation": {
            "max_negative_value": r.max_negative_value,
            "max_product": r.max_product,
            "worst_superharmonic_defect": r.worst_superharmonic_defect,
            "pass": r.pass,
        },
    });
    if let Some(path) = cloud {
        let c = extract_interface_tagged(&pair, out.display().to_string());
        io::write_cloud_csv(&path, &c)?;
        sidecar["cloud"] = json!({"path": path, "points": c.len(), "mass": c.total_mass()});
    }
    if let Some(path) = csv {
        let g = pair.grid().clone();
        let w = acf_core::GridField::new(g.clone(), (0..g.len()).map(|i| pair.signed(i)).collect())?;
        io::write_field_csv(&path, &w)?;
    }
    let mut side = out.clone().into_os_string();
    side.push(".json");
    io::write_json(Path::new(&side), &sidecar)?;
    println!("wrote {} (admissible: {})", out.display(), r.pass);
    Ok(())
}

fn acf(pair: &Path, center: &[f64], ladder: &str, out: &Path) -> Result<(), LabError> {
    let pair = io::load_pair(pair)?;
    check_center(center, pair.dim())?;
    let radii = parse_ladder(ladder)?;
    let e = PairEnergy::new(&pair);
    let prof = radial_profile(&e, center, &radii)?;
    let drops = prof.log_drops();
    let mut t = Table::new("profile", &["r", "J", "factor_u", "factor_v", "monotone_defect", "log_drop", "epsilon", "lambda2"]);
    for (k, &r) in prof.radii.iter().enumerate() {
        // ε and λ² only exist in 2D on circles resolved by the arc sampler
        let (eps, lam) = if pair.dim() == 2 {
            (carleson_epsilon(&pair, center, r).ok(), spectral_lambda2(&pair, center, r).ok())
        } else {
            (None, None)
        };
        let (fu, fv) = e.factors(center, r)?;
        t.push(vec![
            num(r),
            num(prof.values[k]),
            num(fu),
            num(fv),
            opt(prof.monotone_defects.get(k).copied()),
            opt(drops.get(k).copied()),
            opt(eps),
            opt(lam),
        ]);
    }
    t.write_csv(out)
}

fn fit(pair: &Path, center: &[f64], rho: f64, big_r: f64, out: &Path) -> Result<(), LabError> {
    let pair = io::load_pair(pair)?;
    check_center(center, pair.dim())?;
    let f = fit_truncated_pair(&pair, center, rho, big_r)?;
    let err = normalized_fit_error(&pair, &f)?;
    let e = PairEnergy::new(&pair);
    let drop = log_ratio(e.acf(center, big_r)?, e.acf(center, rho)?);
    let ratio = err / drop;
    // JSON has no infinities; those print as null
    let finite = |x: f64| if x.is_finite() { json!(x) } else { json!(null) };
    io::write_json(
        out,
        &json!({
            "center": center, "rho": rho, "R": big_r,
            "a": f.a, "b": f.b, "nu": f.nu, "residual": f.residual,
            "normalized_error": err, "log_drop": finite(drop), "ratio": finite(ratio),
        }),
    )
}

fn beta(cloud: &Path, ladder: &str, out: &Path) -> Result<(), LabError> {
    let cloud = io::read_cloud_csv(cloud)?;
    let radii = parse_ladder(ladder)?;
    let n = cloud.dim;
    let m = IndexedCloud::new(cloud, radii[radii.len() - 1].max(1e-9));
    let mut cols: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    cols.extend(["r".into(), "beta2".into()]);
    cols.extend((1..=n).map(|k| format!("normal{k}")));
    cols.push("offset".into());
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(&cols)?;
    for i in 0..m.cloud.len() {
        let x = m.cloud.point(i).to_vec();
        for &r in &radii {
            let (b, plane) = beta_number(&m, &x, r);
            let mut row: Vec<String> = x.iter().map(|c| num(*c)).collect();
            row.push(num(r));
            row.push(num(b));
            match plane {
                Some(p) => {
                    row.extend(p.normal.iter().map(|c| num(*c)));
                    row.push(num(p.offset));
                }
                None => row.extend(std::iter::repeat_n(String::new(), n + 1)),
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cover(pair: &Path, cloud: &Path, epsilon: f64, big_r: f64, unit: f64, out: &Path) -> Result<(), LabError> {
    let pair = io::load_pair(pair)?;
    let cloud = io::read_cloud_csv(cloud)?;
    if cloud.dim != pair.dim() {
        return Err(LabError::Config("cloud and pair dimensions differ".into()));
    }
    let h = pair.grid().spacing();
    let ladder = dyadic_ladder(unit, resolved_depth(h, unit));
    let field = StratumField::new(&PairEnergy::new(&pair), &cloud, &ladder)?;
    let jb = j_bar(&field, &cloud, &CoverParams::defaults(1.0, unit, pair.dim()));
    if !(jb > 0.0) {
        return Err(LabError::Core(acf_core::Error::Empty("J vanishes on the unit ball")));
    }
    let field = field.normalized(jb);
    let params = CoverParams::defaults(epsilon, unit, pair.dim());
    let c = iterated_cover(&field, &cloud, big_r, &params)?;
    let audit = packing_hypothesis_audit(&field, &c);
    let mk = minkowski_check(&field, &cloud, pair.grid(), big_r, &params)?;
    let balls: Vec<_> = c
        .entries
        .iter()
        .map(|e| json!({"center": e.center, "radius": e.radius, "class": format!("{:?}", e.class), "parent_radius": e.parent_radius}))
        .collect();
    io::write_json(
        out,
        &json!({
            "epsilon": epsilon, "eta": params.eta, "eta_bar": params.eta_bar, "rho_bar": params.rho_bar,
            "unit": unit, "R": big_r, "j_bar_physical": jb,
            "balls": balls, "count": c.len(), "normalized_count": c.normalized_count(pair.dim()),
            "packing_sum": c.packing_sum, "stratum_points": c.stratum.len(),
            "covers": c.covers, "uncovered": c.uncovered, "disjoint": c.disjoint,
            "iterations": c.iterations, "budget": c.budget, "terminated": c.terminated,
            "packing_hypothesis": {"holds": audit.holds, "total": audit.total},
            "minkowski": {"volume": mk.volume, "constant": mk.constant, "points": mk.points},
        }),
    )
}

fn blowup(pair: &Path, center: &[f64], ladder: &str, out: &Path) -> Result<(), LabError> {
    let pair = io::load_pair(pair)?;
    check_center(center, pair.dim())?;
    let radii = parse_ladder(ladder)?;
    let t = blowup_trajectory(&pair, center, &radii)?;
    let m = IndexedCloud::new(extract_interface_tagged(&pair, String::new()), radii[radii.len() - 1]);
    let d = density_trajectory(&pair, &m, center, &radii)?;
    let mut tab = Table::new("trajectory", &["r", "a", "b", "nu", "residual", "J", "zeta_u", "zeta_v"]);
    for (k, f) in t.fits.iter().enumerate() {
        let r = t.radii[k];
        let j = d.radii.iter().position(|&s| s == r);
        let nu: Vec<String> = f.nu.iter().map(|c| num(*c)).collect();
        tab.push(vec![
            num(r),
            num(f.a),
            num(f.b),
            nu.join(";"),
            num(f.residual),
            num(t.acf[k]),
            opt(j.map(|j| d.zeta_u[j])),
            opt(j.map(|j| d.zeta_v[j])),
        ]);
    }
    tab.write_csv(out)
}

fn print_report(r: &ExperimentReport) {
    println!("{} (config {}, {:.2} s{})", r.experiment, &r.config_hash[..12], r.wall_clock_s, if r.complete { "" } else { ", incomplete" });
    for c in r.criteria.iter().filter(|c| c.experiment == r.experiment) {
        println!("  {}", c.summary());
        for n in &c.notes {
            println!("    note: {n}");
        }
    }
}

fn find_reports(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), LabError> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            find_reports(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "report.json") {
            out.push(p);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool, LabError> = (|| match cli.cmd {
        cmd @ Cmd::Generate { .. } => generate(cmd).map(|_| true),
        Cmd::Acf { pair, center, ladder, out } => acf(&pair, &center, &ladder, &out).map(|_| true),
        Cmd::Fit { pair, center, rho, big_r, out } => fit(&pair, &center, rho, big_r, &out).map(|_| true),
        Cmd::Beta { cloud, ladder, out } => beta(&cloud, &ladder, &out).map(|_| true),
        Cmd::Cover { pair, cloud, epsilon, big_r, unit, out } => cover(&pair, &cloud, epsilon, big_r, unit, &out).map(|_| true),
        Cmd::Blowup { pair, center, ladder, out } => blowup(&pair, &center, &ladder, &out).map(|_| true),
        Cmd::Run { config, out } => {
            let cfg = Config::load(&config)?;
            let info = validate_config(&cfg)?;
            let dir = out.unwrap_or_else(|| output_dir(&cfg, info));
            let report = run_experiment(&cfg, Some(&dir))?;
            print_report(&report);
            println!("wrote {}", dir.join("report.json").display());
            Ok(report.passed())
        }
        Cmd::List => {
            for e in registry() {
                println!("{:<26} criterion {:>2}  {}", e.id, e.criterion, e.description);
            }
            Ok(true)
        }
        Cmd::Report { dir } => {
            let mut paths = Vec::new();
            find_reports(&dir, &mut paths)?;
            if paths.is_empty() {
                return Err(LabError::Format(format!("no report.json below {}", dir.display())));
            }
            let mut ok = true;
            for p in paths {
                let r: ExperimentReport = serde_json::from_reader(std::fs::File::open(&p)?)?;
                print_report(&r);
                ok &= r.passed();
            }
            Ok(ok)
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
