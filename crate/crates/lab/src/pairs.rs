//! Named pair recipes and a shared cache of solved pairs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use acf_core::generators::{
    make_interface_pair, make_spiral_pair, make_truncated_linear_pair, CurveKind, InterfaceCurveSpec, RigidMotion,
    SolverConfig, TruncatedLinearPairSpec, WedgeProfile,
};
use acf_core::{AdmissiblePair, Grid};
use serde::Serialize;

use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairKind {
    /// Truncated linear pair with normal at `angle_deg` in the `(x1, x2)`
    /// plane (`e_n` when `dim > 2`).
    Linear { a: f64, b: f64, angle_deg: f64 },
    Line,
    Wedge { slope: f64 },
    NonDini { amplitude: f64 },
    Spiral { lambda: f64 },
    Koch { depth: u32 },
    ModKoch { stages: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairSpec {
    #[serde(flatten)]
    pub kind: PairKind,
    pub dim: usize,
    pub nodes: usize,
    pub half_width: f64,
    /// Rotation of curve interfaces about the origin, degrees.
    pub rotation_deg: f64,
}

impl PairSpec {
    pub fn new(kind: PairKind, nodes: usize, half_width: f64) -> Self {
        PairSpec { kind, dim: 2, nodes, half_width, rotation_deg: 0.0 }
    }

    /// Exact pair with slopes `a`, `b` and normal `e_2`.
    pub fn exact(a: f64, b: f64, nodes: usize, half_width: f64) -> Self {
        PairSpec::new(PairKind::Linear { a, b, angle_deg: 90.0 }, nodes, half_width)
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            PairKind::Linear { .. } => "linear",
            PairKind::Line => "line",
            PairKind::Wedge { .. } => "wedge",
            PairKind::NonDini { .. } => "nondini",
            PairKind::Spiral { .. } => "spiral",
            PairKind::Koch { .. } => "koch",
            PairKind::ModKoch { .. } => "modkoch",
        }
    }

    pub fn grid(&self) -> Result<Grid, LabError> {
        Ok(Grid::cube(self.dim, self.half_width, self.nodes)?)
    }

    pub fn build(&self, solver: &SolverConfig) -> Result<AdmissiblePair, LabError> {
        let grid = self.grid()?;
        let curve = |kind| {
            let transform = RigidMotion { angle: self.rotation_deg.to_radians(), shift: [0.0, 0.0] };
            make_interface_pair(&InterfaceCurveSpec { kind, transform }, &grid, solver)
        };
        let pair = match self.kind {
            PairKind::Linear { a, b, angle_deg } => {
                let mut spec = TruncatedLinearPairSpec::axis(self.dim, a, b);
                if self.dim == 2 {
                    spec.nu = unit_normal(angle_deg + self.rotation_deg).to_vec();
                }
                make_truncated_linear_pair(&spec, &grid)
            }
            PairKind::Line => curve(CurveKind::Line),
            PairKind::Wedge { slope } => curve(CurveKind::Wedge(WedgeProfile::Linear { slope })),
            PairKind::NonDini { amplitude } => curve(CurveKind::Wedge(WedgeProfile::NonDini { amplitude })),
            PairKind::Spiral { lambda } if self.rotation_deg == 0.0 => make_spiral_pair(lambda, &grid, solver),
            PairKind::Spiral { lambda } => curve(CurveKind::Spiral { lambda }),
            PairKind::Koch { depth } => curve(CurveKind::Koch { depth }),
            PairKind::ModKoch { stages } => curve(CurveKind::ModifiedKoch { stages }),
        }?;
        Ok(pair)
    }
}

/// `(cos, sin)` of an angle in degrees, exact at multiples of 90° so that
/// axis-aligned interfaces fall on grid lines.
pub fn unit_normal(deg: f64) -> [f64; 2] {
    let q = deg / 90.0;
    if q == q.round() {
        return match (q as i64).rem_euclid(4) {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        };
    }
    let t = deg.to_radians();
    [t.cos(), t.sin()]
}

/// Solved pairs keyed by recipe. Lookups of the same recipe from several
/// threads solve it once.
#[derive(Debug, Default)]
pub struct PairCache {
    solver: SolverConfig,
    pairs: Mutex<HashMap<String, Arc<AdmissiblePair>>>,
}

impl PairCache {
    pub fn new(solver: SolverConfig) -> Self {
        PairCache { solver, pairs: Mutex::new(HashMap::new()) }
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn get(&self, spec: &PairSpec) -> Result<Arc<AdmissiblePair>, LabError> {
        let key = format!("{spec:?}");
        let mut map = self.pairs.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(p) = map.get(&key) {
            return Ok(p.clone());
        }
        let p = Arc::new(spec.build(&self.solver)?);
        map.insert(key, p.clone());
        Ok(p)
    }
}
