//! Admissible pair generators: exact truncated linear pairs and two-phase
//! harmonic pairs on rasterized planar interfaces.

pub mod curve;
pub mod raster;
pub mod solver;

use num_traits::Float;

pub use curve::{koch_corners, spiral_angle, spiral_turn_gap, CurveKind, InterfaceCurveSpec, RigidMotion, WedgeProfile};
pub use raster::{rasterize_interface, Label, Partition};
pub use solver::{solve_two_sided_harmonic, BoundaryData, SolverConfig, SolverMethod};

use crate::grid::{Grid, GridField};
use crate::pair::{validate_pair, AdmissiblePair, Tolerances};
use crate::{Error, Result};

/// `u = a((y-x)·ν)⁺`, `v = b((y-x)·ν)⁻`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedLinearPairSpec {
    pub a: f64,
    pub b: f64,
    pub nu: alloc::vec::Vec<f64>,
    pub center: alloc::vec::Vec<f64>,
}

impl TruncatedLinearPairSpec {
    /// Pair with normal `e_n` through the origin.
    pub fn axis(dim: usize, a: f64, b: f64) -> Self {
        let mut nu = alloc::vec![0.0; dim];
        nu[dim - 1] = 1.0;
        TruncatedLinearPairSpec { a, b, nu, center: alloc::vec![0.0; dim] }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.nu.len() != dim || self.center.len() != dim {
            return Err(Error::InvalidInput("spec dimension differs from grid"));
        }
        let norm = self.nu.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput("normal must be a unit vector"));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidInput("slopes must be positive"));
        }
        Ok(())
    }

    /// Signed height `(y - x)·ν`.
    pub fn height(&self, y: &[f64]) -> f64 {
        y.iter().zip(&self.center).zip(&self.nu).map(|((y, x), n)| (y - x) * n).sum()
    }
}

pub fn make_truncated_linear_pair(spec: &TruncatedLinearPairSpec, grid: &Grid) -> Result<AdmissiblePair> {
    spec.validate(grid.dim())?;
    let u = GridField::from_fn(grid.clone(), |y| spec.a * spec.height(y).max(0.0));
    let v = GridField::from_fn(grid.clone(), |y| spec.b * (-spec.height(y)).max(0.0));
    validate_pair(u, v, &Tolerances::default())
}

/// Rasterizes `spec` and solves for the two-phase harmonic pair with unit
/// boundary data.
pub fn make_interface_pair(spec: &InterfaceCurveSpec, grid: &Grid, cfg: &SolverConfig) -> Result<AdmissiblePair> {
    let part = rasterize_interface(spec, grid)?;
    solve_two_sided_harmonic(&part, &BoundaryData::default(), cfg)
}

/// Spiral surrogate pair. Fails when successive turns come closer than four
/// cells inside the grid.
pub fn make_spiral_pair(lambda: f64, grid: &Grid, cfg: &SolverConfig) -> Result<AdmissiblePair> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput("spiral rate must be nonnegative"));
    }
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    let h = grid.spacing();
    let reach = (0..2)
        .map(|k| grid.origin()[k].abs().max(grid.upper(k).abs()))
        .fold(0.0, f64::max)
        * 2.0f64.sqrt();
    if let Some(gap) = spiral_turn_gap(lambda, h, reach) {
        if gap < 4.0 * h {
            return Err(Error::DegenerateInterface("spiral turns closer than four cells"));
        }
    }
    make_interface_pair(&InterfaceCurveSpec::new(CurveKind::Spiral { lambda }), grid, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn axis_pair_values() {
        let g = Grid::cube(2, 2.0, 9).unwrap();
        let p = make_truncated_linear_pair(&TruncatedLinearPairSpec::axis(2, 1.0, 1.0), &g).unwrap();
        assert!(p.report.pass);
        let up = g.nearest_node(&[0.0, 1.0]).unwrap();
        let down = g.nearest_node(&[0.0, -1.0]).unwrap();
        assert_eq!(p.u.value(up), 1.0);
        assert_eq!(p.v.value(down), 1.0);
        let q = make_truncated_linear_pair(&TruncatedLinearPairSpec::axis(2, 2.0, 3.0), &g).unwrap();
        assert_eq!(q.u.value(up), 2.0);
        assert_eq!(q.v.value(down), 3.0);
    }

    #[test]
    fn rotated_pair_meets_on_rotated_line() {
        let g = Grid::cube(2, 2.0, 33).unwrap();
        let t = 30f64.to_radians();
        let spec = TruncatedLinearPairSpec { a: 1.0, b: 1.0, nu: vec![t.cos(), t.sin()], center: vec![0.0, 0.0] };
        let p = make_truncated_linear_pair(&spec, &g).unwrap();
        assert!(p.report.pass);
        for i in 0..g.len() {
            let y = g.node_position(i);
            let s = spec.height(&y);
            assert!((p.signed(i) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_checks() {
        let g = Grid::cube(2, 1.0, 9).unwrap();
        let mut s = TruncatedLinearPairSpec::axis(2, 1.0, 1.0);
        s.nu = vec![1.0, 1e-5];
        assert!(make_truncated_linear_pair(&s, &g).is_err());
        let s = TruncatedLinearPairSpec::axis(2, 0.0, 1.0);
        assert!(make_truncated_linear_pair(&s, &g).is_err());
    }

    #[test]
    fn spiral_collisions_are_rejected() {
        let g = Grid::cube(2, 1.0, 65).unwrap();
        assert!(matches!(
            make_spiral_pair(40.0, &g, &SolverConfig::default()),
            Err(Error::DegenerateInterface(_))
        ));
    }
}
