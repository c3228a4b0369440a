//! Admissible pairs: nonnegative fields with disjoint supports, each
//! discretely subharmonic where positive.

use crate::grid::GridField;
use crate::{Error, Result};

/// Admissibility tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Bound on `u·v`; `None` selects `1e-12 · max u · max v`.
    pub disjoint: Option<f64>,
    /// Bound on `-Δu · h² / max u` at nodes where `u > 0`.
    pub subharmonic: f64,
    /// Bound on `-min(u, v)`.
    pub negative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { disjoint: None, subharmonic: 1e-6, negative: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationReport {
    pub max_negative_value: f64,
    pub max_product: f64,
    /// Largest `max(0, -Δf · h²) / max f` over nodes where `f > 0`.
    pub worst_superharmonic_defect: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissiblePair {
    pub u: GridField,
    pub v: GridField,
    pub report: ValidationReport,
}

fn superharmonic_defect(f: &GridField) -> f64 {
    let scale = f.max();
    if !(scale > 0.0) {
        return 0.0;
    }
    let g = f.grid();
    let h2 = g.spacing() * g.spacing();
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        if f.value(i) > 0.0 && g.is_interior(i) {
            let lap = f.laplacian(i).unwrap_or(0.0);
            worst = worst.max(-lap * h2 / scale);
        }
    }
    worst
}

/// Measures admissibility of `(u, v)` without modifying them.
pub fn validate_pair(u: GridField, v: GridField, tol: &Tolerances) -> Result<AdmissiblePair> {
    if u.grid() != v.grid() {
        return Err(Error::IncompatibleGrid);
    }
    let max_negative_value = (-u.min().min(v.min())).max(0.0);
    let max_product = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| (a * b).abs())
        .fold(0.0, f64::max);
    let worst_superharmonic_defect = superharmonic_defect(&u).max(superharmonic_defect(&v));
    let disjoint = tol.disjoint.unwrap_or(1e-12 * u.max().max(0.0) * v.max().max(0.0));
    let pass = max_negative_value <= tol.negative
        && max_product <= disjoint
        && worst_superharmonic_defect <= tol.subharmonic;
    let report = ValidationReport { max_negative_value, max_product, worst_superharmonic_defect, pass };
    Ok(AdmissiblePair { u, v, report })
}

impl AdmissiblePair {
    pub fn grid(&self) -> &crate::Grid {
        self.u.grid()
    }

    pub fn dim(&self) -> usize {
        self.u.grid().dim()
    }

    /// The pair `(v, u)`.
    pub fn swapped(&self) -> AdmissiblePair {
        AdmissiblePair { u: self.v.clone(), v: self.u.clone(), report: self.report }
    }

    /// The pair `(c u, v / c)`.
    pub fn gauged(&self, c: f64) -> AdmissiblePair {
        AdmissiblePair { u: self.u.scaled(c), v: self.v.scaled(1.0 / c), report: self.report }
    }

    /// Both fields multiplied by `c`.
    pub fn scaled(&self, c: f64) -> AdmissiblePair {
        AdmissiblePair { u: self.u.scaled(c), v: self.v.scaled(c), report: self.report }
    }

    /// `u - v`, positive on one phase and negative on the other.
    #[inline]
    pub fn signed(&self, idx: usize) -> f64 {
        self.u.value(idx) - self.v.value(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Grid;

    #[test]
    fn truncated_linear_pair_passes() {
        let g = Grid::cube(2, 1.0, 17).unwrap();
        let u = GridField::from_fn(g.clone(), |p| 2.0 * p[1].max(0.0));
        let v = GridField::from_fn(g, |p| 3.0 * (-p[1]).max(0.0));
        let pair = validate_pair(u, v, &Tolerances::default()).unwrap();
        assert!(pair.report.pass);
        assert_eq!(pair.report.max_negative_value, 0.0);
        assert_eq!(pair.report.max_product, 0.0);
        assert_eq!(pair.report.worst_superharmonic_defect, 0.0);
    }

    #[test]
    fn overlapping_supports_fail() {
        let g = Grid::cube(2, 1.0, 9).unwrap();
        let one = GridField::from_fn(g, |_| 1.0);
        let pair = validate_pair(one.clone(), one, &Tolerances::default()).unwrap();
        assert!(!pair.report.pass);
        assert_eq!(pair.report.max_product, 1.0);
    }

    #[test]
    fn superharmonic_bump_fails() {
        let g = Grid::cube(2, 1.0, 17).unwrap();
        let u = GridField::from_fn(g.clone(), |p| 1.0 - p[0] * p[0] - p[1] * p[1] + 1.0);
        let v = GridField::zeros(g);
        let pair = validate_pair(u, v, &Tolerances::default()).unwrap();
        assert!(!pair.report.pass);
        assert!(pair.report.worst_superharmonic_defect > 1e-3);
    }

    #[test]
    fn mismatched_grids() {
        let a = GridField::zeros(Grid::cube(2, 1.0, 9).unwrap());
        let b = GridField::zeros(Grid::cube(2, 1.0, 11).unwrap());
        assert_eq!(validate_pair(a, b, &Tolerances::default()), Err(Error::IncompatibleGrid));
    }

    #[test]
    fn validation_is_idempotent() {
        let g = Grid::cube(2, 1.0, 17).unwrap();
        let u = GridField::from_fn(g.clone(), |p| (p[0] + 0.1).max(0.0));
        let v = GridField::from_fn(g, |p| (-p[0] - 0.1).max(0.0));
        let first = validate_pair(u.clone(), v.clone(), &Tolerances::default()).unwrap();
        let again = validate_pair(first.u.clone(), first.v.clone(), &Tolerances::default()).unwrap();
        assert_eq!(first, again);
        assert_eq!(first.u, u);
    }
}
