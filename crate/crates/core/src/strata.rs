//! Quantitative strata `{x ∈ Γ : J_x(r) ≥ ε}` over an interface cloud.
//!
//! `J` is tabulated once per cloud point on a fixed dyadic ladder and
//! membership uses the envelope `J̃_x(r) = min_{s ≥ r} J_x(s)` over ladder
//! scales. `J̃` is nondecreasing in `r` by construction, so selections nest
//! exactly even where discretization makes `J` itself wobble, and below the
//! finest ladder scale `J̃` is clamped to the finest resolved value.

use alloc::vec::Vec;

use crate::cloud::InterfaceCloud;
use crate::energy::PairEnergy;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct StratumField {
    /// Strictly decreasing scales.
    pub ladder: Vec<f64>,
    /// `J` per cloud point on the ladder, `None` where some ladder ball
    /// leaves the grid.
    pub values: Vec<Option<Vec<f64>>>,
    /// `envelope[i][j] = min_{k ≤ j} values[i][k]`.
    envelope: Vec<Option<Vec<f64>>>,
}

impl StratumField {
    pub fn new(energy: &PairEnergy, cloud: &InterfaceCloud, ladder: &[f64]) -> Result<Self> {
        if ladder.is_empty() || ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("ladder must be nonempty and strictly decreasing"));
        }
        let mut values = Vec::with_capacity(cloud.len());
        'points: for i in 0..cloud.len() {
            let x = cloud.point(i);
            let mut row = Vec::with_capacity(ladder.len());
            for &r in ladder {
                match energy.acf(x, r) {
                    Ok(j) => row.push(j),
                    Err(Error::Domain) => {
                        values.push(None);
                        continue 'points;
                    }
                    Err(e) => return Err(e),
                }
            }
            values.push(Some(row));
        }
        let envelope = values
            .iter()
            .map(|row| {
                row.as_ref().map(|row| {
                    let mut m = f64::INFINITY;
                    row.iter().map(|&j| {
                        m = m.min(j);
                        m
                    }).collect()
                })
            })
            .collect();
        Ok(StratumField { ladder: ladder.to_vec(), values, envelope })
    }

    /// All values divided by `j_ref`, e.g. to work in units where `J̄ = 1`.
    pub fn normalized(&self, j_ref: f64) -> StratumField {
        let div = |v: &Option<Vec<f64>>| v.as_ref().map(|row| row.iter().map(|j| j / j_ref).collect());
        StratumField {
            ladder: self.ladder.clone(),
            values: self.values.iter().map(div).collect(),
            envelope: self.envelope.iter().map(div).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn available(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// `J̃_i(r)`; `None` when point `i` is unavailable or `r` exceeds the
    /// coarsest ladder scale.
    pub fn envelope(&self, i: usize, r: f64) -> Option<f64> {
        let env = self.envelope[i].as_ref()?;
        // last ladder index with ladder[j] ≥ r
        let j = self.ladder.iter().rposition(|&s| s >= r * (1.0 - 1e-12))?;
        Some(env[j])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StratumSelection {
    pub epsilon: f64,
    pub r: f64,
    pub members: Vec<bool>,
    /// `J̃` per point.
    pub values: Vec<Option<f64>>,
}

impl StratumSelection {
    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    /// Selected share of the points where `J̃` is available.
    pub fn fraction(&self) -> f64 {
        let avail = self.values.iter().filter(|v| v.is_some()).count();
        if avail == 0 {
            0.0
        } else {
            self.count() as f64 / avail as f64
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.members[i]).collect()
    }
}

/// Points with `J̃(r) ≥ ε`. `r` must not exceed the coarsest ladder scale.
pub fn select_stratum(field: &StratumField, epsilon: f64, r: f64) -> Result<StratumSelection> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive"));
    }
    if !(r > 0.0) || r > field.ladder[0] * (1.0 + 1e-12) {
        return Err(Error::InvalidInput("scale outside the ladder"));
    }
    let values: Vec<Option<f64>> = (0..field.len()).map(|i| field.envelope(i, r)).collect();
    let members = values.iter().map(|v| matches!(v, Some(j) if *j >= epsilon)).collect();
    Ok(StratumSelection { epsilon, r, members, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acf::dyadic_ladder;
    use crate::c_star;
    use crate::cloud::extract_interface;
    use crate::generators::{make_truncated_linear_pair, TruncatedLinearPairSpec};
    use crate::grid::Grid;

    #[test]
    fn exact_pair_strata() {
        let g = Grid::cube(2, 1.0, 129).unwrap();
        let p = make_truncated_linear_pair(&TruncatedLinearPairSpec::axis(2, 1.0, 1.0), &g).unwrap();
        let cloud = extract_interface(&p);
        let e = PairEnergy::new(&p);
        let field = StratumField::new(&e, &cloud, &dyadic_ladder(0.5, 3)).unwrap();
        assert!(field.available() > cloud.len() / 3);
        let all = select_stratum(&field, 1.0, 0.1).unwrap();
        assert_eq!(all.count(), field.available());
        assert!(c_star(2) < 10.0);
        assert_eq!(select_stratum(&field, 10.0, 0.1).unwrap().count(), 0);
        assert!(select_stratum(&field, 1.0, 0.6).is_err());
    }
}
