//! Edge-based Dirichlet energy densities.
//!
//! `|∂_i f|²` is sampled on the edge from each node to its forward neighbor
//! along axis `i`. On an edge that leaves the support of `f`, the crossing is
//! reconstructed by extrapolating the two nodes behind it linearly, and the
//! edge carries the exact line integral of the reconstructed profile. This is
//! exact for truncated linear functions in any orientation; the plain central
//! stencil would smear each kink over two cells.

use alloc::vec::Vec;
use num_traits::Float;

use crate::grid::GridField;
use crate::pair::AdmissiblePair;
use crate::quadrature::{ball_rows, ball_sum, check_ball, Kernel, Stagger};
use crate::Result;

/// Smallest reconstructed crossing fraction.
const THETA_MIN: f64 = 1e-3;

/// Fraction of the edge from `near` (positive) toward a zero node that lies
/// in the support, recovered from `near` and the node `far` behind it.
#[inline]
pub fn crossing_fraction(near: f64, far: Option<f64>) -> f64 {
    match far {
        Some(far) if far > near && near > 0.0 => (near / (far - near)).clamp(THETA_MIN, 1.0),
        _ => 1.0,
    }
}

/// Energy density of `f` on the edge `(p, q)` along `axis`, `q` the forward node.
fn edge_density(f: &GridField, p: usize, q: usize, axis: usize) -> f64 {
    let h = f.grid().spacing();
    let (fp, fq) = (f.value(p), f.value(q));
    if fp > 0.0 && fq > 0.0 {
        let d = (fq - fp) / h;
        d * d
    } else if fp > 0.0 {
        let far = f.grid().neighbor(p, axis, false).map(|m| f.value(m));
        let theta = crossing_fraction(fp, far);
        fp * fp / (theta * h * h)
    } else if fq > 0.0 {
        let far = f.grid().neighbor(q, axis, true).map(|m| f.value(m));
        let theta = crossing_fraction(fq, far);
        fq * fq / (theta * h * h)
    } else {
        0.0
    }
}

/// Per-axis edge densities of one field, with running sums along the last
/// axis for row-wise ball integrals.
#[derive(Clone, Debug)]
pub struct EnergyDensity {
    axes: Vec<Vec<f64>>,
    prefix: Vec<Vec<f64>>,
}

impl EnergyDensity {
    pub fn new(f: &GridField) -> Self {
        let g = f.grid();
        let axes = (0..g.dim())
            .map(|axis| {
                (0..g.len())
                    .map(|p| match g.neighbor(p, axis, true) {
                        Some(q) => edge_density(f, p, q, axis),
                        None => 0.0,
                    })
                    .collect()
            })
            .collect::<Vec<Vec<f64>>>();
        let row = g.counts()[g.dim() - 1];
        let prefix = axes
            .iter()
            .map(|a| {
                let mut p = a.clone();
                for start in (0..p.len()).step_by(row) {
                    for i in start + 1..start + row {
                        p[i] += p[i - 1];
                    }
                }
                p
            })
            .collect();
        EnergyDensity { axes, prefix }
    }

    #[inline]
    fn run(&self, axis: usize, row: usize, a: usize, b: usize) -> f64 {
        let p = &self.prefix[axis];
        p[row + b] - if a > 0 { p[row + a - 1] } else { 0.0 }
    }

    /// Density on the edge starting at `node` along `axis`.
    pub fn edge(&self, axis: usize, node: usize) -> f64 {
        self.axes[axis][node]
    }

    /// Total density at a node: the mean of the adjacent edge densities per axis.
    pub fn total_at(&self, f: &GridField, node: usize) -> f64 {
        let g = f.grid();
        (0..g.dim())
            .map(|k| {
                let fwd = self.axes[k][node];
                let back = g.neighbor(node, k, false).map_or(fwd, |m| self.axes[k][m]);
                0.5 * (fwd + back)
            })
            .sum()
    }

    /// `∫_{B_r(x)} |∇f|² K` without resolution checks.
    pub fn ball_energy(&self, f: &GridField, center: &[f64], radius: f64, kernel: Kernel) -> f64 {
        let g = f.grid();
        if kernel == Kernel::None || g.dim() == 2 {
            let hn = g.spacing().powi(g.dim() as i32);
            return (0..g.dim())
                .map(|axis| {
                    let a = &self.axes[axis];
                    let (mut runs, mut parts) = (0.0, 0.0);
                    ball_rows(g, center, radius, Stagger::Edge(axis), |row, lo, hi| runs += self.run(axis, row, lo, hi), |i, w| parts += w * a[i]);
                    (runs + parts) * hn
                })
                .sum();
        }
        (0..g.dim())
            .map(|axis| {
                let a = &self.axes[axis];
                ball_sum(g, center, radius, Stagger::Edge(axis), kernel, |i| a[i])
            })
            .sum()
    }
}

/// Cached energy densities of both fields of a pair.
#[derive(Clone, Debug)]
pub struct PairEnergy<'a> {
    pub pair: &'a AdmissiblePair,
    pub du: EnergyDensity,
    pub dv: EnergyDensity,
}

impl<'a> PairEnergy<'a> {
    pub fn new(pair: &'a AdmissiblePair) -> Self {
        PairEnergy { pair, du: EnergyDensity::new(&pair.u), dv: EnergyDensity::new(&pair.v) }
    }

    /// The two factors `r^{-2} ∫_{B_r(x)} |∇f|² |x-y|^{2-n}` for `u` and `v`.
    pub fn factors(&self, center: &[f64], radius: f64) -> Result<(f64, f64)> {
        check_ball(self.pair.grid(), center, radius)?;
        let r2 = radius * radius;
        let eu = self.du.ball_energy(&self.pair.u, center, radius, Kernel::Newton) / r2;
        let ev = self.dv.ball_energy(&self.pair.v, center, radius, Kernel::Newton) / r2;
        Ok((eu, ev))
    }

    /// `J_x(r)`.
    pub fn acf(&self, center: &[f64], radius: f64) -> Result<f64> {
        let (a, b) = self.factors(center, radius)?;
        Ok(a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Grid;

    #[test]
    fn reconstruction_is_exact_for_oblique_kinks() {
        let g = Grid::cube(2, 1.0, 41).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let f = GridField::from_fn(g.clone(), |p| (c * p[0] + s * p[1] - 0.0123).max(0.0));
        let d = EnergyDensity::new(&f);
        let h = g.spacing();
        // Σ over edges of density · h² equals the support area times |∇f|² component-wise.
        for (axis, comp) in [(0usize, c), (1, s)] {
            for p in 0..g.len() {
                let Some(q) = g.neighbor(p, axis, true) else { continue };
                let (fp, fq) = (f.value(p), f.value(q));
                if (fp > 0.0) != (fq > 0.0) {
                    // line integral of (∂_axis f)² over the positive part of the edge
                    let pos = fp.max(fq) / comp;
                    let exact = comp * comp * pos.min(h) / h;
                    let far_exists = g.neighbor(if fp > 0.0 { p } else { q }, axis, fp <= 0.0).is_some();
                    if far_exists {
                        assert!((d.edge(axis, p) - exact).abs() < 1e-9, "{} {}", d.edge(axis, p), exact);
                    }
                }
            }
        }
    }

    #[test]
    fn crossing_fraction_fallbacks() {
        assert_eq!(crossing_fraction(1.0, None), 1.0);
        assert_eq!(crossing_fraction(1.0, Some(0.5)), 1.0);
        assert!((crossing_fraction(0.25, Some(1.25)) - 0.25).abs() < 1e-15);
    }
    #[test]
    fn row_sums_match_cellwise_sums() {
        let g = Grid::cube(2, 1.0, 65).unwrap();
        let f = GridField::from_fn(g.clone(), |p| (p[0] + 0.3 * p[1] - 0.1).max(0.0) + 0.1 * p[0] * p[1]);
        let d = EnergyDensity::new(&f);
        for (c, r) in [([0.0, 0.0], 0.5), ([0.2, -0.3], 0.33)] {
            let fast = d.ball_energy(&f, &c, r, Kernel::None);
            let slow: f64 = (0..2)
                .map(|axis| ball_sum(&g, &c, r, Stagger::Edge(axis), Kernel::None, |i| d.edge(axis, i)))
                .sum();
            assert!((fast - slow).abs() < 1e-12 * slow, "{fast} {slow}");
        }
    }
}
