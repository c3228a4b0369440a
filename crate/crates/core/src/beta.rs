//! L² beta numbers of interface measures and the subspace-approximation probe.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::acf::log_ratio;
use crate::cloud::IndexedCloud;
use crate::energy::PairEnergy;
use crate::linalg::symmetric_eigen;
use crate::Result;

/// Affine hyperplane `{y : normal · y = offset}`, `|normal| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn distance(&self, y: &[f64]) -> f64 {
        (self.normal.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - self.offset).abs()
    }
}

/// `β²(x, r)` and the minimizing plane; `(0, None)` on an empty ball.
///
/// The optimal plane passes through the weighted centroid of the ball with
/// normal along the least eigenvector of the second-moment tensor, so
/// `β² = λ_min / r^{n+1}`.
pub fn beta_number(measure: &IndexedCloud, x: &[f64], r: f64) -> (f64, Option<Hyperplane>) {
    let idx = measure.ball(x, r);
    beta_of(measure, &idx, r)
}

fn beta_of(measure: &IndexedCloud, idx: &[usize], r: f64) -> (f64, Option<Hyperplane>) {
    let cloud = &measure.cloud;
    let n = cloud.dim;
    let mass: f64 = idx.iter().map(|&i| cloud.weights[i]).sum();
    if idx.is_empty() || !(mass > 0.0) {
        return (0.0, None);
    }
    let mut c = vec![0.0; n];
    for &i in idx {
        for k in 0..n {
            c[k] += cloud.weights[i] * cloud.point(i)[k];
        }
    }
    for ck in c.iter_mut() {
        *ck /= mass;
    }
    let mut m = vec![0.0; n * n];
    for &i in idx {
        let y = cloud.point(i);
        let w = cloud.weights[i];
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] += w * (y[a] - c[a]) * (y[b] - c[b]);
            }
        }
    }
    let (vals, vecs) = symmetric_eigen(&m, n);
    let normal = vecs[0].clone();
    let offset = normal.iter().zip(&c).map(|(a, b)| a * b).sum();
    let beta2 = vals[0].max(0.0) / r.powi(n as i32 + 1);
    (beta2, Some(Hyperplane { normal, offset }))
}

/// `∫_{B_r(x)} d(y, L)² / r² dμ(y) / r^{n-1}` for a given plane.
pub fn beta_for_plane(measure: &IndexedCloud, x: &[f64], r: f64, plane: &Hyperplane) -> f64 {
    let cloud = &measure.cloud;
    let s: f64 = measure.ball(x, r).iter().map(|&i| cloud.weights[i] * plane.distance(cloud.point(i)).powi(2)).sum();
    s / r.powi(cloud.dim as i32 + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaTable {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    /// `values[c][j] = β²(centers[c], radii[j])`.
    pub values: Vec<Vec<f64>>,
    pub planes: Vec<Vec<Option<Hyperplane>>>,
}

pub fn beta_table(measure: &IndexedCloud, centers: &[Vec<f64>], radii: &[f64]) -> BetaTable {
    let mut values = Vec::with_capacity(centers.len());
    let mut planes = Vec::with_capacity(centers.len());
    for x in centers {
        let (v, p): (Vec<_>, Vec<_>) = radii.iter().map(|&r| beta_number(measure, x, r)).unzip();
        values.push(v);
        planes.push(p);
    }
    BetaTable { centers: centers.to_vec(), radii: radii.to_vec(), values, planes }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareFunctionSum {
    pub sum: f64,
    /// `r^{n-1}`.
    pub normalization: f64,
    pub ratio: f64,
    /// Contribution of each scale used, in ladder order.
    pub per_scale: Vec<(f64, f64)>,
}

/// `Σ_{r_j ≤ 2r} ∫_{B_r(x)} β²(z, r_j) dμ(z)`.
pub fn square_function_sum(measure: &IndexedCloud, x: &[f64], r: f64, ladder: &[f64]) -> SquareFunctionSum {
    let cloud = &measure.cloud;
    let zs = measure.ball(x, r);
    let mut per_scale = Vec::new();
    let mut sum = 0.0;
    for &rj in ladder.iter().filter(|&&rj| rj <= 2.0 * r * (1.0 + 1e-12)) {
        let mut s = 0.0;
        for &z in &zs {
            let (b, _) = beta_number(measure, cloud.point(z), rj);
            s += cloud.weights[z] * b;
        }
        per_scale.push((rj, s));
        sum += s;
    }
    let normalization = r.powi(cloud.dim as i32 - 1);
    SquareFunctionSum { sum, normalization, ratio: sum / normalization, per_scale }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceReport {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `log(J_x(8r) / J_x(r))`.
    pub gate_drop: f64,
    pub gated_out: bool,
    /// `β²(x, r)`.
    pub left: f64,
    /// `r^{1-n} ∫_{B_r(x)} log(J_y(8r) / J_y(r)) dμ(y)`.
    pub right: f64,
    /// `left / right`; `+∞` when only `right` vanishes, 0 when both do.
    pub ratio: f64,
}

/// Both sides of `β²(x, r) ≤ C r^{1-n} ∫_{B_r(x)} log(J_y(8r)/J_y(r)) dμ(y)`,
/// evaluated when `log(J_x(8r)/J_x(r)) < kappa`.
pub fn l2_subspace_inequality_probe(
    energy: &PairEnergy,
    measure: &IndexedCloud,
    x: &[f64],
    r: f64,
    kappa: f64,
) -> Result<SubspaceReport> {
    let gate_drop = log_ratio(energy.acf(x, 8.0 * r)?, energy.acf(x, r)?);
    let mut report = SubspaceReport {
        center: x.to_vec(),
        radius: r,
        gate_drop,
        gated_out: !(gate_drop < kappa),
        left: 0.0,
        right: 0.0,
        ratio: 0.0,
    };
    if report.gated_out {
        return Ok(report);
    }
    let cloud = &measure.cloud;
    let idx = measure.ball(x, r);
    let (left, _) = beta_of(measure, &idx, r);
    let mut right = 0.0;
    for &i in &idx {
        let y = cloud.point(i);
        right += cloud.weights[i] * log_ratio(energy.acf(y, 8.0 * r)?, energy.acf(y, r)?);
    }
    right /= r.powi(cloud.dim as i32 - 1);
    report.left = left;
    report.right = right;
    report.ratio = if right > 0.0 {
        left / right
    } else if left > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::InterfaceCloud;
    use alloc::string::String;

    fn measure(points: Vec<f64>, weights: Vec<f64>) -> IndexedCloud {
        IndexedCloud::new(InterfaceCloud::new(2, points, weights, String::new()), 0.25)
    }

    #[test]
    fn collinear_cloud_is_flat() {
        let pts: Vec<f64> = (0..50).flat_map(|i| {
            let t = -1.0 + i as f64 / 25.0;
            [t * 0.6, t * 0.8 + 0.1]
        }).collect();
        let m = measure(pts, vec![0.04; 50]);
        let (b, plane) = beta_number(&m, &[0.0, 0.1], 1.0);
        assert!(b <= 1e-12);
        let plane = plane.unwrap();
        assert!((plane.normal[0].abs() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn two_masses_on_a_vertical_line() {
        // the line x₁ = 0 carries both masses, so the infimum is 0
        let d = 0.4;
        let m = measure(vec![0.0, d, 0.0, -d], vec![1.0, 1.0]);
        let (b, plane) = beta_number(&m, &[0.0, 0.0], 1.0);
        assert!(b <= 1e-15);
        assert!(plane.unwrap().normal[0].abs() > 1.0 - 1e-12);
        // 2d² is the cost of the line x₂ = 0 instead
        let flat = Hyperplane { normal: vec![0.0, 1.0], offset: 0.0 };
        assert!((beta_for_plane(&m, &[0.0, 0.0], 1.0, &flat) - 2.0 * d * d).abs() < 1e-15);
    }

    #[test]
    fn empty_ball() {
        let m = measure(vec![5.0, 5.0], vec![1.0]);
        assert_eq!(beta_number(&m, &[0.0, 0.0], 1.0), (0.0, None));
    }

    #[test]
    fn three_point_value() {
        // centroid (0, 1/3); second moments: xx = 2, yy = 2/3, xy = 0
        let m = measure(vec![-1.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![1.0; 3]);
        let (b, _) = beta_number(&m, &[0.0, 0.0], 2.0);
        assert!((b - (2.0 / 3.0) / 8.0).abs() < 1e-14);
    }
}
