use std::f64::consts::PI;
use std::sync::OnceLock;

use acf_core::acf::dyadic_ladder;
use acf_core::beta::{beta_for_plane, beta_number, Hyperplane};
use acf_core::cloud::{extract_interface, IndexedCloud, InterfaceCloud};
use acf_core::cover::vitali_subcover;
use acf_core::energy::PairEnergy;
use acf_core::fit::fit_truncated_pair;
use acf_core::generators::{
    make_interface_pair, make_truncated_linear_pair, CurveKind, InterfaceCurveSpec, SolverConfig,
    TruncatedLinearPairSpec, WedgeProfile,
};
use acf_core::strata::{select_stratum, StratumField};
use acf_core::{c_star, unit_ball_volume, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud2(pts: &[(f64, f64, f64)]) -> InterfaceCloud {
    let points = pts.iter().flat_map(|p| [p.0, p.1]).collect();
    let weights = pts.iter().map(|p| p.2).collect();
    InterfaceCloud::new(2, points, weights, "test".into())
}

fn points() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-0.6f64..0.6, -0.6f64..0.6, 0.01f64..1.0), 3..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn beta_is_invariant_under_similarities(pts in points(), theta in 0.0f64..2.0 * PI, s in 0.1f64..10.0, shift in (-5.0f64..5.0, -5.0f64..5.0)) {
        let (c, sn) = (theta.cos(), theta.sin());
        let moved: Vec<_> = pts.iter().map(|&(x, y, w)| (s * (c * x - sn * y) + shift.0, s * (sn * x + c * y) + shift.1, w * s)).collect();
        let (b0, _) = beta_number(&IndexedCloud::new(cloud2(&pts), 0.5), &[0.0, 0.0], 1.0);
        let (b1, _) = beta_number(&IndexedCloud::new(cloud2(&moved), 0.5 * s), &[shift.0, shift.1], s);
        prop_assert!((b0 - b1).abs() <= 1e-9 * (1.0 + b0), "{} vs {}", b0, b1);
    }

    #[test]
    fn beta_matches_brute_force_line_search(pts in points()) {
        let m = IndexedCloud::new(cloud2(&pts), 0.5);
        let (b, plane) = beta_number(&m, &[0.0, 0.0], 1.0);
        let plane = plane.unwrap();
        prop_assert!((plane.normal[0].hypot(plane.normal[1]) - 1.0).abs() < 1e-12);
        prop_assert!((beta_for_plane(&m, &[0.0, 0.0], 1.0, &plane) - b).abs() < 1e-12);
        // for a fixed normal the best offset is the weighted mean projection
        let mass: f64 = pts.iter().map(|p| p.2).sum();
        let mut brute = f64::INFINITY;
        for k in 0..3600 {
            let t = PI * k as f64 / 3600.0;
            let normal = vec![t.cos(), t.sin()];
            let offset = pts.iter().map(|p| p.2 * (normal[0] * p.0 + normal[1] * p.1)).sum::<f64>() / mass;
            brute = brute.min(beta_for_plane(&m, &[0.0, 0.0], 1.0, &Hyperplane { normal, offset }));
        }
        prop_assert!(b <= brute + 1e-12);
        prop_assert!(brute - b <= 1e-5 * (1.0 + brute), "{} vs {}", b, brute);
    }

    #[test]
    fn fit_follows_rigid_motions(a in 0.5f64..4.0, b in 0.5f64..4.0, theta in 0.0f64..2.0 * PI, shift in (-0.2f64..0.2, -0.2f64..0.2)) {
        let g = Grid::cube(2, 1.0, 97).unwrap();
        let spec = TruncatedLinearPairSpec { a, b, nu: vec![theta.cos(), theta.sin()], center: vec![shift.0, shift.1] };
        let pair = make_truncated_linear_pair(&spec, &g).unwrap();
        let fit = fit_truncated_pair(&pair, &spec.center, 0.1, 0.5).unwrap();
        prop_assert!((fit.a - a).abs() < 1e-3 * a && (fit.b - b).abs() < 1e-3 * b, "{:?}", fit);
        let dot = fit.nu[0] * spec.nu[0] + fit.nu[1] * spec.nu[1];
        prop_assert!(dot > 1.0 - 1e-8, "{}", dot);
        let j = PairEnergy::new(&pair).acf(&spec.center, 0.4).unwrap();
        prop_assert!((j / (a * a * b * b * c_star(2)) - 1.0).abs() < 0.03, "{}", j);
    }
}

fn wedge_field() -> &'static (InterfaceCloud, StratumField) {
    static F: OnceLock<(InterfaceCloud, StratumField)> = OnceLock::new();
    F.get_or_init(|| {
        let g = Grid::cube(2, 1.0, 257).unwrap();
        let spec = InterfaceCurveSpec::new(CurveKind::Wedge(WedgeProfile::Linear { slope: 0.5 }));
        let pair = make_interface_pair(&spec, &g, &SolverConfig::default()).unwrap();
        let cloud = extract_interface(&pair);
        let field = StratumField::new(&PairEnergy::new(&pair), &cloud, &dyadic_ladder(0.25, 3)).unwrap();
        (cloud, field)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strata_nest_in_scale_and_threshold(e in 0.2f64..3.0, de in 0.0f64..3.0, r in 0.01f64..0.25, t in 0.0f64..1.0) {
        let (_, field) = wedge_field();
        let r_big = r + t * (0.25 - r);
        let small = select_stratum(field, e + de, r).unwrap();
        let base = select_stratum(field, e, r).unwrap();
        let big = select_stratum(field, e, r_big).unwrap();
        for i in 0..field.len() {
            prop_assert!(!small.members[i] || base.members[i]);
            prop_assert!(!base.members[i] || big.members[i]);
        }
    }
}

#[test]
fn equilateral_triangle_beta() {
    // equal masses w at circumradius ρ have second moment (3wρ²/2) I
    let (rho, w) = (0.4, 0.7);
    let pts: Vec<_> = (0..3).map(|k| {
        let t = 2.0 * PI * k as f64 / 3.0 + 0.3;
        (rho * t.cos(), rho * t.sin(), w)
    }).collect();
    let (b, _) = beta_number(&IndexedCloud::new(cloud2(&pts), 0.5), &[0.0, 0.0], 0.5);
    let expect = 1.5 * w * rho * rho / 0.5f64.powi(3);
    assert!((b - expect).abs() < 1e-12 * expect, "{b} vs {expect}");
}

#[test]
fn collinear_masses_have_zero_beta() {
    let pts = [(-0.3, 0.2, 1.0), (0.1, 0.2, 2.0), (0.4, 0.2, 0.5)];
    let (b, plane) = beta_number(&IndexedCloud::new(cloud2(&pts), 0.5), &[0.0, 0.0], 1.0);
    assert!(b < 1e-15);
    let p = plane.unwrap();
    assert!(p.normal[1].abs() > 1.0 - 1e-12 && (p.offset.abs() - 0.2).abs() < 1e-12);
}

#[test]
fn normalizing_constants() {
    assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
    assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    assert!((c_star(2) - PI * PI / 4.0).abs() < 1e-14);
    assert!((c_star(3) - PI * PI).abs() < 1e-13);
}

#[test]
fn vitali_on_random_balls() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1000;
    let centers: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.2)).collect();
    let kept = vitali_subcover(&centers, &radii);
    let d = |i: usize, k: usize| ((centers[i][0] - centers[k][0]).powi(2) + (centers[i][1] - centers[k][1]).powi(2)).sqrt();
    for (a, &i) in kept.iter().enumerate() {
        for &k in &kept[a + 1..] {
            assert!(d(i, k) >= (radii[i] + radii[k]) / 5.0);
        }
    }
    // each ball meets a kept core at least as large, hence lies in its 3x dilate
    for i in 0..n {
        let ok = kept.iter().any(|&k| radii[k] >= radii[i] && d(i, k) < (radii[i] + radii[k]) / 5.0 + 1e-15 || k == i);
        assert!(ok, "ball {i} is not dominated");
        assert!(kept.iter().any(|&k| d(i, k) + radii[i] <= 3.0 * radii[k] + 1e-12), "ball {i} escapes");
    }
}
