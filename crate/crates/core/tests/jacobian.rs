use fracsob_core::jacobian::{
    curl, degree, degree_formula_with, dist_jacobian, image_measure, pointwise_jacobian, shear_perturb, Contour,
};
use fracsob_core::mollify::default_ladder;
use fracsob_core::sobolev::bump;
use fracsob_core::spectral::{self, Scheme};
use fracsob_core::{scenario, Error, Grid, ScalarField, VectorField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn spectral_only(mut f: VectorField) -> VectorField {
    f.jacobian = None;
    f
}

fn target_bump(r: f64) -> impl Fn([f64; 2]) -> f64 + Sync {
    move |y: [f64; 2]| {
        let q = (y[0] * y[0] + y[1] * y[1]) / (r * r);
        if q < 1.0 {
            (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    }
}

#[test]
fn pointwise_jacobian_of_linear_and_rank_one_maps() {
    let g = Grid::unit(64);
    let id = pointwise_jacobian(&spectral_only(scenario::identity_map(g))).unwrap();
    assert!(id.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    let stretch = VectorField::new(vec![ScalarField::linear(g, [1.0, 0.0]), ScalarField::linear(g, [0.0, 2.0])]).unwrap();
    let j = pointwise_jacobian(&stretch).unwrap();
    assert!(j.values.iter().all(|v| (v - 2.0).abs() < 1e-10));
    for f in [scenario::rank1_map(g), spectral_only(scenario::rank1_map(g))] {
        assert!(pointwise_jacobian(&f).unwrap().max_abs() < 1e-10);
    }
}

#[test]
fn curl_of_gradients_and_rotation() {
    let g = Grid::unit(64);
    let v = ScalarField::from_fn(g, |x| (TAU * x[0]).sin() * (2.0 * TAU * x[1]).cos() + (TAU * (x[0] - x[1])).cos());
    assert!(curl(&spectral::gradient(&v, Scheme::Spectral)).unwrap().max_abs() < 1e-10);
    let rot = VectorField::new(vec![ScalarField::linear(g, [0.0, -1.0]), ScalarField::linear(g, [1.0, 0.0])]).unwrap();
    let c = curl(&rot).unwrap();
    assert!(c.values.iter().all(|v| (v - 2.0).abs() < 1e-10));
}

#[test]
fn shear_gives_delta_squared_on_rank_one_gradient() {
    let g = Grid::unit(64);
    let f = scenario::rank1_map(g);
    for delta in [0.1, 0.01] {
        for f in [f.clone(), spectral_only(f.clone())] {
            let j = pointwise_jacobian(&shear_perturb(&f, delta).unwrap()).unwrap();
            assert!(j.values.iter().all(|v| (v - delta * delta).abs() < 1e-10));
        }
    }
    let same = shear_perturb(&f, 0.0).unwrap();
    assert_eq!(same.comps[0].values, f.comps[0].values);
    let zero = VectorField::new(vec![ScalarField::zeros(g), ScalarField::zeros(g)]).unwrap();
    let rot = pointwise_jacobian(&shear_perturb(&zero, 1.0).unwrap()).unwrap();
    assert!(rot.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
}

#[test]
fn smooth_pairing_matches_direct_integral() {
    let g = Grid::unit(256);
    // mollification bias is O(ε²) and linear in the perturbation size
    let f = scenario::perturbed_identity(g, 0.1);
    let phi = bump(g, g.center(), 0.2);
    let direct = pointwise_jacobian(&f).unwrap().mul(&phi).unwrap().integral();
    let p = dist_jacobian(&f, &phi, &default_ladder(&g)).unwrap();
    assert!(p.converged);
    assert!((p.limit - direct).abs() < 1e-6, "{} vs {direct}", p.limit);
}

#[test]
fn rank_one_pairing_vanishes_and_support_is_checked() {
    let g = Grid::unit(64);
    let f = scenario::rank1_map(g);
    let phi = bump(g, g.center(), 0.2);
    let p = dist_jacobian(&f, &phi, &default_ladder(&g)).unwrap();
    assert!(p.ladder.iter().all(|&(_, v)| v.abs() < 1e-12));
    let edge = bump(g, [0.05, 0.5], 0.2);
    assert!(dist_jacobian(&f, &edge, &default_ladder(&g)).is_err());
}

#[test]
fn degree_of_identity_and_doubling() {
    let g = Grid::unit(128);
    let c = Contour::circle([0.0, 0.0], 0.2, 512);
    let id = scenario::identity_map(g);
    assert_eq!(degree(&id, &c, [0.0, 0.0]).unwrap(), 1);
    assert_eq!(degree(&id, &c, [0.03, -0.05]).unwrap(), 1);
    assert_eq!(degree(&id, &c, [0.35, 0.0]).unwrap(), 0);
    let sq = VectorField::new(vec![
        ScalarField::from_window_fn(g, |w| w[0] * w[0] - w[1] * w[1]),
        ScalarField::from_window_fn(g, |w| 2.0 * w[0] * w[1]),
    ])
    .unwrap();
    assert_eq!(degree(&sq, &c, [0.01, 0.005]).unwrap(), 2);
    let swapped = VectorField::new(vec![id.comps[1].clone(), id.comps[0].clone()]).unwrap();
    assert_eq!(degree(&swapped, &c, [0.0, 0.0]).unwrap(), -1);
}

#[test]
fn degree_near_the_contour_image_is_refused() {
    let g = Grid::unit(64);
    let c = Contour::circle([0.0, 0.0], 0.2, 256);
    let err = degree(&scenario::identity_map(g), &c, [0.2, 0.0]).unwrap_err();
    assert!(matches!(err, Error::ContourTooClose { .. }));
    assert!(err.to_string().contains("degree ill-defined"));
}

#[test]
fn degree_is_stable_under_contour_refinement() {
    let g = Grid::unit(128);
    let f = scenario::perturbed_identity(g, scenario::PERTURBATION);
    for samples in [128, 256, 512, 1024] {
        let c = Contour::circle([0.0, 0.0], 0.25, samples);
        assert_eq!(degree(&f, &c, [0.02, 0.01]).unwrap(), 1);
    }
}

#[test]
fn degree_formula_on_identity_perturbation_and_reflection() {
    let g = Grid::unit(256);
    let c = Contour::circle([0.0, 0.0], 0.3, 1024);
    let w = target_bump(0.15);
    let id = degree_formula_with(&scenario::identity_map(g), &c, &g, &w).unwrap();
    assert!(id.residual < 1e-6, "{id:?}");
    let f = scenario::perturbed_identity(g, scenario::PERTURBATION);
    let p = degree_formula_with(&f, &c, &g, &w).unwrap();
    assert!(p.residual < 1e-4, "{p:?}");
    let swapped = VectorField::new(vec![f.comps[1].clone(), f.comps[0].clone()]).unwrap();
    let s = degree_formula_with(&swapped, &c, &g, &w).unwrap();
    assert!(s.lhs < 0.0 && s.rhs < 0.0 && s.residual < 1e-4, "{s:?}");
}

#[test]
fn positive_jacobian_gives_positive_degree() {
    let g = Grid::unit(128);
    let f = scenario::perturbed_identity(g, scenario::PERTURBATION);
    assert!(pointwise_jacobian(&f).unwrap().values.iter().all(|&v| v > 0.0));
    let c = Contour::circle([0.0, 0.0], 0.3, 1024);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (r, t) = (0.2 * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
        assert!(degree(&f, &c, [r * t.cos(), r * t.sin()]).unwrap() >= 1);
    }
}

#[test]
fn covered_area_of_rank_one_identity_and_constant() {
    let half = 0.25;
    let sizes = [64, 128, 256];
    let rank1: Vec<VectorField> = sizes.iter().map(|&n| scenario::rank1_map(Grid::unit(n))).collect();
    let areas = image_measure(&rank1, half).unwrap();
    for w in areas.windows(2) {
        let ratio = w[0].1 / w[1].1;
        assert!((1.0..=4.0).contains(&ratio), "{areas:?}");
    }
    let ids: Vec<VectorField> = sizes.iter().map(|&n| scenario::identity_map(Grid::unit(n))).collect();
    for (_, a) in image_measure(&ids, half).unwrap() {
        assert!((a / (4.0 * half * half) - 1.0).abs() < 0.05, "{a}");
    }
    let g = Grid::unit(64);
    let constant = VectorField::new(vec![ScalarField::constant(g, 0.1), ScalarField::constant(g, 0.2)]).unwrap();
    let a = image_measure(&[constant], half).unwrap()[0].1;
    assert!(a <= 4.0 * g.cell_area());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pairing_ignores_added_constants(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
        let g = Grid::unit(32);
        let f = VectorField::new(vec![
            ScalarField::from_fn(g, |x| (TAU * x[0]).sin() + 0.3 * (TAU * x[1]).cos()),
            ScalarField::from_fn(g, |x| (TAU * x[1]).sin() * (TAU * x[0]).cos()),
        ]).unwrap();
        let shifted = VectorField::new(vec![f.comps[0].map(|v| v + c1), f.comps[1].map(|v| v + c2)]).unwrap();
        let phi = bump(g, g.center(), 0.2);
        let ladder = [0.125, 0.0625];
        let a = dist_jacobian(&f, &phi, &ladder).unwrap();
        let b = dist_jacobian(&shifted, &phi, &ladder).unwrap();
        for (x, y) in a.ladder.iter().zip(&b.ladder) {
            prop_assert!((x.1 - y.1).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_fields_are_curl_free(coeffs in prop::collection::vec((-6i32..=6, -6i32..=6, -1.0f64..1.0), 1..6)) {
        let g = Grid::unit(32);
        let v = ScalarField::from_fn(g, |x| coeffs.iter().map(|&(a, b, c)| c * (TAU * (a as f64 * x[0] + b as f64 * x[1])).sin()).sum());
        prop_assert!(curl(&spectral::gradient(&v, Scheme::Spectral)).unwrap().max_abs() < 1e-8);
    }
}
