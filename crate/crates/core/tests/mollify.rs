use fracsob_core::mollify::{
    commutator, commutator_identity_residual, commutator_rates, default_ladder, mollify, mollify_rates, vmo_modulus,
    Mollifier,
};
use fracsob_core::{Error, Grid, Mask, RateFit, ScalarField, VectorField};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn smooth(g: Grid) -> ScalarField {
    ScalarField::from_fn(g, |x| (TAU * x[0]).sin() * (TAU * x[1]).cos() + 0.3 * (2.0 * TAU * x[1]).sin())
}

#[test]
fn kernel_has_unit_mass_and_compact_support() {
    let g = Grid::unit(64);
    for eps in [2.0 / 64.0, 0.1, 0.2] {
        let m = Mollifier::new(g, eps).unwrap();
        let mass: f64 = m.stencil().iter().map(|s| s.2).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        // the hat of each cell reaches one cell beyond the bump
        let h = g.h();
        assert!(m.stencil().iter().all(|&(a, b, _)| (a as f64 * h).hypot(b as f64 * h) < eps + 2f64.sqrt() * h));
    }
}

#[test]
fn constants_and_lines_are_preserved() {
    let g = Grid::unit(64);
    let c = mollify(&ScalarField::constant(g, 2.5), 0.1).unwrap();
    assert!(c.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
    let line = ScalarField::linear(g, [0.7, -1.3]);
    let m = mollify(&line, 0.1).unwrap();
    assert!(m.sub(&line).unwrap().max_abs() < 1e-12);
}

#[test]
fn mean_is_preserved() {
    let g = Grid::unit(64);
    let f = ScalarField::from_fn(g, |x| (TAU * x[0]).sin().abs() + x[1] * (1.0 - x[1]));
    let m = mollify(&f, 0.07).unwrap();
    assert!((m.mean() - f.mean()).abs() < 1e-12);
}

#[test]
fn under_resolved_and_oversized_scales_are_refused() {
    let g = Grid::unit(64);
    let f = smooth(g);
    assert!(matches!(mollify(&f, 1.5 / 64.0), Err(Error::UnderResolved { .. })));
    assert!(mollify(&f, 0.25).is_err());
}

#[test]
fn smooth_fields_mollify_at_second_order() {
    let g = Grid::unit(128);
    let f = VectorField::new(vec![smooth(g)]).unwrap();
    let r = mollify_rates(&f, 2.0 / 3.0, 3.0, &[0], &default_ladder(&g), None).unwrap();
    assert!(r[0].fit.slope >= 0.95, "{:?}", r[0].fit);
}

#[test]
fn commutator_vanishes_against_constants() {
    let g = Grid::unit(64);
    let m = Mollifier::new(g, 0.1).unwrap();
    let c = commutator(&m, &smooth(g), &ScalarField::constant(g, -2.0)).unwrap();
    assert!(c.iter().all(|v| v.max_abs() < 1e-12));
}

#[test]
fn commutator_of_smooth_square_is_second_order() {
    let g = Grid::unit(256);
    let f = ScalarField::from_fn(g, |x| (TAU * x[0]).sin() + 0.5 * (TAU * x[1]).cos());
    // rungs at ε ≥ 4h; at 2h the discrete kernel's second moment is off
    let ladder: Vec<f64> = default_ladder(&g).into_iter().filter(|&e| e >= 4.0 * g.h()).collect();
    let r = commutator_rates(&f, &f, 2.0 / 3.0, 3.0, &[0], &ladder, None).unwrap();
    assert!(r[0].fit.slope >= 1.9, "{:?}", r[0].fit);
}

#[test]
fn commutator_identity_holds_pointwise() {
    let g = Grid::unit(64);
    let f = smooth(g);
    let h = ScalarField::from_fn(g, |x| (TAU * (x[0] + 2.0 * x[1])).cos());
    for eps in [0.05, 0.1] {
        let m = Mollifier::new(g, eps).unwrap();
        assert!(commutator_identity_residual(&m, &f, &h).unwrap() < 1e-8);
    }
}

#[test]
fn vmo_modulus_separates_continuous_jump_and_cone() {
    let g = Grid::unit(128);
    let centre = Mask::disk(g, 0.0);
    let ladder = default_ladder(&g);
    let smooth = smooth(g);
    let cont: Vec<f64> = ladder.iter().map(|&e| vmo_modulus(&smooth, 2.0 / 3.0, e, Some(&centre)).unwrap()).collect();
    assert!(cont.windows(2).all(|w| w[1] < w[0]) && cont.last().unwrap() < &1e-3);
    let jump = ScalarField::from_window_fn(g, |w| if w[0] >= 0.0 { 1.0 } else { -1.0 });
    let jumps: Vec<f64> = ladder.iter().map(|&e| vmo_modulus(&jump, 2.0 / 3.0, e, Some(&centre)).unwrap()).collect();
    assert!(jumps.iter().all(|&v| v > 0.5), "{jumps:?}");
    let cone = fracsob_core::scenario::cone_gradient(g);
    for c in &cone.comps {
        let v: Vec<f64> = ladder.iter().map(|&e| vmo_modulus(c, 2.0 / 3.0, e, Some(&centre)).unwrap()).collect();
        // x/|x| averages to zero on every centred ball, so the modulus sits
        // at the constant mean oscillation of the angular profile.
        assert!(v.iter().all(|x| x.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mollification_contracts_lp(coeffs in prop::collection::vec((-5i32..=5, -5i32..=5, -1.0f64..1.0), 1..5),
                                  p in 1.0f64..4.0, eps in 0.07f64..0.2) {
        let g = Grid::unit(32);
        let f = ScalarField::from_fn(g, |x| coeffs.iter().map(|&(a, b, c)| c * (TAU * (a as f64 * x[0] + b as f64 * x[1])).cos()).sum());
        let m = mollify(&f, eps).unwrap();
        prop_assert!(m.lp_norm(p, None) <= f.lp_norm(p, None) + 1e-12);
    }
}

#[test]
fn rate_fit_reports_expected_exponents() {
    let g = Grid::unit(128);
    let f = VectorField::new(vec![smooth(g)]).unwrap();
    let r = mollify_rates(&f, 0.5, 2.0, &[0, 1, 2], &default_ladder(&g), None).unwrap();
    let expected: Vec<f64> = r.iter().map(|o| o.expected).collect();
    assert_eq!(expected, vec![0.5, -0.5, -1.5]);
    assert!(r.iter().all(|o| o.fit.ladder.len() == default_ladder(&g).len()));
    let _: &RateFit = &r[0].fit;
}
