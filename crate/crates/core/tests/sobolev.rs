use fracsob_core::sobolev::{
    extension_seminorm, gagliardo_seminorm, gagliardo_seminorm_vec, negative_seminorm, HeightLadder,
};
use fracsob_core::{spectral, Grid, Mask, RateFit, ScalarField};
use proptest::prelude::*;
use std::f64::consts::TAU;

/// `[sin 2πx1]` on the unit torus, from the continuum integral
/// `∫ (1 - cos 2πz1) / |z|³ dz` over the fundamental cell (adaptive
/// quadrature, scipy).
const SIN_HALF_TWO: f64 = 5.253611254986311;
/// Same mode at `s = 2/3, p = 3`: `∫ |2 sin πz1|³ (4/3π) / |z|⁴ dz`.
const SIN_TWO_THIRDS_THREE: f64 = 4.798485551660352;

fn sin_mode(g: Grid) -> ScalarField {
    ScalarField::from_fn(g, |x| (TAU * x[0]).sin())
}

fn random_field(grid: Grid, coeffs: &[(i32, i32, f64)]) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        coeffs.iter().map(|&(a, b, c)| c * (TAU * (a as f64 * x[0] + b as f64 * x[1])).sin()).sum()
    })
}

fn modes() -> impl Strategy<Value = Vec<(i32, i32, f64)>> {
    prop::collection::vec((-4i32..=4, -4i32..=4, -1.0f64..1.0), 1..5)
}

#[test]
fn sine_mode_matches_continuum_oracle() {
    let g = Grid::unit(64);
    let f = sin_mode(g);
    let a = gagliardo_seminorm(&f, 0.5, 2.0, None).unwrap();
    let b = gagliardo_seminorm(&f, 2.0 / 3.0, 3.0, None).unwrap();
    assert!((a / SIN_HALF_TWO - 1.0).abs() < 0.02, "{a}");
    assert!((b / SIN_TWO_THIRDS_THREE - 1.0).abs() < 0.02, "{b}");
}

#[test]
fn subsampled_estimate_matches_oracle_and_refinement() {
    let coarse = gagliardo_seminorm(&sin_mode(Grid::unit(128)), 0.5, 2.0, None).unwrap();
    let fine = gagliardo_seminorm(&sin_mode(Grid::unit(256)), 0.5, 2.0, None).unwrap();
    assert!((fine / SIN_HALF_TWO - 1.0).abs() < 0.02, "{fine}");
    assert!((fine / coarse - 1.0).abs() < 0.05);
}

#[test]
fn constants_vanish_and_bad_input_is_refused() {
    let g = Grid::unit(16);
    let c = ScalarField::constant(g, 3.0);
    assert_eq!(gagliardo_seminorm(&c, 0.5, 2.0, None).unwrap(), 0.0);
    assert!(gagliardo_seminorm(&c, 1.0, 2.0, None).is_err());
    assert!(gagliardo_seminorm(&c, 0.5, 0.5, None).is_err());
    let empty = Mask::disk(g, 0.0001);
    let empty = Mask { inside: vec![false; g.len()], ..empty };
    assert!(gagliardo_seminorm(&sin_mode(g), 0.5, 2.0, Some(&empty)).is_err());
}

#[test]
fn negative_seminorm_of_derivative_tracks_the_primitive() {
    let g = Grid::unit(64);
    let f = sin_mode(g);
    let df = spectral::derivative(&f, &[0]);
    let neg = negative_seminorm(&df, 2.0 / 3.0, 3.0).unwrap();
    let direct = gagliardo_seminorm(&f, 2.0 / 3.0, 3.0, None).unwrap();
    // D Δ⁻¹ ∂1 sin = (sin, 0) exactly, so the potential estimate is the
    // seminorm of the primitive.
    assert!((neg.potential / direct - 1.0).abs() < 1e-10);
    assert!(neg.dual <= neg.ratio * neg.potential * (1.0 + 1e-12));
    let zero = negative_seminorm(&ScalarField::zeros(g), 2.0 / 3.0, 3.0).unwrap();
    assert_eq!((zero.dual, zero.potential), (0.0, 0.0));
}

#[test]
fn extension_and_gagliardo_agree_within_band() {
    let g = Grid::unit(32);
    let ladder = HeightLadder::default_for(&g);
    for seed in 0..10 {
        let coeffs: Vec<(i32, i32, f64)> =
            (0..3).map(|j| ((seed + j) % 4 + 1, (2 * seed + j) % 3, 1.0 / (1 + j) as f64)).collect();
        let f = random_field(g, &coeffs);
        let e = extension_seminorm(&f, 0.5, 2.0, &ladder).unwrap();
        let q = gagliardo_seminorm(&f, 0.5, 2.0, None).unwrap();
        let r = e / q;
        assert!((1.0 / 20.0..=20.0).contains(&r), "ratio {r}");
    }
}

#[test]
fn rate_fits_of_power_laws() {
    let eps = [0.1, 0.05, 0.025, 0.0125];
    let lin = RateFit::fit(&eps.iter().map(|&e| (e, e)).collect::<Vec<_>>()).unwrap();
    assert!((lin.slope - 1.0).abs() < 1e-12 && (lin.r2 - 1.0).abs() < 1e-12);
    let quad = RateFit::fit(&eps.iter().map(|&e| (e, 3.0 * e * e)).collect::<Vec<_>>()).unwrap();
    assert!((quad.slope - 2.0).abs() < 1e-12);
    assert!((quad.intercept - 3f64.ln()).abs() < 1e-12);
    assert!(RateFit::fit(&[(0.1, 1.0), (0.05, 0.5), (0.02, 0.1)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn seminorm_axioms(a in modes(), b in modes(), t in -3.0f64..3.0) {
        let g = Grid::unit(16);
        let (f, h) = (random_field(g, &a), random_field(g, &b));
        let (s, p) = (0.6, 2.5);
        let nf = gagliardo_seminorm(&f, s, p, None).unwrap();
        let nh = gagliardo_seminorm(&h, s, p, None).unwrap();
        let scaled = gagliardo_seminorm(&f.scale(t), s, p, None).unwrap();
        prop_assert!((scaled - t.abs() * nf).abs() <= 1e-10 * (1.0 + nf));
        let sum = gagliardo_seminorm(&f.add(&h).unwrap(), s, p, None).unwrap();
        prop_assert!(sum <= nf + nh + 1e-10);
        let shifted = gagliardo_seminorm(&f.map(|v| v + t), s, p, None).unwrap();
        prop_assert!((shifted - nf).abs() <= 1e-10 * (1.0 + nf));
    }

    #[test]
    fn vector_seminorm_dominates_components(a in modes(), b in modes()) {
        let g = Grid::unit(16);
        let (f, h) = (random_field(g, &a), random_field(g, &b));
        let v = gagliardo_seminorm_vec(&[&f, &h], 0.5, 2.0, None).unwrap();
        let nf = gagliardo_seminorm(&f, 0.5, 2.0, None).unwrap();
        let nh = gagliardo_seminorm(&h, 0.5, 2.0, None).unwrap();
        prop_assert!((v * v - nf * nf - nh * nh).abs() < 1e-9 * (1.0 + v * v));
    }
}
