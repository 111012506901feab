use approx::assert_abs_diff_eq;
use fracsob_core::spectral::{self, Scheme};
use fracsob_core::{Grid, Mask, ScalarField, VectorField};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn random_field(grid: Grid, coeffs: &[(i32, i32, f64, f64)]) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        coeffs.iter().map(|&(a, b, c, t)| c * (TAU * (a as f64 * x[0] + b as f64 * x[1]) + t).cos()).sum()
    })
}

fn modes() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    prop::collection::vec((-6i32..=6, -6i32..=6, -1.0f64..1.0, 0.0f64..TAU), 1..6)
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.sub(b).unwrap().max_abs()
}

#[test]
fn sampling_constant_and_linear() {
    let g = Grid::unit(8);
    let one = ScalarField::from_fn(g, |_| 1.0);
    assert!(one.values.iter().all(|&v| v == 1.0));
    let x = ScalarField::from_fn(g, |x| x[0]);
    let row: Vec<f64> = (0..8).map(|i| x.values[g.idx(i, 3)]).collect();
    assert_eq!(row, vec![0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875]);
}

#[test]
fn cone_height_is_radial_with_minimum_at_centre() {
    let g = Grid::unit(64);
    let c = g.center();
    let u = ScalarField::from_fn(g, |x| 0.75f64.sqrt() * (x[0] - c[0]).hypot(x[1] - c[1]));
    let (i1, i2) = g.center_node();
    let min = u.values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(u.values[g.idx(i1, i2)], min);
    assert_abs_diff_eq!(u.values[g.idx(i1 + 5, i2)], u.values[g.idx(i1, i2 + 5)], epsilon = 1e-15);
}

#[test]
fn lp_norms_of_simple_fields() {
    let g = Grid::unit(256);
    assert_eq!(ScalarField::zeros(g).lp_norm(2.0, None), 0.0);
    assert_abs_diff_eq!(ScalarField::constant(g, -3.0).lp_norm(1.5, None), 3.0, epsilon = 1e-10);
    let s = ScalarField::from_fn(g, |x| (TAU * x[0]).sin());
    assert_abs_diff_eq!(s.lp_norm(2.0, None), 0.5f64.sqrt(), epsilon = 1e-10);
}

#[test]
fn lp_norm_grows_with_region() {
    let g = Grid::unit(64);
    let f = ScalarField::from_fn(g, |x| (TAU * x[0]).sin() + x[1]);
    let small = Mask::disk(g, 0.1);
    let big = Mask::disk(g, 0.3);
    assert!(f.lp_norm(3.0, Some(&small)) <= f.lp_norm(3.0, Some(&big)));
    assert!(f.lp_norm(3.0, Some(&big)) <= f.lp_norm(3.0, None));
}

#[test]
fn spectral_gradient_of_mode() {
    let g = Grid::unit(64);
    let f = ScalarField::from_fn(g, |x| (TAU * x[0]).sin());
    let d = spectral::gradient(&f, Scheme::Spectral);
    let want = ScalarField::from_fn(g, |x| TAU * (TAU * x[0]).cos());
    assert!(max_diff(&d.comps[0], &want) < 1e-10);
    assert!(d.comps[1].max_abs() < 1e-10);
    let c = spectral::gradient(&ScalarField::constant(g, 2.0), Scheme::Spectral);
    assert!(c.comps.iter().all(|v| v.max_abs() < 1e-12));
}

#[test]
fn analytic_cone_gradient_is_radial() {
    let g = Grid::unit(64);
    let f = fracsob_core::scenario::cone_gradient(g);
    let s3 = 0.75f64.sqrt();
    for i1 in 0..64 {
        for i2 in 0..64 {
            let w = g.window_coords(i1, i2);
            let r = w[0].hypot(w[1]);
            if r > 0.0 && r < 0.3 {
                let k = g.idx(i1, i2);
                assert_abs_diff_eq!(f.comps[0].values[k], s3 * w[0] / r, epsilon = 1e-12);
                assert_abs_diff_eq!(f.comps[1].values[k], s3 * w[1] / r, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn inverse_laplacian_of_mode() {
    let g = Grid::unit(64);
    let f = ScalarField::from_fn(g, |x| (TAU * x[0]).sin());
    let u = spectral::inv_laplacian(&f).unwrap();
    let want = f.scale(-1.0 / (4.0 * PI * PI));
    assert!(max_diff(&u, &want) < 1e-12);
    assert!(spectral::inv_laplacian(&ScalarField::zeros(g)).unwrap().max_abs() == 0.0);
}

#[test]
fn riesz_of_mode() {
    let g = Grid::unit(64);
    let f = ScalarField::from_fn(g, |x| (TAU * x[0]).sin());
    let r = spectral::riesz(&f).unwrap();
    let want = ScalarField::from_fn(g, |x| (TAU * x[0]).cos());
    assert!(max_diff(&r.comps[0], &want) < 1e-12);
    assert!(r.comps[1].max_abs() < 1e-12);
}

#[test]
fn poisson_extension_of_mode_and_constant() {
    let g = Grid::unit(64);
    let f = ScalarField::from_fn(g, |x| (TAU * x[0]).sin());
    for t in [0.01, 0.1, 0.3] {
        let e = spectral::poisson_extension(&f, t).unwrap();
        assert!(max_diff(&e, &f.scale((-TAU * t).exp())) < 1e-8);
    }
    let c = ScalarField::constant(g, 1.5);
    assert!(max_diff(&spectral::poisson_extension(&c, 0.2).unwrap(), &c) < 1e-12);
}

#[test]
fn extension_seminorm_vanishes_on_constants() {
    use fracsob_core::sobolev::{extension_seminorm, HeightLadder};
    let g = Grid::unit(32);
    let c = ScalarField::constant(g, 4.0);
    assert_eq!(extension_seminorm(&c, 0.5, 2.0, &HeightLadder::default_for(&g)).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_is_linear(a in modes(), b in modes(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let g = Grid::unit(32);
        let (f, h) = (random_field(g, &a), random_field(g, &b));
        let lhs = spectral::gradient(&f.scale(s).add(&h.scale(t)).unwrap(), Scheme::Spectral);
        for scheme in [Scheme::Spectral, Scheme::Centered] {
            let lhs = if scheme == Scheme::Spectral { lhs.clone() } else {
                spectral::gradient(&f.scale(s).add(&h.scale(t)).unwrap(), scheme)
            };
            let (df, dh) = (spectral::gradient(&f, scheme), spectral::gradient(&h, scheme));
            for i in 0..2 {
                let rhs = df.comps[i].scale(s).add(&dh.comps[i].scale(t)).unwrap();
                prop_assert!(max_diff(&lhs.comps[i], &rhs) < 1e-10);
            }
        }
    }

    #[test]
    fn lp_triangle_inequality(a in modes(), b in modes(), p in 1.0f64..4.0) {
        let g = Grid::unit(32);
        let (f, h) = (random_field(g, &a), random_field(g, &b));
        let sum = f.add(&h).unwrap();
        prop_assert!(sum.lp_norm(p, None) <= f.lp_norm(p, None) + h.lp_norm(p, None) + 1e-12);
    }

    #[test]
    fn spectral_round_trips(a in modes()) {
        let g = Grid::unit(32);
        let mut f = random_field(g, &a);
        let mean = f.mean();
        f.values.iter_mut().for_each(|v| *v -= mean);
        let scale = f.max_abs().max(1e-12);
        let back = spectral::laplacian(&spectral::inv_laplacian(&f).unwrap());
        prop_assert!(max_diff(&back, &f) < 1e-10 * scale);
        let r = spectral::riesz(&f).unwrap();
        let rr: Vec<ScalarField> = (0..2).map(|i| spectral::riesz(&r.comps[i]).unwrap().comps[i].clone()).collect();
        let sum = rr[0].add(&rr[1]).unwrap();
        prop_assert!(max_diff(&sum, &f.scale(-1.0)) < 1e-10 * scale);
        let div = spectral::divergence(&spectral::grad_inv_laplacian(&f).unwrap()).unwrap();
        prop_assert!(max_diff(&div, &f) < 1e-10 * scale);
        let l2 = |v: &VectorField| (v.comps[0].lp_norm(2.0, None).powi(2) + v.comps[1].lp_norm(2.0, None).powi(2)).sqrt();
        prop_assert!((l2(&r) - f.lp_norm(2.0, None)).abs() < 1e-10 * scale);
        let a1 = spectral::riesz(&spectral::inv_laplacian(&f).unwrap()).unwrap();
        let a2 = spectral::inv_laplacian(&r.comps[0]).unwrap();
        prop_assert!(max_diff(&a1.comps[0], &a2) < 1e-10 * scale);
    }

    #[test]
    fn poisson_semigroup_and_maximum_principle(a in modes(), t1 in 0.001f64..0.2, t2 in 0.001f64..0.2) {
        let g = Grid::unit(32);
        let mut f = random_field(g, &a);
        let mean = f.mean();
        f.values.iter_mut().for_each(|v| *v -= mean);
        let both = spectral::poisson_extension(&spectral::poisson_extension(&f, t1).unwrap(), t2).unwrap();
        let once = spectral::poisson_extension(&f, t1 + t2).unwrap();
        prop_assert!(max_diff(&both, &once) < 1e-8);
        prop_assert!(once.max_abs() <= f.max_abs() + 1e-12);
    }
}
