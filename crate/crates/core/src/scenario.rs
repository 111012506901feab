//! Test maps on the periodic cell.
//!
//! Radial constructions are centred on the cell centre and cut off smoothly
//! between `0.40 L` and `0.48 L`, so every mollification at scales up to `L/8`
//! sees the unmodified map inside the interior disk of radius `0.27 L`.
//! Non-periodic maps (the identity, the cylinder's axial coordinate) carry
//! their linear part as drift.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use std::sync::Arc;

use crate::field::{Grid, Mask, ScalarField, VectorField};
use crate::geometry::Immersion;
use crate::spectral;

pub const CUTOFF_START: f64 = 0.40;
pub const CUTOFF_WIDTH: f64 = 0.08;
/// Radius (in units of L) of the disk on which radial scenarios are exact.
pub const INTERIOR_RADIUS: f64 = 0.27;
/// Radius of the excluded apex neighbourhood in grid spacings.
pub const APEX_CELLS: f64 = 4.0;

fn e(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn de(t: f64) -> f64 {
    if t > 0.0 {
        e(t) / (t * t)
    } else {
        0.0
    }
}

/// C^∞ step from 0 (t ≤ 0) to 1 (t ≥ 1) and its derivative.
pub fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (e(t), e(1.0 - t));
    let d = a + b;
    (a / d, (de(t) * b + a * de(1.0 - t)) / (d * d))
}

/// Radial cutoff `χ(r)` and `χ'(r)` for a cell of side `length`.
pub fn cutoff(r: f64, length: f64) -> (f64, f64) {
    let w = CUTOFF_WIDTH * length;
    let (s, ds) = smoothstep((r - CUTOFF_START * length) / w);
    (1.0 - s, -ds / w)
}

/// Interior disk where radial scenarios are unaffected by the cutoff.
pub fn interior_disk(grid: Grid) -> Mask {
    Mask::disk(grid, INTERIOR_RADIUS * grid.length)
}

/// Interior disk with the apex neighbourhood `r < 4h` removed.
pub fn apex_free_disk(grid: Grid, r_max: f64) -> Mask {
    Mask::annulus(grid, APEX_CELLS * grid.h() * (1.0 - 1e-12), r_max)
}

/// Centre square `[L/4, 3L/4]²` used for periodic scenarios.
pub fn center_square(grid: Grid) -> Mask {
    Mask::square(grid, 0.25 * grid.length)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Plane,
    Cylinder,
    Cone,
    Ruled,
    Rank1Map,
    PerturbedIdentity,
    Hilbert,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Plane,
        Scenario::Cylinder,
        Scenario::Cone,
        Scenario::Ruled,
        Scenario::Rank1Map,
        Scenario::PerturbedIdentity,
        Scenario::Hilbert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Plane => "plane",
            Scenario::Cylinder => "cylinder",
            Scenario::Cone => "cone",
            Scenario::Ruled => "ruled",
            Scenario::Rank1Map => "rank1-map",
            Scenario::PerturbedIdentity => "perturbed-identity",
            Scenario::Hilbert => "hilbert",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|s| s.name()).collect()
    }

    /// Whether the scenario is an isometric immersion into R³.
    pub fn is_immersion(self) -> bool {
        matches!(self, Scenario::Plane | Scenario::Cylinder | Scenario::Cone | Scenario::Ruled)
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario {s:?}; known: {}", Self::names().join(", "))))
    }
}

fn field_from_window(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
    ScalarField::from_window_fn(grid, f)
}

/// The identity map `x - c` as a pair of drift fields.
pub fn identity_map(grid: Grid) -> VectorField {
    let comps = vec![ScalarField::linear(grid, [1.0, 0.0]), ScalarField::linear(grid, [0.0, 1.0])];
    let jac = vec![
        ScalarField::constant(grid, 1.0),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::constant(grid, 1.0),
    ];
    VectorField::new(comps).and_then(|v| v.with_jacobian(jac)).expect("consistent grids")
}

/// Flat plane `(x1, x2, 0)`.
pub fn plane(grid: Grid) -> VectorField {
    let mut comps = identity_map(grid).comps;
    comps.push(ScalarField::zeros(grid));
    let jac = vec![
        ScalarField::constant(grid, 1.0),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::constant(grid, 1.0),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
    ];
    VectorField::new(comps).and_then(|v| v.with_jacobian(jac)).expect("consistent grids")
}

/// Cylinder of radius `L/2π`, wrapped once around the `x1` period.
pub fn cylinder(grid: Grid) -> VectorField {
    let l = grid.length;
    let r = l / TAU;
    let k = TAU / l;
    let comps = vec![
        ScalarField::from_fn(grid, |x| r * (k * x[0]).cos()),
        ScalarField::from_fn(grid, |x| r * (k * x[0]).sin()),
        ScalarField::linear(grid, [0.0, 1.0]),
    ];
    let jac = vec![
        ScalarField::from_fn(grid, |x| -(k * x[0]).sin()),
        ScalarField::zeros(grid),
        ScalarField::from_fn(grid, |x| (k * x[0]).cos()),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::constant(grid, 1.0),
    ];
    VectorField::new(comps).and_then(|v| v.with_jacobian(jac)).expect("consistent grids")
}

fn cone_profile(theta: f64) -> ([f64; 3], [f64; 3]) {
    let s3 = 3f64.sqrt() / 2.0;
    (
        [0.5 * (2.0 * theta).cos(), 0.5 * (2.0 * theta).sin(), s3],
        [-(2.0 * theta).sin(), (2.0 * theta).cos(), 0.0],
    )
}

/// `∂_i u^m` of the cone at window coordinates `w`, at index `2 m + i`.
pub fn cone_gradient_at(w: [f64; 2], length: f64) -> [f64; 6] {
    let r = w[0].hypot(w[1]);
    let theta = if r > 0.0 { w[1].atan2(w[0]) } else { 0.0 };
    let (chi, dchi) = cutoff(r, length);
    let (g, dg) = cone_profile(theta);
    let (er, et) = ([theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]);
    let mut out = [0.0; 6];
    for m in 0..3 {
        for i in 0..2 {
            out[2 * m + i] = chi * (g[m] * er[i] + dg[m] * et[i]) + dchi * r * g[m] * er[i];
        }
    }
    out
}

/// Unit normal of the cone, `(-√3/2 cos 2θ, -√3/2 sin 2θ, 1/2)`, damped by
/// the cutoff. Homogeneous of degree zero, hence bounded but discontinuous at
/// the apex.
pub fn cone_normal(grid: Grid) -> [ScalarField; 3] {
    let l = grid.length;
    let s3 = 3f64.sqrt() / 2.0;
    let at = |w: [f64; 2]| {
        let r = w[0].hypot(w[1]);
        let theta = if r > 0.0 { w[1].atan2(w[0]) } else { 0.0 };
        (cutoff(r, l).0, theta)
    };
    [
        ScalarField::from_window_fn(grid, |w| {
            let (c, t) = at(w);
            -c * s3 * (2.0 * t).cos()
        }),
        ScalarField::from_window_fn(grid, |w| {
            let (c, t) = at(w);
            -c * s3 * (2.0 * t).sin()
        }),
        ScalarField::from_window_fn(grid, |w| 0.5 * at(w).0),
    ]
}

/// Cone `u = χ(r) r (cos 2θ / 2, sin 2θ / 2, √3/2)` with apex at the cell
/// centre. It is an isometry away from the apex and the cutoff annulus.
/// The attached gradient takes the one-sided limit along `+x1` at the apex.
pub fn cone(grid: Grid) -> VectorField {
    let l = grid.length;
    let mut comps = vec![ScalarField::zeros(grid); 3];
    let mut jac = vec![ScalarField::zeros(grid); 6];
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            let k = grid.idx(i1, i2);
            let w = grid.window_coords(i1, i2);
            let r = w[0].hypot(w[1]);
            let theta = if r > 0.0 { w[1].atan2(w[0]) } else { 0.0 };
            let chi = cutoff(r, l).0;
            let g = cone_profile(theta).0;
            let d = cone_gradient_at(w, l);
            for m in 0..3 {
                comps[m].values[k] = chi * r * g[m];
                for i in 0..2 {
                    jac[2 * m + i].values[k] = d[2 * m + i];
                }
            }
        }
    }
    VectorField::new(comps).and_then(|v| v.with_jacobian(jac)).expect("consistent grids")
}

/// Gradient of the cone's height, `(√3/2) χ(r) x/|x|`, with the apex value
/// `(√3/2, 0)`. It lies in `W^{s,p}` exactly when `sp < 2`.
pub fn cone_gradient(grid: Grid) -> VectorField {
    let l = grid.length;
    let s3 = 3f64.sqrt() / 2.0;
    let comp = |i: usize| {
        field_from_window(grid, move |w| {
            let r = w[0].hypot(w[1]);
            if r == 0.0 {
                return if i == 0 { s3 } else { 0.0 };
            }
            s3 * cutoff(r, l).0 * w[i] / r
        })
    };
    VectorField::new(vec![comp(0), comp(1)]).expect("consistent grids")
}

/// `χ(r) r^a`, a radial power localised by the cutoff.
pub fn radial_power(grid: Grid, a: f64) -> ScalarField {
    let l = grid.length;
    field_from_window(grid, |w| {
        let r = w[0].hypot(w[1]);
        cutoff(r, l).0 * r.powf(a)
    })
}

/// Turning angle of the ruled scenario's directrix and its derivative.
fn ruled_angle(x1: f64, l: f64) -> (f64, f64) {
    let k = TAU / l;
    (k * x1 + 0.5 * (k * x1).sin(), k * (1.0 + 0.5 * (k * x1).cos()))
}

/// Generalised cylinder `(γ(x1), x2)` over a unit-speed planar curve whose
/// curvature `θ'(x1)` varies along the period. Rulings run along `x2`.
pub fn ruled(grid: Grid) -> VectorField {
    let l = grid.length;
    // antiderivative of the periodic part of γ' by spectral integration on an
    // oversampled line, then the mean slope as drift
    let n = grid.n1.max(2048);
    let step = n / grid.n1;
    let h = l / n as f64;
    let mut out = Vec::new();
    let mut drift = [0.0; 2];
    for c in 0..2 {
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let th = ruled_angle(i as f64 * h, l).0;
                if c == 0 {
                    th.cos()
                } else {
                    th.sin()
                }
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        drift[c] = mean;
        let mut spec: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
        let mut planner = rustfft::FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut spec);
        for (i, s) in spec.iter_mut().enumerate() {
            let xi = spectral::wavenumber(i, n, l);
            *s = if i == 0 || 2 * i == n { Complex64::new(0.0, 0.0) } else { *s / Complex64::new(0.0, xi) };
        }
        planner.plan_fft_inverse(n).process(&mut spec);
        out.push(spec.iter().map(|z| z.re / n as f64).collect::<Vec<f64>>());
    }
    let mut comps = Vec::new();
    for c in 0..2 {
        let per: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (i1, _) = grid.unidx(k);
                out[c][i1 * step]
            })
            .collect();
        comps.push(ScalarField::with_drift(grid, per, [drift[c], 0.0]).expect("sized"));
    }
    comps.push(ScalarField::linear(grid, [0.0, 1.0]));
    let jac = vec![
        ScalarField::from_fn(grid, |x| ruled_angle(x[0], l).0.cos()),
        ScalarField::zeros(grid),
        ScalarField::from_fn(grid, |x| ruled_angle(x[0], l).0.sin()),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::constant(grid, 1.0),
    ];
    VectorField::new(comps).and_then(|v| v.with_jacobian(jac)).expect("consistent grids")
}

/// Curvature `θ'(x1)` of the ruled scenario's directrix.
pub fn ruled_curvature(x1: f64, length: f64) -> f64 {
    ruled_angle(x1, length).1
}

/// Amplitude of the rank-one map.
pub const RANK1_AMPLITUDE: f64 = 0.25;

/// Rank-one gradient map `(w'(x1), 0)` with `w' = a sin(2π(x1 - c)/L)`,
/// increasing on the centre square.
pub fn rank1_map(grid: Grid) -> VectorField {
    let l = grid.length;
    let k = TAU / l;
    let a = RANK1_AMPLITUDE;
    let comps = vec![field_from_window(grid, |w| a * (k * w[0]).sin()), ScalarField::zeros(grid)];
    let jac = vec![
        field_from_window(grid, |w| a * k * (k * w[0]).cos()),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
    ];
    VectorField::new(comps).and_then(|v| v.with_jacobian(jac)).expect("consistent grids")
}

/// Identity plus a band-limited periodic perturbation of size `amp`;
/// orientation preserving for `amp < 0.4`.
pub fn perturbed_identity(grid: Grid, amp: f64) -> VectorField {
    let l = grid.length;
    let k = TAU / l;
    let mut f1 = ScalarField::from_fn(grid, |x| amp * (k * x[0]).sin() * (k * x[1]).cos() / k);
    let mut f2 = ScalarField::from_fn(grid, |x| amp * (k * x[1]).sin() * (2.0 * k * x[0]).cos() / k);
    f1.add_drift([1.0, 0.0]);
    f2.add_drift([0.0, 1.0]);
    let jac = vec![
        ScalarField::from_fn(grid, |x| 1.0 + amp * (k * x[0]).cos() * (k * x[1]).cos()),
        ScalarField::from_fn(grid, |x| -amp * (k * x[0]).sin() * (k * x[1]).sin()),
        ScalarField::from_fn(grid, |x| -2.0 * amp * (k * x[1]).sin() * (2.0 * k * x[0]).sin()),
        ScalarField::from_fn(grid, |x| 1.0 + amp * (k * x[1]).cos() * (2.0 * k * x[0]).cos()),
    ];
    VectorField::new(vec![f1, f2]).and_then(|v| v.with_jacobian(jac)).expect("consistent grids")
}

/// Default perturbation size for the perturbed identity.
pub const PERTURBATION: f64 = 0.2;

/// Area enclosed by the image of the cone gradient near the apex: the circle
/// of radius √3/2 traversed once.
pub const CONE_ATOM: f64 = 0.75 * PI;

/// Radius (in units of L) of the cone's analysis annulus.
pub const CONE_ANALYSIS_RADIUS: f64 = 0.22;

/// Cone immersion on the annulus `4h <= r <= 0.22 L`.
pub fn cone_immersion(grid: Grid) -> Immersion {
    let l = grid.length;
    let mask = apex_free_disk(grid, CONE_ANALYSIS_RADIUS * l);
    Immersion::new(cone(grid), mask)
        .expect("cone is valid")
        .with_analytic_gradient(Arc::new(move |w| cone_gradient_at(w, l).to_vec()))
}

pub fn plane_immersion(grid: Grid) -> Immersion {
    Immersion::new(plane(grid), center_square(grid))
        .expect("plane is valid")
        .with_analytic_gradient(Arc::new(|_| vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]))
}

pub fn cylinder_immersion(grid: Grid) -> Immersion {
    let l = grid.length;
    let k = TAU / l;
    let c = grid.center()[0];
    Immersion::new(cylinder(grid), center_square(grid))
        .expect("cylinder is valid")
        .with_analytic_gradient(Arc::new(move |w| {
            let x1 = w[0] + c;
            vec![-(k * x1).sin(), 0.0, (k * x1).cos(), 0.0, 0.0, 1.0]
        }))
}

pub fn ruled_immersion(grid: Grid) -> Immersion {
    let l = grid.length;
    let c = grid.center()[0];
    Immersion::new(ruled(grid), center_square(grid))
        .expect("ruled map is valid")
        .with_analytic_gradient(Arc::new(move |w| {
            let th = ruled_angle(w[0] + c, l).0;
            vec![th.cos(), 0.0, th.sin(), 0.0, 0.0, 1.0]
        }))
}

/// The immersion scenarios by name.
pub fn immersion(s: Scenario, grid: Grid) -> Result<Immersion> {
    match s {
        Scenario::Plane => Ok(plane_immersion(grid)),
        Scenario::Cylinder => Ok(cylinder_immersion(grid)),
        Scenario::Cone => Ok(cone_immersion(grid)),
        Scenario::Ruled => Ok(ruled_immersion(grid)),
        other => Err(Error::InvalidParameter(format!("{} is not an immersion scenario", other.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_is_a_smooth_step() {
        assert_eq!(smoothstep(-0.1).0, 0.0);
        assert_eq!(smoothstep(1.1).0, 1.0);
        assert!((smoothstep(0.5).0 - 0.5).abs() < 1e-15);
        let t = 0.3;
        let h = 1e-6;
        let fd = (smoothstep(t + h).0 - smoothstep(t - h).0) / (2.0 * h);
        assert!((fd - smoothstep(t).1).abs() < 1e-7);
    }

    #[test]
    fn cone_is_isometric_inside() {
        let g = Grid::unit(64);
        let u = cone(g);
        let j = u.jacobian.as_ref().unwrap();
        let disk = interior_disk(g);
        for k in disk.nodes() {
            let d = |i: usize, l: usize| (0..3).map(|m| j[2 * m + i].values[k] * j[2 * m + l].values[k]).sum::<f64>();
            assert!((d(0, 0) - 1.0).abs() < 1e-12);
            assert!(d(0, 1).abs() < 1e-12);
            assert!((d(1, 1) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ruled_gradient_matches_samples() {
        let g = Grid::unit(128);
        let u = ruled(g);
        let jac = u.jacobian.as_ref().unwrap();
        for c in 0..2 {
            let d = spectral::derivative(&u.comps[c], &[0]);
            let err = d.values.iter().zip(&jac[2 * c].values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "component {c}: {err}");
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("sphere".parse::<Scenario>().is_err());
    }
}
