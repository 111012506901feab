//! FFT-based periodic operators.
//!
//! Wavenumbers are `ξ = 2πk/L` in FFT order. First-order multipliers use the
//! derivative wavenumber `κ`, which equals `ξ` except at the Nyquist index
//! where it is zero, so odd derivatives of real fields stay real. The
//! Laplacian and its inverse use the full `|ξ|²`, which makes `Δ Δ⁻¹ f = f`
//! exact for every zero-mean field.

use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::field::{Grid, ScalarField, VectorField};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let (n1, n2) = (grid.n1, grid.n2);
    plan(n2, inverse).process(data);
    let mut t = vec![Complex64::new(0.0, 0.0); n1 * n2];
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            t[i2 * n1 + i1] = data[i1 * n2 + i2];
        }
    }
    plan(n1, inverse).process(&mut t);
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            data[i1 * n2 + i2] = t[i2 * n1 + i1];
        }
    }
}

/// Unnormalised forward transform of real samples.
pub fn fft2(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(grid, &mut data, false);
    data
}

/// Inverse transform (with the `1/N` factor), keeping the real part.
pub fn ifft2_real(grid: &Grid, mut spec: Vec<Complex64>) -> Vec<f64> {
    transform(grid, &mut spec, true);
    let s = 1.0 / grid.len() as f64;
    spec.into_iter().map(|c| c.re * s).collect()
}

/// Full wavenumber of FFT index `i`; the Nyquist index maps to `-π n / L`.
#[inline]
pub fn wavenumber(i: usize, n: usize, length: f64) -> f64 {
    2.0 * std::f64::consts::PI * Grid::signed(i, n) as f64 / length
}

/// Wavenumber used by odd-order derivatives: zero at Nyquist.
#[inline]
pub fn deriv_wavenumber(i: usize, n: usize, length: f64) -> f64 {
    if i == n / 2 {
        0.0
    } else {
        wavenumber(i, n, length)
    }
}

/// Frequency data handed to multiplier closures.
#[derive(Debug, Clone, Copy)]
pub struct Freq {
    pub xi: [f64; 2],
    pub kappa: [f64; 2],
}

impl Freq {
    pub fn xi2(&self) -> f64 {
        self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1]
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa[0] * self.kappa[0] + self.kappa[1] * self.kappa[1]
    }

    /// Multiplier of `∂^α` for a multi-index given as a list of axes. Axes
    /// differentiated an odd number of times use `κ` to keep real fields real.
    pub fn derivative(&self, alpha: &[usize]) -> Complex64 {
        let mut m = Complex64::new(1.0, 0.0);
        for axis in 0..2 {
            let count = alpha.iter().filter(|&&a| a == axis).count();
            let k = if count % 2 == 0 { self.xi[axis] } else { self.kappa[axis] };
            for _ in 0..count {
                m *= Complex64::new(0.0, k);
            }
        }
        m
    }
}

pub fn freq(grid: &Grid, k: usize) -> Freq {
    let (i1, i2) = grid.unidx(k);
    Freq {
        xi: [wavenumber(i1, grid.n1, grid.length), wavenumber(i2, grid.n2, grid.length)],
        kappa: [deriv_wavenumber(i1, grid.n1, grid.length), deriv_wavenumber(i2, grid.n2, grid.length)],
    }
}

/// Spectrum of the periodic part of a field, computed once and reused for
/// several multipliers.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub grid: Grid,
    pub coeffs: Vec<Complex64>,
    pub drift: [f64; 2],
}

impl Spectrum {
    pub fn of(f: &ScalarField) -> Self {
        Spectrum { grid: f.grid, coeffs: fft2(&f.grid, &f.periodic_part()), drift: f.drift }
    }

    /// Applies a multiplier to the periodic part only.
    pub fn apply(&self, m: impl Fn(Freq) -> Complex64) -> Vec<f64> {
        let g = self.grid;
        let spec: Vec<Complex64> = self.coeffs.iter().enumerate().map(|(k, c)| c * m(freq(&g, k))).collect();
        ifft2_real(&g, spec)
    }

    /// Spectral derivative `∂^α f`, including the linear part.
    pub fn derivative(&self, alpha: &[usize]) -> ScalarField {
        let mut values = self.apply(|q| q.derivative(alpha));
        let g = self.grid;
        match alpha.len() {
            0 => {
                let mut f = ScalarField { grid: g, values, drift: [0.0; 2] };
                f.add_drift(self.drift);
                return f;
            }
            1 => {
                let d = self.drift[alpha[0]];
                values.iter_mut().for_each(|v| *v += d);
            }
            _ => {}
        }
        ScalarField { grid: g, values, drift: [0.0; 2] }
    }
}

/// Derivative scheme for scalar gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Spectral,
    /// Second-order centred differences; exact on linear fields.
    Centered,
}

pub fn gradient(f: &ScalarField, scheme: Scheme) -> VectorField {
    let comps = match scheme {
        Scheme::Spectral => {
            let s = Spectrum::of(f);
            vec![s.derivative(&[0]), s.derivative(&[1])]
        }
        Scheme::Centered => {
            let g = f.grid;
            let mut d = vec![ScalarField::zeros(g), ScalarField::zeros(g)];
            for i1 in 0..g.n1 {
                for i2 in 0..g.n2 {
                    let k = g.idx(i1, i2);
                    d[0].values[k] =
                        (f.value_unwrapped(i1, i2, 1, 0) - f.value_unwrapped(i1, i2, -1, 0)) / (2.0 * g.h1());
                    d[1].values[k] =
                        (f.value_unwrapped(i1, i2, 0, 1) - f.value_unwrapped(i1, i2, 0, -1)) / (2.0 * g.h2());
                }
            }
            d
        }
    };
    VectorField { grid: f.grid, comps, jacobian: None }
}

/// Spectral derivative of arbitrary order.
pub fn derivative(f: &ScalarField, alpha: &[usize]) -> ScalarField {
    Spectrum::of(f).derivative(alpha)
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    v.require_dim(2)?;
    let a = derivative(&v.comps[0], &[0]);
    let b = derivative(&v.comps[1], &[1]);
    a.add(&b)
}

/// Two-dimensional curl `∂1 v2 - ∂2 v1`.
pub fn curl(v: &VectorField) -> Result<ScalarField> {
    v.require_dim(2)?;
    let a = derivative(&v.comps[1], &[0]);
    let b = derivative(&v.comps[0], &[1]);
    a.sub(&b)
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let values = Spectrum::of(f).apply(|q| Complex64::new(-q.xi2(), 0.0));
    ScalarField { grid: f.grid, values, drift: [0.0; 2] }
}

/// `Δ⁻¹` with multiplier `-1/|ξ|²`; the mean is discarded.
pub fn inv_laplacian(f: &ScalarField) -> Result<ScalarField> {
    f.require_periodic()?;
    let values = Spectrum::of(f).apply(inv_lap_multiplier);
    Ok(ScalarField { grid: f.grid, values, drift: [0.0; 2] })
}

fn inv_lap_multiplier(q: Freq) -> Complex64 {
    let x2 = q.xi2();
    if x2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(-1.0 / x2, 0.0)
    }
}

/// `D Δ⁻¹ f`, the potential used for negative-order seminorms.
pub fn grad_inv_laplacian(f: &ScalarField) -> Result<VectorField> {
    f.require_periodic()?;
    let s = Spectrum::of(f);
    let comps = (0..2)
        .map(|i| {
            let values = s.apply(|q| Complex64::new(0.0, q.kappa[i]) * inv_lap_multiplier(q));
            ScalarField { grid: f.grid, values, drift: [0.0; 2] }
        })
        .collect();
    Ok(VectorField { grid: f.grid, comps, jacobian: None })
}

/// Riesz transform with multiplier `iκ/|κ|`.
pub fn riesz(f: &ScalarField) -> Result<VectorField> {
    f.require_periodic()?;
    let s = Spectrum::of(f);
    let comps = (0..2)
        .map(|i| {
            let values = s.apply(|q| {
                let k = q.kappa2().sqrt();
                if k == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, q.kappa[i] / k)
                }
            });
            ScalarField { grid: f.grid, values, drift: [0.0; 2] }
        })
        .collect();
    Ok(VectorField { grid: f.grid, comps, jacobian: None })
}

/// Poisson extension `f^h(·, t)` with multiplier `e^{-t|ξ|}`.
pub fn poisson_extension(f: &ScalarField, t: f64) -> Result<ScalarField> {
    f.require_periodic()?;
    if t < 0.0 {
        return Err(crate::Error::InvalidParameter(format!("height {t} must be non-negative")));
    }
    let values = Spectrum::of(f).apply(|q| Complex64::new((-t * q.xi2().sqrt()).exp(), 0.0));
    Ok(ScalarField { grid: f.grid, values, drift: [0.0; 2] })
}

/// Value, horizontal gradient and `∂_t` of the Poisson extension at height `t`.
pub fn poisson_jet(s: &Spectrum, t: f64) -> [Vec<f64>; 4] {
    let damp = |q: Freq| (-t * q.xi2().sqrt()).exp();
    [
        s.apply(|q| Complex64::new(damp(q), 0.0)),
        s.apply(|q| Complex64::new(0.0, q.kappa[0] * damp(q))),
        s.apply(|q| Complex64::new(0.0, q.kappa[1] * damp(q))),
        s.apply(|q| Complex64::new(-q.xi2().sqrt() * damp(q), 0.0)),
    ]
}

/// Circular convolution `Σ_y f(y) k(x - y) h²` where `k` is given by its
/// unnormalised spectrum.
pub fn convolve_spectrum(s: &Spectrum, kernel: &[Complex64]) -> Vec<f64> {
    let g = s.grid;
    let spec: Vec<Complex64> = s.coeffs.iter().zip(kernel).map(|(a, b)| a * b).collect();
    ifft2_real(&g, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_of_single_mode() {
        let g = Grid::unit(32);
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * (3.0 * x[0] + x[1])).sin());
        let d = gradient(&f, Scheme::Spectral);
        for i1 in 0..g.n1 {
            for i2 in 0..g.n2 {
                let x = g.coords(i1, i2);
                let e = 2.0 * PI * 3.0 * (2.0 * PI * (3.0 * x[0] + x[1])).cos();
                assert!((d.comps[0].values[g.idx(i1, i2)] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn drift_survives_differentiation() {
        let g = Grid::unit(16);
        let f = ScalarField::linear(g, [2.0, -3.0]);
        let d = gradient(&f, Scheme::Spectral);
        assert!(d.comps[0].values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(d.comps[1].values.iter().all(|v| (v + 3.0).abs() < 1e-12));
        let c = gradient(&f, Scheme::Centered);
        assert!(c.comps[1].values.iter().all(|v| (v + 3.0).abs() < 1e-12));
    }

    #[test]
    fn extension_damps_modes() {
        let g = Grid::unit(16);
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[1]).cos());
        let e = poisson_extension(&f, 0.1).unwrap();
        let ratio = e.values[0] / f.values[0];
        assert!((ratio - (-2.0 * PI * 0.1f64).exp()).abs() < 1e-12);
    }
}
