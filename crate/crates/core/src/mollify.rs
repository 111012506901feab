//! Mollification by the standard bump `exp(-1/(1-|x|²))`.
//!
//! The kernel is integrated against the bilinear hat of each cell on a fine
//! sub-lattice, so that `f_ε(x) = Σ_y f(y) W_ε(x - y)` is the exact
//! mollification of the bilinear interpolant of the samples. Derivative
//! kernels are derivatives of the same function `W_ε`, which makes identities
//! between derivatives of `f_ε` hold to rounding, and the hat reproduces
//! linear fields exactly. Weights are renormalised to unit discrete mass.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{lp_norm_of, Grid, Mask, ScalarField, VectorField};
use crate::rate::{check_ladder, RateFit};
use crate::spectral::{self, Spectrum};

/// Multi-indices up to order three, ordered by order and then by the number
/// of axis-2 derivatives.
pub const DERIVS: [&[usize]; 10] =
    [&[], &[0], &[1], &[0, 0], &[0, 1], &[1, 1], &[0, 0, 0], &[0, 0, 1], &[0, 1, 1], &[1, 1, 1]];

/// Position of a (symmetric) multi-index in [`DERIVS`].
pub fn deriv_index(alpha: &[usize]) -> usize {
    let ones = alpha.iter().filter(|&&a| a == 1).count();
    [0, 1, 3, 6][alpha.len()] + ones
}

/// Default scales `L/8, …, L/128`, dropping any below `2h`.
pub fn default_ladder(grid: &Grid) -> Vec<f64> {
    (3..=7)
        .map(|k| grid.length / (1u64 << k) as f64)
        .filter(|&e| e >= 2.0 * grid.h() * (1.0 - 1e-12))
        .collect()
}

/// The bump and its derivatives up to order three at `z`, in [`DERIVS`] order.
pub fn bump_jets(z: [f64; 2]) -> [f64; 10] {
    let rho = z[0] * z[0] + z[1] * z[1];
    if rho >= 1.0 {
        return [0.0; 10];
    }
    let w = 1.0 / (1.0 - rho);
    let phi = (-w).exp();
    if phi == 0.0 {
        return [0.0; 10];
    }
    let q1 = -w * w;
    let q2 = -2.0 * w * w * w;
    let q3 = -6.0 * w * w * w * w;
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let a = |i: usize| 2.0 * q1 * z[i];
    let b = |i: usize, j: usize| 4.0 * q2 * z[i] * z[j] + 2.0 * q1 * d(i, j);
    let c = |i: usize, j: usize, k: usize| {
        8.0 * q3 * z[i] * z[j] * z[k] + 4.0 * q2 * (d(i, k) * z[j] + d(j, k) * z[i] + d(i, j) * z[k])
    };
    let mut out = [0.0; 10];
    for (n, alpha) in DERIVS.iter().enumerate() {
        out[n] = phi
            * match alpha.len() {
                0 => 1.0,
                1 => a(alpha[0]),
                2 => {
                    let (i, j) = (alpha[0], alpha[1]);
                    a(i) * a(j) + b(i, j)
                }
                _ => {
                    let (i, j, k) = (alpha[0], alpha[1], alpha[2]);
                    a(i) * a(j) * a(k) + a(i) * b(j, k) + a(j) * b(i, k) + a(k) * b(i, j) + c(i, j, k)
                }
            };
    }
    out
}

/// Subdivisions per cell of the fine lattice on which the bump is sampled
/// before hat integration; the fine spacing stays below `ε/256`.
fn subdivisions(eps: f64, h: f64) -> usize {
    ((256.0 * h / eps).ceil() as usize).max(4).next_power_of_two()
}

/// Hat weights `Λ(j/S)/S`, `j = -S..=S`, summing to one.
fn hat_weights(s: usize) -> Vec<f64> {
    (0..=2 * s).map(|j| (1.0 - (j as f64 - s as f64).abs() / s as f64) / s as f64).collect()
}

/// Mollifier at one scale, holding the spectra of all derivative kernels.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub grid: Grid,
    pub eps: f64,
    kernels: Vec<Vec<Complex64>>,
    stencil: Vec<(isize, isize, f64)>,
}

impl Mollifier {
    pub fn new(grid: Grid, eps: f64) -> Result<Self> {
        let two_h = 2.0 * grid.h();
        if eps < two_h * (1.0 - 1e-12) {
            return Err(Error::UnderResolved { eps, two_h });
        }
        if eps >= grid.length / 4.0 {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be below L/4")));
        }
        let (h1, h2) = (grid.h1(), grid.h2());
        let r1 = (eps / h1).ceil() as isize + 1;
        let r2 = (eps / h2).ceil() as isize + 1;
        let sub = subdivisions(eps, h1.min(h2));
        let lam = hat_weights(sub);
        let s = sub as isize;
        // fine lattice covering d - t for |d| <= R cells and |t| <= one cell
        let (m1, m2) = ((r1 + 1) * s, (r2 + 1) * s);
        let (w1, w2) = ((2 * m1 + 1) as usize, (2 * m2 + 1) as usize);
        let fine: Vec<[f64; 10]> = (0..w1 * w2)
            .into_par_iter()
            .map(|q| {
                let (a, b) = ((q / w2) as isize - m1, (q % w2) as isize - m2);
                bump_jets([a as f64 * h1 / (s as f64 * eps), b as f64 * h2 / (s as f64 * eps)])
            })
            .collect();
        let cols = (2 * r2 + 1) as usize;
        // hat integration along axis 2 at the coarse columns
        let partial: Vec<[f64; 10]> = (0..w1 * cols)
            .into_par_iter()
            .map(|q| {
                let (row, c) = (q / cols, q % cols);
                let centre = (c as isize - r2) * s + m2;
                let mut acc = [0.0; 10];
                for (j, l) in lam.iter().enumerate() {
                    let f = &fine[row * w2 + (centre + j as isize - s) as usize];
                    for n in 0..10 {
                        acc[n] += l * f[n];
                    }
                }
                acc
            })
            .collect();
        let offsets: Vec<(isize, isize)> =
            (-r1..=r1).flat_map(|d1| (-r2..=r2).map(move |d2| (d1, d2))).collect();
        let weights: Vec<[f64; 10]> = offsets
            .iter()
            .map(|&(d1, d2)| {
                let centre = d1 * s + m1;
                let c = (d2 + r2) as usize;
                let mut acc = [0.0; 10];
                for (j, l) in lam.iter().enumerate() {
                    let f = &partial[(centre + j as isize - s) as usize * cols + c];
                    for n in 0..10 {
                        acc[n] += l * f[n];
                    }
                }
                for (n, alpha) in DERIVS.iter().enumerate() {
                    acc[n] /= eps.powi(alpha.len() as i32);
                }
                acc
            })
            .collect();
        let mass: f64 = weights.iter().map(|w| w[0]).sum();
        let mut kernels = Vec::with_capacity(10);
        for n in 0..10 {
            let mut k = vec![0.0; grid.len()];
            for (&(d1, d2), w) in offsets.iter().zip(&weights) {
                k[grid.shifted(0, 0, d1, d2)] += w[n] / mass;
            }
            kernels.push(spectral::fft2(&grid, &k));
        }
        let stencil = offsets
            .iter()
            .zip(&weights)
            .filter(|(_, w)| w[0] != 0.0)
            .map(|(&(d1, d2), w)| (d1, d2, w[0] / mass))
            .collect();
        Ok(Mollifier { grid, eps, kernels, stencil })
    }

    /// Real-space weights `(d1, d2, W(d))` of the value kernel.
    pub fn stencil(&self) -> &[(isize, isize, f64)] {
        &self.stencil
    }

    fn apply_spectrum(&self, s: &Spectrum, n: usize) -> ScalarField {
        let values = spectral::convolve_spectrum(s, &self.kernels[n]);
        let mut out = ScalarField { grid: self.grid, values, drift: [0.0; 2] };
        match DERIVS[n].len() {
            0 => out.add_drift(s.drift),
            1 => {
                let d = s.drift[DERIVS[n][0]];
                out.values.iter_mut().for_each(|v| *v += d);
            }
            _ => {}
        }
        out
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.same(&f.grid)?;
        Ok(self.apply_spectrum(&Spectrum::of(f), 0))
    }

    /// `∂^α f_ε` for `|α| <= 3`.
    pub fn derivative(&self, f: &ScalarField, alpha: &[usize]) -> Result<ScalarField> {
        self.grid.same(&f.grid)?;
        if alpha.len() > 3 || alpha.iter().any(|&a| a > 1) {
            return Err(Error::InvalidParameter("derivatives up to order three on two axes".into()));
        }
        Ok(self.apply_spectrum(&Spectrum::of(f), deriv_index(alpha)))
    }

    /// All derivatives of `f_ε` up to `order`, indexed like [`DERIVS`].
    pub fn jets(&self, f: &ScalarField, order: usize) -> Result<Vec<ScalarField>> {
        self.grid.same(&f.grid)?;
        let s = Spectrum::of(f);
        let count = [1, 3, 6, 10][order.min(3)];
        Ok((0..count).map(|n| self.apply_spectrum(&s, n)).collect())
    }
}

pub fn mollify(f: &ScalarField, eps: f64) -> Result<ScalarField> {
    Mollifier::new(f.grid, eps)?.apply(f)
}

/// Rate fit for one derivative order together with the exponent the theory
/// predicts for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRate {
    pub k: usize,
    pub expected: f64,
    pub fit: RateFit,
}

fn order_norms(jets: &[Vec<ScalarField>], orig: &VectorField, k: usize, p: f64, window: Option<&Mask>) -> f64 {
    let g = orig.grid;
    let point = |idx: usize| -> f64 {
        let mut sq = 0.0;
        for (c, jet) in jets.iter().enumerate() {
            match k {
                0 => {
                    let d = jet[0].values[idx] - orig.comps[c].values[idx];
                    sq += d * d;
                }
                1 => {
                    for n in 1..3 {
                        sq += jet[n].values[idx].powi(2);
                    }
                }
                _ => {
                    sq += jet[3].values[idx].powi(2) + 2.0 * jet[4].values[idx].powi(2) + jet[5].values[idx].powi(2);
                }
            }
        }
        sq.sqrt()
    };
    lp_norm_of(&g, point, p, window)
}

/// Ladders of `‖f_ε - f‖_{L^p}` (k = 0) and `‖∇^k f_ε‖_{L^p}` (k = 1, 2) on
/// the window, fitted against `ε`. The predicted exponents are `s` and `s - k`.
pub fn mollify_rates(
    f: &VectorField,
    s: f64,
    p: f64,
    ks: &[usize],
    ladder: &[f64],
    window: Option<&Mask>,
) -> Result<Vec<OrderRate>> {
    check_ladder(ladder, crate::rate::MIN_FIT_POINTS)?;
    if ks.iter().any(|&k| k > 2) {
        return Err(Error::InvalidParameter("rates are available for k = 0, 1, 2".into()));
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let mut values = vec![Vec::new(); ks.len()];
    for &eps in ladder {
        let m = Mollifier::new(f.grid, eps)?;
        let jets: Vec<Vec<ScalarField>> = f.comps.iter().map(|c| m.jets(c, max_k)).collect::<Result<_>>()?;
        for (slot, &k) in ks.iter().enumerate() {
            values[slot].push((eps, order_norms(&jets, f, k, p, window)));
        }
    }
    ks.iter()
        .zip(values)
        .map(|(&k, lad)| {
            let expected = if k == 0 { s } else { s - k as f64 };
            Ok(OrderRate { k, expected, fit: RateFit::fit(&lad)? })
        })
        .collect()
}

/// Commutator `f_ε g_ε - (f g)_ε` and its gradient at one scale.
pub fn commutator(m: &Mollifier, f: &ScalarField, g: &ScalarField) -> Result<[ScalarField; 3]> {
    let fg = f.mul(g)?;
    let jf = m.jets(f, 1)?;
    let jg = m.jets(g, 1)?;
    let jfg = m.jets(&fg, 1)?;
    let grid = f.grid;
    let mut out = [ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)];
    for k in 0..grid.len() {
        out[0].values[k] = jf[0].values[k] * jg[0].values[k] - jfg[0].values[k];
        for i in 1..3 {
            out[i].values[k] =
                jf[i].values[k] * jg[0].values[k] + jf[0].values[k] * jg[i].values[k] - jfg[i].values[k];
        }
    }
    Ok(out)
}

/// Ladders of `‖∇^k (f_ε g_ε - (f g)_ε)‖_{L^{p/2}}` for k = 0, 1; the
/// predicted exponent is `2s - k`.
pub fn commutator_rates(
    f: &ScalarField,
    g: &ScalarField,
    s: f64,
    p: f64,
    ks: &[usize],
    ladder: &[f64],
    window: Option<&Mask>,
) -> Result<Vec<OrderRate>> {
    check_ladder(ladder, crate::rate::MIN_FIT_POINTS)?;
    if ks.iter().any(|&k| k > 1) {
        return Err(Error::InvalidParameter("commutator rates are available for k = 0, 1".into()));
    }
    let q = p / 2.0;
    let mut values = vec![Vec::new(); ks.len()];
    for &eps in ladder {
        let m = Mollifier::new(f.grid, eps)?;
        let c = commutator(&m, f, g)?;
        for (slot, &k) in ks.iter().enumerate() {
            let v = if k == 0 {
                lp_norm_of(&f.grid, |i| c[0].values[i].abs(), q, window)
            } else {
                lp_norm_of(&f.grid, |i| c[1].values[i].hypot(c[2].values[i]), q, window)
            };
            values[slot].push((eps, v));
        }
    }
    ks.iter()
        .zip(values)
        .map(|(&k, lad)| Ok(OrderRate { k, expected: 2.0 * s - k as f64, fit: RateFit::fit(&lad)? }))
        .collect()
}

/// Largest pointwise deviation between the commutator and its decomposition
/// `(f_ε - f)(g_ε - g) - Σ_d W(d) (f(x-d) - f(x)) (g(x-d) - g(x))`, the last
/// sum evaluated directly on the kernel stencil.
pub fn commutator_identity_residual(m: &Mollifier, f: &ScalarField, g: &ScalarField) -> Result<f64> {
    let c = commutator(m, f, g)?;
    let fe = m.apply(f)?;
    let ge = m.apply(g)?;
    let grid = f.grid;
    let st = m.stencil();
    let res = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i1, i2) = grid.unidx(k);
            let mut integral = 0.0;
            for &(d1, d2, w) in st {
                let j = grid.shifted(i1, i2, -d1, -d2);
                integral += w * (f.values[j] - f.values[k]) * (g.values[j] - g.values[k]);
            }
            let rhs = (fe.values[k] - f.values[k]) * (ge.values[k] - g.values[k]) - integral;
            (c[0].values[k] - rhs).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(res)
}

/// `sup_x ⨍_{B_ε(x)} |f - f_ε(x)|^{2/s}` over the window.
pub fn vmo_modulus(f: &ScalarField, s: f64, eps: f64, window: Option<&Mask>) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, 1]")));
    }
    f.require_periodic()?;
    let m = Mollifier::new(f.grid, eps)?;
    let fe = m.apply(f)?;
    let grid = f.grid;
    let (h1, h2) = (grid.h1(), grid.h2());
    let r1 = (eps / h1).floor() as isize;
    let r2 = (eps / h2).floor() as isize;
    let ball: Vec<(isize, isize)> = (-r1..=r1)
        .flat_map(|d1| (-r2..=r2).map(move |d2| (d1, d2)))
        .filter(|&(d1, d2)| (d1 as f64 * h1).hypot(d2 as f64 * h2) <= eps * (1.0 + 1e-12))
        .collect();
    let e = 2.0 / s;
    let out = (0..grid.len())
        .into_par_iter()
        .filter(|&k| window.map_or(true, |w| w.inside[k]))
        .map(|k| {
            let (i1, i2) = grid.unidx(k);
            let sum: f64 =
                ball.iter().map(|&(d1, d2)| (f.values[grid.shifted(i1, i2, d1, d2)] - fe.values[k]).abs().powf(e)).sum();
            sum / ball.len() as f64
        })
        .reduce(|| 0.0, f64::max);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_table_is_consistent() {
        for (n, a) in DERIVS.iter().enumerate() {
            assert_eq!(deriv_index(a), n);
        }
        assert_eq!(deriv_index(&[1, 0]), deriv_index(&[0, 1]));
        assert_eq!(deriv_index(&[1, 0, 1]), deriv_index(&[0, 1, 1]));
    }

    #[test]
    fn bump_jets_match_finite_differences() {
        let z = [0.31, -0.22];
        let h = 1e-5;
        let base = bump_jets(z);
        for (n, alpha) in DERIVS.iter().enumerate().skip(1) {
            // differentiate the lower-order entry along the last axis
            let lower = deriv_index(&alpha[..alpha.len() - 1]);
            let ax = alpha[alpha.len() - 1];
            let mut zp = z;
            let mut zm = z;
            zp[ax] += h;
            zm[ax] -= h;
            let fd = (bump_jets(zp)[lower] - bump_jets(zm)[lower]) / (2.0 * h);
            assert!((fd - base[n]).abs() < 1e-6 * (1.0 + base[n].abs()), "alpha {alpha:?}");
        }
    }

    #[test]
    fn refuses_under_resolved_scales() {
        let g = Grid::unit(64);
        assert!(matches!(Mollifier::new(g, 1.0 / 64.0), Err(Error::UnderResolved { .. })));
        assert!(Mollifier::new(g, 0.3).is_err());
        assert!(Mollifier::new(g, 2.0 / 64.0).is_ok());
    }

    #[test]
    fn default_ladder_respects_resolution() {
        assert_eq!(default_ladder(&Grid::unit(256)).len(), 5);
        assert_eq!(default_ladder(&Grid::unit(64)).len(), 3);
    }
}
