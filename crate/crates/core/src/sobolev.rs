//! Fractional seminorms on the torus.
//!
//! The Gagliardo double sum uses the torus metric and skips the diagonal.
//! Above 128² nodes the outer sum runs over a stratified one-in-eight subset
//! (one node per block of eight along axis 2) chosen with a fixed seed, which
//! can be overridden through `FRACSOB_SEED`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, Mask, ScalarField};
use crate::spectral::{self, Spectrum};

pub const DEFAULT_SEED: u64 = 0x5eed_f5ab;
const FULL_SUM_LIMIT: usize = 128 * 128;
const STRATUM: usize = 8;

pub fn subsample_seed() -> u64 {
    std::env::var("FRACSOB_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

fn check_sp(s: f64, p: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("smoothness s = {s} must lie in (0, 1)")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("integrability p = {p} must be at least 1")));
    }
    Ok(())
}

/// Outer nodes of the double sum together with their weight.
fn outer_nodes(grid: &Grid) -> (Vec<usize>, f64) {
    if grid.len() <= FULL_SUM_LIMIT {
        return ((0..grid.len()).collect(), 1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(subsample_seed());
    let mut nodes = Vec::with_capacity(grid.len() / STRATUM);
    for i1 in 0..grid.n1 {
        for block in (0..grid.n2).step_by(STRATUM) {
            let off = rng.gen_range(0..STRATUM.min(grid.n2 - block));
            nodes.push(grid.idx(i1, block + off));
        }
    }
    (nodes, STRATUM as f64)
}

/// `|x - y|_T^{-(2 + s p)}` tabulated by index offset.
fn kernel_table(grid: &Grid, s: f64, p: f64) -> Vec<f64> {
    let e = -(2.0 + s * p) / 2.0;
    let (h1, h2) = (grid.h1(), grid.h2());
    let mut k = vec![0.0; grid.len()];
    for d1 in 0..grid.n1 {
        let x1 = Grid::signed(d1, grid.n1) as f64 * h1;
        for d2 in 0..grid.n2 {
            if d1 == 0 && d2 == 0 {
                continue;
            }
            let x2 = Grid::signed(d2, grid.n2) as f64 * h2;
            k[grid.idx(d1, d2)] = (x1 * x1 + x2 * x2).powf(e);
        }
    }
    k
}

fn double_sum<F: Fn(f64) -> f64 + Sync>(
    grid: &Grid,
    comps: &[&[f64]],
    kernel: &[f64],
    weight: &[f64],
    outer: &[usize],
    pow: F,
) -> f64 {
    let (n1, n2) = (grid.n1, grid.n2);
    outer
        .par_iter()
        .map(|&k| {
            if weight[k] == 0.0 {
                return 0.0;
            }
            let (i1, i2) = grid.unidx(k);
            let xv: Vec<f64> = comps.iter().map(|c| c[k]).collect();
            let mut acc = 0.0;
            for j1 in 0..n1 {
                let d1 = (j1 + n1 - i1) % n1;
                let krow = &kernel[d1 * n2..(d1 + 1) * n2];
                let row = j1 * n2;
                // Two contiguous segments so that the offset index is monotone.
                for (lo, hi, shift) in [(i2, n2, 0usize), (0, i2, n2)] {
                    for j2 in lo..hi {
                        let d2 = j2 + shift - i2;
                        let mut sq = 0.0;
                        for (c, x) in comps.iter().zip(&xv) {
                            let d = c[row + j2] - x;
                            sq += d * d;
                        }
                        acc += pow(sq) * krow[d2] * weight[row + j2];
                    }
                }
            }
            acc
        })
        .sum()
}

/// Gagliardo seminorm `[f]_{W^{s,p}}` of a (vector-valued) periodic field,
/// with `|·|` the Euclidean norm of the component differences.
pub fn gagliardo_seminorm_vec(comps: &[&ScalarField], s: f64, p: f64, window: Option<&Mask>) -> Result<f64> {
    check_sp(s, p)?;
    let grid = comps.first().ok_or_else(|| Error::InvalidParameter("no components".into()))?.grid;
    for c in comps {
        grid.same(&c.grid)?;
        c.require_periodic()?;
    }
    let weight: Vec<f64> = match window {
        Some(m) => {
            grid.same(&m.grid)?;
            m.inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
        }
        None => vec![1.0; grid.len()],
    };
    if weight.iter().all(|w| *w == 0.0) {
        return Err(Error::EmptyMask);
    }
    let kernel = kernel_table(&grid, s, p);
    let (outer, w_outer) = outer_nodes(&grid);
    let values: Vec<&[f64]> = comps.iter().map(|c| c.values.as_slice()).collect();
    let sum = if p == 2.0 {
        double_sum(&grid, &values, &kernel, &weight, &outer, |q| q)
    } else if p == 3.0 {
        double_sum(&grid, &values, &kernel, &weight, &outer, |q| q * q.sqrt())
    } else if p == 1.5 {
        double_sum(&grid, &values, &kernel, &weight, &outer, |q| {
            let r = q.sqrt();
            r * r.sqrt()
        })
    } else if p == 1.0 {
        double_sum(&grid, &values, &kernel, &weight, &outer, |q| q.sqrt())
    } else {
        let half = 0.5 * p;
        double_sum(&grid, &values, &kernel, &weight, &outer, |q| q.powf(half))
    };
    let a = grid.cell_area();
    Ok((sum * w_outer * a * a).powf(1.0 / p))
}

pub fn gagliardo_seminorm(f: &ScalarField, s: f64, p: f64, window: Option<&Mask>) -> Result<f64> {
    gagliardo_seminorm_vec(&[f], s, p, window)
}

/// Two estimates of the negative-order seminorm `[f]_{W^{s-1,p}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeSeminorm {
    /// Largest dual pairing `|⟨f, φ⟩|` over a bump dictionary normalised in
    /// `W^{1-s,p'}`.
    pub dual: f64,
    /// `[D Δ⁻¹ f]_{W^{s,p}}`.
    pub potential: f64,
    /// `dual / potential`; the dual estimate is bounded by this constant
    /// times the potential estimate.
    pub ratio: f64,
}

/// Bump `exp(-1/(1 - |x - c|²/r²))` centred at a node.
pub fn bump(grid: Grid, center: [f64; 2], r: f64) -> ScalarField {
    let l = grid.length;
    ScalarField::from_fn(grid, |x| {
        let mut q = 0.0;
        for i in 0..2 {
            let mut d = x[i] - center[i];
            d -= l * (d / l).round();
            q += d * d;
        }
        let q = q / (r * r);
        if q < 1.0 {
            (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    })
}

/// Dictionary of bumps: four radii, eight node-aligned centres each.
pub fn bump_dictionary(grid: Grid) -> Vec<(f64, Vec<ScalarField>)> {
    let l = grid.length;
    let mut out = Vec::new();
    for r in [l / 4.0, l / 8.0, l / 16.0, l / 32.0] {
        if r < 2.0 * grid.h() {
            continue;
        }
        let bumps = (0..8)
            .map(|j| {
                let c = [l / 8.0 + (j % 4) as f64 * l / 4.0, l / 4.0 + (j / 4) as f64 * l / 2.0];
                let c = [(c[0] / grid.h1()).round() * grid.h1(), (c[1] / grid.h2()).round() * grid.h2()];
                bump(grid, c, r)
            })
            .collect();
        out.push((r, bumps));
    }
    out
}

pub fn negative_seminorm(f: &ScalarField, s: f64, p: f64) -> Result<NegativeSeminorm> {
    check_sp(s, p)?;
    if p <= 1.0 {
        return Err(Error::InvalidParameter("negative seminorm needs p > 1".into()));
    }
    f.require_periodic()?;
    let q = p / (p - 1.0);
    let mean = f.mean();
    let a = f.grid.cell_area();
    let mut dual: f64 = 0.0;
    for (_, bumps) in bump_dictionary(f.grid) {
        // Node-aligned translates share the seminorm of the first bump up to
        // the outer subsampling, so one evaluation per radius suffices.
        let norm = gagliardo_seminorm(&bumps[0], 1.0 - s, q, None)?;
        for b in &bumps {
            let pair: f64 = f.values.iter().zip(&b.values).map(|(x, y)| (x - mean) * y).sum::<f64>() * a;
            dual = dual.max(pair.abs() / norm);
        }
    }
    let pot = spectral::grad_inv_laplacian(f)?;
    let potential = gagliardo_seminorm_vec(&[&pot.comps[0], &pot.comps[1]], s, p, None)?;
    let ratio = if potential > 0.0 { dual / potential } else { f64::INFINITY };
    Ok(NegativeSeminorm { dual, potential, ratio })
}

/// Geometric ladder of heights for the Poisson extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightLadder {
    pub t_min: f64,
    pub ratio: f64,
    pub count: usize,
}

impl HeightLadder {
    pub fn default_for(grid: &Grid) -> Self {
        HeightLadder { t_min: grid.h() / 4.0, ratio: 1.3, count: 32 }
    }

    pub fn heights(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.t_min * self.ratio.powi(k as i32)).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.ratio > 1.0 && self.count >= 2) {
            return Err(Error::InvalidParameter("height ladder needs t_min > 0, ratio > 1, count >= 2".into()));
        }
        Ok(())
    }
}

/// `(∫_0^∞ ∫ t^{p-1-sp} |D f^h(x, t)|^p dx dt)^{1/p}` with `f^h` the Poisson
/// extension, integrated by the trapezoid rule in `log t` plus a closed-form
/// tail below the first height.
pub fn extension_seminorm(f: &ScalarField, s: f64, p: f64, ladder: &HeightLadder) -> Result<f64> {
    check_sp(s, p)?;
    ladder.validate()?;
    f.require_periodic()?;
    let spec = Spectrum::of(f);
    let a = p - 1.0 - s * p;
    let area = f.grid.cell_area();
    let heights = ladder.heights();
    let integrand: Vec<f64> = heights
        .par_iter()
        .map(|&t| {
            let jet = spectral::poisson_jet(&spec, t);
            let sum: f64 = (0..f.grid.len())
                .map(|k| {
                    let q = jet[1][k] * jet[1][k] + jet[2][k] * jet[2][k] + jet[3][k] * jet[3][k];
                    q.powf(0.5 * p)
                })
                .sum();
            t.powf(a) * sum * area
        })
        .collect();
    let du = ladder.ratio.ln();
    let mut total = integrand[0] * heights[0] / (a + 1.0);
    for k in 0..heights.len() - 1 {
        total += 0.5 * (integrand[k] * heights[k] + integrand[k + 1] * heights[k + 1]) * du;
    }
    Ok(total.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants_have_zero_seminorm() {
        let g = Grid::unit(16);
        let f = ScalarField::constant(g, 3.0);
        assert_eq!(gagliardo_seminorm(&f, 0.5, 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_exponents() {
        let g = Grid::unit(16);
        let f = ScalarField::zeros(g);
        assert!(gagliardo_seminorm(&f, 1.0, 2.0, None).is_err());
        assert!(gagliardo_seminorm(&f, 0.5, 0.5, None).is_err());
    }

    #[test]
    fn matches_brute_force_on_small_grid() {
        let g = Grid::unit(8);
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin() + x[1] * (1.0 - x[1]));
        let (s, p) = (0.4, 3.0);
        let mut sum = 0.0;
        for a in 0..g.len() {
            for b in 0..g.len() {
                if a == b {
                    continue;
                }
                let (a1, a2) = g.unidx(a);
                let (b1, b2) = g.unidx(b);
                let d1 = Grid::signed((b1 + 8 - a1) % 8, 8) as f64 / 8.0;
                let d2 = Grid::signed((b2 + 8 - a2) % 8, 8) as f64 / 8.0;
                let r = (d1 * d1 + d2 * d2).sqrt();
                sum += (f.values[a] - f.values[b]).abs().powf(p) / r.powf(2.0 + s * p);
            }
        }
        let expect = (sum / 8f64.powi(4)).powf(1.0 / p);
        let got = gagliardo_seminorm(&f, s, p, None).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect);
    }
}
