//! Mollified isometric immersions `u: T² → R³`: pullback metric, normal,
//! Christoffel symbols, second fundamental form, the Gauss and
//! Codazzi–Mainardi equations, the potential `f` with `∇f = II`, and
//! detection of developable structure.
//!
//! All quantities at scale ε are built from the jets of `u_ε` up to order
//! three, so the classical identities between them hold to rounding.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{lp_norm_of, Grid, Mask, ScalarField, SymField, VectorField};
use crate::mollify::{deriv_index, Mollifier};
use crate::rate::RateFit;
use crate::spectral::{self, Spectrum};

/// Lower bound on `det 𝔤^ε` for the mollified map to count as an immersion.
pub const DET_FLOOR: f64 = 0.25;

/// Gradient entries `∂_i u^m` at `2 m + i`, evaluated at window coordinates.
pub type GradientFn = Arc<dyn Fn([f64; 2]) -> Vec<f64> + Send + Sync>;

/// A map into R³ with the node set on which claims are checked.
#[derive(Clone)]
pub struct Immersion {
    pub u: VectorField,
    pub mask: Mask,
    pub analytic_gradient: Option<GradientFn>,
}

impl fmt::Debug for Immersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Immersion")
            .field("grid", &self.u.grid)
            .field("mask_nodes", &self.mask.count())
            .field("analytic_gradient", &self.analytic_gradient.is_some())
            .finish()
    }
}

impl Immersion {
    pub fn new(u: VectorField, mask: Mask) -> Result<Self> {
        u.require_dim(3)?;
        u.grid.same(&mask.grid)?;
        if mask.count() == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(Immersion { u, mask, analytic_gradient: None })
    }

    pub fn with_analytic_gradient(mut self, f: GradientFn) -> Self {
        self.analytic_gradient = Some(f);
        self
    }

    pub fn grid(&self) -> Grid {
        self.u.grid
    }

    /// `sup |(∇u)ᵀ∇u - Id|` over the mask, from the attached gradient.
    pub fn isometry_residual(&self) -> Result<f64> {
        let j = self
            .u
            .jacobian
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("isometry check needs an attached gradient".into()))?;
        let r = self
            .mask
            .nodes()
            .map(|k| {
                let d = |a: usize, b: usize| (0..3).map(|m| j[2 * m + a].values[k] * j[2 * m + b].values[k]).sum::<f64>();
                ((d(0, 0) - 1.0).powi(2) + 2.0 * d(0, 1).powi(2) + (d(1, 1) - 1.0).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        Ok(r)
    }
}

/// Christoffel symbols `Γ^l_{ij}`, stored once per symmetric pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    /// `comps[3 l + s]` with `s = 0, 1, 2` for `ij = 11, 12, 22`.
    pub comps: Vec<ScalarField>,
}

fn sym(i: usize, j: usize) -> usize {
    i + j
}

impl Christoffel {
    pub fn get(&self, l: usize, i: usize, j: usize) -> &ScalarField {
        &self.comps[3 * l + sym(i, j)]
    }

    /// Pointwise Frobenius norm over all `(l, i, j)`.
    pub fn norm_at(&self, k: usize) -> f64 {
        let mut s = 0.0;
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    s += self.get(l, i, j).values[k].powi(2);
                }
            }
        }
        s.sqrt()
    }
}

type V3 = [f64; 3];

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Geometry of a smooth immersion at one node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeGeometry {
    pub g: [[f64; 2]; 2],
    pub det_g: f64,
    /// `gamma[l][i][j] = Γ^l_{ij}`.
    pub gamma: [[[f64; 2]; 2]; 2],
    pub normal: V3,
    pub ii: [[f64; 2]; 2],
    /// `∂2 II_{i1} - ∂1 II_{i2}` per row `i`.
    pub codazzi_raw: [f64; 2],
    /// The same minus `Γ^l_{i2} II_{l1} - Γ^l_{i1} II_{l2}`.
    pub codazzi_corrected: [f64; 2],
    /// `|∇²u^m - Γ^k ∂_k u^m - II n^m|` per component.
    pub coherence: [f64; 3],
    pub det_ii: f64,
    /// `R_{1212}`, which equals `det II` by the Gauss equation.
    pub curvature: f64,
}

/// Evaluates the node geometry from first, second and third derivatives
/// `du[i][m]`, `d2[i][j][m]`, `d3[i][j][k][m]`.
pub fn node_geometry(du: [V3; 2], d2: [[V3; 2]; 2], d3: [[[V3; 2]; 2]; 2]) -> NodeGeometry {
    let mut g = [[0.0; 2]; 2];
    let mut dg = [[[0.0; 2]; 2]; 2];
    let mut ddg = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = dot(&du[i], &du[j]);
            for k in 0..2 {
                dg[i][j][k] = dot(&d2[i][k], &du[j]) + dot(&du[i], &d2[j][k]);
                for l in 0..2 {
                    ddg[i][j][k][l] = dot(&d3[i][k][l], &du[j])
                        + dot(&d2[i][k], &d2[j][l])
                        + dot(&d2[i][l], &d2[j][k])
                        + dot(&du[i], &d3[j][k][l]);
                }
            }
        }
    }
    let det_g = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let gi = [[g[1][1] / det_g, -g[0][1] / det_g], [-g[1][0] / det_g, g[0][0] / det_g]];
    // ∂_k g^{-1} = -g^{-1} (∂_k g) g^{-1}
    let mut dgi = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for p in 0..2 {
                    for q in 0..2 {
                        s -= gi[a][p] * dg[p][q][k] * gi[q][b];
                    }
                }
                dgi[a][b][k] = s;
            }
        }
    }
    let mut gamma = [[[0.0; 2]; 2]; 2];
    let mut dgamma = [[[[0.0; 2]; 2]; 2]; 2];
    for l in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                let mut ds = [0.0; 2];
                for m in 0..2 {
                    let lower = dg[m][j][i] + dg[i][m][j] - dg[i][j][m];
                    s += gi[l][m] * lower;
                    for k in 0..2 {
                        let dlower = ddg[m][j][i][k] + ddg[i][m][j][k] - ddg[i][j][m][k];
                        ds[k] += dgi[l][m][k] * lower + gi[l][m] * dlower;
                    }
                }
                gamma[l][i][j] = 0.5 * s;
                for k in 0..2 {
                    dgamma[l][i][j][k] = 0.5 * ds[k];
                }
            }
        }
    }
    let nn = cross(&du[0], &du[1]);
    let len = dot(&nn, &nn).sqrt();
    let normal = [nn[0] / len, nn[1] / len, nn[2] / len];
    let mut dn = [[0.0; 3]; 2];
    for k in 0..2 {
        let a = cross(&d2[0][k], &du[1]);
        let b = cross(&du[0], &d2[1][k]);
        let dnn = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
        let along = dot(&normal, &dnn);
        for c in 0..3 {
            dn[k][c] = (dnn[c] - normal[c] * along) / len;
        }
    }
    let mut ii = [[0.0; 2]; 2];
    let mut dii = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ii[i][j] = dot(&d2[i][j], &normal);
            for k in 0..2 {
                dii[i][j][k] = dot(&d3[i][j][k], &normal) + dot(&d2[i][j], &dn[k]);
            }
        }
    }
    let mut codazzi_raw = [0.0; 2];
    let mut codazzi_corrected = [0.0; 2];
    for i in 0..2 {
        codazzi_raw[i] = dii[i][0][1] - dii[i][1][0];
        let mut rhs = 0.0;
        for l in 0..2 {
            rhs += gamma[l][i][1] * ii[l][0] - gamma[l][i][0] * ii[l][1];
        }
        codazzi_corrected[i] = codazzi_raw[i] - rhs;
    }
    let mut coherence = [0.0; 3];
    for (m, c) in coherence.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut r = d2[i][j][m] - ii[i][j] * normal[m];
                for k in 0..2 {
                    r -= gamma[k][i][j] * du[k][m];
                }
                s += r * r;
            }
        }
        *c = s.sqrt();
    }
    let det_ii = ii[0][0] * ii[1][1] - ii[0][1] * ii[1][0];
    // R^l_{212} = ∂1 Γ^l_{22} - ∂2 Γ^l_{21} + Γ^l_{1p} Γ^p_{22} - Γ^l_{2p} Γ^p_{21}
    let mut curvature = 0.0;
    for l in 0..2 {
        let mut r = dgamma[l][1][1][0] - dgamma[l][1][0][1];
        for p in 0..2 {
            r += gamma[l][0][p] * gamma[p][1][1] - gamma[l][1][p] * gamma[p][1][0];
        }
        curvature += g[0][l] * r;
    }
    NodeGeometry { g, det_g, gamma, normal, ii, codazzi_raw, codazzi_corrected, coherence, det_ii, curvature }
}

/// Node geometry of `u_ε` over the whole grid.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub grid: Grid,
    pub eps: f64,
    pub nodes: Vec<NodeGeometry>,
}

/// Jets of the mollified components, `jets[m][n]` in the mollifier's order.
pub fn mollified_jets(u: &VectorField, eps: f64) -> Result<Vec<Vec<ScalarField>>> {
    let m = Mollifier::new(u.grid, eps)?;
    u.comps.iter().map(|c| m.jets(c, 3)).collect()
}

impl Geometry {
    pub fn of(u: &VectorField, eps: f64) -> Result<Self> {
        u.require_dim(3)?;
        let jets = mollified_jets(u, eps)?;
        Ok(Self::from_jets(u.grid, eps, &jets))
    }

    pub fn from_jets(grid: Grid, eps: f64, jets: &[Vec<ScalarField>]) -> Self {
        let nodes = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let at = |alpha: &[usize]| -> V3 {
                    let n = deriv_index(alpha);
                    [jets[0][n].values[k], jets[1][n].values[k], jets[2][n].values[k]]
                };
                let du = [at(&[0]), at(&[1])];
                let d2 = [[at(&[0, 0]), at(&[0, 1])], [at(&[1, 0]), at(&[1, 1])]];
                let mut d3 = [[[[0.0; 3]; 2]; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        for l in 0..2 {
                            d3[i][j][l] = at(&[i, j, l]);
                        }
                    }
                }
                node_geometry(du, d2, d3)
            })
            .collect();
        Geometry { grid, eps, nodes }
    }

    fn field(&self, f: impl Fn(&NodeGeometry) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.nodes.iter().map(f).collect(), drift: [0.0; 2] }
    }

    pub fn metric(&self) -> SymField {
        SymField { t11: self.field(|n| n.g[0][0]), t12: self.field(|n| n.g[0][1]), t22: self.field(|n| n.g[1][1]) }
    }

    pub fn second_form(&self) -> SymField {
        SymField { t11: self.field(|n| n.ii[0][0]), t12: self.field(|n| n.ii[0][1]), t22: self.field(|n| n.ii[1][1]) }
    }

    pub fn normal(&self) -> VectorField {
        let comps = (0..3).map(|c| self.field(|n| n.normal[c])).collect();
        VectorField { grid: self.grid, comps, jacobian: None }
    }

    pub fn christoffel(&self) -> Christoffel {
        let mut comps = Vec::with_capacity(6);
        for l in 0..2 {
            for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                comps.push(self.field(|n| n.gamma[l][i][j]));
            }
        }
        Christoffel { comps }
    }

    pub fn min_det(&self, mask: &Mask) -> f64 {
        mask.nodes().map(|k| self.nodes[k].det_g).fold(f64::INFINITY, f64::min)
    }

    fn norm(&self, mask: &Mask, p: f64, f: impl Fn(&NodeGeometry) -> f64) -> f64 {
        lp_norm_of(&self.grid, |k| f(&self.nodes[k]), p, Some(mask))
    }

    /// `‖𝔤^ε - Id‖_{L^p}` with the pointwise Frobenius norm.
    pub fn metric_deviation(&self, mask: &Mask, p: f64) -> f64 {
        self.norm(mask, p, |n| {
            ((n.g[0][0] - 1.0).powi(2) + 2.0 * n.g[0][1].powi(2) + (n.g[1][1] - 1.0).powi(2)).sqrt()
        })
    }

    pub fn christoffel_norm(&self, mask: &Mask, p: f64) -> f64 {
        self.norm(mask, p, |n| n.gamma.iter().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn second_form_norm(&self, mask: &Mask, p: f64) -> f64 {
        self.norm(mask, p, |n| n.ii.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `L^r` norms of the Codazzi residual summed over both rows.
    pub fn codazzi(&self, mask: &Mask, r: f64) -> CodazziResidual {
        let raw = [0, 1].map(|i| self.norm(mask, r, |n| n.codazzi_raw[i].abs()));
        let corrected = [0, 1].map(|i| self.norm(mask, r, |n| n.codazzi_corrected[i].abs()));
        CodazziResidual { raw, corrected }
    }

    /// `L¹` norm of the Gauss-formula residual for component `m`.
    pub fn coherence(&self, mask: &Mask, m: usize) -> f64 {
        self.norm(mask, 1.0, |n| n.coherence[m])
    }

    /// Pairings of `det II^ε` and `R_{1212}` with a test function.
    pub fn gauss(&self, phi: &ScalarField) -> GaussPairing {
        let a = self.grid.cell_area();
        let det_ii: f64 = self.nodes.iter().zip(&phi.values).map(|(n, p)| n.det_ii * p).sum::<f64>() * a;
        let curvature: f64 = self.nodes.iter().zip(&phi.values).map(|(n, p)| n.curvature * p).sum::<f64>() * a;
        GaussPairing { det_ii, curvature, residual: (det_ii - curvature).abs() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodazziResidual {
    pub raw: [f64; 2],
    pub corrected: [f64; 2],
}

impl CodazziResidual {
    pub fn raw_total(&self) -> f64 {
        self.raw[0] + self.raw[1]
    }

    pub fn corrected_total(&self) -> f64 {
        self.corrected[0] + self.corrected[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussPairing {
    pub det_ii: f64,
    pub curvature: f64,
    pub residual: f64,
}

/// Pullback metric with the part of the mask on which it is non-degenerate.
#[derive(Debug, Clone)]
pub struct PulledMetric {
    pub metric: SymField,
    pub mask: Mask,
    pub min_det: f64,
    /// Set when some mask node had `det 𝔤^ε <= 1/4` and was dropped.
    pub flagged: bool,
}

pub fn pullback_metric(imm: &Immersion, eps: f64) -> Result<PulledMetric> {
    let geo = Geometry::of(&imm.u, eps)?;
    let min_det = geo.min_det(&imm.mask);
    let inside: Vec<bool> =
        imm.mask.inside.iter().zip(&geo.nodes).map(|(&m, n)| m && n.det_g > DET_FLOOR).collect();
    let flagged = min_det <= DET_FLOOR;
    Ok(PulledMetric { metric: geo.metric(), mask: Mask { grid: imm.grid(), inside }, min_det, flagged })
}

/// Unit normal and second fundamental form of `u_ε`.
pub fn normal_and_ii(imm: &Immersion, eps: f64) -> Result<(VectorField, SymField)> {
    let geo = Geometry::of(&imm.u, eps)?;
    Ok((geo.normal(), geo.second_form()))
}

/// Christoffel symbols of a sampled metric, with spectral derivatives.
pub fn christoffel(g: &SymField) -> Result<Christoffel> {
    let grid = g.grid();
    let d: Vec<[ScalarField; 2]> = [&g.t11, &g.t12, &g.t22]
        .iter()
        .map(|f| {
            let s = Spectrum::of(f);
            [s.derivative(&[0]), s.derivative(&[1])]
        })
        .collect();
    let dg = |i: usize, j: usize, k: usize, n: usize| d[sym(i, j)][k].values[n];
    let mut comps = vec![ScalarField::zeros(grid); 6];
    for n in 0..grid.len() {
        let gm = [[g.t11.values[n], g.t12.values[n]], [g.t12.values[n], g.t22.values[n]]];
        let det = gm[0][0] * gm[1][1] - gm[0][1] * gm[1][0];
        let gi = [[gm[1][1] / det, -gm[0][1] / det], [-gm[1][0] / det, gm[0][0] / det]];
        for l in 0..2 {
            for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                let mut s = 0.0;
                for m in 0..2 {
                    s += gi[l][m] * (dg(m, j, i, n) + dg(i, m, j, n) - dg(i, j, m, n));
                }
                comps[3 * l + sym(i, j)].values[n] = 0.5 * s;
            }
        }
    }
    Ok(Christoffel { comps })
}

pub fn gauss_residual(imm: &Immersion, eps: f64, phi: &ScalarField) -> Result<GaussPairing> {
    imm.grid().same(&phi.grid)?;
    Ok(Geometry::of(&imm.u, eps)?.gauss(phi))
}

pub fn codazzi_residual(imm: &Immersion, eps: f64, r: f64) -> Result<CodazziResidual> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("norm exponent {r} must be at least 1")));
    }
    Ok(Geometry::of(&imm.u, eps)?.codazzi(&imm.mask, r))
}

pub fn coherence_residual(imm: &Immersion, eps: f64, m: usize) -> Result<f64> {
    if m >= 3 {
        return Err(Error::InvalidParameter("component index must be 0, 1 or 2".into()));
    }
    Ok(Geometry::of(&imm.u, eps)?.coherence(&imm.mask, m))
}

/// Relative curl of `II` above which the recovered potential carries a warning.
pub const CURL_WARNING: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RecoveredPotential {
    pub f: VectorField,
    /// `‖curl II‖_{L²} / ‖II‖_{L²}` with spectral derivatives.
    pub relative_curl: f64,
    pub warning: Option<String>,
}

/// `f = div Δ⁻¹ II` rowwise, plus the row means as linear part, so that
/// `∇f = II` whenever `II` is curl free. The periodic part has zero mean.
pub fn recover_potential(ii: &SymField) -> Result<RecoveredPotential> {
    let grid = ii.grid();
    let mut comps = Vec::with_capacity(2);
    let mut curl_sq = 0.0;
    let mut ii_sq = 0.0;
    for i in 0..2 {
        let row = ii.row(i);
        for r in row {
            r.require_periodic()?;
        }
        let s: Vec<Spectrum> = row.iter().map(|r| Spectrum::of(r)).collect();
        let coeffs: Vec<Complex64> = (0..grid.len())
            .map(|k| {
                let q = spectral::freq(&grid, k);
                let xi2 = q.xi2();
                if xi2 == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let div = Complex64::new(0.0, q.kappa[0]) * s[0].coeffs[k] + Complex64::new(0.0, q.kappa[1]) * s[1].coeffs[k];
                -div / xi2
            })
            .collect();
        let drift = [row[0].mean(), row[1].mean()];
        let values = spectral::ifft2_real(&grid, coeffs);
        comps.push(ScalarField::with_drift(grid, values, drift)?);
        let c = spectral::curl(&VectorField::new(vec![row[0].clone(), row[1].clone()])?)?;
        curl_sq += c.lp_norm(2.0, None).powi(2);
        ii_sq += row[0].lp_norm(2.0, None).powi(2) + row[1].lp_norm(2.0, None).powi(2);
    }
    let relative_curl = if ii_sq > 0.0 { (curl_sq / ii_sq).sqrt() } else { 0.0 };
    let warning = (relative_curl > CURL_WARNING)
        .then(|| format!("curl of II is {relative_curl:.3e} relative; the potential is a least-squares fit"));
    Ok(RecoveredPotential { f: VectorField::new(comps)?, relative_curl, warning })
}

/// Per-scale summary of a mollified immersion on its mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersionRung {
    pub eps: f64,
    pub min_det: f64,
    pub metric_sup: f64,
    /// `‖𝔤^ε - Id‖_{L^{1/s}}`.
    pub metric_lq: f64,
    /// `‖Γ^ε‖_{L^{1/s}}`.
    pub christoffel_lq: f64,
    /// `‖II^ε‖_{L^{2/s}}`.
    pub second_form_lq: f64,
    pub codazzi_raw: f64,
    pub codazzi_corrected: f64,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersionLadder {
    pub s: f64,
    pub rungs: Vec<ImmersionRung>,
    /// `det 𝔤^ε > 1/4` on the whole mask at the finest scale.
    pub valid: bool,
    pub metric_lq_fit: RateFit,
    pub christoffel_fit: RateFit,
    pub second_form_fit: RateFit,
}

impl ImmersionLadder {
    pub fn codazzi_raw(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.codazzi_raw).collect()
    }
}

/// Runs the immersion analysis over a ladder of scales. The immersion
/// condition is enforced at the finest scale; coarser rungs only record the
/// smallest determinant.
pub fn immersion_ladder(imm: &Immersion, s: f64, ladder: &[f64]) -> Result<ImmersionLadder> {
    crate::rate::check_ladder(ladder, crate::rate::MIN_FIT_POINTS)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, 1]")));
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let geo = Geometry::of(&imm.u, eps)?;
        let cz = geo.codazzi(&imm.mask, 1.0);
        rungs.push(ImmersionRung {
            eps,
            min_det: geo.min_det(&imm.mask),
            metric_sup: geo.metric_deviation(&imm.mask, f64::INFINITY),
            metric_lq: geo.metric_deviation(&imm.mask, 1.0 / s),
            christoffel_lq: geo.christoffel_norm(&imm.mask, 1.0 / s),
            second_form_lq: geo.second_form_norm(&imm.mask, 2.0 / s),
            codazzi_raw: cz.raw_total(),
            codazzi_corrected: cz.corrected_total(),
            coherence: (0..3).map(|m| geo.coherence(&imm.mask, m)).sum(),
        });
    }
    let fit = |f: fn(&ImmersionRung) -> f64| RateFit::fit_floored(&rungs.iter().map(|r| (r.eps, f(r))).collect::<Vec<_>>(), crate::rate::ROUNDING_FLOOR);
    let valid = rungs.last().map_or(false, |r| r.min_det > DET_FLOOR);
    Ok(ImmersionLadder {
        s,
        metric_lq_fit: fit(|r| r.metric_lq)?,
        christoffel_fit: fit(|r| r.christoffel_lq)?,
        second_form_fit: fit(|r| r.second_form_lq)?,
        rungs,
        valid,
    })
}

// ---------------------------------------------------------------------------
// developability

/// Candidate directions before refinement.
pub const CANDIDATES: usize = 16;
/// Refinement stops once the bracket is narrower than this (radians).
pub const ANGLE_RESOLUTION: f64 = 0.5 * PI / 180.0;
/// Ruled when the smallest directional variation is below this fraction of
/// the largest.
pub const RULED_RATIO: f64 = 0.1;
/// Sample offsets along a candidate line, in grid spacings; they stay inside
/// the 5×5 stencil and short of its corners.
const LINE_OFFSETS: [f64; 6] = [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "lowercase")]
pub enum Label {
    Outside,
    Flat,
    /// Ruling direction in `[0, π)`.
    Ruled { theta: f64 },
    Singular,
}

/// Gradient channels to classify.
#[derive(Clone)]
pub enum Channels {
    /// Closed-form channels at window coordinates.
    Analytic { grid: Grid, count: usize, eval: GradientFn },
    /// Sampled channels, interpolated bilinearly.
    Sampled(Vec<ScalarField>),
}

impl Channels {
    pub fn grid(&self) -> Grid {
        match self {
            Channels::Analytic { grid, .. } => *grid,
            Channels::Sampled(v) => v[0].grid,
        }
    }

    fn eval(&self, w: [f64; 2]) -> Vec<f64> {
        match self {
            Channels::Analytic { eval, .. } => eval(w),
            Channels::Sampled(v) => {
                let c = v[0].grid.center();
                v.iter().map(|f| f.eval([w[0] + c[0], w[1] + c[1]])).collect()
            }
        }
    }

    fn at_node(&self, k: usize) -> Vec<f64> {
        match self {
            Channels::Analytic { grid, eval, .. } => {
                let (i1, i2) = grid.unidx(k);
                eval(grid.window_coords(i1, i2))
            }
            Channels::Sampled(v) => v.iter().map(|f| f.values[k]).collect(),
        }
    }
}

/// Per-node labels with the tolerance used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub grid: Grid,
    pub labels: Vec<Label>,
    pub tol: f64,
}

impl Classification {
    pub fn count(&self, pred: impl Fn(&Label) -> bool) -> usize {
        self.labels.iter().filter(|l| pred(l)).count()
    }

    pub fn inside(&self) -> usize {
        self.count(|l| !matches!(l, Label::Outside))
    }

    pub fn flat(&self) -> usize {
        self.count(|l| matches!(l, Label::Flat))
    }

    pub fn ruled(&self) -> usize {
        self.count(|l| matches!(l, Label::Ruled { .. }))
    }

    pub fn singular_nodes(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&k| self.labels[k] == Label::Singular).collect()
    }
}

/// Distance between two line directions, in radians within `[0, π/2]`.
pub fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

struct Variation<'a> {
    ch: &'a Channels,
    x: [f64; 2],
    c0: Vec<f64>,
    h: f64,
}

impl Variation<'_> {
    /// Mean squared directional difference quotient along `θ`.
    fn at(&self, theta: f64) -> f64 {
        let e = [theta.cos(), theta.sin()];
        let mut s = 0.0;
        for t in LINE_OFFSETS {
            let d = t * self.h;
            let c = self.ch.eval([self.x[0] + d * e[0], self.x[1] + d * e[1]]);
            s += c.iter().zip(&self.c0).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (d * d);
        }
        s / LINE_OFFSETS.len() as f64
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Classifies each mask node as flat, ruled or singular.
///
/// The directional variation `V(θ)` of the channels is sampled along the line
/// through the node at offsets up to `1.5 h`. A node is flat when the largest
/// variation is below `tol`. Otherwise the minimising direction is found
/// among 16 candidates and refined by golden section; the node is ruled when
/// `sqrt(V_min / V_max) < 0.1`. Each ruling is then traced through the mask in
/// steps of `h/2`; the channels must stay constant along it until the trace
/// leaves the mask or enters the singular set (read off the bilinearly
/// interpolated singular indicator), up to the drift allowed by the angular
/// resolution. Rulings that fail become singular.
pub fn detect_developability(ch: &Channels, mask: &Mask, tol: f64) -> Result<Classification> {
    let grid = ch.grid();
    grid.same(&mask.grid)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let h = grid.h();
    let first: Vec<Label> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !mask.inside[k] {
                return Label::Outside;
            }
            let (i1, i2) = grid.unidx(k);
            let x = grid.window_coords(i1, i2);
            let var = Variation { ch, x, c0: ch.at_node(k), h };
            let cand: Vec<f64> = (0..CANDIDATES).map(|j| var.at(PI * j as f64 / CANDIDATES as f64)).collect();
            let vmax = cand.iter().cloned().fold(0.0, f64::max);
            if vmax.sqrt() < tol {
                return Label::Flat;
            }
            let mut best = 0;
            for j in 1..CANDIDATES {
                if cand[j] < cand[best] {
                    best = j;
                }
            }
            let step = PI / CANDIDATES as f64;
            let centre = best as f64 * step;
            let theta = golden_min(|t| var.at(t), centre - step, centre + step, ANGLE_RESOLUTION);
            let vmin = var.at(theta).min(cand[best]);
            let vtop = var.at(theta + 0.5 * PI).max(vmax);
            if (vmin / vtop).sqrt() < RULED_RATIO {
                Label::Ruled { theta: theta.rem_euclid(PI) }
            } else {
                Label::Singular
            }
        })
        .collect();
    let singular: Vec<f64> = first.iter().map(|l| if *l == Label::Singular { 1.0 } else { 0.0 }).collect();
    let indicator = ScalarField { grid, values: singular, drift: [0.0; 2] };
    let inside = ScalarField {
        grid,
        values: mask.inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        drift: [0.0; 2],
    };
    let ctr = grid.center();
    let labels = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let Label::Ruled { theta } = first[k] else {
                return first[k];
            };
            let (i1, i2) = grid.unidx(k);
            let x = grid.window_coords(i1, i2);
            let c0 = ch.at_node(k);
            let var = Variation { ch, x, c0: c0.clone(), h };
            let rate = var.at(theta + 0.5 * PI).sqrt();
            let e = [theta.cos(), theta.sin()];
            for sign in [-1.0, 1.0] {
                let mut t = 0.5 * h;
                loop {
                    let y = [x[0] + sign * t * e[0], x[1] + sign * t * e[1]];
                    let p = [y[0] + ctr[0], y[1] + ctr[1]];
                    if y[0].abs() >= 0.5 * grid.length
                        || y[1].abs() >= 0.5 * grid.length
                        || inside.eval(p) < 0.5
                        || indicator.eval(p) >= 0.5
                    {
                        break;
                    }
                    let c = ch.eval(y);
                    let dev = c.iter().zip(&c0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    // the refined direction may miss the true ruling by t·sin(δ),
                    // which costs the local transverse rate times that distance
                    let base = RULED_RATIO * rate * t + tol * h;
                    if dev > base
                        && dev > base + 2.0 * t * ANGLE_RESOLUTION.sin() * (Variation { ch, x: y, c0: c, h }).at(theta + 0.5 * PI).sqrt()
                    {
                        return Label::Singular;
                    }
                    t += 0.5 * h;
                }
            }
            first[k]
        })
        .collect();
    Ok(Classification { grid, labels, tol })
}

/// Channels of an immersion: the analytic gradient when attached, else the
/// attached sampled gradient, else spectral derivatives.
pub fn immersion_channels(imm: &Immersion) -> Channels {
    match &imm.analytic_gradient {
        Some(f) => Channels::Analytic { grid: imm.grid(), count: 2 * imm.u.dim(), eval: f.clone() },
        None => Channels::Sampled(crate::jacobian::gradient_entries(&imm.u)),
    }
}

/// Channels of a planar map `f`, from its sampled gradient.
pub fn map_channels(f: &VectorField) -> Channels {
    Channels::Sampled(crate::jacobian::gradient_entries(f))
}

/// Fraction of nodes where the constancy directions of `a` are also
/// constancy directions of `b`: both flat, `b` flat, or both ruled within
/// `max_angle`.
pub fn constancy_agreement(a: &Classification, b: &Classification, max_angle: f64) -> Result<f64> {
    a.grid.same(&b.grid)?;
    let mut total = 0usize;
    let mut agree = 0usize;
    for (la, lb) in a.labels.iter().zip(&b.labels) {
        if matches!(la, Label::Outside) || matches!(lb, Label::Outside) {
            continue;
        }
        total += 1;
        let ok = match (la, lb) {
            (_, Label::Flat) => true,
            (Label::Ruled { theta: ta }, Label::Ruled { theta: tb }) => angle_between(*ta, *tb) <= max_angle,
            (Label::Singular, Label::Singular) => true,
            _ => false,
        };
        agree += ok as usize;
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(agree as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conformal_christoffel_closed_form() {
        let g = Grid::unit(64);
        let k = 2.0 * PI;
        let phi = |x: [f64; 2]| 0.05 * (k * x[0]).sin() * (k * x[1]).cos();
        let d1 = |x: [f64; 2]| 0.05 * k * (k * x[0]).cos() * (k * x[1]).cos();
        let d2 = |x: [f64; 2]| -0.05 * k * (k * x[0]).sin() * (k * x[1]).sin();
        let e = ScalarField::from_fn(g, |x| (2.0 * phi(x)).exp());
        let metric = SymField { t11: e.clone(), t12: ScalarField::zeros(g), t22: e };
        let c = christoffel(&metric).unwrap();
        let a = ScalarField::from_fn(g, d1);
        let b = ScalarField::from_fn(g, d2);
        let expect = [(0, 0, 0, &a, 1.0), (0, 0, 1, &b, 1.0), (0, 1, 1, &a, -1.0), (1, 0, 0, &b, -1.0), (1, 0, 1, &a, 1.0), (1, 1, 1, &b, 1.0)];
        for (l, i, j, f, sgn) in expect {
            let err = c.get(l, i, j).values.iter().zip(&f.values).map(|(x, y)| (x - sgn * y).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "Γ^{l}_{i}{j}: {err}");
        }
    }

    #[test]
    fn golden_section_finds_minimum() {
        let t = golden_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-8);
        assert!((t - 0.3).abs() < 1e-7);
    }

    #[test]
    fn angles_wrap_modulo_pi() {
        assert!(angle_between(0.01, PI - 0.01) < 0.021);
        assert!((angle_between(0.0, 0.5 * PI) - 0.5 * PI).abs() < 1e-15);
    }
}
