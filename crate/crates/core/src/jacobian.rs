//! Pointwise and distributional Jacobians, winding-number degree and the
//! covered area of grid images.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use crate::mollify::Mollifier;
use crate::spectral::{self, Spectrum};

/// Relative spread of the last three ladder values below which a pairing is
/// reported as converged.
pub const CONVERGED_SPREAD: f64 = 1e-2;
/// Absolute spread accepted when the pairing itself is near zero.
pub const CONVERGED_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistPairing {
    pub ladder: Vec<(f64, f64)>,
    pub limit: f64,
    pub converged: bool,
}

impl DistPairing {
    pub fn from_ladder(ladder: Vec<(f64, f64)>) -> Result<Self> {
        let limit = ladder.last().ok_or(Error::BadLadder { min: 1 })?.1;
        let tail: Vec<f64> = ladder.iter().rev().take(3).map(|p| p.1).collect();
        let converged = if tail.len() < 3 {
            false
        } else {
            let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
            let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
            let mean = tail.iter().sum::<f64>() / 3.0;
            hi - lo < CONVERGED_SPREAD * mean.abs() || hi - lo < CONVERGED_FLOOR
        };
        Ok(DistPairing { ladder, limit, converged })
    }

    /// Relative spread of the last three values.
    pub fn spread(&self) -> f64 {
        let tail: Vec<f64> = self.ladder.iter().rev().take(3).map(|p| p.1).collect();
        let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
        let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / (tail.iter().sum::<f64>() / tail.len() as f64).abs()
    }
}

/// Gradient entries `∂_i f^m` at `jac[2 m + i]`: the attached analytic
/// gradient if present, spectral derivatives otherwise.
pub fn gradient_entries(f: &VectorField) -> Vec<ScalarField> {
    if let Some(j) = &f.jacobian {
        return j.clone();
    }
    let mut out = Vec::with_capacity(2 * f.dim());
    for c in &f.comps {
        let s = Spectrum::of(c);
        out.push(s.derivative(&[0]));
        out.push(s.derivative(&[1]));
    }
    out
}

/// `det ∇f` at every node.
pub fn pointwise_jacobian(f: &VectorField) -> Result<ScalarField> {
    f.require_dim(2)?;
    let j = gradient_entries(f);
    let values = (0..f.grid.len())
        .map(|k| j[0].values[k] * j[3].values[k] - j[1].values[k] * j[2].values[k])
        .collect();
    ScalarField::from_values(f.grid, values)
}

/// `∂1 f² - ∂2 f¹`.
pub fn curl(f: &VectorField) -> Result<ScalarField> {
    spectral::curl(f)
}

/// `Σ det(∇f_ε) φ h²` over the ladder. The test function must vanish within
/// `ε_max` of the cell boundary.
pub fn dist_jacobian(f: &VectorField, phi: &ScalarField, ladder: &[f64]) -> Result<DistPairing> {
    f.require_dim(2)?;
    f.grid.same(&phi.grid)?;
    let g = f.grid;
    let eps_max = ladder.iter().cloned().fold(0.0, f64::max);
    if ladder.is_empty() {
        return Err(Error::BadLadder { min: 1 });
    }
    let margin = 0.5 * g.length - eps_max;
    for k in 0..g.len() {
        if phi.values[k] != 0.0 {
            let (i1, i2) = g.unidx(k);
            let w = g.window_coords(i1, i2);
            if w[0].abs().max(w[1].abs()) > margin {
                return Err(Error::InvalidParameter("test function support reaches the window boundary".into()));
            }
        }
    }
    let mut out = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let m = Mollifier::new(g, eps)?;
        let j0 = m.jets(&f.comps[0], 1)?;
        let j1 = m.jets(&f.comps[1], 1)?;
        let (a, b, c, e) = (&j0[1], &j0[2], &j1[1], &j1[2]);
        let v: f64 = (0..g.len())
            .filter(|&k| phi.values[k] != 0.0)
            .map(|k| (a.values[k] * e.values[k] - b.values[k] * c.values[k]) * phi.values[k])
            .sum::<f64>()
            * g.cell_area();
        out.push((eps, v));
    }
    DistPairing::from_ladder(out)
}

/// `f + δ (-x2, x1)` in window coordinates.
pub fn shear_perturb(f: &VectorField, delta: f64) -> Result<VectorField> {
    f.require_dim(2)?;
    let mut out = f.clone();
    out.comps[0].add_drift([0.0, -delta]);
    out.comps[1].add_drift([delta, 0.0]);
    if let Some(j) = out.jacobian.as_mut() {
        j[1].values.iter_mut().for_each(|v| *v -= delta);
        j[2].values.iter_mut().for_each(|v| *v += delta);
    }
    Ok(out)
}

/// Closed polygon in window coordinates; the last point joins the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<[f64; 2]>,
}

impl Contour {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter("contour needs at least three points".into()));
        }
        Ok(Contour { points })
    }

    /// Counter-clockwise circle sampled at `samples` points.
    pub fn circle(center: [f64; 2], r: f64, samples: usize) -> Self {
        let points = (0..samples)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / samples as f64;
                [center[0] + r * t.cos(), center[1] + r * t.sin()]
            })
            .collect();
        Contour { points }
    }

    /// Longest edge.
    pub fn spacing(&self) -> f64 {
        self.edges().map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1])).fold(0.0, f64::max)
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.points.len();
        (0..n).map(move |k| (self.points[k], self.points[(k + 1) % n]))
    }

    /// Winding number of the contour itself around `x`; nonzero means inside.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let mut wn = 0i32;
        for (a, b) in self.edges() {
            let cross = (b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1]);
            if a[1] <= x[1] {
                if b[1] > x[1] && cross > 0.0 {
                    wn += 1;
                }
            } else if b[1] <= x[1] && cross < 0.0 {
                wn -= 1;
            }
        }
        wn != 0
    }
}

fn image_of(f: &VectorField, c: &Contour) -> Vec<[f64; 2]> {
    let ctr = f.grid.center();
    c.points
        .iter()
        .map(|p| {
            let v = f.eval([p[0] + ctr[0], p[1] + ctr[1]]);
            [v[0], v[1]]
        })
        .collect()
}

fn winding(image: &[[f64; 2]], y: [f64; 2]) -> f64 {
    let n = image.len();
    let mut total = 0.0;
    for k in 0..n {
        let a = [image[k][0] - y[0], image[k][1] - y[1]];
        let b = [image[(k + 1) % n][0] - y[0], image[(k + 1) % n][1] - y[1]];
        total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
    }
    total / std::f64::consts::TAU
}

fn min_dist(image: &[[f64; 2]], y: [f64; 2]) -> f64 {
    image.iter().map(|p| (p[0] - y[0]).hypot(p[1] - y[1])).fold(f64::INFINITY, f64::min)
}

/// Contour image with the distance threshold `10 · spacing · Lip`.
struct ImagedContour {
    image: Vec<[f64; 2]>,
    needed: f64,
}

impl ImagedContour {
    fn new(f: &VectorField, c: &Contour) -> Result<Self> {
        f.require_dim(2)?;
        let image = image_of(f, c);
        let n = image.len();
        let mut lip: f64 = 0.0;
        for k in 0..n {
            let (p, q) = (c.points[k], c.points[(k + 1) % n]);
            let (a, b) = (image[k], image[(k + 1) % n]);
            let dp = (q[0] - p[0]).hypot(q[1] - p[1]);
            if dp > 0.0 {
                lip = lip.max((b[0] - a[0]).hypot(b[1] - a[1]) / dp);
            }
        }
        Ok(ImagedContour { image, needed: 10.0 * c.spacing() * lip })
    }

    fn degree(&self, y: [f64; 2]) -> Result<i64> {
        let dist = min_dist(&self.image, y);
        if !(dist > self.needed) {
            return Err(Error::ContourTooClose { dist, needed: self.needed });
        }
        let w = winding(&self.image, y);
        let r = w.round();
        if (w - r).abs() >= 0.1 {
            return Err(Error::AmbiguousDegree(w));
        }
        Ok(r as i64)
    }
}

/// `deg(f, region; y)` as the winding number of `f - y` along the contour.
pub fn degree(f: &VectorField, contour: &Contour, y: [f64; 2]) -> Result<i64> {
    ImagedContour::new(f, contour)?.degree(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeFormula {
    /// `∫ g(y) deg(f, region; y) dy` on the target grid.
    pub lhs: f64,
    /// `Σ det ∇f(x) g(f(x)) h²` over domain nodes inside the contour.
    pub rhs: f64,
    pub residual: f64,
}

/// Both sides of the degree formula for a target weight `g` given as a
/// function of the target point, integrated on the nodes of `target`
/// (read in window coordinates).
pub fn degree_formula_with(
    f: &VectorField,
    contour: &Contour,
    target: &Grid,
    g: impl Fn([f64; 2]) -> f64 + Sync,
) -> Result<DegreeFormula> {
    let ic = ImagedContour::new(f, contour)?;
    let lhs = (0..target.len())
        .into_par_iter()
        .map(|k| {
            let (i1, i2) = target.unidx(k);
            let y = target.window_coords(i1, i2);
            let gy = g(y);
            if gy == 0.0 {
                return Ok(0.0);
            }
            let dist = min_dist(&ic.image, y);
            if dist < 2.0 * target.h() {
                return Err(Error::InvalidParameter("target weight is supported near the image of the contour".into()));
            }
            let w = winding(&ic.image, y);
            let r = w.round();
            if (w - r).abs() >= 0.1 {
                return Err(Error::AmbiguousDegree(w));
            }
            Ok(gy * r)
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        * target.cell_area();
    let grid = f.grid;
    let jac = pointwise_jacobian(f)?;
    let rhs = (0..grid.len())
        .into_par_iter()
        .filter_map(|k| {
            let (i1, i2) = grid.unidx(k);
            let x = grid.window_coords(i1, i2);
            if !contour.contains(x) {
                return None;
            }
            let y = [f.comps[0].values[k], f.comps[1].values[k]];
            Some(jac.values[k] * g(y))
        })
        .sum::<f64>()
        * grid.cell_area();
    Ok(DegreeFormula { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// Degree formula with the target weight sampled as a field on `g.grid`.
pub fn degree_formula_residual(f: &VectorField, contour: &Contour, g: &ScalarField) -> Result<DegreeFormula> {
    let ctr = g.grid.center();
    degree_formula_with(f, contour, &g.grid, |y| g.eval([y[0] + ctr[0], y[1] + ctr[1]]))
}

/// Area covered by the images of grid cells, each replaced by the bounding
/// box of its corner images and rasterised on a target lattice of the same
/// spacing. Only cells whose corners all lie in the window square
/// `|x - c|∞ <= half` are used. Returns `(h, area)` per input map.
pub fn image_measure(maps: &[VectorField], half: f64) -> Result<Vec<(f64, f64)>> {
    maps.iter()
        .map(|f| {
            f.require_dim(2)?;
            let g = f.grid;
            let h = g.h();
            let tol = 1e-9;
            let inside = |i1: usize, i2: usize| {
                let w = g.window_coords(i1, i2);
                w[0].abs().max(w[1].abs()) <= half + tol * h
            };
            let mut covered: HashSet<(i64, i64)> = HashSet::new();
            for i1 in 0..g.n1 - 1 {
                for i2 in 0..g.n2 - 1 {
                    if !(inside(i1, i2) && inside(i1 + 1, i2 + 1)) {
                        continue;
                    }
                    let corners = [(i1, i2), (i1 + 1, i2), (i1, i2 + 1), (i1 + 1, i2 + 1)];
                    let mut lo = [f64::INFINITY; 2];
                    let mut hi = [f64::NEG_INFINITY; 2];
                    for &(a, b) in &corners {
                        let k = g.idx(a, b);
                        for c in 0..2 {
                            let v = f.comps[c].values[k];
                            lo[c] = lo[c].min(v);
                            hi[c] = hi[c].max(v);
                        }
                    }
                    let range = |c: usize| {
                        let a = (lo[c] / h + tol).floor() as i64;
                        let b = ((hi[c] / h - tol).ceil() as i64).max(a + 1);
                        a..b
                    };
                    for t1 in range(0) {
                        for t2 in range(1) {
                            covered.insert((t1, t2));
                        }
                    }
                }
            }
            Ok((h, covered.len() as f64 * h * h))
        })
        .collect()
}
