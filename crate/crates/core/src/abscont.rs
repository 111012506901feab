//! `(t,p)`-absolute continuity moduli of sampled curves and box-cover upper
//! bounds for the Hausdorff content of their images.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Curve `I → ℝ^m` sampled at uniform parameter spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub spacing: f64,
    pub points: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(spacing: f64, points: Vec<Vec<f64>>) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("sample spacing {spacing} must be positive")));
        }
        let m = points.first().ok_or_else(|| Error::InvalidParameter("empty curve".into()))?.len();
        if m == 0 || points.iter().any(|p| p.len() != m) {
            return Err(Error::InvalidParameter("curve points must share a positive dimension".into()));
        }
        Ok(Curve { spacing, points })
    }

    /// `n` samples of `f` on `[0, 1]`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter("a curve needs at least two samples".into()));
        }
        let h = 1.0 / (n - 1) as f64;
        Curve::new(h, (0..n).map(|i| f(i as f64 * h)).collect())
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Samples `start..end`.
    pub fn restrict(&self, start: usize, end: usize) -> Result<Curve> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidParameter(format!("bad sample range {start}..{end}")));
        }
        Curve::new(self.spacing, self.points[start..end].to_vec())
    }

    /// Points of the polyline through the samples, at most `step` apart.
    pub fn densify(&self, step: f64) -> Vec<Vec<f64>> {
        let mut out = vec![self.points[0].clone()];
        for w in self.points.windows(2) {
            let d = dist(&w[0], &w[1]);
            let k = (d / step).ceil().max(1.0) as usize;
            for j in 1..=k {
                let t = j as f64 / k as f64;
                out.push(w[0].iter().zip(&w[1]).map(|(a, b)| a + t * (b - a)).collect());
            }
        }
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest `Σ_i sup_{x≠y∈I_i} |f(x)-f(y)|^p / |x-y|^t` over families of
/// non-overlapping sampled intervals of total length at most `δ`.
///
/// The maximum over families is exact (dynamic programming over the right
/// endpoint and the budget used), so the value is monotone in `δ`.
pub fn ac_modulus(f: &Curve, t: f64, p: f64, delta: f64) -> Result<f64> {
    if t < 0.0 || !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("need t ≥ 0 and p > 0, got t = {t}, p = {p}")));
    }
    let h = f.spacing;
    if delta < 2.0 * h {
        return Err(Error::InvalidParameter(format!(
            "budget δ = {delta} is below twice the sample spacing {h}"
        )));
    }
    let n = f.len();
    let budget = ((delta / h + 1e-9).floor() as usize).min(n - 1);
    let pair = |i: usize, j: usize| {
        dist(&f.points[i], &f.points[j]).powf(p) / ((j - i) as f64 * h).powf(t)
    };
    // ratio[l][i]: sup over sample pairs inside [x_i, x_{i+l}].
    let mut ratio: Vec<Vec<f64>> = vec![Vec::new(); budget + 1];
    ratio[1] = (0..n - 1).map(|i| pair(i, i + 1)).collect();
    for l in 2..=budget {
        let prev = &ratio[l - 1];
        ratio[l] = (0..n - l).map(|i| pair(i, i + l).max(prev[i]).max(prev[i + 1])).collect();
    }
    // best[i][b]: best family inside [x_0, x_i] using at most b steps.
    let width = budget + 1;
    let mut best = vec![0.0f64; n * width];
    for i in 1..n {
        for b in 0..=budget {
            let mut v = best[(i - 1) * width + b];
            for l in 1..=b.min(i) {
                v = v.max(best[(i - l) * width + b - l] + ratio[l][i - l]);
            }
            best[i * width + b] = v;
        }
    }
    Ok(best[(n - 1) * width + budget])
}

/// Moduli at both exponent pairs over a `δ` ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub deltas: Vec<f64>,
    pub original: Vec<f64>,
    pub derived: Vec<f64>,
    pub original_decreasing: bool,
    pub derived_decreasing: bool,
}

impl MonotoneCheck {
    pub fn holds(&self) -> bool {
        self.original_decreasing && self.derived_decreasing
    }
}

/// Strictly decreasing along the ladder.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Checks on a decreasing `δ` ladder that the `(t,p)` and `(t̃,p̃)` moduli
/// both decay, under `(1+t̃)/(1+t) ≤ p̃/p ≤ 1`.
pub fn ac_monotone_check(f: &Curve, t: f64, p: f64, t2: f64, p2: f64, deltas: &[f64]) -> Result<MonotoneCheck> {
    // Equality cases such as p̃ = 1/s meet the bound exactly.
    let slack = 1e-12;
    if (1.0 + t2) / (1.0 + t) > p2 / p + slack {
        return Err(Error::InvalidParameter(format!(
            "exponent condition (1+t̃)/(1+t) ≤ p̃/p fails: {} > {}",
            (1.0 + t2) / (1.0 + t),
            p2 / p
        )));
    }
    if p2 / p > 1.0 + slack {
        return Err(Error::InvalidParameter(format!("exponent condition p̃/p ≤ 1 fails: p̃/p = {}", p2 / p)));
    }
    if deltas.len() < 2 || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadLadder { min: 2 });
    }
    let original = deltas.iter().map(|&d| ac_modulus(f, t, p, d)).collect::<Result<Vec<_>>>()?;
    let derived = deltas.iter().map(|&d| ac_modulus(f, t2, p2, d)).collect::<Result<Vec<_>>>()?;
    Ok(MonotoneCheck {
        deltas: deltas.to_vec(),
        original_decreasing: strictly_decreasing(&original),
        derived_decreasing: strictly_decreasing(&derived),
        original,
        derived,
    })
}

/// Single-scale cover costs `N(r) (r√m/2)^p` and their minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub exponent: f64,
    pub costs: Vec<(f64, f64)>,
    pub content: f64,
}

/// Occupied boxes `Π [k_i r, (k_i+1) r)`.
pub fn box_count(points: &[Vec<f64>], r: f64) -> usize {
    let boxes: HashSet<Vec<i64>> =
        points.iter().map(|x| x.iter().map(|c| (c / r).floor() as i64).collect()).collect();
    boxes.len()
}

/// Upper bound on `H^p_∞` by single-scale box covers over a geometric
/// ladder of at least four scales.
pub fn hausdorff_content(points: &[Vec<f64>], p: f64, ladder: &[f64]) -> Result<ContentEstimate> {
    let m = points.first().ok_or_else(|| Error::InvalidParameter("empty point set".into()))?.len();
    if ladder.len() < 4 {
        return Err(Error::BadLadder { min: 4 });
    }
    let q = ladder[1] / ladder[0];
    if !(q > 0.0 && q < 1.0) || ladder.windows(2).any(|w| ((w[1] / w[0]) / q - 1.0).abs() > 1e-9) {
        return Err(Error::InvalidParameter("scale ladder must be geometric and decreasing".into()));
    }
    let diam = (m as f64 / 4.0).powf(p / 2.0);
    let costs: Vec<(f64, f64)> = ladder.iter().map(|&r| (r, box_count(points, r) as f64 * r.powf(p) * diam)).collect();
    let content = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    Ok(ContentEstimate { exponent: p, costs, content })
}

/// `r_0 2^{-j}` for `j < count`.
pub fn dyadic_ladder(r0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| r0 * 0.5f64.powi(j as i32)).collect()
}

/// Outcome of the image-dimension check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum DimensionVerdict {
    OutOfScope { reason: String },
    Checked {
        /// Costs at exponent `1/s + 0.1`, decreasing along the ladder.
        above: ContentEstimate,
        /// Costs at exponent `1/s - 0.1`; informational.
        below: ContentEstimate,
        decreasing: bool,
    },
}

/// Box-cover content of the image of a `W^{s,p}` curve at exponents
/// `1/s ± 0.1` over `ladder`; the costs above `1/s` should decay.
pub fn curve_image_dimension(f: &Curve, s: f64, p: f64, ladder: &[f64]) -> Result<DimensionVerdict> {
    if s * p <= 1.0 {
        return Ok(DimensionVerdict::OutOfScope {
            reason: format!("sp = {} ≤ 1; such curves can fill a square", s * p),
        });
    }
    let r_min = ladder.iter().cloned().fold(f64::INFINITY, f64::min);
    let pts = f.densify(0.25 * r_min);
    let above = hausdorff_content(&pts, 1.0 / s + 0.1, ladder)?;
    let below = hausdorff_content(&pts, 1.0 / s - 0.1, ladder)?;
    let decreasing = strictly_decreasing(&above.costs.iter().map(|c| c.1).collect::<Vec<_>>());
    Ok(DimensionVerdict::Checked { above, below, decreasing })
}

/// Iterate of order `k` of the Hilbert curve: the `4^k` cell centres of the
/// dyadic grid of `[0,1]²` in curve order.
pub fn hilbert_curve(order: u32) -> Result<Curve> {
    if order == 0 || order > 12 {
        return Err(Error::InvalidParameter(format!("Hilbert order {order} outside 1..=12")));
    }
    let side = 1usize << order;
    let n = side * side;
    let points = (0..n)
        .map(|d| {
            let (x, y) = hilbert_d2xy(side, d);
            vec![(x as f64 + 0.5) / side as f64, (y as f64 + 0.5) / side as f64]
        })
        .collect();
    Curve::new(1.0 / n as f64, points)
}

fn hilbert_d2xy(side: usize, d: usize) -> (usize, usize) {
    let (mut x, mut y, mut t) = (0usize, 0usize, d);
    let mut s = 1;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

/// Decay exponent of the lacunary coefficients; above 0.7, so the curve
/// lies in `W^{0.7,2}`.
pub const LACUNARY_DECAY: f64 = 0.75;

/// Planar lacunary curve `Σ_{j=1}^{J} 2^{-αj} (cos 2π2^j x, sin 2π2^j x)`
/// on `n` samples, with `2^J ≤ (n-1)/16` so every term is resolved.
pub fn lacunary_curve(n: usize) -> Result<Curve> {
    let mut terms = 0;
    while (1usize << (terms + 1)) * 16 <= n - 1 {
        terms += 1;
    }
    if terms == 0 {
        return Err(Error::InvalidParameter(format!("{n} samples cannot resolve a lacunary term")));
    }
    Curve::from_fn(n, |x| {
        let mut v = vec![0.0; 2];
        for j in 1..=terms {
            let a = 2f64.powf(-LACUNARY_DECAY * j as f64);
            let w = std::f64::consts::TAU * (1u64 << j) as f64 * x;
            v[0] += a * w.cos();
            v[1] += a * w.sin();
        }
        v
    })
}

/// Smooth closed test curve: a circle of radius 1/4 with a small bump.
pub fn smooth_curve(n: usize) -> Result<Curve> {
    Curve::from_fn(n, |x| {
        let w = std::f64::consts::TAU * x;
        let r = 0.25 + 0.03 * (3.0 * w).sin();
        vec![0.5 + r * w.cos(), 0.5 + r * w.sin()]
    })
}
