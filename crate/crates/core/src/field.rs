//! Sampled fields on the periodic square grid.
//!
//! Nodes sit at `x = (i1 h1, i2 h2)` and values are stored row-major with the
//! axis-2 index contiguous. A scalar field may carry a linear *drift*: its
//! samples are `p(x) + drift · (x - c)` with `p` periodic and `c` the centre of
//! the fundamental cell. This is how sawtooth-periodised objects such as the
//! identity map are represented without losing their derivatives.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub length: f64,
}

impl Grid {
    pub fn new(n1: usize, n2: usize, length: f64) -> Result<Self> {
        for n in [n1, n2] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "resolution {n} must be a power of two and at least 8"
                )));
            }
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("period {length} must be positive")));
        }
        Ok(Grid { n1, n2, length })
    }

    pub fn square(n: usize, length: f64) -> Result<Self> {
        Grid::new(n, n, length)
    }

    /// Unit torus at resolution `n`; panics on an invalid `n`.
    pub fn unit(n: usize) -> Self {
        Grid::square(n, 1.0).expect("valid resolution")
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h1(&self) -> f64 {
        self.length / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.length / self.n2 as f64
    }

    /// The coarser of the two spacings.
    pub fn h(&self) -> f64 {
        self.h1().max(self.h2())
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    #[inline]
    pub fn unidx(&self, k: usize) -> (usize, usize) {
        (k / self.n2, k % self.n2)
    }

    /// Index of the node `(i1 + d1, i2 + d2)` with periodic wrap.
    #[inline]
    pub fn shifted(&self, i1: usize, i2: usize, d1: isize, d2: isize) -> usize {
        let j1 = (i1 as isize + d1).rem_euclid(self.n1 as isize) as usize;
        let j2 = (i2 as isize + d2).rem_euclid(self.n2 as isize) as usize;
        self.idx(j1, j2)
    }

    pub fn coords(&self, i1: usize, i2: usize) -> [f64; 2] {
        [i1 as f64 * self.h1(), i2 as f64 * self.h2()]
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * self.length, 0.5 * self.length]
    }

    /// Coordinates relative to the cell centre, in `[-L/2, L/2)`.
    pub fn window_coords(&self, i1: usize, i2: usize) -> [f64; 2] {
        let x = self.coords(i1, i2);
        let c = self.center();
        [x[0] - c[0], x[1] - c[1]]
    }

    /// Centre node index; the cone apex and other point singularities live here.
    pub fn center_node(&self) -> (usize, usize) {
        (self.n1 / 2, self.n2 / 2)
    }

    pub fn same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Signed torus offset of index `i` in `[-n/2, n/2)`.
    #[inline]
    pub fn signed(i: usize, n: usize) -> isize {
        if i < n / 2 {
            i as isize
        } else {
            i as isize - n as isize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub drift: [f64; 2],
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()], drift: [0.0; 2] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField { grid, values: vec![c; grid.len()], drift: [0.0; 2] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values, drift: [0.0; 2] })
    }

    /// Samples `f` at the node coordinates `x ∈ [0, L)²`.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                values.push(f(grid.coords(i1, i2)));
            }
        }
        ScalarField { grid, values, drift: [0.0; 2] }
    }

    /// Samples `f` in window coordinates (origin at the cell centre).
    pub fn from_window_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                values.push(f(grid.window_coords(i1, i2)));
            }
        }
        ScalarField { grid, values, drift: [0.0; 2] }
    }

    /// Periodic samples plus the linear part `drift · (x - c)`.
    pub fn with_drift(grid: Grid, periodic: Vec<f64>, drift: [f64; 2]) -> Result<Self> {
        let mut f = ScalarField::from_values(grid, periodic)?;
        f.add_drift(drift);
        Ok(f)
    }

    /// The linear field `a · (x - c)`.
    pub fn linear(grid: Grid, a: [f64; 2]) -> Self {
        let mut f = ScalarField::zeros(grid);
        f.add_drift(a);
        f
    }

    pub fn add_drift(&mut self, a: [f64; 2]) {
        if a == [0.0, 0.0] {
            return;
        }
        let g = self.grid;
        for i1 in 0..g.n1 {
            for i2 in 0..g.n2 {
                let w = g.window_coords(i1, i2);
                self.values[g.idx(i1, i2)] += a[0] * w[0] + a[1] * w[1];
            }
        }
        self.drift[0] += a[0];
        self.drift[1] += a[1];
    }

    pub fn is_periodic(&self) -> bool {
        self.drift == [0.0, 0.0]
    }

    pub fn require_periodic(&self) -> Result<()> {
        if self.is_periodic() {
            Ok(())
        } else {
            Err(Error::NonPeriodic)
        }
    }

    /// Samples with the linear part removed.
    pub fn periodic_part(&self) -> Vec<f64> {
        if self.is_periodic() {
            return self.values.clone();
        }
        let g = self.grid;
        let mut out = self.values.clone();
        for i1 in 0..g.n1 {
            for i2 in 0..g.n2 {
                let w = g.window_coords(i1, i2);
                out[g.idx(i1, i2)] -= self.drift[0] * w[0] + self.drift[1] * w[1];
            }
        }
        out
    }

    /// Value at the node `(i1 + d1, i2 + d2)`, continuing the linear part
    /// across the cell boundary instead of wrapping it.
    #[inline]
    pub fn value_unwrapped(&self, i1: usize, i2: usize, d1: isize, d2: isize) -> f64 {
        let g = self.grid;
        let k = g.shifted(i1, i2, d1, d2);
        if self.is_periodic() {
            return self.values[k];
        }
        let (j1, j2) = g.unidx(k);
        let wj = g.window_coords(j1, j2);
        let wi = g.window_coords(i1, i2);
        let x = [wi[0] + d1 as f64 * g.h1(), wi[1] + d2 as f64 * g.h2()];
        self.values[k] - self.drift[0] * wj[0] - self.drift[1] * wj[1]
            + self.drift[0] * x[0]
            + self.drift[1] * x[1]
    }

    /// Bilinear interpolant at a physical point; the periodic part wraps and
    /// the linear part is evaluated exactly in window coordinates.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let g = self.grid;
        let per = |i1: usize, i2: usize| -> f64 {
            let k = g.idx(i1, i2);
            if self.is_periodic() {
                self.values[k]
            } else {
                let w = g.window_coords(i1, i2);
                self.values[k] - self.drift[0] * w[0] - self.drift[1] * w[1]
            }
        };
        let s1 = x[0] / g.h1();
        let s2 = x[1] / g.h2();
        let f1 = s1.floor();
        let f2 = s2.floor();
        let t1 = s1 - f1;
        let t2 = s2 - f2;
        let i1 = (f1 as i64).rem_euclid(g.n1 as i64) as usize;
        let i2 = (f2 as i64).rem_euclid(g.n2 as i64) as usize;
        let j1 = (i1 + 1) % g.n1;
        let j2 = (i2 + 1) % g.n2;
        let p = (1.0 - t1) * (1.0 - t2) * per(i1, i2)
            + t1 * (1.0 - t2) * per(j1, i2)
            + (1.0 - t1) * t2 * per(i1, j2)
            + t1 * t2 * per(j1, j2);
        let c = g.center();
        p + self.drift[0] * (x[0] - c[0]) + self.drift[1] * (x[1] - c[1])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            drift: [0.0; 2],
        }
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
            drift: [a * self.drift[0], a * self.drift[1]],
        }
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.grid.same(&other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            drift: [self.drift[0] + other.drift[0], self.drift[1] + other.drift[1]],
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product; both factors must be periodic.
    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        self.grid.same(&other.grid)?;
        self.require_periodic()?;
        other.require_periodic()?;
        Ok(ScalarField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            drift: [0.0; 2],
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ f dx` by the rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn lp_norm(&self, p: f64, window: Option<&Mask>) -> f64 {
        lp_norm_of(&self.grid, |k| self.values[k].abs(), p, window)
    }
}

/// `(∫ |v|^p)^{1/p}` over the window, `p = ∞` giving the sup.
pub fn lp_norm_of(grid: &Grid, v: impl Fn(usize) -> f64, p: f64, window: Option<&Mask>) -> f64 {
    let inside = |k: usize| window.map_or(true, |m| m.inside[k]);
    if p.is_infinite() {
        return (0..grid.len()).filter(|&k| inside(k)).fold(0.0, |m, k| m.max(v(k)));
    }
    let s: f64 = (0..grid.len()).filter(|&k| inside(k)).map(|k| v(k).powf(p)).sum();
    (s * grid.cell_area()).powf(1.0 / p)
}

/// A map into `R^m`, one scalar field per component. An analytic Jacobian can
/// be attached as sampled fields `jacobian[2 m + i] = ∂_i f^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: Vec<ScalarField>,
    pub jacobian: Option<Vec<ScalarField>>,
}

impl VectorField {
    pub fn new(comps: Vec<ScalarField>) -> Result<Self> {
        let grid = comps
            .first()
            .ok_or_else(|| Error::InvalidParameter("vector field needs components".into()))?
            .grid;
        for c in &comps {
            grid.same(&c.grid)?;
        }
        Ok(VectorField { grid, comps, jacobian: None })
    }

    pub fn with_jacobian(mut self, jac: Vec<ScalarField>) -> Result<Self> {
        if jac.len() != 2 * self.comps.len() {
            return Err(Error::InvalidParameter("jacobian needs 2 entries per component".into()));
        }
        for j in &jac {
            self.grid.same(&j.grid)?;
        }
        self.jacobian = Some(jac);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn require_dim(&self, m: usize) -> Result<()> {
        if self.dim() == m {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("expected {m} components, got {}", self.dim())))
        }
    }

    pub fn value(&self, k: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c.values[k]).collect()
    }

    pub fn eval(&self, x: [f64; 2]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn is_periodic(&self) -> bool {
        self.comps.iter().all(|c| c.is_periodic())
    }
}

/// Node selection used to restrict norms and checks to a subwindow.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub grid: Grid,
    pub inside: Vec<bool>,
}

impl Mask {
    pub fn full(grid: Grid) -> Self {
        Mask { grid, inside: vec![true; grid.len()] }
    }

    pub fn from_window_fn(grid: Grid, f: impl Fn([f64; 2]) -> bool) -> Self {
        let mut inside = Vec::with_capacity(grid.len());
        for i1 in 0..grid.n1 {
            for i2 in 0..grid.n2 {
                inside.push(f(grid.window_coords(i1, i2)));
            }
        }
        Mask { grid, inside }
    }

    /// Annulus `r_min <= |x - c| <= r_max` around the cell centre.
    pub fn annulus(grid: Grid, r_min: f64, r_max: f64) -> Self {
        let tol = 1e-12 * grid.length;
        Mask::from_window_fn(grid, |w| {
            let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
            r >= r_min - tol && r <= r_max + tol
        })
    }

    pub fn disk(grid: Grid, r: f64) -> Self {
        Mask::annulus(grid, 0.0, r)
    }

    /// Centred square `|x_i - c_i| <= half` for both axes.
    pub fn square(grid: Grid, half: f64) -> Self {
        let tol = 1e-12 * grid.length;
        Mask::from_window_fn(grid, |w| w[0].abs() <= half + tol && w[1].abs() <= half + tol)
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        self.grid.same(&other.grid)?;
        Ok(Mask {
            grid: self.grid,
            inside: self.inside.iter().zip(&other.inside).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|b| **b).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_area()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, b)| **b).map(|(k, _)| k)
    }
}

/// Symmetric 2×2 tensor field `(t11, t12, t22)`: metrics and second
/// fundamental forms.
#[derive(Debug, Clone, PartialEq)]
pub struct SymField {
    pub t11: ScalarField,
    pub t12: ScalarField,
    pub t22: ScalarField,
}

pub type MetricField = SymField;

impl SymField {
    pub fn grid(&self) -> Grid {
        self.t11.grid
    }

    pub fn identity(grid: Grid) -> Self {
        SymField {
            t11: ScalarField::constant(grid, 1.0),
            t12: ScalarField::zeros(grid),
            t22: ScalarField::constant(grid, 1.0),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        match (i, j) {
            (0, 0) => &self.t11,
            (1, 1) => &self.t22,
            _ => &self.t12,
        }
    }

    /// Row `i` as the one-form `(t_i1, t_i2)`.
    pub fn row(&self, i: usize) -> [&ScalarField; 2] {
        [self.entry(i, 0), self.entry(i, 1)]
    }
}

/// Differential k-form on the 2-torus: one component for k = 0 and k = 2, two
/// for k = 1 (coefficients of dx1 and dx2).
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    pub degree: usize,
    pub comps: Vec<ScalarField>,
}

impl FormField {
    pub fn new(degree: usize, comps: Vec<ScalarField>) -> Result<Self> {
        let expected = match degree {
            0 | 2 => 1,
            1 => 2,
            _ => return Err(Error::InvalidParameter(format!("no {degree}-forms in two dimensions"))),
        };
        if comps.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "a {degree}-form needs {expected} components"
            )));
        }
        let g = comps[0].grid;
        for c in &comps {
            g.same(&c.grid)?;
        }
        Ok(FormField { degree, comps })
    }

    pub fn grid(&self) -> Grid {
        self.comps[0].grid
    }

    pub fn zero(grid: Grid, degree: usize) -> Self {
        let n = if degree == 1 { 2 } else { 1 };
        FormField { degree, comps: vec![ScalarField::zeros(grid); n] }
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        if self.degree != other.degree {
            return Err(Error::InvalidParameter("adding forms of different degree".into()));
        }
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(FormField { degree: self.degree, comps })
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        let neg = FormField { degree: other.degree, comps: other.comps.iter().map(|c| c.scale(-1.0)).collect() };
        self.add(&neg)
    }

    /// Pointwise Euclidean norm of the coefficients.
    pub fn pointwise_norm(&self, k: usize) -> f64 {
        self.comps.iter().map(|c| c.values[k] * c.values[k]).sum::<f64>().sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_of(&self.grid(), |k| self.pointwise_norm(k), p, None)
    }
}
