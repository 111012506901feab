//! Numerical toolkit for fractional Sobolev maps on the periodic square:
//! Gagliardo seminorms, mollifier convergence rates, distributional
//! Jacobians and degree, mollified isometric immersions, Hodge
//! decompositions and absolute-continuity moduli of curves.

pub mod abscont;
pub mod error;
pub mod field;
pub mod geometry;
pub mod hodge;
pub mod jacobian;
pub mod mollify;
pub mod rate;
pub mod scenario;
pub mod sobolev;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{FormField, Grid, Mask, MetricField, ScalarField, SymField, VectorField};
pub use rate::RateFit;
