use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("kernel under-resolved: eps = {eps} is below 2h = {two_h}")]
    UnderResolved { eps: f64, two_h: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ladder must have at least {min} entries and strictly decreasing scales")]
    BadLadder { min: usize },

    #[error("field carries a non-periodic linear part; this operation needs a periodic field")]
    NonPeriodic,

    #[error("not an immersion on the mask: min det g = {0}")]
    NotImmersion(f64),

    #[error("triple does not satisfy ∇f = λ∇g (relative residual {0:e})")]
    Constraint(f64),

    #[error("degree ill-defined: target is too close to the image of the contour (distance {dist:e}, needed {needed:e})")]
    ContourTooClose { dist: f64, needed: f64 },

    #[error("degree is ambiguous: winding number {0} is not close to an integer")]
    AmbiguousDegree(f64),

    #[error("outside the supported range: {0}")]
    OutOfScope(String),

    #[error("mask selects no nodes")]
    EmptyMask,
}

pub type Result<T> = std::result::Result<T, Error>;
