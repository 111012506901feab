//! Shared inputs for the kernel benchmarks.

use fracsob_core::jacobian::Contour;
use fracsob_core::scenario;
use fracsob_core::{Grid, ScalarField, VectorField};

/// A smooth periodic field with a few low modes.
pub fn smooth(n: usize) -> ScalarField {
    let tau = std::f64::consts::TAU;
    ScalarField::from_fn(Grid::unit(n), |x| (tau * x[0]).sin() * (2.0 * tau * x[1]).cos() + 0.3 * (tau * (x[0] + x[1])).cos())
}

pub fn perturbed_identity(n: usize) -> VectorField {
    scenario::perturbed_identity(Grid::unit(n), scenario::PERTURBATION)
}

pub fn circle(samples: usize) -> Contour {
    Contour::circle([0.0, 0.0], 0.3, samples)
}
