//! Suite configuration. Every tolerance the suite asserts lives here; the
//! committed `config/default.json` is the serialisation of
//! [`Config::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    /// Fractional index of the `W^{s,p}` corpus.
    pub s: f64,
    pub p: f64,
    /// Seed for random fields and targets drawn by the suite.
    pub seed: u64,
    /// Criteria to run, by number.
    pub criteria: Vec<u32>,
    pub ladders: LadderConfig,
    pub scenario: ScenarioParams,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    /// Rungs of the mollification ladder `L/8, L/16, …`, cut at `2h`.
    pub eps_rungs: usize,
    /// Grid sizes of the covered-area ladder.
    pub image_sizes: Vec<usize>,
    /// `δ` ladder for the absolute-continuity moduli.
    pub deltas: Vec<f64>,
    pub hilbert_orders: Vec<u32>,
    /// Box sizes `r0 2^{-j}` for the smooth curve.
    pub curve_r0: f64,
    pub curve_scales: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub perturbation: f64,
    pub contour_radius: f64,
    pub contour_samples: usize,
    /// Radius of the target weight in the degree formula.
    pub target_radius: f64,
    pub degree_targets: usize,
    /// Radius of the disk the random degree targets are drawn from.
    pub target_disk: f64,
    /// The atom's test function is 1 up to `atom_inner` and 0 beyond
    /// `atom_outer` (units of L).
    pub atom_inner: f64,
    pub atom_outer: f64,
    /// Radius of the bump test function (units of L).
    pub bump_radius: f64,
    pub image_half: f64,
    /// Grid of the calibration corpus and of the cone-derived Hodge check.
    pub calibration_n: usize,
    pub cone_hodge_n: usize,
    pub curve_samples: usize,
    pub lacunary_samples: usize,
    /// `(s, p)` of the lacunary curve.
    pub curve_s: f64,
    pub curve_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub spectral_relative: f64,
    pub spectral_seconds: f64,
    pub mollify_slopes: [f64; 3],
    pub mollify_r2: f64,
    pub mollify_seconds: f64,
    pub commutator_slack: f64,
    pub rate_slack: f64,
    pub metric_sup: f64,
    pub codazzi_corrected: f64,
    pub codazzi_raw: f64,
    pub shear_identity: f64,
    pub degree_residual: f64,
    pub atom_relative: f64,
    pub atom_seconds: f64,
    pub identity_constant: f64,
    pub identity_rank1: f64,
    pub identity_coherence: f64,
    pub hodge_reconstruction: f64,
    pub hodge_decrease: f64,
    pub ruled_fraction: f64,
    pub cylinder_angle_deg: f64,
    pub apex_cluster: usize,
    pub radial_angle_deg: f64,
    pub agreement_fraction: f64,
    /// Classification tolerance on channel variation.
    pub developability: f64,
    pub image_factor: f64,
    pub identity_area: f64,
    pub hilbert_content: f64,
    pub suite_seconds: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            grid: GridConfig::default(),
            s: 2.0 / 3.0,
            p: 3.0,
            seed: 11,
            criteria: (1..=16).collect(),
            ladders: LadderConfig::default(),
            scenario: ScenarioParams::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 256, length: 1.0 }
    }
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            eps_rungs: 5,
            image_sizes: vec![64, 128, 256],
            deltas: vec![0.125, 0.0625, 0.03125, 0.015625],
            hilbert_orders: vec![4, 5, 6, 7],
            curve_r0: 0.0625,
            curve_scales: 5,
        }
    }
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            perturbation: 0.2,
            contour_radius: 0.3,
            contour_samples: 1024,
            target_radius: 0.15,
            degree_targets: 20,
            target_disk: 0.2,
            atom_inner: 0.1,
            atom_outer: 0.25,
            bump_radius: 0.2,
            image_half: 0.25,
            calibration_n: 64,
            cone_hodge_n: 128,
            curve_samples: 4097,
            lacunary_samples: 1025,
            curve_s: 0.7,
            curve_p: 2.0,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            spectral_relative: 1e-10,
            spectral_seconds: 5.0,
            mollify_slopes: [0.52, -0.48, -1.48],
            mollify_r2: 0.9,
            mollify_seconds: 60.0,
            commutator_slack: 0.15,
            rate_slack: 0.15,
            metric_sup: 1e-2,
            codazzi_corrected: 1e-6,
            codazzi_raw: 1e-2,
            shear_identity: 1e-10,
            degree_residual: 1e-4,
            atom_relative: 0.02,
            atom_seconds: 30.0,
            identity_constant: 1e-8,
            identity_rank1: 1e-6,
            identity_coherence: 1e-3,
            hodge_reconstruction: 1e-8,
            hodge_decrease: 10.0,
            ruled_fraction: 0.99,
            cylinder_angle_deg: 2.0,
            apex_cluster: 9,
            radial_angle_deg: 3.0,
            agreement_fraction: 0.95,
            developability: 1e-6,
            image_factor: 2.0,
            identity_area: 0.05,
            hilbert_content: 0.5,
            suite_seconds: 600.0,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        crate::io::read_json(path)
    }

    pub fn grid(&self) -> Result<fracsob_core::Grid> {
        Ok(fracsob_core::Grid::square(self.grid.n, self.grid.length)?)
    }

    /// `L/8 · 2^{-j}` for `j < eps_rungs`, dropping scales below `2h`.
    pub fn eps_ladder(&self, grid: &fracsob_core::Grid) -> Vec<f64> {
        eps_ladder(grid, self.ladders.eps_rungs)
    }
}

pub fn eps_ladder(grid: &fracsob_core::Grid, rungs: usize) -> Vec<f64> {
    (0..rungs)
        .map(|j| grid.length / 8.0 * 0.5f64.powi(j as i32))
        .filter(|&e| e >= 2.0 * grid.h() * (1.0 - 1e-12))
        .collect()
}
