//! Per-scenario reports: every rate fit, residual, pairing and
//! classification the modules produce for one test map.

use fracsob_core::abscont;
use fracsob_core::geometry::{
    detect_developability, immersion_channels, immersion_ladder, Classification, Geometry, Label,
};
use fracsob_core::hodge;
use fracsob_core::jacobian::{self, Contour};
use fracsob_core::scenario::{self, Scenario};
use fracsob_core::sobolev::bump;
use fracsob_core::{Grid, ScalarField};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub n: usize,
    pub results: Value,
    /// Developability labels, for immersion scenarios.
    #[serde(skip)]
    pub classification: Option<Classification>,
}

pub fn run_scenario(name: &str, config: &Config) -> Result<ScenarioReport> {
    let sc: Scenario = name.parse()?;
    let grid = config.grid()?;
    run_on(sc, grid, &config.eps_ladder(&grid), config)
}

/// Runs `sc` on `grid` over the mollification ladder `ladder`.
pub fn run_on(sc: Scenario, grid: Grid, ladder: &[f64], config: &Config) -> Result<ScenarioReport> {
    let (results, classification) = if sc.is_immersion() {
        let (v, c) = immersion_report(sc, grid, ladder, config)?;
        (v, Some(c))
    } else {
        let v = match sc {
            Scenario::Rank1Map => rank1_report(grid, ladder, config)?,
            Scenario::PerturbedIdentity => perturbed_report(grid, ladder, config)?,
            Scenario::Hilbert => hilbert_report(config)?,
            _ => unreachable!("immersions handled above"),
        };
        (v, None)
    };
    Ok(ScenarioReport { scenario: sc.name().to_string(), n: grid.n1, results, classification })
}

fn label_counts(c: &Classification) -> Value {
    json!({
        "inside": c.inside(),
        "flat": c.flat(),
        "ruled": c.ruled(),
        "singular": c.count(|l| *l == Label::Singular),
        "tol": c.tol,
    })
}

fn immersion_report(sc: Scenario, grid: Grid, ladder: &[f64], config: &Config) -> Result<(Value, Classification)> {
    let imm = scenario::immersion(sc, grid)?;
    let lad = immersion_ladder(&imm, config.s, ladder)?;
    let eps = *ladder.last().ok_or(fracsob_core::Error::BadLadder { min: 1 })?;
    let geo = Geometry::of(&imm.u, eps)?;
    let phi = bump(grid, grid.center(), config.scenario.bump_radius * grid.length);
    let gauss = geo.gauss(&phi);
    let ii = geo.second_form();
    let det_ii = imm
        .mask
        .nodes()
        .map(|k| (ii.t11.values[k] * ii.t22.values[k] - ii.t12.values[k].powi(2)).abs())
        .fold(0.0, f64::max);
    // the cone's apex lies outside its analysis annulus, so it is classified
    // on the whole interior disk
    let region = if sc == Scenario::Cone { scenario::interior_disk(grid) } else { imm.mask.clone() };
    let tol = config.tolerances.developability;
    let class = detect_developability(&immersion_channels(&imm), &region, tol)?;
    let mut out = json!({
        "isometry_residual": imm.isometry_residual()?,
        "ladder": lad,
        "finest_eps": eps,
        "gauss": gauss,
        "max_abs_det_ii": det_ii,
        "classification": label_counts(&class),
    });
    match sc {
        Scenario::Cone => {
            let du3 = scenario::cone_gradient(grid);
            let (a, b) = (config.scenario.atom_inner * grid.length, config.scenario.atom_outer * grid.length);
            let plateau =
                ScalarField::from_window_fn(grid, |w| 1.0 - scenario::smoothstep((w[0].hypot(w[1]) - a) / (b - a)).0);
            let p = jacobian::dist_jacobian(&du3, &plateau, ladder)?;
            out["atom"] = json!({ "pairing": p, "expected": scenario::CONE_ATOM });
        }
        Scenario::Cylinder | Scenario::Ruled => {
            let mut triples = Vec::new();
            for m in 0..3 {
                let (l, gm, f) = hodge::coherence_triple(&imm.u, eps, m)?;
                let r = hodge::jacobian_identity_check(&l, &gm, &f, &phi, ladder)?;
                triples.push(json!({ "m": m, "lhs_ladder": r.lhs.ladder, "rhs_ladder": r.rhs.ladder,
                    "constraint_residual": r.constraint_residual, "agree": r.agree }));
            }
            out["coherence_identity"] = Value::Array(triples);
            let agreement = crate::suite::simultaneity(&imm, eps, tol, config.tolerances.cylinder_angle_deg)?;
            out["potential_agreement"] = json!(agreement);
        }
        _ => {}
    }
    Ok((out, class))
}

fn rank1_report(grid: Grid, ladder: &[f64], config: &Config) -> Result<Value> {
    let f = scenario::rank1_map(grid);
    let jac = jacobian::pointwise_jacobian(&f)?;
    let shear: Vec<Value> = [0.1, 0.01]
        .iter()
        .map(|&d| -> Result<Value> {
            let j = jacobian::pointwise_jacobian(&jacobian::shear_perturb(&f, d)?)?;
            let err = j.values.iter().map(|v| (v - d * d).abs()).fold(0.0, f64::max);
            Ok(json!({ "delta": d, "max_error": err }))
        })
        .collect::<Result<_>>()?;
    let phi = bump(grid, grid.center(), config.scenario.bump_radius * grid.length);
    let pairing = jacobian::dist_jacobian(&f, &phi, ladder)?;
    let grids: Vec<Grid> = config
        .ladders
        .image_sizes
        .iter()
        .map(|&n| Grid::square(n, grid.length))
        .collect::<std::result::Result<_, _>>()?;
    let maps: Vec<_> = grids.iter().map(|&g| scenario::rank1_map(g)).collect();
    let areas = jacobian::image_measure(&maps, config.scenario.image_half * grid.length)?;
    Ok(json!({
        "max_abs_jacobian": jac.max_abs(),
        "shear": shear,
        "pairing": pairing,
        "covered_area": areas,
    }))
}

fn perturbed_report(grid: Grid, ladder: &[f64], config: &Config) -> Result<Value> {
    let sp = &config.scenario;
    let f = scenario::perturbed_identity(grid, sp.perturbation);
    let contour = Contour::circle([0.0, 0.0], sp.contour_radius, sp.contour_samples);
    let r = sp.target_radius;
    let formula = jacobian::degree_formula_with(&f, &contour, &grid, |y| {
        let q = (y[0] * y[0] + y[1] * y[1]) / (r * r);
        if q < 1.0 {
            (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    })?;
    let phi = bump(grid, grid.center(), sp.bump_radius * grid.length);
    let direct = jacobian::pointwise_jacobian(&f)?.mul(&phi)?.integral();
    let pairing = jacobian::dist_jacobian(&f, &phi, ladder)?;
    Ok(json!({
        "degree_at_center": jacobian::degree(&f, &contour, [0.0, 0.0])?,
        "degree_formula": formula,
        "pairing": pairing,
        "direct_pairing": direct,
    }))
}

fn hilbert_report(config: &Config) -> Result<Value> {
    let mut out = Vec::new();
    for &order in &config.ladders.hilbert_orders {
        let curve = abscont::hilbert_curve(order)?;
        let r0 = 0.5f64.powi(order as i32 - 3);
        let est = abscont::hausdorff_content(&curve.points, 2.0, &abscont::dyadic_ladder(r0, 4))?;
        out.push(json!({ "order": order, "content": est }));
    }
    Ok(Value::Array(out))
}

/// Error for names outside the scenario list.
pub fn unknown(name: &str) -> CliError {
    CliError::Usage(format!("unknown scenario {name:?}; known: {}", Scenario::names().join(", ")))
}
