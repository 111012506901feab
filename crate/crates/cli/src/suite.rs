//! The sixteen acceptance criteria as named checks.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use fracsob_core::abscont::{self, DimensionVerdict};
use fracsob_core::geometry::{
    angle_between, constancy_agreement, detect_developability, immersion_channels, immersion_ladder,
    recover_potential, Channels, Classification, Geometry, Immersion, ImmersionLadder, Label,
};
use fracsob_core::hodge::{self, DET_ESTIMATE_C};
use fracsob_core::jacobian::{self, Contour};
use fracsob_core::mollify::{commutator_rates, mollify_rates};
use fracsob_core::scenario::{self, Scenario};
use fracsob_core::sobolev::bump;
use fracsob_core::spectral::{self, Scheme};
use fracsob_core::{Grid, ScalarField, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;

/// One asserted comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    /// `"<"`, `"<="`, `">="` or `"=="`, read as `value relation bound`.
    pub relation: String,
    pub bound: f64,
    /// Wall-clock checks are the only fields that differ between runs.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn cmp(name: impl Into<String>, value: f64, relation: &str, bound: f64) -> Check {
        let pass = match relation {
            "<" => value < bound,
            "<=" => value <= bound,
            ">=" => value >= bound,
            "==" => value == bound,
            other => unreachable!("relation {other}"),
        };
        Check { name: name.into(), pass, value, relation: relation.into(), bound, timing: false, detail: String::new() }
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check::cmp(name, value, "<", bound)
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check::cmp(name, value, "<=", bound)
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check::cmp(name, value, ">=", bound)
    }

    /// A yes/no property, recorded as `1 == 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Check {
        Check::cmp(name, if ok { 1.0 } else { 0.0 }, "==", 1.0)
    }

    pub fn seconds(name: impl Into<String>, value: f64, bound: f64) -> Check {
        Check { timing: true, ..Check::below(name, value, bound) }
    }

    pub fn with(mut self, detail: impl Into<String>) -> Check {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    /// The mathematical statement the criterion exercises; failures name it.
    pub claim: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub n: usize,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub total_checks: usize,
    pub failed_checks: usize,
    pub pass: bool,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn empty(config: &Config) -> SuiteReport {
        SuiteReport::from_results(config, Vec::new(), 0.0)
    }

    fn from_results(config: &Config, criteria: Vec<CriterionResult>, seconds: f64) -> SuiteReport {
        let total_checks = criteria.iter().map(|c| c.checks.len()).sum();
        let failed_checks = criteria.iter().map(|c| c.failures().count()).sum();
        SuiteReport {
            n: config.grid.n,
            seed: config.seed,
            pass: failed_checks == 0,
            criteria,
            total_checks,
            failed_checks,
            seconds,
        }
    }
}

/// `(id, short name, claim)` for every criterion.
pub const CRITERIA: [(u32, &str, &str); 16] = [
    (1, "spectral round trips", "periodic multiplier operators invert each other"),
    (2, "mollification rates", "mollifiers of W^{s,p} maps converge at rate s and blow up at rate s - k"),
    (3, "commutator rates", "the mollification commutator is of order 2s - k"),
    (4, "metric convergence", "the pullback metric of a mollified isometry converges to the identity"),
    (5, "christoffel and second form rates", "Christoffel symbols vanish and II stays bounded at the predicted rates"),
    (6, "codazzi residual", "mollified immersions satisfy Codazzi-Mainardi up to a vanishing commutator"),
    (7, "shear identity", "adding a rotation to a rank-one curl-free gradient makes its Jacobian delta squared"),
    (8, "degree formula", "the degree integrates the Jacobian against pulled-back weights"),
    (9, "cone jacobian atom", "the distributional Jacobian of the cone gradient is an atom of mass 3pi/4"),
    (10, "jacobian identity", "grad f = lambda grad g forces Jac f = lambda^2 Jac g"),
    (11, "hodge decomposition", "lambda dg splits into exact and co-exact parts whose mollified differences vanish"),
    (12, "determinant estimate", "wedge products of Hodge parts are bounded by their fractional seminorms"),
    (13, "developability", "fractional isometric immersions are developable"),
    (14, "zero-measure image", "a rank-one gradient map has an image of measure zero"),
    (15, "absolute continuity of curves", "fractional curves are absolutely continuous in the (t,p) sense"),
    (16, "suite runtime", "the full default suite completes within the runtime budget"),
];

/// Runs the criteria listed in the config, in numerical order. The runtime
/// criterion, when selected, is evaluated last over everything that ran.
pub fn run(config: &Config) -> Result<SuiteReport> {
    run_with(config, |_| {})
}

/// Like [`run`], calling `progress` after each criterion.
pub fn run_with(config: &Config, mut progress: impl FnMut(&CriterionResult)) -> Result<SuiteReport> {
    let wanted = &config.criteria;
    if let Some(bad) = wanted.iter().find(|&&i| !(1..=16).contains(&i)) {
        return Err(crate::error::CliError::Usage(format!("no criterion {bad}; criteria are numbered 1 to 16")));
    }
    let mut suite = Suite::new(config)?;
    let start = Instant::now();
    let mut out = Vec::new();
    for &(id, name, claim) in CRITERIA.iter().filter(|c| wanted.contains(&c.0) && c.0 != 16) {
        let t = Instant::now();
        let checks = suite.criterion(id)?;
        let r = CriterionResult {
            id,
            name: name.into(),
            claim: claim.into(),
            pass: checks.iter().all(|c| c.pass),
            checks,
            seconds: t.elapsed().as_secs_f64(),
        };
        progress(&r);
        out.push(r);
    }
    if wanted.contains(&16) {
        let total = start.elapsed().as_secs_f64();
        let (_, name, claim) = CRITERIA[15];
        let checks = vec![Check::seconds("suite wall time (s)", total, config.tolerances.suite_seconds)
            .with(format!("{} criteria", out.len()))];
        let r = CriterionResult { id: 16, name: name.into(), claim: claim.into(), pass: checks[0].pass, checks, seconds: total };
        progress(&r);
        out.push(r);
    }
    Ok(SuiteReport::from_results(config, out, start.elapsed().as_secs_f64()))
}

/// Immersion ladders shared by criteria 4 to 6.
struct Suite<'a> {
    cfg: &'a Config,
    grid: Grid,
    ladder: Vec<f64>,
    immersions: Vec<(Scenario, Immersion, ImmersionLadder)>,
}

impl<'a> Suite<'a> {
    fn new(cfg: &'a Config) -> Result<Self> {
        let grid = cfg.grid()?;
        let ladder = cfg.eps_ladder(&grid);
        Ok(Suite { cfg, grid, ladder, immersions: Vec::new() })
    }

    fn criterion(&mut self, id: u32) -> Result<Vec<Check>> {
        match id {
            1 => self.spectral(),
            2 => self.mollification(),
            3 => self.commutators(),
            4 => self.metric(),
            5 => self.christoffel(),
            6 => self.codazzi(),
            7 => self.shear(),
            8 => self.degree(),
            9 => self.atom(),
            10 => self.identity(),
            11 => self.hodge(),
            12 => self.det_estimate(),
            13 => self.developability(),
            14 => self.image(),
            15 => self.curves(),
            _ => unreachable!(),
        }
    }

    fn ladder_of(&mut self, s: Scenario) -> Result<&ImmersionLadder> {
        if !self.immersions.iter().any(|e| e.0 == s) {
            let imm = scenario::immersion(s, self.grid)?;
            let lad = immersion_ladder(&imm, self.cfg.s, &self.ladder)?;
            self.immersions.push((s, imm, lad));
        }
        Ok(&self.immersions.iter().find(|e| e.0 == s).expect("just inserted").2)
    }

    fn spectral(&mut self) -> Result<Vec<Check>> {
        let t = Instant::now();
        let tol = self.cfg.tolerances.spectral_relative;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let modes: Vec<(f64, f64, f64, f64)> = (0..24)
            .map(|_| {
                let (a, b) = loop {
                    let a = rng.gen_range(-20i32..=20);
                    let b = rng.gen_range(-20i32..=20);
                    if a != 0 || b != 0 {
                        break (a as f64, b as f64);
                    }
                };
                (a, b, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..TAU))
            })
            .collect();
        let l = self.grid.length;
        let f = ScalarField::from_fn(self.grid, |x| {
            modes.iter().map(|&(a, b, c, ph)| c * (TAU * (a * x[0] + b * x[1]) / l + ph).cos()).sum()
        });
        let scale = f.max_abs();
        let rel = |g: &ScalarField| -> Result<f64> { Ok(g.sub(&f)?.max_abs() / scale) };
        let lap_inv = rel(&spectral::laplacian(&spectral::inv_laplacian(&f)?))?;
        let inv_lap = rel(&spectral::inv_laplacian(&spectral::laplacian(&f))?)?;
        let r = spectral::riesz(&f)?;
        let mut rr = ScalarField::zeros(self.grid);
        for i in 0..2 {
            rr = rr.add(&spectral::riesz(&r.comps[i])?.comps[i])?;
        }
        let riesz = rel(&rr.scale(-1.0))?;
        let div = rel(&spectral::divergence(&spectral::grad_inv_laplacian(&f)?)?)?;
        let secs = t.elapsed().as_secs_f64();
        Ok(vec![
            Check::below("laplacian of inverse laplacian", lap_inv, tol),
            Check::below("inverse laplacian of laplacian", inv_lap, tol),
            Check::below("sum of squared Riesz transforms is -Id", riesz, tol),
            Check::below("divergence of gradient of inverse laplacian", div, tol)
                .with("inverse laplacian has symbol -1/|xi|^2, so the identity reads f = div D inv_lap f"),
            Check::seconds("wall time (s)", secs, self.cfg.tolerances.spectral_seconds),
        ])
    }

    fn corpus(&self) -> Vec<(&'static str, VectorField)> {
        let g = self.grid;
        vec![
            ("cone gradient", scenario::cone_gradient(g)),
            ("|x|^(1/3) bump", VectorField::new(vec![scenario::radial_power(g, 1.0 / 3.0)]).expect("one component")),
        ]
    }

    fn mollification(&mut self) -> Result<Vec<Check>> {
        let t = Instant::now();
        let tol = &self.cfg.tolerances;
        let window = scenario::interior_disk(self.grid);
        let mut out = Vec::new();
        for (name, f) in self.corpus() {
            let rates = mollify_rates(&f, self.cfg.s, self.cfg.p, &[0, 1, 2], &self.ladder, Some(&window))?;
            for r in rates {
                out.push(Check::at_least(format!("{name}: slope k={}", r.k), r.fit.slope, tol.mollify_slopes[r.k]));
                out.push(Check::at_least(format!("{name}: r2 k={}", r.k), r.fit.r2, tol.mollify_r2));
            }
        }
        out.push(Check::seconds("wall time (s)", t.elapsed().as_secs_f64(), tol.mollify_seconds));
        Ok(out)
    }

    fn commutators(&mut self) -> Result<Vec<Check>> {
        let window = scenario::interior_disk(self.grid);
        let (s, p) = (self.cfg.s, self.cfg.p);
        let cone = scenario::cone_gradient(self.grid);
        let radial = scenario::radial_power(self.grid, 1.0 / 3.0);
        let pairs = [
            ("|x|^(1/3) squared", &radial, &radial),
            ("cone x1-component squared", &cone.comps[0], &cone.comps[0]),
            ("cone components", &cone.comps[0], &cone.comps[1]),
        ];
        let mut out = Vec::new();
        for (name, f, g) in pairs {
            for r in commutator_rates(f, g, s, p, &[0, 1], &self.ladder, Some(&window))? {
                let bound = r.expected - self.cfg.tolerances.commutator_slack;
                out.push(Check::at_least(format!("{name}: slope k={}", r.k), r.fit.slope, bound));
            }
        }
        Ok(out)
    }

    fn metric(&mut self) -> Result<Vec<Check>> {
        let tol = self.cfg.tolerances.clone();
        let bound = 2.0 * self.cfg.s - tol.rate_slack;
        let mut out = Vec::new();
        for s in [Scenario::Cylinder, Scenario::Cone] {
            let lad = self.ladder_of(s)?;
            let sup = lad.rungs.last().map_or(f64::NAN, |r| r.metric_sup);
            out.push(Check::holds(format!("{}: det g > 1/4 at the finest scale", s.name()), lad.valid));
            out.push(Check::below(format!("{}: sup |g - Id| at the finest scale", s.name()), sup, tol.metric_sup));
            out.push(Check::at_least(format!("{}: slope of |g - Id| in L^(1/s)", s.name()), lad.metric_lq_fit.slope, bound));
        }
        Ok(out)
    }

    fn christoffel(&mut self) -> Result<Vec<Check>> {
        let slack = self.cfg.tolerances.rate_slack;
        let s = self.cfg.s;
        let mut out = Vec::new();
        for sc in [Scenario::Cylinder, Scenario::Ruled, Scenario::Cone] {
            let lad = self.ladder_of(sc)?;
            let gamma = lad.christoffel_fit.slope;
            let ii = lad.second_form_fit.slope;
            let zero = |v: f64| if v.is_infinite() { "identically zero" } else { "" };
            out.push(Check::at_least(format!("{}: Christoffel slope", sc.name()), gamma, 2.0 * s - 1.0 - slack).with(zero(gamma)));
            out.push(Check::at_least(format!("{}: II slope", sc.name()), ii, s - 1.0 - slack).with(zero(ii)));
        }
        Ok(out)
    }

    fn codazzi(&mut self) -> Result<Vec<Check>> {
        let tol = self.cfg.tolerances.clone();
        let mut out = Vec::new();
        for sc in [Scenario::Plane, Scenario::Cylinder, Scenario::Ruled, Scenario::Cone] {
            let lad = self.ladder_of(sc)?;
            let worst = lad.rungs.iter().map(|r| r.codazzi_corrected).fold(0.0, f64::max);
            out.push(Check::below(format!("{}: corrected residual over the ladder", sc.name()), worst, tol.codazzi_corrected));
        }
        let raw = self.ladder_of(Scenario::Cone)?.codazzi_raw();
        let detail = list(&raw);
        out.push(Check::holds("cone: raw L1 residual strictly decreasing", abscont::strictly_decreasing(&raw)).with(detail));
        out.push(Check::below("cone: raw L1 residual at the finest scale", *raw.last().unwrap_or(&f64::NAN), tol.codazzi_raw));
        Ok(out)
    }

    fn shear(&mut self) -> Result<Vec<Check>> {
        let f = scenario::rank1_map(self.grid);
        let mut spectral_only = f.clone();
        spectral_only.jacobian = None;
        let mut out = Vec::new();
        for delta in [0.1, 0.01] {
            for (how, map) in [("analytic gradient", &f), ("spectral gradient", &spectral_only)] {
                let j = jacobian::pointwise_jacobian(&jacobian::shear_perturb(map, delta)?)?;
                let err = j.values.iter().map(|v| (v - delta * delta).abs()).fold(0.0, f64::max);
                out.push(Check::below(format!("delta = {delta}, {how}"), err, self.cfg.tolerances.shear_identity));
            }
        }
        Ok(out)
    }

    fn degree(&mut self) -> Result<Vec<Check>> {
        let sp = &self.cfg.scenario;
        let g = self.grid;
        let f = scenario::perturbed_identity(g, sp.perturbation);
        let contour = Contour::circle([0.0, 0.0], sp.contour_radius, sp.contour_samples);
        let r = sp.target_radius;
        let weight = move |y: [f64; 2]| {
            let q = (y[0] * y[0] + y[1] * y[1]) / (r * r);
            if q < 1.0 {
                (-1.0 / (1.0 - q)).exp()
            } else {
                0.0
            }
        };
        let tol = self.cfg.tolerances.degree_residual;
        let mut out = Vec::new();
        let formula = jacobian::degree_formula_with(&f, &contour, &g, weight)?;
        out.push(Check::below("perturbed identity: formula residual", formula.residual, tol)
            .with(format!("lhs {:.9}, rhs {:.9}", formula.lhs, formula.rhs)));
        let swapped = VectorField::new(vec![f.comps[1].clone(), f.comps[0].clone()])?;
        let rev = jacobian::degree_formula_with(&swapped, &contour, &g, weight)?;
        out.push(Check::below("reflected perturbed identity: formula residual", rev.residual, tol)
            .with(format!("lhs {:.9}, rhs {:.9}", rev.lhs, rev.rhs)));
        let jac = jacobian::pointwise_jacobian(&f)?;
        let min_jac = jac.values.iter().cloned().fold(f64::INFINITY, f64::min);
        out.push(Check::at_least("perturbed identity: smallest Jacobian", min_jac, f64::MIN_POSITIVE));
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut positive = 0usize;
        for _ in 0..sp.degree_targets {
            let (rad, th) = (sp.target_disk * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
            positive += (jacobian::degree(&f, &contour, [rad * th.cos(), rad * th.sin()])? >= 1) as usize;
        }
        out.push(Check::cmp("random interior targets with positive degree", positive as f64, "==", sp.degree_targets as f64));
        Ok(out)
    }

    /// Radial test function equal to 1 up to `atom_inner` and 0 from
    /// `atom_outer` on.
    fn plateau(&self) -> ScalarField {
        let (a, b) = (self.cfg.scenario.atom_inner * self.grid.length, self.cfg.scenario.atom_outer * self.grid.length);
        ScalarField::from_window_fn(self.grid, |w| 1.0 - scenario::smoothstep((w[0].hypot(w[1]) - a) / (b - a)).0)
    }

    fn atom(&mut self) -> Result<Vec<Check>> {
        let t = Instant::now();
        let du3 = scenario::cone_gradient(self.grid);
        let p = jacobian::dist_jacobian(&du3, &self.plateau(), &self.ladder)?;
        let rel = (p.limit / scenario::CONE_ATOM - 1.0).abs();
        Ok(vec![
            Check::holds("pairing ladder converged", p.converged).with(format!("spread {:.2e}", p.spread())),
            Check::below("relative distance of the limit from 3pi/4", rel, self.cfg.tolerances.atom_relative)
                .with(format!("limit {:.6}", p.limit)),
            Check::seconds("wall time (s)", t.elapsed().as_secs_f64(), self.cfg.tolerances.atom_seconds),
        ])
    }

    fn identity(&mut self) -> Result<Vec<Check>> {
        let g = self.grid;
        let tol = self.cfg.tolerances.clone();
        let phi = bump(g, g.center(), self.cfg.scenario.bump_radius * g.length);
        let mut out = Vec::new();

        let k = TAU / g.length;
        let gmap = VectorField::new(vec![
            ScalarField::from_fn(g, |x| (k * x[0]).sin() * (k * x[1]).cos()),
            ScalarField::from_fn(g, |x| (k * x[1]).sin() + 0.3 * (k * x[0]).cos()),
        ])?;
        let c = 1.7;
        let fmap = VectorField::new(vec![gmap.comps[0].scale(c), gmap.comps[1].scale(c).map(|v| v + 1.0)])?;
        let id = hodge::jacobian_identity_check(&ScalarField::constant(g, c), &fmap, &gmap, &phi, &self.ladder)?;
        let gap = id.lhs.ladder.iter().zip(&id.rhs.ladder).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max);
        out.push(Check::below("constant lambda: largest rung difference", gap, tol.identity_constant));

        let (lambda, f, h) = hodge::rank1_triple(g)?;
        let r = hodge::jacobian_identity_check(&lambda, &f, &h, &phi, &self.ladder)?;
        let side = |p: &jacobian::DistPairing| p.ladder.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
        out.push(Check::below("rank-one triple: largest |Jac f[phi]|", side(&r.lhs), tol.identity_rank1));
        out.push(Check::below("rank-one triple: largest |Jac g[lambda^2 phi]|", side(&r.rhs), tol.identity_rank1));

        let eps = *self.ladder.last().expect("nonempty ladder");
        let cyl = scenario::cylinder(g);
        for m in 0..3 {
            let (l, gm, fpot) = hodge::coherence_triple(&cyl, eps, m)?;
            let r = hodge::jacobian_identity_check(&l, &gm, &fpot, &phi, &self.ladder)?;
            for (side, p) in [("lhs", &r.lhs), ("rhs", &r.rhs)] {
                let v: Vec<f64> = p.ladder.iter().map(|x| x.1.abs()).collect();
                let last = *v.last().expect("nonempty");
                out.push(
                    Check::below(format!("cylinder coherence m={m}: final |{side}|"), last, tol.identity_coherence)
                        .with(format!("ladder {}", list(&v))),
                );
                out.push(Check::at_most(format!("cylinder coherence m={m}: {side} does not grow"), last, v[0] + 1e-12));
            }
        }
        Ok(out)
    }

    fn hodge(&mut self) -> Result<Vec<Check>> {
        let g = self.grid;
        let tol = self.cfg.tolerances.clone();
        let k = TAU / g.length;
        let lambda = ScalarField::from_fn(g, |x| 1.0 + 0.3 * (k * x[0]).sin() * (k * x[1]).cos());
        let f = ScalarField::from_fn(g, |x| (k * x[0] + 2.0 * k * x[1]).sin() + 0.5 * (2.0 * k * x[0]).cos());
        let smooth = hodge::hodge_difference_ladder(&lambda, &spectral::gradient(&f, Scheme::Spectral), &self.ladder, None)?;
        let first = &smooth[0];
        let last = smooth.last().expect("nonempty ladder");
        let mut worst = smooth.iter().map(|r| r.reconstruction_residual).fold(0.0, f64::max);
        let mut out = vec![
            Check::at_least("smooth weight: decrease of [a] over the ladder", first.a_seminorm / last.a_seminorm, tol.hodge_decrease),
            Check::at_least(
                "smooth weight: decrease of [beta] over the ladder",
                first.beta_seminorm / last.beta_seminorm,
                tol.hodge_decrease,
            ),
        ];

        // cone-derived: lambda = n^m, df = grad u^m, both analytic
        let gc = Grid::square(self.cfg.scenario.cone_hodge_n, g.length)?;
        let lad = crate::config::eps_ladder(&gc, self.cfg.ladders.eps_rungs);
        let normal = scenario::cone_normal(gc);
        let jac = scenario::cone(gc).jacobian.expect("cone carries its gradient");
        for m in 0..3 {
            let df = VectorField::new(vec![jac[2 * m].clone(), jac[2 * m + 1].clone()])?;
            let rungs = hodge::hodge_difference_ladder(&normal[m], &df, &lad, None)?;
            worst = rungs.iter().map(|r| r.reconstruction_residual).fold(worst, f64::max);
            let a: Vec<f64> = rungs.iter().map(|r| r.a_seminorm).collect();
            out.push(Check::holds(format!("cone m={m}: [a] decreasing"), abscont::strictly_decreasing(&a)).with(list(&a)));
            // for m = 2 both factors are radial and beta vanishes identically
            if m < 2 {
                let b: Vec<f64> = rungs.iter().map(|r| r.beta_seminorm).collect();
                out.push(
                    Check::holds(format!("cone m={m}: [beta] decreasing"), abscont::strictly_decreasing(&b)).with(list(&b)),
                );
            }
        }
        out.insert(0, Check::below("largest reconstruction residual", worst, tol.hodge_reconstruction));
        Ok(out)
    }

    fn det_estimate(&mut self) -> Result<Vec<Check>> {
        let g = Grid::square(self.cfg.scenario.calibration_n, self.grid.length)?;
        let corpus = hodge::calibration_corpus(g, hodge::CALIBRATION_COUNT, hodge::CALIBRATION_SEED)?;
        let mut worst = [0.0f64; 3];
        let mut violations = 0usize;
        for e in &corpus {
            for (k, est) in e.estimates()?.iter().enumerate() {
                worst[k] = worst[k].max(est.ratio());
                violations += !est.holds(DET_ESTIMATE_C) as usize;
            }
        }
        let mut out = vec![Check::cmp("violations with the frozen constant", violations as f64, "==", 0.0)
            .with(format!("C = {DET_ESTIMATE_C}, {} entries", corpus.len()))];
        for (k, w) in worst.iter().enumerate() {
            out.push(Check::at_most(format!("largest ratio with {k} exact factors"), *w, DET_ESTIMATE_C));
        }
        Ok(out)
    }

    fn developability(&mut self) -> Result<Vec<Check>> {
        let g = self.grid;
        let tol = self.cfg.tolerances.clone();
        let mut out = Vec::new();

        let plane = scenario::plane_immersion(g);
        let c = detect_developability(&immersion_channels(&plane), &plane.mask, tol.developability)?;
        out.push(Check::cmp("plane: non-flat nodes", (c.inside() - c.flat()) as f64, "==", 0.0));

        let cyl = scenario::cylinder_immersion(g);
        let c = detect_developability(&immersion_channels(&cyl), &cyl.mask, tol.developability)?;
        out.push(Check::at_least("cylinder: ruled fraction", c.ruled() as f64 / c.inside() as f64, tol.ruled_fraction));
        let off = worst_angle(&c, |_| FRAC_PI_2);
        out.push(Check::at_most("cylinder: worst ruling angle from the axis (deg)", off.to_degrees(), tol.cylinder_angle_deg));

        let cone = scenario::cone_immersion(g);
        let c = detect_developability(&immersion_channels(&cone), &scenario::interior_disk(g), tol.developability)?;
        let sing = c.singular_nodes();
        let far = sing
            .iter()
            .map(|&k| {
                let (a, b) = g.unidx(k);
                let w = g.window_coords(a, b);
                w[0].hypot(w[1]) / g.h()
            })
            .fold(0.0, f64::max);
        out.push(Check::at_most("cone: singular nodes", sing.len() as f64, tol.apex_cluster as f64));
        out.push(Check::at_most("cone: farthest singular node from the apex (cells)", far, 2.0));
        let rest = c.inside() - sing.len();
        out.push(Check::at_least("cone: ruled fraction away from the apex", c.ruled() as f64 / rest as f64, tol.ruled_fraction));
        let radial = worst_angle(&c, |w| w[1].atan2(w[0]));
        out.push(Check::at_most("cone: worst ruling angle from radial (deg)", radial.to_degrees(), tol.radial_angle_deg));

        for (name, imm) in [("cylinder", cyl), ("ruled", scenario::ruled_immersion(g))] {
            for (m, frac) in simultaneity(&imm, *self.ladder.last().expect("nonempty"), tol.developability, tol.cylinder_angle_deg)?
                .into_iter()
                .enumerate()
            {
                out.push(Check::at_least(format!("{name}: potential vs grad u^{} agreement", m + 1), frac, tol.agreement_fraction));
            }
        }
        Ok(out)
    }

    fn image(&mut self) -> Result<Vec<Check>> {
        let tol = self.cfg.tolerances.clone();
        let half = self.cfg.scenario.image_half * self.grid.length;
        let grids: Vec<Grid> =
            self.cfg.ladders.image_sizes.iter().map(|&n| Grid::square(n, self.grid.length)).collect::<std::result::Result<_, _>>()?;
        let rank1: Vec<VectorField> = grids.iter().map(|&g| scenario::rank1_map(g)).collect();
        let areas = jacobian::image_measure(&rank1, half)?;
        let mut out = Vec::new();
        let v: Vec<f64> = areas.iter().map(|a| a.1).collect();
        out.push(Check::holds("rank-one map: covered area decreasing", abscont::strictly_decreasing(&v)).with(list(&v)));
        let per_h: Vec<f64> = areas.iter().map(|(h, a)| a / h).collect();
        let spread = per_h.iter().cloned().fold(0.0, f64::max) / per_h.iter().cloned().fold(f64::INFINITY, f64::min);
        out.push(Check::at_most("rank-one map: spread of area / h", spread, tol.image_factor));
        let ids: Vec<VectorField> = grids.iter().map(|&g| scenario::identity_map(g)).collect();
        let window = 4.0 * half * half;
        for ((h, a), g) in jacobian::image_measure(&ids, half)?.into_iter().zip(&grids) {
            let _ = h;
            out.push(Check::below(format!("identity at {}^2: relative area error", g.n1), (a / window - 1.0).abs(), tol.identity_area));
        }
        Ok(out)
    }

    fn curves(&mut self) -> Result<Vec<Check>> {
        let sp = &self.cfg.scenario;
        let lad = &self.cfg.ladders;
        let (s, p) = (sp.curve_s, sp.curve_p);
        let mut out = Vec::new();
        let lac = abscont::lacunary_curve(sp.lacunary_samples)?;
        let chk = abscont::ac_monotone_check(&lac, s * p - 1.0, p, 0.0, 1.0 / s, &lad.deltas)?;
        out.push(
            Check::holds(format!("lacunary curve: (sp-1, p) = ({:.1}, {p}) modulus decreasing", s * p - 1.0), chk.original_decreasing)
                .with(list(&chk.original)),
        );
        out.push(
            Check::holds(format!("lacunary curve: (0, 1/s) = (0, {:.4}) modulus decreasing", 1.0 / s), chk.derived_decreasing)
                .with(list(&chk.derived)),
        );
        for &order in &lad.hilbert_orders {
            let curve = abscont::hilbert_curve(order)?;
            let r0 = 0.5f64.powi(order as i32 - 3);
            let est = abscont::hausdorff_content(&curve.points, 2.0, &abscont::dyadic_ladder(r0, 4))?;
            out.push(Check::at_least(format!("Hilbert order {order}: content at exponent 2"), est.content, self.cfg.tolerances.hilbert_content));
        }
        let smooth = abscont::smooth_curve(sp.curve_samples)?;
        let ladder = abscont::dyadic_ladder(lad.curve_r0, lad.curve_scales);
        match abscont::curve_image_dimension(&smooth, s, p, &ladder)? {
            DimensionVerdict::Checked { above, decreasing, .. } => {
                let costs: Vec<f64> = above.costs.iter().map(|c| c.1).collect();
                out.push(Check::holds("smooth curve: content above 1/s decreasing", decreasing).with(list(&costs)));
            }
            DimensionVerdict::OutOfScope { reason } => out.push(Check::holds("smooth curve: content above 1/s decreasing", false).with(reason)),
        }
        let oos = matches!(abscont::curve_image_dimension(&smooth, 0.5, 2.0, &ladder)?, DimensionVerdict::OutOfScope { .. });
        out.push(Check::holds("sp = 1 is reported out of scope", oos));
        Ok(out)
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

/// Largest angle between ruled directions and `want(w)` at window point `w`.
fn worst_angle(c: &Classification, want: impl Fn([f64; 2]) -> f64) -> f64 {
    let g = c.grid;
    c.labels
        .iter()
        .enumerate()
        .filter_map(|(k, l)| match l {
            Label::Ruled { theta } => {
                let (a, b) = g.unidx(k);
                Some(angle_between(*theta, want(g.window_coords(a, b))))
            }
            _ => None,
        })
        .fold(0.0, f64::max)
}

/// Agreement of the constancy directions of the potential `f` with
/// `∇F = II_ε` and those of each `∇u^m`.
pub fn simultaneity(imm: &Immersion, eps: f64, tol: f64, max_angle_deg: f64) -> Result<Vec<f64>> {
    let geo = Geometry::of(&imm.u, eps)?;
    let pot = recover_potential(&geo.second_form())?;
    let cf = detect_developability(&Channels::Sampled(pot.f.comps.clone()), &imm.mask, tol)?;
    let grad = imm.analytic_gradient.clone();
    let g = imm.grid();
    let entries = fracsob_core::jacobian::gradient_entries(&imm.u);
    (0..imm.u.dim())
        .map(|m| {
            let ch = match &grad {
                Some(f) => {
                    let f = f.clone();
                    Channels::Analytic { grid: g, count: 2, eval: std::sync::Arc::new(move |w| f(w)[2 * m..2 * m + 2].to_vec()) }
                }
                None => Channels::Sampled(entries[2 * m..2 * m + 2].to_vec()),
            };
            let cu = detect_developability(&ch, &imm.mask, tol)?;
            Ok(constancy_agreement(&cf, &cu, max_angle_deg.to_radians())?)
        })
        .collect()
}
