use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracsob_cli::error::{CliError, Result};
use fracsob_cli::report::{self, Format};
use fracsob_cli::{config, io, scenarios, suite, Config};
use fracsob_core::abscont::{self, DimensionVerdict};
use fracsob_core::scenario::{self, Scenario};
use fracsob_core::{hodge, jacobian, mollify, sobolev, Grid, Mask, VectorField};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fracsob", version, about = "Fractional Sobolev maps on the periodic square")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Gagliardo seminorm of a field, and the ladder of [f - f_ε].
    Seminorm(SeminormArgs),
    /// Mollification rates ‖f_ε - f‖ and ‖∇^k f_ε‖ with log-log fits.
    MollifyRates(RatesArgs),
    /// Distributional Jacobian pairing of a planar map with a test function.
    Jacobian(JacobianArgs),
    /// Degree of a planar map along a closed contour.
    Degree(DegreeArgs),
    /// Mollified immersion analysis of a built-in scenario.
    ImmersionAnalyze(ImmersionArgs),
    /// Both sides of Jac(f)[φ] = Jac(g)[λ²φ] for ∇f = λ∇g.
    HodgeCheck(HodgeArgs),
    /// Absolute-continuity moduli and image content of a sampled curve.
    Abscont(AbscontArgs),
    /// Runs the acceptance suite, or one scenario report.
    Suite(SuiteArgs),
    /// Writes a built-in test field to a .bin/.json pair.
    Generate(GenerateArgs),
    /// Prints the default configuration as JSON.
    Config,
}

#[derive(Args)]
struct SeminormArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    p: f64,
    /// Restrict the double sum to the centred disk of this radius (units of L).
    #[arg(long)]
    window_radius: Option<f64>,
    /// Rungs of the ε ladder.
    #[arg(long, default_value_t = 5)]
    eps_ladder: usize,
    /// .json or .csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    eps_ladder: usize,
    #[arg(long)]
    window_radius: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JacobianArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Rungs of the ε ladder.
    #[arg(long, default_value_t = 5)]
    ladder: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DegreeArgs {
    #[arg(long)]
    map: PathBuf,
    /// CSV of x1,x2 points in window coordinates.
    #[arg(long)]
    contour: PathBuf,
    /// Target point y1,y2.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    y: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImmersionArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    eps_ladder: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of node labels (x1,x2,label,theta).
    #[arg(long)]
    classification: Option<PathBuf>,
}

#[derive(Args)]
struct HodgeArgs {
    #[arg(long)]
    lambda: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    phi: PathBuf,
    #[arg(long, default_value_t = 5)]
    eps_ladder: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AbscontArgs {
    /// CSV, one sample per row, uniformly spaced on [0, 1].
    #[arg(long)]
    curve: PathBuf,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.125,0.0625,0.03125,0.015625")]
    deltas: Vec<f64>,
    /// Largest box size of the content ladder (five dyadic scales).
    #[arg(long, default_value_t = 0.0625)]
    r0: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the grid size of the config.
    #[arg(long)]
    n: Option<usize>,
    /// Criteria to run, e.g. 1,7,14 (default: those in the config).
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u32>>,
    /// Produce the report for one scenario instead of the suite.
    #[arg(long)]
    scenario: Option<String>,
    /// Report path, .json or .csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct GenerateArgs {
    /// plane, cylinder, cone, ruled, rank1-map, perturbed-identity,
    /// cone-gradient, radial-power or bump.
    #[arg(long)]
    field: String,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also export x1,x2,value columns to this CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` when a contracted check failed.
fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Seminorm(a) => seminorm(a),
        Cmd::MollifyRates(a) => rates(a),
        Cmd::Jacobian(a) => pairing(a),
        Cmd::Degree(a) => degree(a),
        Cmd::ImmersionAnalyze(a) => immersion(a),
        Cmd::HodgeCheck(a) => hodge_check(a),
        Cmd::Abscont(a) => curve(a),
        Cmd::Suite(a) => run_suite(a),
        Cmd::Generate(a) => generate(a),
        Cmd::Config => {
            println!("{}", serde_json::to_string_pretty(&Config::default()).expect("config serialises"));
            Ok(true)
        }
    }
}

fn emit(out: Option<&Path>, value: &serde_json::Value, csv: impl FnOnce() -> String) -> Result<()> {
    match out {
        None => println!("{}", serde_json::to_string_pretty(value).expect("json values serialise")),
        Some(p) if Format::of(p) == Format::Csv => io::write_text(p, &csv())?,
        Some(p) => io::write_json(p, value)?,
    }
    Ok(())
}

fn window(grid: Grid, radius: Option<f64>) -> Option<Mask> {
    radius.map(|r| Mask::disk(grid, r * grid.length))
}

fn ladder(grid: &Grid, rungs: usize) -> Result<Vec<f64>> {
    let l = config::eps_ladder(grid, rungs);
    if l.len() < rungs {
        return Err(CliError::Usage(format!(
            "only {} of {rungs} rungs L/8, L/16, ... stay above 2h on a {}² grid",
            l.len(),
            grid.n1
        )));
    }
    Ok(l)
}

fn seminorm(a: SeminormArgs) -> Result<bool> {
    let (header, comps) = io::read_field(&a.field)?;
    let grid = comps[0].grid;
    let win = window(grid, a.window_radius);
    let refs: Vec<_> = comps.iter().collect();
    let total = sobolev::gagliardo_seminorm_vec(&refs, a.s, a.p, win.as_ref())?;
    let per: Vec<f64> =
        comps.iter().map(|c| sobolev::gagliardo_seminorm(c, a.s, a.p, win.as_ref())).collect::<std::result::Result<_, _>>()?;
    let eps = ladder(&grid, a.eps_ladder)?;
    let diffs: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| -> Result<(f64, f64)> {
            let m = mollify::Mollifier::new(grid, e)?;
            let d: Vec<_> = comps.iter().map(|c| m.apply(c)?.sub(c)).collect::<std::result::Result<_, _>>()?;
            let r: Vec<_> = d.iter().collect();
            Ok((e, sobolev::gagliardo_seminorm_vec(&r, a.s, a.p, win.as_ref())?))
        })
        .collect::<Result<_>>()?;
    let fit = fracsob_core::RateFit::fit_floored(&diffs, fracsob_core::rate::ROUNDING_FLOOR)?;
    let v = json!({ "field": header.name, "s": a.s, "p": a.p, "seminorm": total, "components": per,
        "mollified_difference": fit });
    emit(a.out.as_deref(), &v, || report::fits_csv([("[f - f_eps]".to_string(), &fit)]))?;
    Ok(true)
}

fn rates(a: RatesArgs) -> Result<bool> {
    let (_, comps) = io::read_field(&a.field)?;
    let f = VectorField::new(comps)?;
    let eps = ladder(&f.grid, a.eps_ladder)?;
    let r = mollify::mollify_rates(&f, a.s, a.p, &a.k, &eps, window(f.grid, a.window_radius).as_ref())?;
    let v = json!({ "s": a.s, "p": a.p, "rates": r });
    emit(a.out.as_deref(), &v, || report::fits_csv(r.iter().map(|o| (format!("k={}", o.k), &o.fit))))?;
    Ok(true)
}

fn pairing(a: JacobianArgs) -> Result<bool> {
    let f = io::read_vector(&a.map, 2)?;
    let phi = io::read_scalar(&a.test)?;
    let p = jacobian::dist_jacobian(&f, &phi, &ladder(&f.grid, a.ladder)?)?;
    let v = serde_json::to_value(&p).expect("pairing serialises");
    emit(a.out.as_deref(), &v, || report::ladder_csv([("pairing", p.ladder.as_slice())]))?;
    Ok(true)
}

fn degree(a: DegreeArgs) -> Result<bool> {
    if a.y.len() != 2 {
        return Err(CliError::Usage(format!("--y takes two coordinates, got {}", a.y.len())));
    }
    let f = io::read_vector(&a.map, 2)?;
    let c = io::read_contour(&a.contour)?;
    let d = jacobian::degree(&f, &c, [a.y[0], a.y[1]])?;
    match a.out {
        Some(p) => io::write_json(&p, &json!({ "y": a.y, "degree": d }))?,
        None => println!("{d}"),
    }
    Ok(true)
}

fn immersion(a: ImmersionArgs) -> Result<bool> {
    let sc: Scenario = a.scenario.parse().map_err(|_| scenarios::unknown(&a.scenario))?;
    if !sc.is_immersion() {
        return Err(CliError::Usage(format!("{} is not an immersion scenario", sc.name())));
    }
    let mut cfg = a.config.as_deref().map(Config::load).transpose()?.unwrap_or_default();
    cfg.grid.n = a.n;
    let grid = cfg.grid()?;
    let r = scenarios::run_on(sc, grid, &ladder(&grid, a.eps_ladder)?, &cfg)?;
    if let (Some(p), Some(c)) = (&a.classification, &r.classification) {
        io::write_classification_csv(p, c)?;
    }
    let v = serde_json::to_value(&r).expect("report serialises");
    emit(a.out.as_deref(), &v, || String::new())?;
    Ok(true)
}

fn hodge_check(a: HodgeArgs) -> Result<bool> {
    let lambda = io::read_scalar(&a.lambda)?;
    let g = io::read_vector(&a.g, 2)?;
    let f = io::read_vector(&a.f, 2)?;
    let phi = io::read_scalar(&a.phi)?;
    let r = hodge::jacobian_identity_check(&lambda, &f, &g, &phi, &ladder(&f.grid, a.eps_ladder)?)?;
    let v = json!({
        "lhs_ladder": r.lhs.ladder,
        "rhs_ladder": r.rhs.ladder,
        "constraint_residual": r.constraint_residual,
        "verdict": if r.agree { "agree" } else { "disagree" },
    });
    emit(a.out.as_deref(), &v, || {
        report::ladder_csv([("lhs", r.lhs.ladder.as_slice()), ("rhs", r.rhs.ladder.as_slice())])
    })?;
    Ok(r.agree)
}

fn curve(a: AbscontArgs) -> Result<bool> {
    let c = io::read_curve(&a.curve)?;
    let t = a.s * a.p - 1.0;
    let check = if t >= 0.0 { Some(abscont::ac_monotone_check(&c, t, a.p, 0.0, 1.0 / a.s, &a.deltas)?) } else { None };
    let dim = abscont::curve_image_dimension(&c, a.s, a.p, &abscont::dyadic_ladder(a.r0, 5))?;
    let ok = check.as_ref().map_or(true, |m| m.holds())
        && !matches!(dim, DimensionVerdict::Checked { decreasing: false, .. });
    let v = json!({ "s": a.s, "p": a.p, "t": t, "moduli": check, "image": dim });
    emit(a.out.as_deref(), &v, || match &check {
        Some(m) => {
            let orig: Vec<(f64, f64)> = m.deltas.iter().cloned().zip(m.original.iter().cloned()).collect();
            let der: Vec<(f64, f64)> = m.deltas.iter().cloned().zip(m.derived.iter().cloned()).collect();
            report::ladder_csv([("(sp-1,p)", orig.as_slice()), ("(0,1/s)", der.as_slice())])
        }
        None => String::from("label,eps,value\n"),
    })?;
    Ok(ok)
}

fn run_suite(a: SuiteArgs) -> Result<bool> {
    let mut cfg = a.config.as_deref().map(Config::load).transpose()?.unwrap_or_default();
    if let Some(n) = a.n {
        cfg.grid.n = n;
    }
    if let Some(c) = a.criteria {
        cfg.criteria = c;
    }
    if let Some(name) = a.scenario {
        if name.parse::<Scenario>().is_err() {
            return Err(scenarios::unknown(&name));
        }
        let r = scenarios::run_scenario(&name, &cfg)?;
        let v = serde_json::to_value(&r).expect("report serialises");
        emit(a.out.as_deref(), &v, || String::new())?;
        return Ok(true);
    }
    let quiet = a.quiet;
    let r = suite::run_with(&cfg, |c| {
        if !quiet {
            eprintln!("{}", report::summary_line(c));
        }
    })?;
    if let Some(p) = &a.out {
        report::write_suite(p, &r)?;
    }
    if !quiet {
        eprintln!("{} checks, {} failed, {:.1} s", r.total_checks, r.failed_checks, r.seconds);
    }
    Ok(r.pass)
}

fn generate(a: GenerateArgs) -> Result<bool> {
    let g = Grid::unit(a.n);
    let comps = match a.field.as_str() {
        "cone-gradient" => scenario::cone_gradient(g).comps,
        "radial-power" => vec![scenario::radial_power(g, 1.0 / 3.0)],
        "bump" => vec![sobolev::bump(g, g.center(), 0.2)],
        name => {
            let sc: Scenario = name.parse().map_err(|_| {
                CliError::Usage(format!(
                    "unknown field {name:?}; known: {}, cone-gradient, radial-power, bump",
                    Scenario::names().join(", ")
                ))
            })?;
            match sc {
                Scenario::Plane => scenario::plane(g).comps,
                Scenario::Cylinder => scenario::cylinder(g).comps,
                Scenario::Cone => scenario::cone(g).comps,
                Scenario::Ruled => scenario::ruled(g).comps,
                Scenario::Rank1Map => scenario::rank1_map(g).comps,
                Scenario::PerturbedIdentity => scenario::perturbed_identity(g, scenario::PERTURBATION).comps,
                Scenario::Hilbert => {
                    return Err(CliError::Usage("hilbert is a curve; it has no field".into()));
                }
            }
        }
    };
    io::write_field(&a.out, &a.field, &comps)?;
    if let Some(p) = a.csv {
        io::write_field_csv(&p, &comps)?;
    }
    Ok(true)
}
