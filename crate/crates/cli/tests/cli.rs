use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fracsob_cli::io;
use fracsob_cli::suite::SuiteReport;
use fracsob_core::Grid;
use serde_json::Value;

fn fracsob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsob")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn field_files_round_trip_with_drift() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.bin");
    let g = Grid::unit(16);
    let periodic: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
    let a = fracsob_core::ScalarField::with_drift(g, periodic, [1.0, -0.5]).unwrap();
    let b = fracsob_core::ScalarField::from_fn(g, |x| (x[0] * x[1]).sin());
    io::write_field(&path, "pair", &[a.clone(), b.clone()]).unwrap();

    let (header, comps) = io::read_field(&path).unwrap();
    assert_eq!((header.n1, header.n2, header.m, header.name.as_str()), (16, 16, 2, "pair"));
    assert_eq!(header.drift, Some(vec![[1.0, -0.5], [0.0, 0.0]]));
    assert_eq!(comps[0].values, a.values);
    assert_eq!(comps[0].drift, a.drift);
    assert_eq!(comps[1].values, b.values);
    assert!(comps[1].is_periodic());
}

#[test]
fn truncated_payload_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.bin");
    let g = Grid::unit(8);
    io::write_field(&path, "x", &[fracsob_core::ScalarField::zeros(g)]).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(io::read_field(&path).is_err());
}

#[test]
fn generated_cone_gradient_has_the_atom_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("grad.bin");
    let phi = dir.path().join("bump.bin");
    let out = dir.path().join("pair.json");
    assert!(fracsob(&["generate", "--field", "cone-gradient", "--n", "128", "--out", s(&map)]).status.success());
    assert!(fracsob(&["generate", "--field", "bump", "--n", "128", "--out", s(&phi)]).status.success());
    let o = fracsob(&["jacobian", "--map", s(&map), "--test", s(&phi), "--ladder", "4", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    let ladder = v["ladder"].as_array().expect("ladder present");
    assert_eq!(ladder.len(), 4);
    // The bump peaks at e^-1 on the apex.
    let last = ladder.last().unwrap()[1].as_f64().unwrap();
    let want = 3.0 * std::f64::consts::PI / 4.0 * (-1.0f64).exp();
    assert!((last - want).abs() < 0.03, "{last} vs {want}");
}

#[test]
fn degree_of_the_perturbed_identity_around_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("pid.bin");
    let contour = dir.path().join("circle.csv");
    assert!(fracsob(&["generate", "--field", "perturbed-identity", "--n", "64", "--out", s(&map)]).status.success());
    let mut text = String::from("x1,x2\n");
    for i in 0..512 {
        let t = TAU * i as f64 / 512.0;
        text.push_str(&format!("{},{}\n", 0.3 * t.cos(), 0.3 * t.sin()));
    }
    fs::write(&contour, text).unwrap();
    let o = fracsob(&["degree", "--map", s(&map), "--contour", s(&contour), "--y", "0.01,-0.02"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1");
    let o = fracsob(&["degree", "--map", s(&map), "--contour", s(&contour), "--y", "0.45,0.45"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "0");
}

#[test]
fn unknown_scenario_lists_the_known_ones() {
    let o = fracsob(&["suite", "--scenario", "torus"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for name in ["plane", "cylinder", "cone", "ruled", "hilbert"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_config_fields_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"grid": {"n": 64}, "sigma": 3}"#).unwrap();
    let o = fracsob(&["suite", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_suite_passes_with_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("r.json");
    fs::write(&cfg, r#"{"criteria": []}"#).unwrap();
    let o = fracsob(&["suite", "--config", s(&cfg), "--out", s(&out), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let r: SuiteReport = serde_json::from_value(json(&out)).unwrap();
    assert!(r.criteria.is_empty());
    assert_eq!(r.total_checks, 0);
    assert!(r.pass);
}

#[test]
fn a_violated_tolerance_exits_one_and_names_the_claim() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("r.csv");
    fs::write(&cfg, r#"{"tolerances": {"shear_identity": 0.0}}"#).unwrap();
    let o = fracsob(&["suite", "--config", s(&cfg), "--criteria", "7", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL"), "{err}");
    assert!(err.contains("rank-one curl-free gradient"), "{err}");

    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("criterion,name,check,pass,value,relation,bound"));
    assert!(lines.all(|l| l.starts_with("7,")));
}

#[test]
fn selected_criteria_pass_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = fracsob(&["suite", "--n", "64", "--criteria", "7,14", "--out", s(out), "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra: SuiteReport = serde_json::from_value(json(&a)).unwrap();
    let rb: SuiteReport = serde_json::from_value(json(&b)).unwrap();
    assert_eq!(ra.criteria.iter().map(|c| c.id).collect::<Vec<_>>(), vec![7, 14]);
    for (ca, cb) in ra.criteria.iter().zip(&rb.criteria) {
        let keep = |c: &fracsob_cli::suite::CriterionResult| {
            c.checks.iter().filter(|k| !k.timing).cloned().collect::<Vec<_>>()
        };
        assert_eq!(keep(ca), keep(cb));
    }
}

#[test]
fn out_of_range_criterion_is_a_usage_error() {
    let o = fracsob(&["suite", "--criteria", "17"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plane_scenario_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plane.json");
    let o = fracsob(&["suite", "--scenario", "plane", "--n", "128", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["scenario"], "plane");
    assert_eq!(v["n"], 128);
}

#[test]
fn immersion_analyze_writes_the_classification() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cyl.json");
    let labels = dir.path().join("labels.csv");
    let o = fracsob(&[
        "immersion-analyze",
        "--scenario",
        "cylinder",
        "--n",
        "128",
        "--eps-ladder",
        "4",
        "--out",
        s(&out),
        "--classification",
        s(&labels),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&labels).unwrap();
    assert_eq!(csv.lines().next(), Some("x1,x2,label,theta"));
    assert!(csv.lines().count() > 1);
    assert!(o.stderr.is_empty());
}

#[test]
fn too_many_rungs_for_the_grid_is_refused() {
    let o = fracsob(&["immersion-analyze", "--scenario", "plane", "--n", "32", "--eps-ladder", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rungs"));
}

#[test]
fn abscont_on_a_lipschitz_curve() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = dir.path().join("ac.json");
    let mut text = String::from("x,y\n");
    for i in 0..=1024 {
        let t = i as f64 / 1024.0;
        text.push_str(&format!("{},{}\n", (TAU * t).cos(), (TAU * t).sin()));
    }
    fs::write(&curve, text).unwrap();
    let o = fracsob(&["abscont", "--curve", s(&curve), "--s", "0.7", "--p", "2", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert!((v["t"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert!(v["moduli"].is_object());
}

#[test]
fn seminorm_of_a_generated_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("r.bin");
    let csv = dir.path().join("r.csv");
    let out = dir.path().join("sn.json");
    let o = fracsob(&["generate", "--field", "radial-power", "--n", "32", "--out", s(&f), "--csv", s(&csv)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 32 * 32 + 1);
    let o = fracsob(&[
        "seminorm", "--field", s(&f), "--s", "0.5", "--p", "2", "--eps-ladder", "2", "--out", s(&out),
    ]);
    // Two rungs are too few for a fit.
    assert_eq!(o.status.code(), Some(2));
    let o = fracsob(&["generate", "--field", "radial-power", "--n", "128", "--out", s(&f)]);
    assert!(o.status.success());
    let o = fracsob(&[
        "seminorm", "--field", s(&f), "--s", "0.5", "--p", "2", "--eps-ladder", "4", "--window-radius", "0.25",
        "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    let sn = v["seminorm"].as_f64().unwrap();
    assert!(sn.is_finite() && sn > 0.0);
    assert_eq!(v["components"].as_array().unwrap().len(), 1);
}

#[test]
fn config_subcommand_prints_a_loadable_default() {
    let o = fracsob(&["config"]);
    assert!(o.status.success());
    let c: fracsob_cli::Config = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(c, fracsob_cli::Config::default());
}
