//! Report writers. JSON carries everything; CSV is one row per check for
//! plotting and diffing.

use std::path::Path;

use fracsob_core::RateFit;

use crate::error::Result;
use crate::io::{write_json, write_text};
use crate::suite::SuiteReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// From the file extension; anything but `.csv` is JSON.
    pub fn of(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn suite_csv(r: &SuiteReport) -> String {
    let mut out = String::from("criterion,name,check,pass,value,relation,bound\n");
    for c in &r.criteria {
        for k in &c.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.id,
                quote(&c.name),
                quote(&k.name),
                k.pass,
                num(k.value),
                k.relation,
                num(k.bound)
            ));
        }
    }
    out
}

pub fn write_suite(path: &Path, r: &SuiteReport) -> Result<()> {
    match Format::of(path) {
        Format::Json => write_json(path, r),
        Format::Csv => write_text(path, &suite_csv(r)),
    }
}

/// `label,eps,value` rows for a set of named ladders.
pub fn ladder_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a [(f64, f64)])>) -> String {
    let mut out = String::from("label,eps,value\n");
    for (label, ladder) in rows {
        for (e, v) in ladder {
            out.push_str(&format!("{},{},{}\n", quote(label), num(*e), num(*v)));
        }
    }
    out
}

/// Rate fits as a CSV table, one row per ladder point, with the fit repeated.
pub fn fits_csv<'a>(fits: impl IntoIterator<Item = (String, &'a RateFit)>) -> String {
    let mut out = String::from("label,eps,value,slope,intercept,r2\n");
    for (label, f) in fits {
        for (e, v) in &f.ladder {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                quote(&label),
                num(*e),
                num(*v),
                num(f.slope),
                num(f.intercept),
                num(f.r2)
            ));
        }
    }
    out
}

/// One line per criterion: id, verdict, name, and the first failing check.
pub fn summary_line(c: &crate::suite::CriterionResult) -> String {
    let verdict = if c.pass { "PASS" } else { "FAIL" };
    let passed = c.checks.iter().filter(|k| k.pass).count();
    let mut line = format!("criterion {:>2} {verdict}  {} ({passed}/{} checks, {:.1} s)", c.id, c.name, c.checks.len(), c.seconds);
    if let Some(f) = c.failures().next() {
        line.push_str(&format!(
            " -- claim not confirmed: {}; {}: {} {} {}",
            c.claim,
            f.name,
            num(f.value),
            f.relation,
            num(f.bound)
        ));
    }
    line
}
