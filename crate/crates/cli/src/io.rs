//! Field files: a flat little-endian `f64` payload with a JSON sidecar, and
//! plain CSV for contours, curves and exports.
//!
//! A field with `m` components on an `n1 × n2` grid stores `m · n1 · n2`
//! values, component by component, each in row-major order (`i1` slow). The
//! sidecar sits next to the payload with the extension `.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fracsob_core::geometry::{Classification, Label};
use fracsob_core::{Grid, ScalarField, VectorField};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub n1: usize,
    pub n2: usize,
    pub length: f64,
    pub m: usize,
    pub name: String,
    /// Linear parts `a · (x - c)` per component; absent for periodic fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<[f64; 2]>>,
}

pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn write_field(path: &Path, name: &str, comps: &[ScalarField]) -> Result<()> {
    let first = comps.first().ok_or_else(|| CliError::Usage("no components to write".into()))?;
    let grid = first.grid;
    let mut bytes = Vec::with_capacity(8 * grid.len() * comps.len());
    for c in comps {
        grid.same(&c.grid)?;
        for v in &c.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let drift = comps.iter().any(|c| !c.is_periodic()).then(|| comps.iter().map(|c| c.drift).collect());
    let header =
        FieldHeader { n1: grid.n1, n2: grid.n2, length: grid.length, m: comps.len(), name: name.to_string(), drift };
    fs::write(path, bytes).map_err(io_err(path))?;
    write_json(&sidecar(path), &header)
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, Vec<ScalarField>)> {
    let side = sidecar(path);
    let header: FieldHeader = read_json(&side)?;
    let grid = Grid::new(header.n1, header.n2, header.length)?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    let want = 8 * grid.len() * header.m;
    if bytes.len() != want {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            msg: format!("payload has {} bytes, header implies {want}", bytes.len()),
        });
    }
    let values: Vec<f64> = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
    let drift = header.drift.clone().unwrap_or_else(|| vec![[0.0; 2]; header.m]);
    if drift.len() != header.m {
        return Err(CliError::Format { path: side, msg: "drift list does not match m".into() });
    }
    let comps = values
        .chunks_exact(grid.len())
        .zip(&drift)
        .map(|(v, d)| {
            let mut f = ScalarField::from_values(grid, v.to_vec())?;
            // stored values already include the linear part
            f.drift = *d;
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, comps))
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let (h, mut comps) = read_field(path)?;
    if h.m != 1 {
        return Err(CliError::Format { path: path.to_path_buf(), msg: format!("expected a scalar field, found m = {}", h.m) });
    }
    Ok(comps.remove(0))
}

pub fn read_vector(path: &Path, m: usize) -> Result<VectorField> {
    let (h, comps) = read_field(path)?;
    if h.m != m {
        return Err(CliError::Format { path: path.to_path_buf(), msg: format!("expected {m} components, found {}", h.m) });
    }
    Ok(VectorField::new(comps)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// Numeric rows of a CSV file; a first line that does not parse is taken
/// as a header and skipped.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() && n == 0 => continue,
            Err(e) => {
                return Err(CliError::Format { path: path.to_path_buf(), msg: format!("line {}: {e}", n + 1) });
            }
        }
    }
    if let Some(w) = rows.first().map(|r| r.len()) {
        if rows.iter().any(|r| r.len() != w) {
            return Err(CliError::Format { path: path.to_path_buf(), msg: "rows have different lengths".into() });
        }
    }
    Ok(rows)
}

/// Contour points `x1,x2` in window coordinates.
pub fn read_contour(path: &Path) -> Result<fracsob_core::jacobian::Contour> {
    let rows = read_csv_rows(path)?;
    if rows.first().map_or(false, |r| r.len() != 2) {
        return Err(CliError::Format { path: path.to_path_buf(), msg: "contour rows must be x1,x2".into() });
    }
    Ok(fracsob_core::jacobian::Contour::new(rows.into_iter().map(|r| [r[0], r[1]]).collect())?)
}

/// Curve samples, one point per row, uniformly spaced on `[0, 1]`.
pub fn read_curve(path: &Path) -> Result<fracsob_core::abscont::Curve> {
    let rows = read_csv_rows(path)?;
    if rows.len() < 2 {
        return Err(CliError::Format { path: path.to_path_buf(), msg: "a curve needs at least two samples".into() });
    }
    let spacing = 1.0 / (rows.len() - 1) as f64;
    Ok(fracsob_core::abscont::Curve::new(spacing, rows)?)
}

/// `x1,x2,value` for a scalar field, `x1,x2,value0,value1,…` otherwise.
pub fn write_field_csv(path: &Path, comps: &[ScalarField]) -> Result<()> {
    let grid = comps.first().ok_or_else(|| CliError::Usage("no components to export".into()))?.grid;
    let mut out = String::from("x1,x2");
    if comps.len() == 1 {
        out.push_str(",value");
    } else {
        (0..comps.len()).for_each(|i| out.push_str(&format!(",value{i}")));
    }
    out.push('\n');
    for k in 0..grid.len() {
        let (i1, i2) = grid.unidx(k);
        let x = grid.coords(i1, i2);
        out.push_str(&format!("{},{}", x[0], x[1]));
        for c in comps {
            out.push_str(&format!(",{}", c.values[k]));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// `x1,x2,label,theta` for every node inside the classified region.
pub fn write_classification_csv(path: &Path, c: &Classification) -> Result<()> {
    let mut out = String::from("x1,x2,label,theta\n");
    for (k, l) in c.labels.iter().enumerate() {
        let (i1, i2) = c.grid.unidx(k);
        let x = c.grid.coords(i1, i2);
        let (name, theta) = match l {
            Label::Outside => continue,
            Label::Flat => ("flat", String::new()),
            Label::Ruled { theta } => ("ruled", theta.to_string()),
            Label::Singular => ("singular", String::new()),
        };
        out.push_str(&format!("{},{},{name},{theta}\n", x[0], x[1]));
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
