//! Coordinate files and CSV reports.
//!
//! Coordinate files hold one `x y z` row per particle with no count header;
//! blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolve::OperatorStats;
use crate::geometry::{Configuration, Point3};
use crate::structure::NucleusClass;

/// Parses coordinate text; `path` only labels error messages.
pub fn parse_coords(text: &str, path: &Path) -> Result<Configuration> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(i + 1, format!("expected 3 values, found {}", fields.len())));
        }
        let mut xyz = [0.0; 3];
        for (slot, f) in xyz.iter_mut().zip(&fields) {
            *slot = f.parse::<f64>().map_err(|e| err(i + 1, format!("'{f}': {e}")))?;
            if !slot.is_finite() {
                return Err(err(i + 1, format!("non-finite value '{f}'")));
            }
        }
        pts.push(Point3::from(xyz));
    }
    if pts.is_empty() {
        return Err(err(0, "no particles".into()));
    }
    Configuration::new(pts)
}

pub fn read_coords(path: impl AsRef<Path>) -> Result<Configuration> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_coords(&text, path)
}

/// Shortest decimal that reads back to the same `f64`; zero of either sign
/// is `0`, very small or large magnitudes use an exponent.
pub fn format_real(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn format_coords(c: &Configuration) -> String {
    let mut out = String::with_capacity(c.len() * 64);
    for p in c.iter() {
        let _ = writeln!(out, "{} {} {}", format_real(p.x), format_real(p.y), format_real(p.z));
    }
    out
}

pub fn write_coords(c: &Configuration, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_coords(c))?;
    Ok(())
}

/// One line of a run report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub energy: f64,
    pub class: NucleusClass,
    pub layers: usize,
    pub generations: usize,
    pub seconds: f64,
    pub operators: Option<OperatorStats>,
}

/// `out/report.csv` → `out/report.<suffix>.csv`
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}.{suffix}.{ext}"))
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("n,energy,class,layers,generations,seconds\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            r.n,
            format_real(r.energy),
            r.class,
            r.layers,
            r.generations,
            r.seconds
        );
    }
    out
}

/// Class counts in category order, `UNCLASSIFIED` last.
pub fn class_histogram(rows: &[ReportRow]) -> Vec<(NucleusClass, usize)> {
    NucleusClass::CATEGORIES
        .iter()
        .chain(std::iter::once(&NucleusClass::Unclassified))
        .map(|&c| (c, rows.iter().filter(|r| r.class == c).count()))
        .collect()
}

/// `(n, energy, e_n − e_prev)` over rows sorted by `n`; the first row has no difference.
pub fn energy_differences(rows: &[ReportRow]) -> Vec<(usize, f64, Option<f64>)> {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.n);
    let mut prev: Option<f64> = None;
    sorted
        .into_iter()
        .map(|r| {
            let d = prev.map(|p| r.energy - p);
            prev = Some(r.energy);
            (r.n, r.energy, d)
        })
        .collect()
}

/// Writes the report CSV at `path` plus `*.hist.csv` (class counts),
/// `*.diff.csv` (consecutive energy differences) and, when any row carries
/// them, `*.operators.csv` (offspring per operator).
pub fn write_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::domain("report has no rows"));
    }
    let path = path.as_ref();
    fs::write(path, report_csv(rows))?;

    let mut hist = String::from("class,count\n");
    for (c, k) in class_histogram(rows) {
        let _ = writeln!(hist, "{c},{k}");
    }
    fs::write(sibling_path(path, "hist"), hist)?;

    let mut diff = String::from("n,energy,difference\n");
    for (n, e, d) in energy_differences(rows) {
        let _ = writeln!(diff, "{n},{},{}", format_real(e), d.map(format_real).unwrap_or_default());
    }
    fs::write(sibling_path(path, "diff"), diff)?;

    if rows.iter().any(|r| r.operators.is_some()) {
        let mut ops = String::from("n,operator,applied,failed,improved\n");
        for r in rows {
            if let Some(s) = &r.operators {
                for (i, op) in crate::evolve::Operator::ALL.iter().enumerate() {
                    let _ = writeln!(ops, "{},{op},{},{},{}", r.n, s.applied[i], s.failed[i], s.improved[i]);
                }
            }
        }
        fs::write(sibling_path(path, "operators"), ops)?;
    }
    Ok(())
}
