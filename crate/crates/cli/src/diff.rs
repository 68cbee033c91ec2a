//! Tolerance comparison of two artifacts: field CSVs node by node, other CSV
//! tables cell by cell, report files key by key.

use std::path::Path;

use semicontrol::io::{diff_fields, format_sci, parse_field_csv, FieldTable, Report};

use crate::{ExitCode, Failure, Outcome};

enum Artifact {
    Field(FieldTable),
    Table(Vec<csv::StringRecord>),
    Report(Report),
}

fn load(path: &Path) -> Result<Artifact, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read '{}': {e}", path.display())))?;
    let parse = |e| Failure::from_core(&path.display().to_string(), e);
    let first = text.lines().next().unwrap_or("");
    if first.starts_with("t,") {
        parse_field_csv(&text).map(Artifact::Field).map_err(parse)
    } else if first.contains(',') && !first.contains('=') {
        csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text.as_bytes())
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map(Artifact::Table)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    } else {
        Report::parse(&text).map(Artifact::Report).map_err(parse)
    }
}

/// `0` for identical text, the absolute difference for two numbers, `inf` otherwise.
fn cell_difference(a: &str, b: &str) -> f64 {
    if a == b {
        return 0.0;
    }
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) if (x - y).is_finite() => (x - y).abs(),
        _ => f64::INFINITY,
    }
}

fn describe_row(table: &FieldTable, i: usize) -> String {
    let row = &table.rows[i];
    let mut s = format!("data row {} (t={}", i + 1, format_sci(row.t));
    for (k, x) in row.x.iter().enumerate() {
        s.push_str(&format!(", x{}={}", k + 1, format_sci(*x)));
    }
    s.push(')');
    s
}

/// Largest difference and where it occurs.
fn compare(a: &Artifact, b: &Artifact) -> Result<(f64, Option<String>), Failure> {
    match (a, b) {
        (Artifact::Field(a), Artifact::Field(b)) => {
            let d = diff_fields(a, b).map_err(|e| Failure::from_core("diff", e))?;
            Ok((d.max_abs, d.worst_row.map(|i| describe_row(a, i))))
        }
        (Artifact::Report(a), Artifact::Report(b)) => {
            let keys = |r: &Report| r.entries().iter().map(|(k, _)| k.clone()).collect::<Vec<_>>();
            if keys(a) != keys(b) {
                return Err(Failure::config(format!(
                    "shape mismatch: report keys differ ({} vs {})",
                    keys(a).join(","),
                    keys(b).join(",")
                )));
            }
            let mut worst = (0.0, None);
            for ((k, va), (_, vb)) in a.entries().iter().zip(b.entries()) {
                let d = cell_difference(va, vb);
                if d > worst.0 {
                    worst = (d, Some(format!("key {k} ('{va}' vs '{vb}')")));
                }
            }
            Ok(worst)
        }
        (Artifact::Table(a), Artifact::Table(b)) => {
            let shape = |t: &[csv::StringRecord]| t.iter().map(|r| r.len()).collect::<Vec<_>>();
            if shape(a) != shape(b) || a.first() != b.first() {
                return Err(Failure::config("shape mismatch: tables differ in header, rows or columns"));
            }
            let header = &a[0];
            let mut worst = (0.0, None);
            for (i, (ra, rb)) in a.iter().zip(b).enumerate().skip(1) {
                for (j, (ca, cb)) in ra.iter().zip(rb).enumerate() {
                    let d = cell_difference(ca, cb);
                    if d > worst.0 {
                        let col = header.get(j).unwrap_or("?");
                        worst = (d, Some(format!("data row {i}, column {col} ('{ca}' vs '{cb}')")));
                    }
                }
            }
            Ok(worst)
        }
        _ => Err(Failure::config("shape mismatch: the two files are of different kinds")),
    }
}

/// Exit 0 iff the largest absolute difference is at most `tol`.
pub fn diff_artifacts(a: &Path, b: &Path, tol: f64) -> Result<Outcome, Failure> {
    if !(tol >= 0.0) {
        return Err(Failure::config(format!("--tol: {tol} must be a nonnegative number")));
    }
    let (max_abs, worst) = compare(&load(a)?, &load(b)?)?;
    let location = worst.unwrap_or_else(|| "no differing entry".into());
    let (code, verdict) = if max_abs <= tol { (ExitCode::Success, "within") } else { (ExitCode::Validation, "exceeds") };
    let summary = format!("max abs difference {} {verdict} tol {} at {location}\n", format_sci(max_abs), format_sci(tol));
    Ok(Outcome { code, files: vec![], summary })
}
