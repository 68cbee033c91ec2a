//! Field CSV files and `key=value` report files.
//!
//! Field files have the header `t,x1[,x2[,x3]],value` and one row per node,
//! time-major and lexicographic within a level; spatial and boundary fields
//! are written with `t = 0`. Numbers use C's `%.12e` layout so that files are
//! byte-stable and comparable at tolerance zero.

use std::fmt::Write as _;

use crate::error::{argument, Error, Result};
use crate::field::{BoundaryField, Field, SpaceTimeField, SpatialField};

/// `printf("%.12e", v)`: twelve mantissa digits, signed exponent of at least two digits.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Fields that can be flattened into CSV rows `(t, x, value)`.
pub trait CsvField {
    fn rows(&self) -> Vec<(f64, [f64; 3], f64)>;
    fn dim(&self) -> usize;
}

impl CsvField for SpatialField {
    fn rows(&self) -> Vec<(f64, [f64; 3], f64)> {
        let g = self.grid();
        self.values().iter().enumerate().map(|(i, v)| (0.0, g.coords(i), *v)).collect()
    }
    fn dim(&self) -> usize {
        self.grid().dim()
    }
}

impl CsvField for BoundaryField {
    fn rows(&self) -> Vec<(f64, [f64; 3], f64)> {
        let g = self.grid();
        g.boundary_nodes().into_iter().zip(self.values()).map(|(i, v)| (0.0, g.coords(i), *v)).collect()
    }
    fn dim(&self) -> usize {
        self.grid().dim()
    }
}

impl CsvField for SpaceTimeField {
    fn rows(&self) -> Vec<(f64, [f64; 3], f64)> {
        let g = self.grid();
        let n = g.node_count();
        self.values().iter().enumerate().map(|(k, v)| (g.time_level(k / n), g.coords(k % n), *v)).collect()
    }
    fn dim(&self) -> usize {
        self.grid().dim()
    }
}

fn header(dim: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=dim {
        let _ = write!(h, ",x{i}");
    }
    h.push_str(",value");
    h
}

/// Renders a field as CSV text.
pub fn field_to_csv<F: CsvField + ?Sized>(field: &F) -> String {
    let dim = field.dim();
    let rows = field.rows();
    let mut out = String::with_capacity(rows.len() * (20 * (dim + 2)));
    out.push_str(&header(dim));
    out.push('\n');
    for (t, x, v) in rows {
        out.push_str(&format_sci(t));
        for xi in &x[..dim] {
            out.push(',');
            out.push_str(&format_sci(*xi));
        }
        out.push(',');
        out.push_str(&format_sci(v));
        out.push('\n');
    }
    out
}

pub fn write_field_csv<F: CsvField + ?Sized>(path: &std::path::Path, field: &F) -> std::io::Result<()> {
    std::fs::write(path, field_to_csv(field))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub value: f64,
}

/// A parsed field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub dim: usize,
    pub rows: Vec<CsvRow>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses a field file; line numbers in errors are 1-based.
pub fn parse_field_csv(text: &str) -> Result<FieldTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut records = reader.records();
    let head = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "empty file")),
    };
    let cols: Vec<&str> = head.iter().map(str::trim).collect();
    let dim = cols.len().checked_sub(2).filter(|d| (1..=3).contains(d)).ok_or_else(|| {
        parse_err(1, format!("expected header t,x1[,x2[,x3]],value, found '{}'", cols.join(",")))
    })?;
    if cols != header(dim).split(',').collect::<Vec<_>>() {
        return Err(parse_err(1, format!("expected header '{}', found '{}'", header(dim), cols.join(","))));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0).is_some_and(|s| s.trim().is_empty()) {
            continue;
        }
        if rec.len() != dim + 2 {
            return Err(parse_err(line, format!("expected {} columns, found {}", dim + 2, rec.len())));
        }
        let mut nums = Vec::with_capacity(dim + 2);
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("column {} ('{}') is not a number", cols[c], cell.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {} is not finite", cols[c])));
            }
            nums.push(v);
        }
        rows.push(CsvRow { t: nums[0], x: nums[1..=dim].to_vec(), value: nums[dim + 1] });
    }
    Ok(FieldTable { dim, rows })
}

/// Outcome of comparing two field files.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDiff {
    pub max_abs: f64,
    /// Index of the worst row, if any row differs.
    pub worst_row: Option<usize>,
    pub worst: Option<CsvRow>,
}

/// Largest absolute value difference between two tables on identical nodes.
pub fn diff_fields(a: &FieldTable, b: &FieldTable) -> Result<FieldDiff> {
    if a.dim != b.dim {
        return Err(argument(format!("dimension mismatch: {} vs {}", a.dim, b.dim)));
    }
    if a.rows.len() != b.rows.len() {
        return Err(Error::Shape { expected: a.rows.len(), found: b.rows.len() });
    }
    let mut max_abs = 0.0;
    let mut worst_row = None;
    for (i, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
        if ra.t != rb.t || ra.x != rb.x {
            return Err(argument(format!("node mismatch at data row {}: coordinates differ", i + 1)));
        }
        let d = (ra.value - rb.value).abs();
        if d > max_abs {
            max_abs = d;
            worst_row = Some(i);
        }
    }
    Ok(FieldDiff { max_abs, worst_row, worst: worst_row.map(|i| a.rows[i].clone()) })
}

/// Ordered `key=value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an existing value in place.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, format_sci(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key).ok_or_else(|| argument(format!("report has no key '{key}'")))?;
        v.trim().parse().map_err(|_| argument(format!("report key '{key}' is not a number: '{v}'")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| parse_err(i + 1, format!("expected key=value, found '{line}'")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(parse_err(i + 1, "empty key"));
            }
            if report.get(k).is_some() {
                return Err(parse_err(i + 1, format!("duplicate key '{k}'")));
            }
            report.entries.push((k.to_string(), v.trim().to_string()));
        }
        Ok(report)
    }
}
