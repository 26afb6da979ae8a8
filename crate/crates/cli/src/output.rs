//! CSV tables and the JSON summary.

use crate::scenario::Scenario;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use tauberlab::fit::FitReport;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

/// A data series with a fixed column schema.
#[derive(Debug, Clone)]
pub struct Table {
    /// File stem and schema name.
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Table { name: name.into(), columns, rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_table(dir: &Path, t: &Table) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("{}.csv", t.name));
    let mut file = File::create(&path)?;
    writeln!(file, "# tauberlab {} schema v{SCHEMA_VERSION}: {}", t.name, t.columns.join(","))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&t.columns)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|x| fmt_num(*x)))?;
    }
    w.flush()?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct Invariant {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Invariant {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Invariant { name: name.into(), pass, detail: detail.into() }
    }
}

/// What a command produced, before it is written out.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub reports: Vec<FitReport>,
    pub invariants: Vec<Invariant>,
    /// Constants and residuals that do not come from a fit report.
    pub constants: Vec<(String, f64)>,
    pub residuals: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.invariants.iter().all(|i| i.pass) && self.reports.iter().all(|r| r.pass)
    }
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub scenario: &'a Scenario,
    pub fitted_constants: BTreeMap<String, f64>,
    pub worst_residuals: BTreeMap<String, f64>,
    pub invariants: Vec<Invariant>,
    pub reports: &'a [FitReport],
    pub notes: &'a [String],
    pub files: Vec<String>,
    pub error: Option<String>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl<'a> Summary<'a> {
    pub fn new(scenario: &'a Scenario, outcome: &'a Outcome, files: Vec<String>, error: Option<String>, wall_time_s: f64) -> Self {
        let mut fitted_constants = BTreeMap::new();
        let mut worst_residuals = BTreeMap::new();
        for r in &outcome.reports {
            for (n, v) in &r.constants {
                fitted_constants.insert(format!("{}.{n}", r.id), *v);
            }
            worst_residuals.insert(r.id.clone(), r.worst_residual);
        }
        fitted_constants.extend(outcome.constants.iter().cloned());
        worst_residuals.extend(outcome.residuals.iter().cloned());
        let mut invariants: Vec<Invariant> = outcome.reports.iter().map(|r| Invariant::new(format!("fit:{}", r.id), r.pass, r.notes.join("; "))).collect();
        invariants.extend(outcome.invariants.iter().cloned());
        let pass = error.is_none() && outcome.pass();
        Summary { scenario, fitted_constants, worst_residuals, invariants, reports: &outcome.reports, notes: &outcome.notes, files, error, pass, wall_time_s }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn table_has_versioned_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", vec!["t", "value"]);
        t.push(vec![1.0, 0.5]);
        let path = write_table(dir.path(), &t).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# tauberlab demo schema v1: t,value");
        assert_eq!(lines.next().unwrap(), "t,value");
        assert_eq!(lines.next().unwrap(), "1.0000000000000000e0,5.0000000000000000e-1");
    }
}
