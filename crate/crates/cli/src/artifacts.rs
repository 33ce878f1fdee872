use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::manifest::Manifest;
use crate::{io_err, Result};

/// Rows of `results.csv`, in declared parameter order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().expect("in-memory writer"))
    }
}

/// Formats a float so that it parses back to the same bits.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Passed,
    Failed,
    Errored,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Passed => 0,
            RunStatus::Failed => 1,
            RunStatus::Errored => 2,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    seed: u64,
    passed: bool,
    metrics: &'a BTreeMap<String, f64>,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct FailureReport<'a> {
    experiment: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    failed: Vec<&'a Check>,
}

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const FAILURE_FILE: &str = "failure.toml";

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io_err(&path))
}

/// Writes the run directory. Result files left by an earlier run are removed
/// first so the directory always reflects this run alone.
pub fn write_run(dir: &Path, resolved: &Manifest, result: &std::result::Result<Outcome, String>) -> Result<RunStatus> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write(dir, MANIFEST_FILE, resolved.to_toml().as_bytes())?;
    for name in [RESULTS_FILE, SUMMARY_FILE, FAILURE_FILE] {
        let stale = dir.join(name);
        if stale.exists() {
            fs::remove_file(&stale).map_err(io_err(&stale))?;
        }
    }
    match result {
        Ok(outcome) => {
            write(dir, RESULTS_FILE, &outcome.table.to_csv()?)?;
            let passed = outcome.passed();
            let summary = Summary {
                experiment: &resolved.experiment,
                seed: resolved.seed,
                passed,
                metrics: &outcome.metrics,
                checks: &outcome.checks,
            };
            write(dir, SUMMARY_FILE, toml::to_string(&summary).expect("summary serializes").as_bytes())?;
            if passed {
                return Ok(RunStatus::Passed);
            }
            let report = FailureReport {
                experiment: &resolved.experiment,
                seed: resolved.seed,
                error: None,
                failed: outcome.checks.iter().filter(|c| !c.passed).collect(),
            };
            write(dir, FAILURE_FILE, toml::to_string(&report).expect("report serializes").as_bytes())?;
            Ok(RunStatus::Failed)
        }
        Err(message) => {
            let report = FailureReport {
                experiment: &resolved.experiment,
                seed: resolved.seed,
                error: Some(message.clone()),
                failed: Vec::new(),
            };
            write(dir, FAILURE_FILE, toml::to_string(&report).expect("report serializes").as_bytes())?;
            Ok(RunStatus::Errored)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields_with_commas() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a,b".into(), num(0.1)]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "name,value\n\"a,b\",0.1\n");
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
