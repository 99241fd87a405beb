//! Report tables, summaries and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::experiments::Outcome;
use crate::CliError;

/// A CSV table with string cells; numbers are formatted by [`num`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(bytes);
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { headers, rows })
    }

    /// Column values parsed as numbers (unparseable cells are skipped).
    pub fn column(&self, name: &str) -> Vec<f64> {
        match self.headers.iter().position(|h| h == name) {
            Some(k) => self.rows.iter().filter_map(|r| r[k].parse().ok()).collect(),
            None => Vec::new(),
        }
    }
}

/// Fixed-width scientific formatting so reruns are byte-identical.
pub fn num(x: f64) -> String {
    format!("{x:.10e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct CheckJson<'a> {
    name: &'a str,
    pass: bool,
    detail: &'a str,
}

#[derive(Debug, Serialize)]
struct SummaryJson<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    config_digest: String,
    verdict: &'static str,
    checks: Vec<CheckJson<'a>>,
    metrics: &'a serde_json::Value,
}

pub fn summary_json(outcome: &Outcome, experiment: &str, config_text: &str) -> Result<Vec<u8>, CliError> {
    let summary = SummaryJson {
        tool: "deltaflow",
        version: deltaflow::VERSION,
        experiment,
        config_digest: sha256_hex(config_text.as_bytes()),
        verdict: if outcome.passed() { "pass" } else { "fail" },
        checks: outcome
            .verdicts
            .iter()
            .map(|v| CheckJson {
                name: &v.name,
                pass: v.pass,
                detail: &v.detail,
            })
            .collect(),
        metrics: &outcome.metrics,
    };
    let mut bytes = serde_json::to_vec_pretty(&summary)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

/// All artifacts of a run: `report.csv`, `summary.json` and any plots.
/// Everything is rendered first so a failure leaves no partial output.
pub fn write_outcome(dir: &Path, outcome: &Outcome, experiment: &str, config_text: &str) -> Result<(), CliError> {
    let csv = outcome.table.to_csv()?;
    let summary = summary_json(outcome, experiment, config_text)?;
    let plots: Vec<(String, String)> = outcome
        .plots
        .iter()
        .map(|p| (format!("{}.svg", p.file_stem), p.render()))
        .collect();
    write_atomic(&dir.join("report.csv"), &csv)?;
    write_atomic(&dir.join("summary.json"), &summary)?;
    for (name, svg) in plots {
        write_atomic(&dir.join(name), svg.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["epsilon", "norm"]);
        t.push(vec![num(0.4), num(1.25e-2)]);
        t.push(vec![num(0.2), num(6.0e-3)]);
        let back = Table::from_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("norm"), vec![1.25e-2, 6.0e-3]);
        assert!(back.column("missing").is_empty());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        let leftovers = std::fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
