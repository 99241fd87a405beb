//! Golden-file regression: every `<name>.cfg` in a directory is run and its
//! report compared with `<name>.csv` next to it.

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::experiments::run_experiment;
use crate::output::{write_atomic, Table};
use crate::CliError;

/// Relative tolerance for numeric cells.
pub const GOLDEN_RTOL: f64 = 1e-6;

/// Absolute tolerance for numeric cells near zero.
pub const GOLDEN_ATOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct GoldenResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Cell-by-cell comparison; numbers within tolerance, text exactly.
pub fn compare_tables(expected: &Table, got: &Table, rtol: f64, atol: f64) -> Result<(), String> {
    if expected.headers != got.headers {
        return Err(format!("headers differ: {:?} vs {:?}", expected.headers, got.headers));
    }
    if expected.rows.len() != got.rows.len() {
        return Err(format!("{} rows expected, got {}", expected.rows.len(), got.rows.len()));
    }
    for (r, (a, b)) in expected.rows.iter().zip(&got.rows).enumerate() {
        for (c, (x, y)) in a.iter().zip(b).enumerate() {
            let same = match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) => (u - v).abs() <= atol + rtol * u.abs().max(v.abs()),
                _ => x == y,
            };
            if !same {
                return Err(format!("row {}, column `{}`: expected {x}, got {y}", r + 1, expected.headers[c]));
            }
        }
    }
    Ok(())
}

fn configs_in(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(CliError::InvalidConfig(format!("no .cfg files in {}", dir.display())));
    }
    Ok(out)
}

/// Run every config in `dir`. With `bless`, the goldens are (re)written
/// instead of compared.
pub fn golden_check(dir: &Path, bless: bool) -> Result<Vec<GoldenResult>, CliError> {
    let mut results = Vec::new();
    for cfg_path in configs_in(dir)? {
        let name = cfg_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let golden_path = cfg_path.with_extension("csv");
        let cfg = ExperimentConfig::load(&cfg_path)?;
        let outcome = run_experiment(&cfg)?;
        if bless {
            write_atomic(&golden_path, &outcome.table.to_csv()?)?;
            results.push(GoldenResult {
                name,
                pass: true,
                detail: format!("wrote {}", golden_path.display()),
            });
            continue;
        }
        let expected = match std::fs::read(&golden_path) {
            Ok(bytes) => Table::from_csv(&bytes)?,
            Err(e) => {
                results.push(GoldenResult {
                    name,
                    pass: false,
                    detail: format!("missing golden {}: {e}", golden_path.display()),
                });
                continue;
            }
        };
        let (pass, detail) = match compare_tables(&expected, &outcome.table, GOLDEN_RTOL, GOLDEN_ATOL) {
            Ok(()) if outcome.passed() => (true, format!("{} rows match", expected.rows.len())),
            Ok(()) => (false, "report matches but a verdict failed".to_string()),
            Err(msg) => (false, msg),
        };
        results.push(GoldenResult { name, pass, detail });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::num;

    fn table(values: &[f64]) -> Table {
        let mut t = Table::new(&["label", "value"]);
        for v in values {
            t.push(vec!["x".into(), num(*v)]);
        }
        t
    }

    #[test]
    fn tolerant_numeric_comparison() {
        let a = table(&[1.0, 2.0e-3]);
        assert!(compare_tables(&a, &table(&[1.0 + 1e-9, 2.0e-3]), 1e-6, 1e-12).is_ok());
        assert!(compare_tables(&a, &table(&[1.001, 2.0e-3]), 1e-6, 1e-12).is_err());
        assert!(compare_tables(&a, &table(&[1.0]), 1e-6, 1e-12).is_err());
        let mut b = a.clone();
        b.rows[0][0] = "y".into();
        assert!(compare_tables(&a, &b, 1e-6, 1e-12).is_err());
    }
}
