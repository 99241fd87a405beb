use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deltaflow_cli::exit;
use deltaflow_cli::output::Table;

fn deltaflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltaflow"))
        .args(args)
        .env("DELTAFLOW_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn golden_files_reproduce() {
    let out = deltaflow(&["golden-check", golden_dir().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(exit::PASS), "{stdout}");
    assert_eq!(stdout.matches("PASS").count(), 4, "{stdout}");
}

#[test]
fn run_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = std::fs::read_to_string(golden_dir().join("continuity_small.cfg")).unwrap();
    let path = write_config(dir.path(), "c.cfg", &cfg);
    let out_dir = dir.path().join("out");
    let out = deltaflow(&["run", path.to_str().unwrap(), "--output", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(exit::PASS), "{}", String::from_utf8_lossy(&out.stdout));

    let table = Table::from_csv(&std::fs::read(out_dir.join("report.csv")).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.headers[0], "dt");

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "continuity");
    assert_eq!(summary["verdict"], "pass");
    assert_eq!(summary["config_digest"].as_str().unwrap().len(), 64);
    assert!(out_dir.join("norms.svg").exists());
}

#[test]
fn invalid_configs_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.cfg", "[no_such_experiment]\n"),
        ("grid.cfg", "[propagator_convergence]\ngrid = 100, 8\n"),
        ("ladder.cfg", "[propagator_convergence]\neps_list = 0.1, 0.2, 0.4\n"),
        ("key.cfg", "[relations]\ncolour = blue\n"),
    ];
    for (name, text) in cases {
        let path = write_config(dir.path(), name, text);
        let out = deltaflow(&["run", path.to_str().unwrap(), "--output", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(exit::INVALID_CONFIG),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn validate_rejects_multi_center_configs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "two.cfg", "[bound_state]\ndelta = -1 @ 0; -1 @ 1\n");
    let out = deltaflow(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(exit::INVALID_CONFIG));
}

#[test]
fn tampered_golden_fails() {
    let dir = tempfile::tempdir().unwrap();
    let src = golden_dir();
    std::fs::copy(src.join("continuity_small.cfg"), dir.path().join("c.cfg")).unwrap();
    let csv = std::fs::read_to_string(src.join("continuity_small.csv")).unwrap();
    let tampered = csv.replacen("5.0880158649e-2", "5.0990158649e-2", 1);
    assert_ne!(csv, tampered);
    std::fs::write(dir.path().join("c.csv"), tampered).unwrap();
    let out = deltaflow(&["golden-check", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(exit::VERDICT_FAILED));
}
