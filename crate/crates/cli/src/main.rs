use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deltaflow_cli::experiments::{run_experiment, validate_physics, Outcome};
use deltaflow_cli::{exit, golden, output, CliError, ExperimentConfig};

/// Thread-count override for the numerical kernels.
const THREADS_ENV: &str = "DELTAFLOW_THREADS";

#[derive(Parser)]
#[command(name = "deltaflow", version, about = "Point-interaction propagators and resolvent-algebra checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Single-delta physics cross-check (bound state for α < 0, transmission for α > 0).
    Validate {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rerun every `*.cfg` in a directory and compare with its `*.csv`.
    GoldenCheck {
        dir: PathBuf,
        /// Rewrite the golden files instead of comparing.
        #[arg(long)]
        bless: bool,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::InvalidConfig(format!("cannot configure {n} threads: {e}")))
}

fn report(outcome: &Outcome) -> i32 {
    for v in &outcome.verdicts {
        let tag = match (v.pass, v.report_only) {
            (true, _) => "PASS",
            (false, true) => "NOTE",
            (false, false) => "FAIL",
        };
        println!("{tag}  {}: {}", v.name, v.detail);
    }
    if outcome.passed() {
        exit::PASS
    } else {
        exit::VERDICT_FAILED
    }
}

fn execute(
    config: PathBuf,
    output: Option<PathBuf>,
    runner: fn(&ExperimentConfig) -> Result<Outcome, CliError>,
) -> Result<i32, CliError> {
    let cfg = ExperimentConfig::load(&config)?;
    let outcome = runner(&cfg)?;
    let dir = output.unwrap_or_else(|| cfg.output.clone());
    output::write_outcome(&dir, &outcome, cfg.experiment.name(), &cfg.source)?;
    println!("{} -> {}", cfg.experiment, dir.display());
    Ok(report(&outcome))
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, output } => execute(config, output, run_experiment),
        Command::Validate { config, output } => execute(config, output, validate_physics),
        Command::GoldenCheck { dir, bless } => {
            let results = golden::golden_check(&dir, bless)?;
            for r in &results {
                println!("{}  {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(if results.iter().all(|r| r.pass) {
                exit::PASS
            } else {
                exit::VERDICT_FAILED
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = dispatch(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
