use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use spinc_cli::config::{preset, PRESETS};
use spinc_cli::{run, ExperimentConfig, Outputs, RunParams};

/// Spin^c Dirac spectra, Energy-Momentum tensor identities and surface
/// immersion checks.
///
/// Exit status: 0 when every check passes, 1 when a check fails or a
/// computation errors, 2 for invalid configuration.
#[derive(Debug, Parser)]
#[command(name = "spinc", version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, env = "SPINC_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in config used when no --config is given.
    #[arg(long, global = true, env = "SPINC_PRESET", value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, env = "SPINC_OUT", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for the eigensolver start blocks and the base-point spinor.
    #[arg(long, global = true, env = "SPINC_SEED", value_name = "INT")]
    seed: Option<u64>,
    /// Absolute tolerance applied to every verifier.
    #[arg(long, global = true, env = "SPINC_TOL", value_name = "FLOAT")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenpairs over the degree sweep: spectrum table and plot.
    Spectrum,
    /// Eigenpairs plus the selected verifiers.
    Verify,
    /// Immersion suite in S²×ℝ and S³.
    Immerse,
    /// Rebuild the aggregate table and plots from the reports in --out.
    Report,
    /// List the built-in configs.
    Presets,
}

const DEFAULT_OUT: &str = "spinc-out";

enum Failure {
    Config(String),
    Run(anyhow::Error),
}

impl From<spinc_cli::ConfigError> for Failure {
    fn from(e: spinc_cli::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let text = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => return Err(Failure::Config("give either --config or --preset, not both".into())),
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => preset(name)
            .ok_or_else(|| Failure::Config(format!("unknown preset {name:?}; available: {}", PRESETS.join(", "))))?
            .to_string(),
        (None, None) => return Err(Failure::Config("no --config or --preset given".into())),
    };
    Ok(ExperimentConfig::from_toml(&text)?)
}

fn validate_tol(tol: Option<f64>) -> Result<(), Failure> {
    match tol {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(Failure::Config(format!("--tol must be positive, got {t}"))),
        _ => Ok(()),
    }
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    validate_tol(cli.tol)?;
    let (outputs, dir): (Outputs, PathBuf) = match cli.command {
        Command::Presets => {
            for p in PRESETS {
                println!("{p}");
            }
            return Ok(true);
        }
        Command::Report => {
            let dir = cli.out.clone().ok_or_else(|| Failure::Config("report needs --out".into()))?;
            (run::report(&dir).map_err(Failure::Run)?, dir)
        }
        Command::Spectrum | Command::Verify | Command::Immerse => {
            let config = load_config(cli)?;
            if !matches!(cli.command, Command::Immerse) {
                config.require_sweep()?;
            }
            let dir = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
            let params = RunParams::new(config, cli.seed, cli.tol);
            let outputs = match cli.command {
                Command::Spectrum => run::verify(&params, false),
                Command::Verify => run::verify(&params, true),
                _ => run::immerse(&params),
            }
            .map_err(Failure::Run)?;
            (outputs, dir)
        }
    };
    outputs.write(&dir).with_context(|| format!("writing outputs to {}", dir.display())).map_err(Failure::Run)?;
    let failed: Vec<_> = outputs.reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        let names: Vec<String> = r.failures().iter().map(|c| format!("{}={:.3e} (tol {:.1e})", c.name, c.value, c.tol)).collect();
        let where_ = ["backend", "degree", "level", "surface"]
            .iter()
            .filter_map(|k| r.metadata.get(*k).map(|v| format!("{k}={v}")))
            .collect::<Vec<_>>()
            .join(" ");
        eprintln!("FAIL {} [{where_}]: {}", r.name, names.join(", "));
    }
    println!(
        "{} reports, {} passed, {} failed; outputs in {}",
        outputs.reports.len(),
        outputs.reports.len() - failed.len(),
        failed.len(),
        dir.display()
    );
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
