use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use polctl_core::harness::{execute, ExperimentKind, ScenarioConfig};

/// Closed-loop polarization control simulator.
#[derive(Parser, Debug)]
#[command(name = "polctl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drift run with the loop closed (or open with `run.control = false`).
    Run(Common),
    /// Recovery after a step rotation of the fiber.
    Recovery(Common),
    /// Converged residual over a grid of tau * delta_omega and drift rates.
    Sweep(Common),
    /// Photon counts behind an analyzer swept along the equator.
    Counts(Common),
    /// Verify the analytic controller setting on random channels.
    OracleCheck(Common),
    /// Print the effective configuration as TOML.
    Config(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: default, operating-point, low-stress, monochromatic.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the seed from the scenario file.
    #[arg(long, env = "POLCTL_SEED")]
    seed: Option<u64>,
    /// Output directory (default: `output.dir` of the scenario).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            (None, Some(name)) => ScenarioConfig::preset(name)?,
            (None, None) => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (kind, common) = match &cli.command {
        Command::Run(c) => (ExperimentKind::Run, c),
        Command::Recovery(c) => (ExperimentKind::Recovery, c),
        Command::Sweep(c) => (ExperimentKind::Sweep, c),
        Command::Counts(c) => (ExperimentKind::Counts, c),
        Command::OracleCheck(c) => (ExperimentKind::OracleCheck, c),
        Command::Config(c) => {
            if c.out.is_some() {
                bail!("`config` prints to stdout and takes no --out");
            }
            print!("{}", c.load()?.to_toml_string()?);
            return Ok(true);
        }
    };
    let cfg = common.load()?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let outcome = execute(kind, &cfg)?;
    outcome.artifacts.write_to(&out).with_context(|| format!("writing {}", out.display()))?;
    println!("{kind} (seed {}): {}", cfg.seed, outcome.headline);
    for name in outcome.artifacts.files.keys() {
        println!("  wrote {}", out.join(name).display());
    }
    if !outcome.pass {
        eprintln!("{kind} failed");
    }
    Ok(outcome.pass)
}
