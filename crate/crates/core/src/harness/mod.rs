//! Scenario files, the reproduction experiments and their output files.

mod config;
mod experiments;
mod output;

use std::fmt;
use std::str::FromStr;

pub use config::{
    ChannelConfig, ControllerConfig, CountsConfig, DetectorConfig, ExperimentConfig, OracleCheckConfig, OutputConfig,
    RecoveryConfig, RunConfig, ScenarioConfig, StateSpec, SweepConfig, CALIBRATED_DRIFT_RATE, PRESET_NAMES,
};
pub use experiments::{
    experiment_counts, experiment_oracle_check, experiment_recovery, experiment_run, experiment_sweep, prepare,
    rng_stream, CountRow, CountsOutput, CountsSummary, OracleReport, PhaseCheck, Prepared, RecoveryOutput, RunOutput,
    StateQber, SweepOutput, SweepRow, SweepTrial,
};
pub use output::{read_csv, Artifacts, RecoveryRow, ReferenceRow, RunSummary, SeriesRow};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Run,
    Recovery,
    Sweep,
    Counts,
    OracleCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [Self::Run, Self::Recovery, Self::Sweep, Self::Counts, Self::OracleCheck];

    pub fn name(self) -> &'static str {
        match self {
            Self::Run => "run",
            Self::Recovery => "recovery",
            Self::Sweep => "sweep",
            Self::Counts => "counts",
            Self::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// Result of [`execute`]: the files to write and a one-line description.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub headline: String,
    /// False only for a failed oracle check.
    pub pass: bool,
}

/// Runs one experiment. The effective configuration is included in the
/// output as `config.toml`.
pub fn execute(kind: ExperimentKind, cfg: &ScenarioConfig) -> Result<Outcome> {
    if let Some(k) = &cfg.experiment.kind {
        if k.parse::<ExperimentKind>()? != kind {
            return Err(Error::Config(format!("config is for experiment {k:?}, not {kind:?}", kind = kind.name())));
        }
    }
    cfg.validate()?;
    let (mut artifacts, headline, pass) = match kind {
        ExperimentKind::Run => {
            let out = experiment_run(cfg)?;
            let s = &out.summary;
            let line = format!(
                "mean deviation {:.3} deg, max {:.3} deg, qber_added {:.4e} over {} samples",
                s.mean_deviation_deg, s.max_deviation_deg, s.qber_added, s.samples
            );
            (out.artifacts()?, line, true)
        }
        ExperimentKind::Recovery => {
            let out = experiment_recovery(cfg)?;
            let s = &out.summary;
            let line = format!(
                "90% after {:.3} ms, 99.9% after {:.3} ms{}",
                s.recovery_time_90_s.unwrap_or(f64::NAN) * 1e3,
                s.recovery_time_full_s.unwrap_or(f64::NAN) * 1e3,
                if s.recovered == Some(true) { "" } else { " (not recovered)" }
            );
            (out.artifacts()?, line, true)
        }
        ExperimentKind::Sweep => {
            let out = experiment_sweep(cfg)?;
            let line = out
                .rows
                .iter()
                .map(|r| format!("{:.3}: {:.3} deg", r.tau_delta_omega, r.mean_deviation_deg))
                .collect::<Vec<_>>()
                .join(", ");
            (out.artifacts()?, format!("mean residual by tau*delta_omega: {line}"), true)
        }
        ExperimentKind::Counts => {
            let out = experiment_counts(cfg)?;
            let line = out
                .summary
                .states
                .iter()
                .map(|s| format!("{} qber {:.4e}", s.state, s.qber_measured))
                .collect::<Vec<_>>()
                .join(", ");
            (out.artifacts()?, format!("{line}; dark floor {:.3e}/gate", out.summary.dark_probability), true)
        }
        ExperimentKind::OracleCheck => {
            let out = experiment_oracle_check(cfg)?;
            let line = format!(
                "{} over {} samples: max distance {:.3e} (threshold {:.1e})",
                if out.pass { "pass" } else { "FAIL" },
                out.samples,
                out.max_distance,
                out.threshold
            );
            (out.artifacts()?, line, out.pass)
        }
    };
    artifacts.add_text("config.toml", cfg.to_toml_string()?);
    Ok(Outcome { artifacts, headline, pass })
}
