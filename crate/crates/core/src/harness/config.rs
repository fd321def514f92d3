//! Scenario configuration.
//!
//! Files are TOML; dotted keys (`channel.dgd_ps = 0.54`) and `[channel]`
//! tables are equivalent. Every key has a default, and unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{ConvergenceCriteria, DitherSettings, FeedbackSensor, ReferenceBasis, PROBES_PER_CYCLE};
use crate::detection::DetectorParams;
use crate::error::{Error, Result};
use crate::fiber::{carrier_omega, delta_omega_from_wavelength, ChannelSpec};
use crate::polarization::{stokes_to_jones, JonesVector, StokesVector};

const PRESET_OPERATING_POINT: &str = include_str!("../../presets/operating-point.toml");
const PRESET_LOW_STRESS: &str = include_str!("../../presets/low-stress.toml");
const PRESET_MONOCHROMATIC: &str = include_str!("../../presets/monochromatic.toml");

pub const PRESET_NAMES: [&str; 4] = ["default", "operating-point", "low-stress", "monochromatic"];

/// Drift strength (rad/√s) of the `operating-point` preset. Simulator
/// calibration: with a dispersion-free channel it puts the mean tracking
/// deviation of the controlled signal near 2°.
pub const CALIBRATED_DRIFT_RATE: f64 = 4.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub channel: ChannelConfig,
    pub controller: ControllerConfig,
    pub detector: DetectorConfig,
    pub experiment: ExperimentConfig,
    pub run: RunConfig,
    pub recovery: RecoveryConfig,
    pub sweep: SweepConfig,
    pub counts: CountsConfig,
    pub oracle_check: OracleCheckConfig,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            channel: ChannelConfig::default(),
            controller: ControllerConfig::default(),
            detector: DetectorConfig::default(),
            experiment: ExperimentConfig::default(),
            run: RunConfig::default(),
            recovery: RecoveryConfig::default(),
            sweep: SweepConfig::default(),
            counts: CountsConfig::default(),
            oracle_check: OracleCheckConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    /// Differential group delay, picoseconds.
    pub dgd_ps: f64,
    /// Signal-to-reference spacing, nanometres.
    pub delta_lambda_nm: f64,
    pub center_wavelength_nm: f64,
    /// Birefringence axis as a Stokes direction (normalized on use).
    pub pmd_axis: [f64; 3],
    /// Drift strength, rad/√s.
    pub drift_rate: f64,
    /// Draw the initial wavelength-independent part of the fiber at random.
    pub random_base: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            dgd_ps: 0.54,
            delta_lambda_nm: 0.8,
            center_wavelength_nm: 1550.0,
            pmd_axis: [1.0, 1.0, 1.0],
            drift_rate: CALIBRATED_DRIFT_RATE,
            random_base: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Time per actuator probe (one detector reading), microseconds.
    pub loop_period_us: f64,
    /// Time between controller cycles, microseconds. Defaults to one probe
    /// period per reading of a cycle.
    pub cycle_period_us: Option<f64>,
    /// Dither steps, radians.
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub shrink: f64,
    pub grow: f64,
    /// Std-dev of the feedback detector noise (normalized power units).
    pub noise_std: f64,
    /// Reference polarizer extinction ratio, dB. Absent means ideal polarizers.
    pub extinction_db: Option<f64>,
    pub convergence_threshold: f64,
    pub convergence_cycles: usize,
    /// Controller cycles on the static channel before an experiment starts.
    pub warmup_cycles: usize,
    /// Start from random retardances instead of all zero.
    pub random_start: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let d = DitherSettings::<f64>::default();
        Self {
            loop_period_us: 25.0,
            cycle_period_us: None,
            initial_step: d.initial_step,
            min_step: d.min_step,
            max_step: d.max_step,
            shrink: d.shrink,
            grow: d.grow,
            noise_std: 0.0,
            extinction_db: None,
            convergence_threshold: 1e-4,
            convergence_cycles: 10,
            warmup_cycles: 3000,
            random_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub mu: f64,
    pub gate_width_ns: f64,
    pub gate_rate_hz: f64,
    pub dark_rate_per_ns: f64,
    pub efficiency: f64,
    pub crosstalk_prob: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let d = DetectorParams::default();
        Self {
            mu: d.mean_photons,
            gate_width_ns: d.gate_width * 1e9,
            gate_rate_hz: d.gate_rate,
            dark_rate_per_ns: d.dark_rate,
            efficiency: d.efficiency,
            crosstalk_prob: d.crosstalk_prob,
        }
    }
}

/// A polarization state given by name (`H`, `V`, `D`, `A`, `R`, `L`) or as a
/// Stokes direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Stokes([f64; 3]),
}

impl StateSpec {
    pub fn stokes(&self) -> Result<StokesVector<f64>> {
        match self {
            StateSpec::Named(name) => match name.as_str() {
                "H" => Ok(StokesVector::horizontal()),
                "V" => Ok(StokesVector::vertical()),
                "D" => Ok(StokesVector::diagonal()),
                "A" => Ok(StokesVector::antidiagonal()),
                "R" => Ok(StokesVector::right_circular()),
                "L" => Ok(StokesVector::left_circular()),
                other => Err(Error::Config(format!("unknown polarization state name {other:?}"))),
            },
            StateSpec::Stokes(s) => StokesVector::from_array(*s).normalized().map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn jones(&self) -> Result<JonesVector<f64>> {
        stokes_to_jones(&self.stokes()?)
    }

    pub fn label(&self) -> String {
        match self {
            StateSpec::Named(n) => n.clone(),
            StateSpec::Stokes(s) => format!("({:.4} {:.4} {:.4})", s[0], s[1], s[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// When present, must match the experiment being run.
    pub kind: Option<String>,
    /// Signal-channel launch state (also the target state at the receiver).
    pub signal_state: StateSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { kind: None, signal_state: StateSpec::Named("H".into()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub duration_s: f64,
    /// Drift integration step; defaults to the controller cycle period.
    pub dt_s: Option<f64>,
    /// Keep one record every this many controller cycles.
    pub record_every: usize,
    pub control: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { duration_s: 7200.0, dt_s: None, record_every: 10_000, control: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoveryConfig {
    pub duration_ms: f64,
    pub perturb_axis: [f64; 3],
    pub perturb_angle_deg: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self { duration_ms: 40.0, perturb_axis: [0.0, 0.0, 1.0], perturb_angle_deg: 90.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub tau_delta_omega: Vec<f64>,
    /// Drift strengths to sweep; empty means `channel.drift_rate` only.
    pub drift_rates: Vec<f64>,
    /// Independent seeds per grid point (`seed`, `seed + 1`, ...).
    pub trials: usize,
    /// Controller cycles with drift over which the residual is averaged.
    pub measure_cycles: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            tau_delta_omega: vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5],
            drift_rates: vec![],
            trials: 20,
            measure_cycles: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountsConfig {
    /// Physical analyzer (polarizer) angles, degrees; the analyzer moves along
    /// the sphere equator at twice this longitude.
    pub analyzer_angles_deg: Vec<f64>,
    pub gates: u64,
    pub states: Vec<StateSpec>,
}

impl Default for CountsConfig {
    fn default() -> Self {
        Self {
            analyzer_angles_deg: (0..=12).map(|k| 15.0 * k as f64).collect(),
            gates: 1_000_000,
            states: vec![StateSpec::Named("H".into()), StateSpec::Named("D".into())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleCheckConfig {
    /// Number of channel matrices; the first is the identity, the rest Haar-random.
    pub samples: usize,
    /// Members φ of the solution family to check (R₃ angle −φ), degrees.
    pub phases_deg: Vec<f64>,
    pub threshold: f64,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self { samples: 1000, phases_deg: vec![0.0, 90.0, 180.0, 270.0], threshold: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "operating-point" => Self::from_toml_str(PRESET_OPERATING_POINT),
            "low-stress" => Self::from_toml_str(PRESET_LOW_STRESS),
            "monochromatic" => Self::from_toml_str(PRESET_MONOCHROMATIC),
            other => Err(Error::Config(format!("unknown preset {other:?}; available: {}", PRESET_NAMES.join(", ")))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.channel;
        check(c.dgd_ps.is_finite() && c.dgd_ps >= 0.0, "channel.dgd_ps must be >= 0")?;
        check(c.delta_lambda_nm.is_finite() && c.delta_lambda_nm >= 0.0, "channel.delta_lambda_nm must be >= 0")?;
        check(
            c.center_wavelength_nm.is_finite() && c.center_wavelength_nm > 0.0,
            "channel.center_wavelength_nm must be > 0",
        )?;
        check(c.drift_rate.is_finite() && c.drift_rate >= 0.0, "channel.drift_rate must be >= 0")?;
        StokesVector::from_array(c.pmd_axis)
            .normalized()
            .map_err(|_| Error::Config("channel.pmd_axis must be a non-zero direction".into()))?;

        let k = &self.controller;
        check(k.loop_period_us.is_finite() && k.loop_period_us > 0.0, "controller.loop_period_us must be > 0")?;
        if let Some(p) = k.cycle_period_us {
            check(p.is_finite() && p > 0.0, "controller.cycle_period_us must be > 0")?;
        }
        self.dither_settings().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.sensor().validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(db) = k.extinction_db {
            check(db.is_finite() && db >= 0.0, "controller.extinction_db must be >= 0")?;
        }
        check(
            k.convergence_threshold > 0.0 && k.convergence_threshold < 1.0,
            "controller.convergence_threshold must lie in (0, 1)",
        )?;
        check(k.convergence_cycles >= 1, "controller.convergence_cycles must be >= 1")?;

        self.detector_params().validate().map_err(|e| Error::Config(e.to_string()))?;

        if let Some(kind) = &self.experiment.kind {
            kind.parse::<super::ExperimentKind>()?;
        }
        self.experiment.signal_state.stokes()?;

        let r = &self.run;
        check(r.duration_s.is_finite() && r.duration_s > 0.0, "run.duration_s must be > 0")?;
        if let Some(dt) = r.dt_s {
            check(dt.is_finite() && dt > 0.0 && dt <= self.cycle_period(), "run.dt_s must lie in (0, cycle period]")?;
        }
        check(r.record_every >= 1, "run.record_every must be >= 1")?;
        check(r.duration_s >= self.cycle_period(), "run.duration_s must cover one controller cycle")?;

        let rc = &self.recovery;
        check(rc.duration_ms.is_finite() && rc.duration_ms > 0.0, "recovery.duration_ms must be > 0")?;
        check(rc.perturb_angle_deg.is_finite(), "recovery.perturb_angle_deg must be finite")?;
        StokesVector::from_array(rc.perturb_axis)
            .normalized()
            .map_err(|_| Error::Config("recovery.perturb_axis must be a non-zero direction".into()))?;

        let s = &self.sweep;
        check(!s.tau_delta_omega.is_empty(), "sweep.tau_delta_omega must not be empty")?;
        check(
            s.tau_delta_omega.iter().all(|x| x.is_finite() && *x >= 0.0),
            "sweep.tau_delta_omega values must be >= 0",
        )?;
        check(s.drift_rates.iter().all(|x| x.is_finite() && *x >= 0.0), "sweep.drift_rates values must be >= 0")?;
        check(s.trials >= 1, "sweep.trials must be >= 1")?;
        check(s.measure_cycles >= 1, "sweep.measure_cycles must be >= 1")?;
        check(
            s.tau_delta_omega.iter().all(|x| *x == 0.0) || self.channel.delta_lambda_nm > 0.0,
            "sweep over tau_delta_omega needs channel.delta_lambda_nm > 0",
        )?;

        let ct = &self.counts;
        check(!ct.analyzer_angles_deg.is_empty(), "counts.analyzer_angles_deg must not be empty")?;
        check(ct.analyzer_angles_deg.iter().all(|a| a.is_finite()), "counts.analyzer_angles_deg must be finite")?;
        check(ct.gates >= 1, "counts.gates must be >= 1")?;
        check(!ct.states.is_empty(), "counts.states must not be empty")?;
        for st in &ct.states {
            st.stokes()?;
        }

        let o = &self.oracle_check;
        check(o.samples >= 1, "oracle_check.samples must be >= 1")?;
        check(o.threshold > 0.0, "oracle_check.threshold must be > 0")?;
        check(o.phases_deg.iter().all(|p| p.is_finite()), "oracle_check.phases_deg must be finite")?;
        Ok(())
    }

    /// Seconds between controller cycles.
    pub fn cycle_period(&self) -> f64 {
        self.controller.cycle_period_us.unwrap_or(self.controller.loop_period_us * PROBES_PER_CYCLE as f64) * 1e-6
    }

    pub fn channel_spec(&self, seed: u64) -> Result<ChannelSpec<f64>> {
        let c = &self.channel;
        let lambda0 = c.center_wavelength_nm * 1e-9;
        let spec = ChannelSpec {
            dgd_tau: c.dgd_ps * 1e-12,
            pmd_axis: StokesVector::from_array(c.pmd_axis).normalized()?,
            omega0: carrier_omega(lambda0),
            delta_omega: delta_omega_from_wavelength(c.delta_lambda_nm * 1e-9, lambda0),
            drift_rate: c.drift_rate,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dither_settings(&self) -> DitherSettings<f64> {
        let k = &self.controller;
        DitherSettings {
            initial_step: k.initial_step,
            min_step: k.min_step,
            max_step: k.max_step,
            shrink: k.shrink,
            grow: k.grow,
        }
    }

    pub fn sensor(&self) -> FeedbackSensor<f64> {
        let s = FeedbackSensor::with_noise(self.controller.noise_std);
        match self.controller.extinction_db {
            Some(db) => s.with_extinction_db(db),
            None => s,
        }
    }

    pub fn convergence(&self) -> ConvergenceCriteria<f64> {
        ConvergenceCriteria {
            threshold: self.controller.convergence_threshold,
            consecutive: self.controller.convergence_cycles,
        }
    }

    pub fn basis(&self) -> ReferenceBasis<f64> {
        ReferenceBasis::default()
    }

    pub fn detector_params(&self) -> DetectorParams {
        let d = &self.detector;
        DetectorParams {
            mean_photons: d.mu,
            gate_width: d.gate_width_ns * 1e-9,
            gate_rate: d.gate_rate_hz,
            dark_rate: d.dark_rate_per_ns,
            efficiency: d.efficiency,
            crosstalk_prob: d.crosstalk_prob,
        }
    }
}
