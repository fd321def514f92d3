use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::output::{Artifacts, RecoveryRow, ReferenceRow, RunSummary, SeriesRow};
use crate::control::{
    converge, observe, oracle_solve_with_phase, run_closed_loop, ControllerState, LoopRecord, LoopSchedule, LoopSetup,
};
use crate::detection::{click_probability, qber_measured, simulate_counts};
use crate::error::{Error, Result};
use crate::fiber::FiberChannel;
use crate::polarization::{added_loss, fidelity, haar_random, JonesMatrix, JonesVector, StokesVector};

const STREAM_CONTROLLER: u64 = 1;
const STREAM_DETECTOR: u64 = 2;
const STREAM_ORACLE: u64 = 3;

/// Independent stream of the scenario seed. The channel owns stream 0.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Channel, controller, loop setup and controller stream for one seed, with
/// the controller already run to lock on the static channel.
pub struct Prepared {
    pub channel: FiberChannel<f64>,
    pub controller: ControllerState<f64>,
    pub setup: LoopSetup<f64>,
    pub rng: ChaCha8Rng,
    /// Warm-up cycles until lock; `None` if the warm-up budget ran out.
    pub lock_cycles: Option<usize>,
}

pub fn prepare(cfg: &ScenarioConfig, seed: u64, dgd_tau: Option<f64>, drift_rate: Option<f64>) -> Result<Prepared> {
    let mut spec = cfg.channel_spec(seed)?;
    if let Some(tau) = dgd_tau {
        spec.dgd_tau = tau;
    }
    if let Some(d) = drift_rate {
        spec.drift_rate = d;
    }
    let mut channel = FiberChannel::new(spec)?;
    if cfg.channel.random_base {
        channel.randomize_base();
    }
    let basis = cfg.basis();
    let mut rng = rng_stream(seed, STREAM_CONTROLLER);
    let mut controller = if cfg.controller.random_start {
        ControllerState::randomized(&basis, cfg.dither_settings(), &mut rng)?
    } else {
        ControllerState::new(&basis, cfg.dither_settings())?
    };
    let sensor = cfg.sensor();
    let lock_cycles = if cfg.controller.warmup_cycles > 0 {
        converge(&channel, &mut controller, &basis, &sensor, &cfg.convergence(), cfg.controller.warmup_cycles, &mut rng)
    } else {
        None
    };
    let setup = LoopSetup::new(basis, sensor, cfg.experiment.signal_state.jones()?);
    Ok(Prepared { channel, controller, setup, rng, lock_cycles })
}

fn series_row(t: f64, rec: &LoopRecord<f64>) -> SeriesRow {
    SeriesRow {
        t_s: t,
        sig_s1: rec.signal_output.s1,
        sig_s2: rec.signal_output.s2,
        sig_s3: rec.signal_output.s3,
        deviation_deg: rec.deviation.to_degrees(),
        loss: added_loss(rec.deviation),
        i1: rec.feedback.i1,
        i3: rec.feedback.i3,
    }
}

fn reference_row(t: f64, rec: &LoopRecord<f64>) -> ReferenceRow {
    let [a, b] = rec.reference_outputs;
    ReferenceRow { t_s: t, ref1_s1: a.s1, ref1_s2: a.s2, ref1_s3: a.s3, ref3_s1: b.s1, ref3_s2: b.s2, ref3_s3: b.s3 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub series: Vec<SeriesRow>,
    pub references: Vec<ReferenceRow>,
}

impl RunOutput {
    pub fn artifacts(&self) -> Result<Artifacts> {
        let mut a = Artifacts::default();
        a.add_csv("series.csv", &self.series)?;
        a.add_csv("references.csv", &self.references)?;
        a.add_json("summary.json", &self.summary)?;
        Ok(a)
    }
}

/// Drift run over `run.duration_s`, with the loop closed or (control off) the
/// actuators frozen at their warm-up setting. The first row is the state at
/// t = 0, then one row per `run.record_every` cycles.
pub fn experiment_run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut p = prepare(cfg, cfg.seed, None, None)?;
    let period = cfg.cycle_period();
    let schedule = LoopSchedule {
        dt: cfg.run.dt_s.unwrap_or(period),
        total_time: cfg.run.duration_s,
        loop_period: period,
        record_every: cfg.run.record_every,
    };
    let setup = LoopSetup { control_enabled: cfg.run.control, ..p.setup };
    let first = observe(&p.channel, &p.controller, &setup);
    let records = run_closed_loop(&mut p.channel, &mut p.controller, &setup, &schedule, &mut p.rng)?;

    let all: Vec<&LoopRecord<f64>> = std::iter::once(&first).chain(records.iter()).collect();
    let series: Vec<SeriesRow> = all.iter().map(|r| series_row(r.sim_time, r)).collect();
    let references = all.iter().map(|r| reference_row(r.sim_time, r)).collect();
    let summary = RunSummary::from_series("run", cfg.seed, p.controller.iteration, &series)?;
    Ok(RunOutput { summary, series, references })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutput {
    pub summary: RunSummary,
    pub series: Vec<RecoveryRow>,
    /// Analyzer transmission just before the perturbation.
    pub power_before: f64,
}

impl RecoveryOutput {
    pub fn artifacts(&self) -> Result<Artifacts> {
        let mut a = Artifacts::default();
        a.add_csv("recovery.csv", &self.series)?;
        a.add_json("summary.json", &self.summary)?;
        Ok(a)
    }
}

fn recovery_row(t: f64, rec: &LoopRecord<f64>, analyzer: &StokesVector<f64>) -> RecoveryRow {
    let s = series_row(t, rec);
    RecoveryRow {
        t_s: s.t_s,
        sig_s1: s.sig_s1,
        sig_s2: s.sig_s2,
        sig_s3: s.sig_s3,
        deviation_deg: s.deviation_deg,
        loss: s.loss,
        i1: s.i1,
        i3: s.i3,
        power: ((1.0 + rec.signal_output.dot(analyzer)) / 2.0).clamp(0.0, 1.0),
    }
}

/// Locks the loop, rotates the fiber by `recovery.perturb_angle_deg` about
/// `recovery.perturb_axis` at t = 0 and follows the power through an analyzer
/// aligned with the launched signal state, one row per controller cycle.
pub fn experiment_recovery(cfg: &ScenarioConfig) -> Result<RecoveryOutput> {
    cfg.validate()?;
    let mut p = prepare(cfg, cfg.seed, None, None)?;
    let analyzer = cfg.experiment.signal_state.stokes()?;
    let power_before = recovery_row(0.0, &observe(&p.channel, &p.controller, &p.setup), &analyzer).power;

    let axis = StokesVector::from_array(cfg.recovery.perturb_axis).normalized()?;
    p.channel.perturb(&axis, cfg.recovery.perturb_angle_deg.to_radians())?;

    let period = cfg.cycle_period();
    let duration = cfg.recovery.duration_ms * 1e-3;
    let cycles = (duration / period + 1e-9).floor() as usize;
    let mut series = Vec::with_capacity(cycles + 1);
    series.push(recovery_row(0.0, &observe(&p.channel, &p.controller, &p.setup), &analyzer));
    for k in 1..=cycles {
        if p.channel.spec().drift_rate > 0.0 {
            p.channel.step(period)?;
        }
        p.controller.control_step(&p.channel, &p.setup.basis, &p.setup.sensor, &mut p.rng);
        let rec = observe(&p.channel, &p.controller, &p.setup);
        series.push(recovery_row(k as f64 * period, &rec, &analyzer));
    }

    let first_crossing = |fraction: f64| series.iter().find(|r| r.power >= fraction * power_before).map(|r| r.t_s);
    let t90 = first_crossing(0.9);
    let tfull = first_crossing(0.999);
    let rows: Vec<SeriesRow> = series.iter().map(RecoveryRow::series).collect();
    let mut summary = RunSummary::from_series("recovery", cfg.seed, p.controller.iteration, &rows)?;
    summary.recovery_time_90_s = Some(t90.unwrap_or(duration));
    summary.recovery_time_full_s = Some(tfull.unwrap_or(duration));
    summary.recovered = Some(tfull.is_some());
    Ok(RecoveryOutput { summary, series, power_before })
}

/// Residual statistics of one sweep trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepTrial {
    pub tau_delta_omega: f64,
    pub drift_rate: f64,
    pub trial: usize,
    pub seed: u64,
    pub locked: bool,
    pub mean_deviation_deg: f64,
    pub max_deviation_deg: f64,
    pub mean_loss: f64,
    pub max_loss: f64,
}

/// One grid point, aggregated over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau_delta_omega: f64,
    pub drift_rate: f64,
    pub trials: usize,
    pub locked_trials: usize,
    pub mean_deviation_deg: f64,
    pub max_deviation_deg: f64,
    pub mean_loss: f64,
    pub max_loss: f64,
    pub qber_added: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<SweepTrial>,
}

impl SweepOutput {
    pub fn artifacts(&self) -> Result<Artifacts> {
        let mut a = Artifacts::default();
        a.add_csv("sweep.csv", &self.rows)?;
        a.add_csv("sweep_trials.csv", &self.trials)?;
        Ok(a)
    }
}

fn sweep_trial(cfg: &ScenarioConfig, x: f64, drift: f64, trial: usize) -> Result<SweepTrial> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let delta_omega = cfg.channel_spec(seed)?.delta_omega;
    let tau = if x == 0.0 { 0.0 } else { x / delta_omega };
    let mut p = prepare(cfg, seed, Some(tau), Some(drift))?;
    let period = cfg.cycle_period();
    let schedule = LoopSchedule {
        dt: period,
        total_time: period * cfg.sweep.measure_cycles as f64,
        loop_period: period,
        record_every: 1,
    };
    let records = run_closed_loop(&mut p.channel, &mut p.controller, &p.setup, &schedule, &mut p.rng)?;
    let n = records.len() as f64;
    let dev: Vec<f64> = records.iter().map(|r| r.deviation).collect();
    Ok(SweepTrial {
        tau_delta_omega: x,
        drift_rate: drift,
        trial,
        seed,
        locked: p.lock_cycles.is_some(),
        mean_deviation_deg: dev.iter().map(|d| d.to_degrees()).sum::<f64>() / n,
        max_deviation_deg: dev.iter().fold(0.0f64, |m, d| m.max(d.to_degrees())),
        mean_loss: dev.iter().map(|&d| added_loss(d)).sum::<f64>() / n,
        max_loss: dev.iter().fold(0.0f64, |m, &d| m.max(added_loss(d))),
    })
}

/// Converged residual of the signal channel over a `τΔω` × drift grid.
/// Trial `k` of every grid point uses seed `seed + k`, so all grid points
/// see the same fibers and controller starts.
pub fn experiment_sweep(cfg: &ScenarioConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let drifts =
        if cfg.sweep.drift_rates.is_empty() { vec![cfg.channel.drift_rate] } else { cfg.sweep.drift_rates.clone() };
    let jobs: Vec<(f64, f64, usize)> = cfg
        .sweep
        .tau_delta_omega
        .iter()
        .flat_map(|&x| drifts.iter().flat_map(move |&d| (0..cfg.sweep.trials).map(move |k| (x, d, k))))
        .collect();
    let trials = jobs.par_iter().map(|&(x, d, k)| sweep_trial(cfg, x, d, k)).collect::<Result<Vec<_>>>()?;

    let rows = trials
        .chunks(cfg.sweep.trials)
        .map(|group| {
            let n = group.len() as f64;
            let mean_loss = group.iter().map(|t| t.mean_loss).sum::<f64>() / n;
            SweepRow {
                tau_delta_omega: group[0].tau_delta_omega,
                drift_rate: group[0].drift_rate,
                trials: group.len(),
                locked_trials: group.iter().filter(|t| t.locked).count(),
                mean_deviation_deg: group.iter().map(|t| t.mean_deviation_deg).sum::<f64>() / n,
                max_deviation_deg: group.iter().fold(0.0, |m, t| f64::max(m, t.max_deviation_deg)),
                mean_loss,
                max_loss: group.iter().fold(0.0, |m, t| f64::max(m, t.max_loss)),
                qber_added: mean_loss,
            }
        })
        .collect();
    Ok(SweepOutput { rows, trials })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub state: String,
    pub analyzer_angle_deg: f64,
    pub analyzer_s1: f64,
    pub analyzer_s2: f64,
    pub analyzer_s3: f64,
    pub gates: u64,
    pub clicks: u64,
    pub click_rate: f64,
    pub expected_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateQber {
    pub state: String,
    pub received: [f64; 3],
    pub correct_clicks: u64,
    pub orthogonal_clicks: u64,
    pub qber_measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsSummary {
    pub seed: u64,
    pub gates: u64,
    pub dark_probability: f64,
    pub dark_counts_per_s: f64,
    /// QBER with perfect alignment, set by dark counts alone.
    pub floor_qber: f64,
    pub states: Vec<StateQber>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountsOutput {
    pub rows: Vec<CountRow>,
    pub summary: CountsSummary,
}

impl CountsOutput {
    pub fn artifacts(&self) -> Result<Artifacts> {
        let mut a = Artifacts::default();
        a.add_csv("counts.csv", &self.rows)?;
        a.add_json("counts_summary.json", &self.summary)?;
        Ok(a)
    }
}

/// Analyzer sweep along the equator for each configured input state, sent
/// through the locked loop, plus QBER from aligned and crossed analyzers.
pub fn experiment_counts(cfg: &ScenarioConfig) -> Result<CountsOutput> {
    cfg.validate()?;
    let params = cfg.detector_params();
    let p = prepare(cfg, cfg.seed, None, None)?;
    let net = p.controller.net_operator(&p.channel, p.channel.spec().omega0);
    let mut rng = rng_stream(cfg.seed, STREAM_DETECTOR);
    let gates = cfg.counts.gates;

    let mut rows = Vec::new();
    let mut states = Vec::new();
    for st in &cfg.counts.states {
        let input = st.stokes()?;
        let received = net.apply(&st.jones()?).to_stokes()?;
        for &angle in &cfg.counts.analyzer_angles_deg {
            let analyzer = StokesVector::linear(angle.to_radians());
            let rec = simulate_counts(&params, &analyzer, &received, gates, &mut rng)?;
            let f = (1.0 + analyzer.dot(&received)) / 2.0;
            rows.push(CountRow {
                state: st.label(),
                analyzer_angle_deg: angle,
                analyzer_s1: analyzer.s1,
                analyzer_s2: analyzer.s2,
                analyzer_s3: analyzer.s3,
                gates,
                clicks: rec.clicks,
                click_rate: rec.click_rate(),
                expected_probability: click_probability(&params, f),
            });
        }
        let correct = simulate_counts(&params, &input, &received, gates, &mut rng)?;
        let orthogonal = simulate_counts(&params, &(-input), &received, gates, &mut rng)?;
        states.push(StateQber {
            state: st.label(),
            received: received.to_array(),
            correct_clicks: correct.clicks,
            orthogonal_clicks: orthogonal.clicks,
            qber_measured: qber_measured(&correct, &orthogonal)?,
        });
    }
    let dark = params.dark_probability();
    let bright = click_probability(&params, 1.0);
    let summary = CountsSummary {
        seed: cfg.seed,
        gates,
        dark_probability: dark,
        dark_counts_per_s: dark * params.gate_rate,
        floor_qber: dark / (dark + bright),
        states,
    };
    Ok(CountsOutput { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCheck {
    pub phi_deg: f64,
    pub max_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub samples: usize,
    pub threshold: f64,
    /// Largest phase-quotient distance of `R₃R₁T` from the identity.
    pub max_distance: f64,
    /// Largest `1 − fidelity` of either reference state after `R₃R₁T`.
    pub max_reference_infidelity: f64,
    pub phases: Vec<PhaseCheck>,
    pub pass: bool,
}

impl OracleReport {
    pub fn artifacts(&self) -> Result<Artifacts> {
        let mut a = Artifacts::default();
        a.add_json("oracle_check.json", self)?;
        Ok(a)
    }

    pub fn ensure_pass(&self) -> Result<()> {
        if self.pass {
            Ok(())
        } else {
            let worst = self.phases.iter().map(|p| p.max_distance).fold(self.max_distance, f64::max);
            Err(Error::OracleCheckFailed { max_distance: worst, threshold: self.threshold })
        }
    }
}

/// Checks the analytic controller setting on the identity plus `samples − 1`
/// Haar-random channels, for the base solution and each configured member of
/// the solution family.
pub fn experiment_oracle_check(cfg: &ScenarioConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let oc = &cfg.oracle_check;
    let basis = cfg.basis();
    let mut rng = rng_stream(cfg.seed, STREAM_ORACLE);
    let channels: Vec<JonesMatrix<f64>> =
        std::iter::once(JonesMatrix::identity()).chain((1..oc.samples).map(|_| haar_random(&mut rng))).collect();
    let id = JonesMatrix::identity();
    let refs: [JonesVector<f64>; 2] = [basis.s1_state, basis.s3_state];

    let check = |phi: f64| -> Result<(f64, f64)> {
        let mut dist = 0.0f64;
        let mut infid = 0.0f64;
        for t in &channels {
            let (r1, r3) = oracle_solve_with_phase(t, &basis, phi)?;
            let net = r3 * r1 * *t;
            dist = dist.max(net.phase_distance(&id));
            for s in &refs {
                infid = infid.max(1.0 - fidelity(&net.apply(s), s));
            }
        }
        Ok((dist, infid))
    };

    let (max_distance, max_reference_infidelity) = check(0.0)?;
    let mut phases = Vec::with_capacity(oc.phases_deg.len());
    let mut worst = max_distance;
    for &phi in &oc.phases_deg {
        let (d, _) = check(phi.to_radians())?;
        worst = worst.max(d);
        phases.push(PhaseCheck { phi_deg: phi, max_distance: d });
    }
    Ok(OracleReport {
        seed: cfg.seed,
        samples: oc.samples,
        threshold: oc.threshold,
        max_distance,
        max_reference_infidelity,
        phases,
        pass: worst < oc.threshold,
    })
}
