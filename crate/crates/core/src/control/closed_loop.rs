use rand::Rng;

use super::{ControllerState, FeedbackSample, FeedbackSensor, ReferenceBasis, ReferenceView};
use crate::error::{Error, Result};
use crate::fiber::FiberChannel;
use crate::polarization::{jones_to_stokes, sphere_angle, JonesVector, StokesVector};
use crate::scalar::Real;

/// Cadence of a closed-loop run, all times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSchedule<F> {
    /// Drift integration step.
    pub dt: F,
    pub total_time: F,
    /// Time between controller cycles; one record per period.
    pub loop_period: F,
    /// Keep every n-th record (1 keeps all).
    pub record_every: usize,
}

impl<F: Real> LoopSchedule<F> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: F| x > F::zero() && x.is_finite();
        if !pos(self.dt) || !pos(self.loop_period) || !pos(self.total_time) {
            return Err(Error::invalid("schedule times must be positive and finite"));
        }
        if self.loop_period < self.dt {
            return Err(Error::invalid("loop_period must be at least dt"));
        }
        if self.total_time < self.loop_period {
            return Err(Error::invalid("total_time must cover at least one loop period"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        Ok(())
    }

    pub fn periods(&self) -> usize {
        (self.total_time / self.loop_period + F::lit(1e-9)).floor().to_usize().unwrap_or(0)
    }
}

/// Fixed ingredients of a closed-loop run besides channel and controller.
#[derive(Debug, Clone, Copy)]
pub struct LoopSetup<F> {
    pub basis: ReferenceBasis<F>,
    pub sensor: FeedbackSensor<F>,
    /// State launched on the signal channel at ω₀; also the target SOP.
    pub signal: JonesVector<F>,
    /// With control off the actuators stay frozen and the run shows the bare drift.
    pub control_enabled: bool,
}

impl<F: Real> LoopSetup<F> {
    pub fn new(basis: ReferenceBasis<F>, sensor: FeedbackSensor<F>, signal: JonesVector<F>) -> Self {
        Self { basis, sensor, signal, control_enabled: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopRecord<F> {
    pub sim_time: F,
    pub controller: ControllerState<F>,
    /// Noise-free reference powers after the cycle.
    pub feedback: FeedbackSample<F>,
    /// Received signal SOP at ω₀.
    pub signal_output: StokesVector<F>,
    /// Received S₁ (at ω₁) and S₃ (at ω₃).
    pub reference_outputs: [StokesVector<F>; 2],
    /// Sphere angle between received and launched signal SOP, radians.
    pub deviation: F,
}

/// Observes the channel/controller pair without touching any random stream.
pub fn observe<F: Real>(ch: &FiberChannel<F>, ctrl: &ControllerState<F>, setup: &LoopSetup<F>) -> LoopRecord<F> {
    let spec = ch.spec();
    let (r1, r3) = ctrl.realize();
    let view = ReferenceView::new(ch, &setup.basis);
    let feedback = FeedbackSample { i1: view.exact_i1(&r1, &r3), i3: view.exact_i3(&r1, &r3) };
    let stokes = |v: JonesVector<F>| jones_to_stokes(&v).expect("unitary image of a normalized state");
    let net0 = r3 * r1 * ch.transfer(spec.omega0);
    let signal_output = stokes(net0.apply(&setup.signal));
    let target = stokes(setup.signal);
    let ref1 = stokes((r3 * r1 * ch.transfer(spec.omega1())).apply(&setup.basis.s1_state));
    let ref3 = stokes((r3 * r1 * ch.transfer(spec.omega3())).apply(&setup.basis.s3_state));
    LoopRecord {
        sim_time: ch.sim_time(),
        controller: *ctrl,
        feedback,
        signal_output,
        reference_outputs: [ref1, ref3],
        deviation: sphere_angle(&signal_output, &target),
    }
}

/// Interleaves channel drift and controller cycles: each loop period advances
/// the channel in `dt`-sized steps, runs one controller cycle (when enabled)
/// and emits a record.
pub fn run_closed_loop<F: Real, R: Rng + ?Sized>(
    ch: &mut FiberChannel<F>,
    ctrl: &mut ControllerState<F>,
    setup: &LoopSetup<F>,
    schedule: &LoopSchedule<F>,
    rng: &mut R,
) -> Result<Vec<LoopRecord<F>>> {
    schedule.validate()?;
    setup.sensor.validate()?;
    let setup = LoopSetup { signal: setup.signal.normalize()?, ..*setup };
    let periods = schedule.periods();
    let substeps = (schedule.loop_period / schedule.dt - F::lit(1e-9)).ceil().max(F::one());
    let sub_dt = schedule.loop_period / substeps;
    let substeps = substeps.to_usize().unwrap_or(1);

    let mut records = Vec::with_capacity(periods / schedule.record_every + 1);
    for k in 0..periods {
        for _ in 0..substeps {
            ch.step(sub_dt)?;
        }
        if setup.control_enabled {
            ctrl.control_step(ch, &setup.basis, &setup.sensor, rng);
        }
        if (k + 1) % schedule.record_every == 0 {
            records.push(observe(ch, ctrl, &setup));
        }
    }
    Ok(records)
}

/// Declares convergence once both reference powers exceed `1 − threshold`
/// for `consecutive` cycles in a row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCriteria<F> {
    pub threshold: F,
    pub consecutive: usize,
}

impl<F: Real> Default for ConvergenceCriteria<F> {
    fn default() -> Self {
        Self { threshold: F::lit(1e-4), consecutive: 10 }
    }
}

impl<F: Real> ConvergenceCriteria<F> {
    pub fn is_locked(&self, s: &FeedbackSample<F>) -> bool {
        let floor = F::one() - self.threshold;
        s.i1 > floor && s.i3 > floor
    }
}

/// Runs controller cycles on the channel as it stands (no drift) until the
/// criteria hold. Returns the number of cycles, or `None` after `max_cycles`.
pub fn converge<F: Real, R: Rng + ?Sized>(
    ch: &FiberChannel<F>,
    ctrl: &mut ControllerState<F>,
    basis: &ReferenceBasis<F>,
    sensor: &FeedbackSensor<F>,
    criteria: &ConvergenceCriteria<F>,
    max_cycles: usize,
    rng: &mut R,
) -> Option<usize> {
    let mut streak = 0;
    for cycle in 1..=max_cycles {
        ctrl.control_step(ch, basis, sensor, rng);
        let view = ReferenceView::new(ch, basis);
        let (r1, r3) = ctrl.realize();
        let exact = FeedbackSample { i1: view.exact_i1(&r1, &r3), i3: view.exact_i3(&r1, &r3) };
        if criteria.is_locked(&exact) {
            streak += 1;
            if streak >= criteria.consecutive {
                return Some(cycle);
            }
        } else {
            streak = 0;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::DitherSettings;
    use crate::fiber::ChannelSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> LoopSetup<f64> {
        LoopSetup::new(ReferenceBasis::default(), FeedbackSensor::noiseless(), JonesVector::diagonal())
    }

    fn channel(drift: f64, seed: u64) -> FiberChannel<f64> {
        let mut spec = ChannelSpec::from_wavelengths(0.0, 0.8e-9, StokesVector::horizontal(), seed);
        spec.drift_rate = drift;
        FiberChannel::with_random_base(spec).unwrap()
    }

    #[test]
    fn schedule_validation() {
        let ok = LoopSchedule { dt: 1e-3, total_time: 1.0, loop_period: 1e-2, record_every: 1 };
        assert!(ok.validate().is_ok());
        assert_eq!(ok.periods(), 100);
        assert!(LoopSchedule { loop_period: 1e-4, ..ok }.validate().is_err());
        assert!(LoopSchedule { dt: 0.0, ..ok }.validate().is_err());
        assert!(LoopSchedule { record_every: 0, ..ok }.validate().is_err());
        assert!(LoopSchedule { total_time: 1e-3, ..ok }.validate().is_err());
    }

    #[test]
    fn pre_converged_static_loop_is_flat() {
        let mut ch = channel(0.0, 1);
        let basis = ReferenceBasis::default();
        let (r1, _) = crate::control::oracle_solve(&ch.transfer(ch.spec().omega0)).unwrap();
        let mut ctrl = ControllerState::new(&basis, DitherSettings::default()).unwrap();
        ctrl.set_r1(crate::control::retardances_for(&r1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let schedule = LoopSchedule { dt: 1e-3, total_time: 0.5, loop_period: 1e-3, record_every: 1 };
        let recs = run_closed_loop(&mut ch, &mut ctrl, &setup(), &schedule, &mut rng).unwrap();
        assert_eq!(recs.len(), 500);
        assert!(recs.iter().all(|r| r.deviation < 1e-6));
    }

    #[test]
    fn uncontrolled_drift_wanders() {
        let mut ch = channel(0.5, 2);
        let basis = ReferenceBasis::default();
        let mut ctrl = ControllerState::new(&basis, DitherSettings::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = LoopSetup { control_enabled: false, ..setup() };
        let schedule = LoopSchedule { dt: 0.1, total_time: 100.0, loop_period: 0.1, record_every: 1 };
        let recs = run_closed_loop(&mut ch, &mut ctrl, &s, &schedule, &mut rng).unwrap();
        assert_eq!(ctrl.iteration, 0);
        let max = recs.iter().map(|r| r.deviation).fold(0.0, f64::max);
        assert!(max > std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn record_decimation_and_determinism() {
        let run = || {
            let mut ch = channel(0.05, 3);
            let basis = ReferenceBasis::default();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut ctrl = ControllerState::randomized(&basis, DitherSettings::default(), &mut rng).unwrap();
            let schedule = LoopSchedule { dt: 5e-4, total_time: 0.2, loop_period: 1e-3, record_every: 10 };
            run_closed_loop(&mut ch, &mut ctrl, &setup(), &schedule, &mut rng).unwrap()
        };
        let a = run();
        assert_eq!(a.len(), 20);
        assert_eq!(a, run());
        assert!((a[0].sim_time - 0.01).abs() < 1e-12);
    }

    #[test]
    fn converge_reports_cycles() {
        let ch = channel(0.0, 5);
        let basis = ReferenceBasis::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ctrl = ControllerState::randomized(&basis, DitherSettings::default(), &mut rng).unwrap();
        let n = converge(
            &ch,
            &mut ctrl,
            &basis,
            &FeedbackSensor::noiseless(),
            &ConvergenceCriteria::default(),
            5000,
            &mut rng,
        );
        assert!(n.is_some());
        assert!(ctrl.net_operator(&ch, ch.spec().omega0).rotation_angle() < 1f64.to_radians());
    }
}
