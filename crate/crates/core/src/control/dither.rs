//! Sequential dither-and-keep hill climbing over the five actuators.

use rand::Rng;

use super::{realize_r1, wrap_angle, ControllerState, FeedbackSample, FeedbackSensor, ReferenceBasis, ReferenceView};
use crate::fiber::FiberChannel;
use crate::scalar::Real;

/// Detector readings taken per cycle: one baseline plus two probes for each
/// R₁ plate, then one baseline plus two probes for R₃.
pub const PROBES_PER_CYCLE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleReport<F> {
    /// Actuators (out of 5) that moved this cycle.
    pub accepted: usize,
    /// Best reading kept for each reference at the end of the cycle.
    pub feedback: FeedbackSample<F>,
}

/// Picks among current, `+step` and `−step`; strictly better readings only,
/// `+` wins an exact tie between the two probes.
fn choose<F: Real>(current: F, plus: F, minus: F) -> (i8, F) {
    if plus > current && plus >= minus {
        (1, plus)
    } else if minus > current {
        (-1, minus)
    } else {
        (0, current)
    }
}

impl<F: Real> ControllerState<F> {
    /// One controller cycle against the channel as it is now.
    ///
    /// Each R₁ plate is probed at `±dither_step` and keeps whichever of the
    /// three settings gave the highest P₁ reading; R₃ does the same on P₃.
    /// The step shrinks by `shrink` after a cycle with no accepted move and
    /// grows by `grow` (capped) after a cycle where all five moved.
    pub fn control_step<R: Rng + ?Sized>(
        &mut self,
        ch: &FiberChannel<F>,
        basis: &ReferenceBasis<F>,
        sensor: &FeedbackSensor<F>,
        rng: &mut R,
    ) -> CycleReport<F> {
        let view = ReferenceView::new(ch, basis);
        let step = self.dither_step;
        let r3 = self.realize_r3(self.r3_retardance);
        let mut accepted = 0;

        let mut plates = self.r1_retardances;
        let mut best1 = sensor.read(view.exact_i1(&realize_r1(&plates), &r3), rng);
        for k in 0..4 {
            let current = plates[k];
            let probe = |x: F, rng: &mut R| {
                let mut p = plates;
                p[k] = x;
                sensor.read(view.exact_i1(&realize_r1(&p), &r3), rng)
            };
            let plus = probe(current + step, rng);
            let minus = probe(current - step, rng);
            let (dir, value) = choose(best1, plus, minus);
            if dir != 0 {
                plates[k] = wrap_angle(current + F::lit(dir as f64) * step);
                accepted += 1;
            }
            best1 = value;
        }
        self.r1_retardances = plates;

        let r1 = realize_r1(&plates);
        let read3 = |x: F, rng: &mut R| sensor.read(view.exact_i3(&r1, &self.realize_r3(x)), rng);
        let base3 = read3(self.r3_retardance, rng);
        let plus = read3(self.r3_retardance + step, rng);
        let minus = read3(self.r3_retardance - step, rng);
        let (dir, best3) = choose(base3, plus, minus);
        if dir != 0 {
            self.r3_retardance = wrap_angle(self.r3_retardance + F::lit(dir as f64) * step);
            accepted += 1;
        }

        let s = &self.settings;
        if accepted == 0 {
            self.dither_step = (step * s.shrink).max(s.min_step);
        } else if accepted == 5 {
            self.dither_step = (step * s.grow).min(s.max_step);
        }
        self.iteration += 1;
        CycleReport { accepted, feedback: FeedbackSample { i1: best1, i3: best3 } }
    }
}

/// Free-function form of [`ControllerState::control_step`].
pub fn control_step<F: Real, R: Rng + ?Sized>(
    ctrl: &mut ControllerState<F>,
    ch: &FiberChannel<F>,
    basis: &ReferenceBasis<F>,
    sensor: &FeedbackSensor<F>,
    rng: &mut R,
) -> CycleReport<F> {
    ctrl.control_step(ch, basis, sensor, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{measure_feedback, DitherSettings};
    use crate::fiber::ChannelSpec;
    use crate::polarization::StokesVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn static_channel(seed: u64) -> FiberChannel<f64> {
        let spec = ChannelSpec::from_wavelengths(0.0, 0.8e-9, StokesVector::horizontal(), seed);
        FiberChannel::with_random_base(spec).unwrap()
    }

    #[test]
    fn tie_keeps_current() {
        assert_eq!(choose(0.5, 0.5, 0.5), (0, 0.5));
        assert_eq!(choose(0.5, 0.6, 0.6), (1, 0.6));
        assert_eq!(choose(0.5, 0.4, 0.6), (-1, 0.6));
    }

    #[test]
    fn converged_state_only_adapts_step() {
        let basis = ReferenceBasis::<f64>::default();
        let ch = FiberChannel::new(ChannelSpec::from_wavelengths(0.0, 0.8e-9, StokesVector::horizontal(), 0)).unwrap();
        let mut ctrl = ControllerState::new(&basis, DitherSettings::default()).unwrap();
        let before = ctrl;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let report = ctrl.control_step(&ch, &basis, &FeedbackSensor::noiseless(), &mut rng);
        assert_eq!(report.accepted, 0);
        assert_eq!(ctrl.r1_retardances, before.r1_retardances);
        assert_eq!(ctrl.r3_retardance, before.r3_retardance);
        assert!((ctrl.dither_step - 0.07).abs() < 1e-15);
        assert_eq!(ctrl.iteration, 1);
    }

    #[test]
    fn objective_never_decreases_on_static_channel() {
        let basis = ReferenceBasis::default();
        let sensor = FeedbackSensor::noiseless();
        for seed in 0..10 {
            let ch = static_channel(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ctrl = ControllerState::randomized(&basis, DitherSettings::default(), &mut rng).unwrap();
            let mut prev = measure_feedback(&ch, &ctrl, &basis, &sensor, &mut rng);
            for _ in 0..300 {
                let report = ctrl.control_step(&ch, &basis, &sensor, &mut rng);
                let now = measure_feedback(&ch, &ctrl, &basis, &sensor, &mut rng);
                assert!((report.feedback.i1 - now.i1).abs() < 1e-12);
                assert!(now.i1 >= prev.i1 - 1e-12, "i1 fell from {} to {}", prev.i1, now.i1);
                // R₁ moves shift i3 by an amount bounded by the plate moves; the
                // R₃ stage itself never lowers its reading
                assert!(report.feedback.i3 >= now.i3 - 1e-12);
                prev = now;
            }
            assert!(prev.i1 > 0.9999 && prev.i3 > 0.9999, "seed {seed}: {prev:?}");
        }
    }

    #[test]
    fn step_stays_within_bounds() {
        let basis = ReferenceBasis::default();
        let settings = DitherSettings::default();
        let ch = static_channel(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ctrl = ControllerState::randomized(&basis, settings, &mut rng).unwrap();
        for _ in 0..2000 {
            ctrl.control_step(&ch, &basis, &FeedbackSensor::with_noise(0.01), &mut rng);
            assert!(ctrl.dither_step >= settings.min_step && ctrl.dither_step <= settings.max_step);
        }
    }
}
