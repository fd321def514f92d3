//! Two-stage polarization controller driven by reference-channel intensities.
//!
//! Stage R₁ is a stack of four retarders with fixed equatorial axes
//! (H, +45°, H, +45°) and is tuned to maximize the power of reference S₁
//! behind its polarizer. Stage R₃ is a single retarder whose axis is the S₁
//! axis, so it never disturbs S₁; it is tuned on reference S₃. When both
//! references are restored, `R₃·R₁·T` is the identity up to phase.

mod closed_loop;
mod dither;
mod inverse;
mod oracle;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub use closed_loop::{converge, observe, run_closed_loop, ConvergenceCriteria, LoopRecord, LoopSchedule, LoopSetup};
pub use dither::{control_step, CycleReport, PROBES_PER_CYCLE};
pub use inverse::retardances_for;
pub use oracle::{oracle_solve, oracle_solve_with_phase};

use crate::error::{Error, Result};
use crate::fiber::FiberChannel;
use crate::polarization::{fidelity, jones_to_stokes, rotation_unchecked, JonesMatrix, JonesVector, StokesVector};
use crate::scalar::Real;

/// Equatorial axes of the four R₁ plates, in order of traversal.
pub fn plate_axes<F: Real>() -> [StokesVector<F>; 4] {
    let h = StokesVector::horizontal();
    let d = StokesVector::diagonal();
    [h, d, h, d]
}

/// The two non-orthogonal launch states used as feedback references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceBasis<F> {
    pub s1_state: JonesVector<F>,
    pub s3_state: JonesVector<F>,
}

impl<F: Real> Default for ReferenceBasis<F> {
    /// Horizontal and +45° linear.
    fn default() -> Self {
        Self { s1_state: JonesVector::horizontal(), s3_state: JonesVector::diagonal() }
    }
}

impl<F: Real> ReferenceBasis<F> {
    /// Requires the pair to be mutually unbiased, `|⟨s1|s3⟩|² = 1/2`.
    pub fn new(s1_state: JonesVector<F>, s3_state: JonesVector<F>) -> Result<Self> {
        let s1_state = s1_state.normalize()?;
        let s3_state = s3_state.normalize()?;
        let f = fidelity(&s1_state, &s3_state);
        if (f - F::lit(0.5)).abs() > F::input_tol() {
            return Err(Error::invalid(format!("reference states must be mutually unbiased, fidelity is {f}")));
        }
        Ok(Self { s1_state, s3_state })
    }

    /// Sphere axis of S₁, the rotation axis of stage R₃.
    pub fn s1_axis(&self) -> StokesVector<F> {
        jones_to_stokes(&self.s1_state).expect("reference state is normalized")
    }
}

/// Step-size policy for the dither hill climber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DitherSettings<F> {
    pub initial_step: F,
    pub min_step: F,
    pub max_step: F,
    pub shrink: F,
    pub grow: F,
}

impl<F: Real> Default for DitherSettings<F> {
    fn default() -> Self {
        Self {
            initial_step: F::lit(0.1),
            min_step: F::lit(2e-3),
            max_step: F::lit(0.5),
            shrink: F::lit(0.7),
            grow: F::lit(1.3),
        }
    }
}

impl<F: Real> DitherSettings<F> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_step > F::zero()
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_step.is_finite()
            && self.shrink > F::zero()
            && self.shrink < F::one()
            && self.grow > F::one()
            && self.grow.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("inconsistent dither settings {self:?}")))
        }
    }
}

/// Actuator state of both controller stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerState<F> {
    /// R₁ plate retardances in radians, stored in `[0, 2π)`.
    pub r1_retardances: [F; 4],
    /// R₃ retardance in radians, stored in `[0, 2π)`.
    pub r3_retardance: F,
    pub dither_step: F,
    pub iteration: u64,
    #[serde(skip)]
    settings: DitherSettings<F>,
    #[serde(skip)]
    r3_axis: StokesVector<F>,
}

pub(crate) fn wrap_angle<F: Real>(x: F) -> F {
    let tau = F::TAU();
    let r = x % tau;
    let r = if r < F::zero() { r + tau } else { r };
    if r >= tau {
        F::zero()
    } else {
        r
    }
}

impl<F: Real> ControllerState<F> {
    /// All retardances zero (both stages realize the identity).
    pub fn new(basis: &ReferenceBasis<F>, settings: DitherSettings<F>) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            r1_retardances: [F::zero(); 4],
            r3_retardance: F::zero(),
            dither_step: settings.initial_step,
            iteration: 0,
            settings,
            r3_axis: basis.s1_axis(),
        })
    }

    /// Random initial retardances, uniform in `[0, 2π)`.
    pub fn randomized<R: Rng + ?Sized>(
        basis: &ReferenceBasis<F>,
        settings: DitherSettings<F>,
        rng: &mut R,
    ) -> Result<Self> {
        let mut s = Self::new(basis, settings)?;
        let tau = std::f64::consts::TAU;
        for r in s.r1_retardances.iter_mut() {
            *r = wrap_angle(F::lit(rng.random::<f64>() * tau));
        }
        s.r3_retardance = wrap_angle(F::lit(rng.random::<f64>() * tau));
        Ok(s)
    }

    pub fn settings(&self) -> &DitherSettings<F> {
        &self.settings
    }

    pub fn set_r1(&mut self, retardances: [F; 4]) {
        self.r1_retardances = retardances.map(wrap_angle);
    }

    pub fn set_r3(&mut self, retardance: F) {
        self.r3_retardance = wrap_angle(retardance);
    }

    /// Resets the dither step to its initial value (e.g. after a known disturbance).
    pub fn reset_step(&mut self) {
        self.dither_step = self.settings.initial_step;
    }

    /// `(R₁, R₃)` with `R₁ = P₄·P₃·P₂·P₁` and `R₃` a rotation about the S₁ axis.
    pub fn realize(&self) -> (JonesMatrix<F>, JonesMatrix<F>) {
        (realize_r1(&self.r1_retardances), self.realize_r3(self.r3_retardance))
    }

    pub(crate) fn realize_r3(&self, retardance: F) -> JonesMatrix<F> {
        rotation_unchecked(&self.r3_axis, retardance)
    }

    /// `R₃·R₁·T(ω)`.
    pub fn net_operator(&self, ch: &FiberChannel<F>, omega: F) -> JonesMatrix<F> {
        let (r1, r3) = self.realize();
        r3 * r1 * ch.transfer(omega)
    }
}

/// `P₄·P₃·P₂·P₁` for the given plate retardances.
pub fn realize_r1<F: Real>(retardances: &[F; 4]) -> JonesMatrix<F> {
    let axes = plate_axes::<F>();
    axes.iter()
        .zip(retardances.iter())
        .fold(JonesMatrix::identity(), |acc, (axis, &r)| rotation_unchecked(axis, r) * acc)
}

/// Free-function form of [`ControllerState::realize`].
pub fn realize<F: Real>(ctrl: &ControllerState<F>) -> (JonesMatrix<F>, JonesMatrix<F>) {
    ctrl.realize()
}

/// Normalized powers behind the reference polarizers P₁ and P₃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackSample<F> {
    pub i1: F,
    pub i3: F,
}

/// Photodiode-plus-polarizer model for the two feedback detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackSensor<F> {
    /// Std-dev of additive Gaussian noise on each normalized reading.
    pub noise_std: F,
    /// Fraction of the orthogonal projection leaking through the polarizer.
    pub leakage: F,
}

impl<F: Real> Default for FeedbackSensor<F> {
    fn default() -> Self {
        Self { noise_std: F::zero(), leakage: F::zero() }
    }
}

impl<F: Real> FeedbackSensor<F> {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn with_noise(noise_std: F) -> Self {
        Self { noise_std, ..Self::default() }
    }

    /// Polarizer with the given extinction ratio in dB (40 dB leaks 1e-4).
    pub fn with_extinction_db(mut self, db: F) -> Self {
        self.leakage = F::lit(10.0).powf(-db / F::lit(10.0));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= F::zero()) || !self.noise_std.is_finite() {
            return Err(Error::invalid("noise_std must be non-negative"));
        }
        if !(self.leakage >= F::zero() && self.leakage <= F::one()) {
            return Err(Error::invalid("polarizer leakage must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Reading for a state whose fidelity to the polarizer axis is `f`.
    pub fn read<R: Rng + ?Sized>(&self, f: F, rng: &mut R) -> F {
        let mut i = (F::one() - self.leakage) * f + self.leakage * (F::one() - f);
        if self.noise_std > F::zero() {
            let n: f64 = rng.sample(StandardNormal);
            i = i + self.noise_std * F::lit(n);
        }
        i.max(F::zero()).min(F::one())
    }
}

/// Frozen view of the channel at the two reference frequencies, reused for all
/// probes within one controller cycle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReferenceView<F> {
    t1: JonesMatrix<F>,
    t3: JonesMatrix<F>,
    basis: ReferenceBasis<F>,
}

impl<F: Real> ReferenceView<F> {
    pub(crate) fn new(ch: &FiberChannel<F>, basis: &ReferenceBasis<F>) -> Self {
        let spec = ch.spec();
        Self { t1: ch.transfer(spec.omega1()), t3: ch.transfer(spec.omega3()), basis: *basis }
    }

    fn projection(state: &JonesVector<F>, op: &JonesMatrix<F>) -> F {
        let out = op.apply(state);
        let amp: Complex<F> = state.inner(&out);
        amp.norm_sqr().min(F::one())
    }

    /// `|⟨S₁|R₃R₁T(ω₁)|S₁⟩|²`.
    pub(crate) fn exact_i1(&self, r1: &JonesMatrix<F>, r3: &JonesMatrix<F>) -> F {
        Self::projection(&self.basis.s1_state, &(*r3 * *r1 * self.t1))
    }

    /// `|⟨S₃|R₃R₁T(ω₃)|S₃⟩|²`.
    pub(crate) fn exact_i3(&self, r1: &JonesMatrix<F>, r3: &JonesMatrix<F>) -> F {
        Self::projection(&self.basis.s3_state, &(*r3 * *r1 * self.t3))
    }
}

/// One reading of both feedback detectors.
pub fn measure_feedback<F: Real, R: Rng + ?Sized>(
    ch: &FiberChannel<F>,
    ctrl: &ControllerState<F>,
    basis: &ReferenceBasis<F>,
    sensor: &FeedbackSensor<F>,
    rng: &mut R,
) -> FeedbackSample<F> {
    let view = ReferenceView::new(ch, basis);
    let (r1, r3) = ctrl.realize();
    let i1 = sensor.read(view.exact_i1(&r1, &r3), rng);
    let i3 = sensor.read(view.exact_i3(&r1, &r3), rng);
    FeedbackSample { i1, i3 }
}
