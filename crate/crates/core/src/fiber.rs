//! Time-varying, wavelength-dependent fiber transfer operator.
//!
//! The channel is modelled as `T(ω, t) = U(t) · exp(−i·(ω − ω₀)·(τ/2)·(b̂·σ))`:
//! a first-order PMD section with fixed differential group delay `τ` and
//! birefringence axis `b̂`, followed by a wavelength-independent unitary `U(t)`
//! that drifts as an isotropic random walk on SU(2).

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::polarization::{haar_random, rotation_about_axis, rotation_unchecked, JonesMatrix, StokesVector};
use crate::scalar::Real;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_CENTER_WAVELENGTH: f64 = 1550e-9;

/// Angular-frequency offset of a wavelength offset `delta_lambda` around
/// `center_wavelength` (both in metres): `2πcΔλ/λ²`.
pub fn delta_omega_from_wavelength<F: Real>(delta_lambda: F, center_wavelength: F) -> F {
    F::TAU() * F::lit(SPEED_OF_LIGHT) * delta_lambda / (center_wavelength * center_wavelength)
}

/// Optical angular frequency `2πc/λ`.
pub fn carrier_omega<F: Real>(wavelength: F) -> F {
    F::TAU() * F::lit(SPEED_OF_LIGHT) / wavelength
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec<F> {
    /// Differential group delay τ in seconds.
    pub dgd_tau: F,
    /// Birefringence (principal-state) axis b̂.
    pub pmd_axis: StokesVector<F>,
    /// Signal carrier ω₀ in rad/s.
    pub omega0: F,
    /// Reference offset Δω in rad/s; references sit at ω₀ ∓ Δω.
    pub delta_omega: F,
    /// Drift strength in rad/√s (per-axis std-dev of the SU(2) random walk).
    pub drift_rate: F,
    pub seed: u64,
}

impl<F: Real> ChannelSpec<F> {
    /// Channel with the given DGD and reference spacing at 1550 nm, no drift and
    /// a birefringence axis along `pmd_axis`.
    pub fn from_wavelengths(dgd_tau: F, delta_lambda: F, pmd_axis: StokesVector<F>, seed: u64) -> Self {
        let lambda0 = F::lit(DEFAULT_CENTER_WAVELENGTH);
        Self {
            dgd_tau,
            pmd_axis,
            omega0: carrier_omega(lambda0),
            delta_omega: delta_omega_from_wavelength(delta_lambda, lambda0),
            drift_rate: F::zero(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.dgd_tau, self.omega0, self.delta_omega, self.drift_rate].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("channel parameters must be finite"));
        }
        if self.dgd_tau < F::zero() {
            return Err(Error::invalid("dgd_tau must be non-negative"));
        }
        if self.delta_omega < F::zero() {
            return Err(Error::invalid("delta_omega must be non-negative"));
        }
        if self.drift_rate < F::zero() {
            return Err(Error::invalid("drift_rate must be non-negative"));
        }
        self.pmd_axis.validated_unit()?;
        Ok(())
    }

    /// Reference channel 1 frequency, ω₀ − Δω.
    pub fn omega1(&self) -> F {
        self.omega0 - self.delta_omega
    }

    /// Reference channel 3 frequency, ω₀ + Δω.
    pub fn omega3(&self) -> F {
        self.omega0 + self.delta_omega
    }

    pub fn condition_number(&self) -> F {
        condition_number(self)
    }
}

/// `τ·Δω`; the monochromatic control solution carries over to the
/// wavelength-multiplexed references when this is small.
pub fn condition_number<F: Real>(spec: &ChannelSpec<F>) -> F {
    spec.dgd_tau * spec.delta_omega
}

#[derive(Debug, Clone)]
pub struct FiberChannel<F> {
    spec: ChannelSpec<F>,
    base_unitary: JonesMatrix<F>,
    rng: ChaCha8Rng,
    sim_time: F,
}

impl<F: Real> FiberChannel<F> {
    /// Starts with `U(0) = I`; see [`FiberChannel::randomize_base`].
    pub fn new(spec: ChannelSpec<F>) -> Result<Self> {
        spec.validate()?;
        let pmd_axis = spec.pmd_axis.validated_unit()?;
        let rng = ChaCha8Rng::seed_from_u64(spec.seed);
        Ok(Self {
            spec: ChannelSpec { pmd_axis, ..spec },
            base_unitary: JonesMatrix::identity(),
            rng,
            sim_time: F::zero(),
        })
    }

    /// Channel whose initial `U(0)` is Haar-random, drawn from the channel's own stream.
    pub fn with_random_base(spec: ChannelSpec<F>) -> Result<Self> {
        let mut ch = Self::new(spec)?;
        ch.randomize_base();
        Ok(ch)
    }

    pub fn randomize_base(&mut self) {
        self.base_unitary = haar_random(&mut self.rng);
    }

    pub fn set_base_unitary(&mut self, u: JonesMatrix<F>) -> Result<()> {
        u.ensure_unitary("base unitary")?;
        self.base_unitary = u.nearest_unitary()?;
        Ok(())
    }

    pub fn spec(&self) -> &ChannelSpec<F> {
        &self.spec
    }

    pub fn base_unitary(&self) -> &JonesMatrix<F> {
        &self.base_unitary
    }

    pub fn sim_time(&self) -> F {
        self.sim_time
    }

    fn pmd_section(&self, omega: F) -> JonesMatrix<F> {
        rotation_unchecked(&self.spec.pmd_axis, (omega - self.spec.omega0) * self.spec.dgd_tau)
    }

    /// `T(ω, t)`.
    pub fn transfer(&self, omega: F) -> JonesMatrix<F> {
        self.base_unitary * self.pmd_section(omega)
    }

    /// Analytic `∂T/∂ω` at the current time.
    pub fn transfer_derivative(&self, omega: F) -> JonesMatrix<F> {
        let generator = JonesMatrix::pauli_dot(&self.spec.pmd_axis)
            .scale(Complex::new(F::zero(), -self.spec.dgd_tau * F::lit(0.5)));
        self.base_unitary * generator * self.pmd_section(omega)
    }

    /// Advances the drift process by `dt` seconds:
    /// `U ← exp(−i·(δβ·σ)/2)·U` with `δβ` three independent normals of
    /// std-dev `drift_rate·√dt`, followed by re-orthonormalization.
    pub fn step(&mut self, dt: F) -> Result<()> {
        if !(dt > F::zero()) || !dt.is_finite() {
            return Err(Error::invalid(format!("step dt must be positive, got {dt}")));
        }
        self.sim_time = self.sim_time + dt;
        if self.spec.drift_rate == F::zero() {
            return Ok(());
        }
        let sigma = self.spec.drift_rate.to_f64_lossy() * dt.to_f64_lossy().sqrt();
        let kick: [f64; 3] = std::array::from_fn(|_| sigma * self.rng.sample::<f64, _>(StandardNormal));
        let angle = kick.iter().map(|x| x * x).sum::<f64>().sqrt();
        if angle > 0.0 {
            let axis = StokesVector::from_array(kick.map(|x| F::lit(x / angle)));
            let r = rotation_unchecked(&axis, F::lit(angle));
            self.base_unitary = (r * self.base_unitary).nearest_unitary()?;
        }
        Ok(())
    }

    /// Instantaneous rotation of the output SOP by `angle` about `axis`.
    pub fn perturb(&mut self, axis: &StokesVector<F>, angle: F) -> Result<()> {
        let r = rotation_about_axis(axis, angle)?;
        self.base_unitary = (r * self.base_unitary).nearest_unitary()?;
        Ok(())
    }

    /// `2·‖T⁻¹·∂T/∂ω‖₂`, the differential group delay implied by the local
    /// frequency derivative of the transfer matrix.
    pub fn dgd_from_derivative(&self, omega: F) -> F {
        let t_inv = self.transfer(omega).adjoint();
        F::lit(2.0) * (t_inv * self.transfer_derivative(omega)).spectral_norm()
    }

    /// Jones-matrix eigenanalysis between `omega` and `omega + d_omega`.
    ///
    /// Unlike the bare [`dgd_jme`], this knows the configured τ and reports
    /// aliasing whenever `d_omega·τ ≥ π`.
    pub fn jme_dgd(&self, omega: F, d_omega: F) -> Result<F> {
        let product = d_omega * self.spec.dgd_tau;
        if product >= F::PI() {
            return Err(Error::Aliasing { product: product.to_f64_lossy() });
        }
        dgd_jme(&self.transfer(omega), &self.transfer(omega + d_omega), d_omega)
    }
}

/// Differential group delay from two transfer matrices measured `d_omega`
/// apart: `|arg(ρ₁/ρ₂)| / d_omega` where `ρᵢ` are the eigenvalues of
/// `t_hi·t_lo⁻¹`.
///
/// The eigenvalue phase difference is only known modulo 2π; a difference
/// indistinguishable from π is reported as aliasing.
pub fn dgd_jme<F: Real>(t_lo: &JonesMatrix<F>, t_hi: &JonesMatrix<F>, d_omega: F) -> Result<F> {
    t_lo.ensure_unitary("t_lo")?;
    t_hi.ensure_unitary("t_hi")?;
    if !(d_omega > F::zero()) || !d_omega.is_finite() {
        return Err(Error::invalid("d_omega must be positive"));
    }
    let m = *t_hi * t_lo.inverse()?;
    let phase = m.rotation_angle();
    if phase >= F::PI() - F::input_tol() {
        return Err(Error::Aliasing { product: phase.to_f64_lossy() });
    }
    Ok(phase / d_omega)
}
