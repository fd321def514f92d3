use num_complex::Complex;

use super::stokes::StokesVector;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pure polarization state as a complex 2-amplitude (horizontal, vertical).
///
/// Global phase carries no physical meaning; use [`JonesVector::phase_distance`]
/// or [`fidelity`] rather than component-wise equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector<F> {
    pub ex: Complex<F>,
    pub ey: Complex<F>,
}

impl<F: Real> JonesVector<F> {
    pub const fn new(ex: Complex<F>, ey: Complex<F>) -> Self {
        Self { ex, ey }
    }

    pub fn from_real(ex: F, ey: F) -> Self {
        Self::new(Complex::new(ex, F::zero()), Complex::new(ey, F::zero()))
    }

    pub fn horizontal() -> Self {
        Self::from_real(F::one(), F::zero())
    }

    pub fn vertical() -> Self {
        Self::from_real(F::zero(), F::one())
    }

    /// Linear +45°.
    pub fn diagonal() -> Self {
        let h = F::FRAC_1_SQRT_2();
        Self::from_real(h, h)
    }

    /// Linear −45°.
    pub fn antidiagonal() -> Self {
        let h = F::FRAC_1_SQRT_2();
        Self::from_real(h, -h)
    }

    pub fn right_circular() -> Self {
        let h = F::FRAC_1_SQRT_2();
        Self::new(Complex::new(h, F::zero()), Complex::new(F::zero(), h))
    }

    pub fn norm_sqr(&self) -> F {
        self.ex.norm_sqr() + self.ey.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.ex.re.is_finite() && self.ex.im.is_finite() && self.ey.re.is_finite() && self.ey.im.is_finite()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !self.is_finite() || !n2.is_finite() || n2 <= F::min_positive_value() {
            return Err(Error::invalid(format!("cannot normalize Jones vector {self:?}")));
        }
        let k = n2.sqrt().recip();
        Ok(self.scale(Complex::new(k, F::zero())))
    }

    pub fn scale(&self, k: Complex<F>) -> Self {
        Self::new(self.ex * k, self.ey * k)
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<F> {
        self.ex.conj() * other.ex + self.ey.conj() * other.ey
    }

    /// `min_λ ‖self − λ·other‖` over unit-modulus `λ`.
    pub fn phase_distance(&self, other: &Self) -> F {
        let z = other.inner(self);
        let lambda = unit_phase(z);
        let d = *self - other.scale(lambda);
        d.norm_sqr().sqrt()
    }

    pub fn to_stokes(&self) -> Result<StokesVector<F>> {
        jones_to_stokes(self)
    }
}

impl<F: Real> std::ops::Sub for JonesVector<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.ex - rhs.ex, self.ey - rhs.ey)
    }
}

/// `z / |z|`, or `1` when `z` vanishes.
pub(crate) fn unit_phase<F: Real>(z: Complex<F>) -> Complex<F> {
    let n = z.norm();
    if n > F::zero() && n.is_finite() {
        z / n
    } else {
        Complex::new(F::one(), F::zero())
    }
}

/// Maps a pure state to its Stokes vector. The result is divided by the
/// intensity, so it lands on the unit sphere even for slightly denormalized input.
pub fn jones_to_stokes<F: Real>(v: &JonesVector<F>) -> Result<StokesVector<F>> {
    if !v.is_finite() {
        return Err(Error::invalid("non-finite Jones amplitudes"));
    }
    let intensity = v.norm_sqr();
    if intensity <= F::min_positive_value() {
        return Err(Error::invalid("zero Jones vector has no Stokes direction"));
    }
    let cross = v.ex.conj() * v.ey;
    let two = F::lit(2.0);
    Ok(StokesVector::new(
        (v.ex.norm_sqr() - v.ey.norm_sqr()) / intensity,
        two * cross.re / intensity,
        two * cross.im / intensity,
    ))
}

/// Inverse of [`jones_to_stokes`] with the representative phase fixed so that
/// `ex` is real and non-negative. At the vertical pole (`ex = 0`), `ey` is real
/// positive.
pub fn stokes_to_jones<F: Real>(s: &StokesVector<F>) -> Result<JonesVector<F>> {
    let s = s.validated_unit()?;
    let half = F::lit(0.5);
    let ex = ((F::one() + s.s1) * half).max(F::zero()).sqrt();
    let ey_mag = ((F::one() - s.s1) * half).max(F::zero()).sqrt();
    let rho = s.s2.hypot(s.s3);
    let ey =
        if rho > F::zero() { Complex::new(s.s2 / rho, s.s3 / rho) * ey_mag } else { Complex::new(ey_mag, F::zero()) };
    Ok(JonesVector::new(Complex::new(ex, F::zero()), ey))
}

/// `|⟨a|b⟩|²`, the power transmitted by an analyzer aligned with `a` when `b`
/// is incident. Equals `cos²(Θ/2)` for sphere angle `Θ`.
pub fn fidelity<F: Real>(a: &JonesVector<F>, b: &JonesVector<F>) -> F {
    a.inner(b).norm_sqr().max(F::zero()).min(F::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_stokes(s: StokesVector<f64>, e: [f64; 3]) {
        assert_abs_diff_eq!(s.s1, e[0], epsilon = 1e-15);
        assert_abs_diff_eq!(s.s2, e[1], epsilon = 1e-15);
        assert_abs_diff_eq!(s.s3, e[2], epsilon = 1e-15);
    }

    #[test]
    fn canonical_states_to_stokes() {
        assert_stokes(jones_to_stokes(&JonesVector::horizontal()).unwrap(), [1.0, 0.0, 0.0]);
        assert_stokes(jones_to_stokes(&JonesVector::diagonal()).unwrap(), [0.0, 1.0, 0.0]);
        assert_stokes(jones_to_stokes(&JonesVector::right_circular()).unwrap(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn non_finite_amplitudes_rejected() {
        let v = JonesVector::from_real(f64::NAN, 0.0);
        assert!(matches!(jones_to_stokes(&v), Err(Error::InvalidInput(_))));
        assert!(jones_to_stokes(&JonesVector::<f64>::from_real(0.0, 0.0)).is_err());
    }

    #[test]
    fn poles_to_jones() {
        let h = stokes_to_jones(&StokesVector::<f64>::horizontal()).unwrap();
        assert_eq!(h, JonesVector::horizontal());
        let v = stokes_to_jones(&StokesVector::<f64>::vertical()).unwrap();
        assert_eq!(v, JonesVector::vertical());
    }

    #[test]
    fn stokes_to_jones_rejects_non_unit() {
        let r = stokes_to_jones(&StokesVector::new(1.0 + 2e-6, 0.0, 0.0));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        // within the 1e-6 validation band
        assert!(stokes_to_jones(&StokesVector::new(1.0 + 5e-7, 0.0, 0.0)).is_ok());
    }

    #[test]
    fn fidelity_basics() {
        let h = JonesVector::<f64>::horizontal();
        assert_eq!(fidelity(&h, &h), 1.0);
        assert_eq!(fidelity(&h, &JonesVector::vertical()), 0.0);
        assert_abs_diff_eq!(fidelity(&h, &JonesVector::diagonal()), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_and_distance_ignore_global_phase() {
        let d = JonesVector::<f64>::diagonal();
        let rotated = d.scale(Complex::from_polar(1.0, 2.1));
        assert_abs_diff_eq!(fidelity(&d, &rotated), 1.0, epsilon = 1e-15);
        assert!(d.phase_distance(&rotated) < 1e-15);
        assert!(d.phase_distance(&JonesVector::antidiagonal()) > 1.0);
    }

    #[test]
    fn works_in_single_precision() {
        let s = jones_to_stokes(&JonesVector::<f32>::diagonal()).unwrap();
        assert!((s.s2 - 1.0).abs() < 1e-6);
        let back = stokes_to_jones(&s).unwrap();
        assert!(back.phase_distance(&JonesVector::diagonal()) < 1e-6);
    }
}
