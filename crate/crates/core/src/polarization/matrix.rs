use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use super::jones::{unit_phase, JonesVector};
use super::stokes::StokesVector;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// 2×2 complex operator acting on Jones vectors, stored row-major `[a, b, c, d]`
/// for `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesMatrix<F> {
    pub m: [Complex<F>; 4],
}

#[inline]
fn c<F: Real>(re: F, im: F) -> Complex<F> {
    Complex::new(re, im)
}

impl<F: Real> JonesMatrix<F> {
    pub const fn new(a: Complex<F>, b: Complex<F>, c: Complex<F>, d: Complex<F>) -> Self {
        Self { m: [a, b, c, d] }
    }

    pub fn identity() -> Self {
        Self::diag(c(F::one(), F::zero()), c(F::one(), F::zero()))
    }

    pub fn zero() -> Self {
        let z = c(F::zero(), F::zero());
        Self::new(z, z, z, z)
    }

    pub fn diag(d0: Complex<F>, d1: Complex<F>) -> Self {
        let z = c(F::zero(), F::zero());
        Self::new(d0, z, z, d1)
    }

    /// `diag(1, e^{iφ})`, the stabilizer form of a rotation about the horizontal axis.
    pub fn phase_diag(phi: F) -> Self {
        Self::diag(c(F::one(), F::zero()), Complex::from_polar(F::one(), phi))
    }

    /// `n · σ` with `σ = (diag(1,−1), σx, σy)`, the Pauli triple matching the
    /// Stokes convention.
    pub fn pauli_dot(n: &StokesVector<F>) -> Self {
        Self::new(c(n.s1, F::zero()), c(n.s2, -n.s3), c(n.s2, n.s3), c(-n.s1, F::zero()))
    }

    /// Builds `a0·I − i(a·σ)` from real quaternion components.
    pub fn from_su2(a0: F, a: [F; 3]) -> Self {
        Self::new(c(a0, -a[0]), c(-a[2], -a[1]), c(a[2], -a[1]), c(a0, a[0]))
    }

    pub fn trace(&self) -> Complex<F> {
        self.m[0] + self.m[3]
    }

    pub fn det(&self) -> Complex<F> {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.m;
        Self::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn scale(&self, k: Complex<F>) -> Self {
        Self { m: self.m.map(|x| x * k) }
    }

    pub fn scale_real(&self, k: F) -> Self {
        Self { m: self.m.map(|x| x * k) }
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let [a, b, c, d] = self.m;
        let scale = self.frobenius_norm().powi(2);
        if !(det.norm() > F::epsilon() * scale) {
            return Err(Error::invalid("singular Jones matrix"));
        }
        let inv = det.inv();
        Ok(Self::new(d * inv, -b * inv, -c * inv, a * inv))
    }

    pub fn apply(&self, v: &JonesVector<F>) -> JonesVector<F> {
        JonesVector::new(self.m[0] * v.ex + self.m[1] * v.ey, self.m[2] * v.ex + self.m[3] * v.ey)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm(&self) -> F {
        self.m.iter().fold(F::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> F {
        let f2 = self.m.iter().fold(F::zero(), |acc, z| acc + z.norm_sqr());
        let d = self.det().norm();
        let disc = (f2 * f2 - F::lit(4.0) * d * d).max(F::zero()).sqrt();
        ((f2 + disc) * F::lit(0.5)).sqrt()
    }

    /// `‖M†M − I‖_F`.
    pub fn unitarity_defect(&self) -> F {
        (self.adjoint() * *self - Self::identity()).frobenius_norm()
    }

    pub fn is_unitary(&self, tol: F) -> bool {
        self.is_finite() && self.unitarity_defect() <= tol
    }

    /// Fails with `InvalidInput` unless the matrix is unitary within the input tolerance.
    pub fn ensure_unitary(&self, what: &str) -> Result<()> {
        if self.is_unitary(F::input_tol()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("{what} must be unitary (defect {})", self.unitarity_defect())))
        }
    }

    /// Phase-quotient distance `min_λ ‖self − λ·other‖_F` over unit-modulus `λ`.
    pub fn phase_distance(&self, other: &Self) -> F {
        let overlap =
            other.m.iter().zip(self.m.iter()).fold(c(F::zero(), F::zero()), |acc, (b, a)| acc + b.conj() * *a);
        let lambda = unit_phase(overlap);
        (*self - other.scale(lambda)).frobenius_norm()
    }

    /// Nearest unitary matrix in Frobenius norm (unitary factor of the polar
    /// decomposition), `M (M†M)^{-1/2}`.
    pub fn nearest_unitary(&self) -> Result<Self> {
        let h = self.adjoint() * *self;
        let det = h.det().re.max(F::zero());
        let s = det.sqrt();
        let t = (h.trace().re + F::lit(2.0) * s).sqrt();
        if !(t > F::zero()) || !t.is_finite() {
            return Err(Error::invalid("cannot re-orthonormalize a singular matrix"));
        }
        let sqrt_h = (h + Self::identity().scale_real(s)).scale_real(t.recip());
        Ok(*self * sqrt_h.inverse()?)
    }

    /// Quaternion components `(a0, a)` with `M = e^{iγ}(a0·I − i a·σ)` and `a0 ≥ 0`.
    ///
    /// For unitary input this is the SU(2) representative of the sphere rotation
    /// by `2·atan2(|a|, a0)` about `a/|a|`.
    pub fn su2_parameters(&self) -> (F, [F; 3]) {
        let q = self.det().sqrt();
        let n = if q.norm() > F::zero() { self.scale(q.inv()) } else { *self };
        let [n00, n01, n10, n11] = n.m;
        let half = F::lit(0.5);
        let a0 = (n00.re + n11.re) * half;
        let a = [(n11.im - n00.im) * half, -(n01.im + n10.im) * half, (n10.re - n01.re) * half];
        if a0 < F::zero() {
            (-a0, a.map(|x| -x))
        } else {
            (a0, a)
        }
    }

    /// Axis and angle (in `[0, π]`) of the Poincaré-sphere rotation realized by a
    /// unitary. The axis is horizontal by convention when the angle is zero.
    pub fn sphere_rotation(&self) -> (StokesVector<F>, F) {
        let (a0, a) = self.su2_parameters();
        let v = StokesVector::from_array(a);
        let s = v.norm();
        let angle = F::lit(2.0) * s.atan2(a0);
        if s > F::zero() {
            (v * s.recip(), angle)
        } else {
            (StokesVector::horizontal(), F::zero())
        }
    }

    /// Largest sphere angle by which the operator moves any pure state.
    pub fn rotation_angle(&self) -> F {
        self.sphere_rotation().1
    }
}

impl<F: Real> Mul for JonesMatrix<F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = rhs.m;
        Self::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

impl<F: Real> Add for JonesMatrix<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { m: std::array::from_fn(|i| self.m[i] + rhs.m[i]) }
    }
}

impl<F: Real> Sub for JonesMatrix<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { m: std::array::from_fn(|i| self.m[i] - rhs.m[i]) }
    }
}

/// `exp(−i·(angle/2)·(axis·σ))`: rotates Stokes vectors right-handedly by `angle`
/// about `axis`.
pub fn rotation_about_axis<F: Real>(axis: &StokesVector<F>, angle: F) -> Result<JonesMatrix<F>> {
    let axis = axis.validated_unit()?;
    if !angle.is_finite() {
        return Err(Error::invalid("non-finite rotation angle"));
    }
    Ok(rotation_unchecked(&axis, angle))
}

/// Same as [`rotation_about_axis`] for an axis already known to be unit length.
pub(crate) fn rotation_unchecked<F: Real>(axis: &StokesVector<F>, angle: F) -> JonesMatrix<F> {
    let (s, c) = (angle * F::lit(0.5)).sin_cos();
    JonesMatrix::from_su2(c, [axis.s1 * s, axis.s2 * s, axis.s3 * s])
}

/// `b` first, then `a`: `compose(R3, compose(R1, T))` is the operator order `R3·R1·T`.
pub fn compose<F: Real>(a: &JonesMatrix<F>, b: &JonesMatrix<F>) -> JonesMatrix<F> {
    *a * *b
}

pub fn apply<F: Real>(m: &JonesMatrix<F>, v: &JonesVector<F>) -> JonesVector<F> {
    m.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::{fidelity, jones_to_stokes};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    type M = JonesMatrix<f64>;

    #[test]
    fn horizontal_axis_rotation_is_diagonal() {
        let theta = 0.7;
        let r = rotation_about_axis(&StokesVector::horizontal(), theta).unwrap();
        let expected = M::diag(Complex::from_polar(1.0, -theta / 2.0), Complex::from_polar(1.0, theta / 2.0));
        assert!((r - expected).frobenius_norm() < 1e-15);
        assert!(r.phase_distance(&M::phase_diag(theta)) < 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let axis = StokesVector::new(0.48, -0.6, 0.64);
        let r = rotation_about_axis(&axis, 0.0).unwrap();
        assert!((r - M::identity()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn half_turn_about_h_sends_diagonal_to_antidiagonal() {
        let r = rotation_about_axis(&StokesVector::horizontal(), PI).unwrap();
        let s = jones_to_stokes(&r.apply(&JonesVector::diagonal())).unwrap();
        // Rodrigues: (0,1,0) rotated by π about x is (0,−1,0)
        let oracle = StokesVector::diagonal().rotated(&StokesVector::horizontal(), PI);
        assert_abs_diff_eq!(s.s2, oracle.s2, epsilon = 1e-12);
        assert_abs_diff_eq!(s.s2, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(rotation_about_axis(&StokesVector::new(2.0, 0.0, 0.0), 1.0).is_err());
        assert!(rotation_about_axis(&StokesVector::horizontal(), f64::INFINITY).is_err());
    }

    #[test]
    fn sphere_rotation_recovers_axis_angle() {
        let axis = StokesVector::new(0.0, 0.6, -0.8);
        let r = rotation_about_axis(&axis, 2.5).unwrap().scale(Complex::from_polar(1.0, 0.3));
        let (n, a) = r.sphere_rotation();
        assert_abs_diff_eq!(a, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(n.s2, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(n.s3, -0.8, epsilon = 1e-12);
        // angles beyond π fold back onto the opposite axis
        let r = rotation_about_axis(&axis, 1.5 * PI).unwrap();
        let (n, a) = r.sphere_rotation();
        assert_abs_diff_eq!(a, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(n.s3, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn nearest_unitary_repairs_drifted_matrix() {
        let r = rotation_about_axis(&StokesVector::diagonal(), 1.1).unwrap();
        let mut bumped = r;
        bumped.m[1] += Complex::new(1e-6, -2e-6);
        bumped.m[2] += Complex::new(3e-7, 0.0);
        let u = bumped.nearest_unitary().unwrap();
        assert!(u.unitarity_defect() < 1e-14);
        assert!(u.phase_distance(&r) < 1e-5);
        assert!(M::zero().nearest_unitary().is_err());
    }

    #[test]
    fn spectral_norm_of_scaled_pauli() {
        let p = M::pauli_dot(&StokesVector::new(0.6, 0.0, 0.8)).scale(Complex::new(0.0, -0.25));
        assert_abs_diff_eq!(p.spectral_norm(), 0.25, epsilon = 1e-16);
        let d = M::diag(Complex::new(3.0, 0.0), Complex::new(0.0, -1.0));
        assert_abs_diff_eq!(d.spectral_norm(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_of_singular_fails() {
        let s = M::new(Complex::new(1.0, 0.0), Complex::new(2.0, 0.0), Complex::new(2.0, 0.0), Complex::new(4.0, 0.0));
        assert!(s.inverse().is_err());
        let r = rotation_about_axis(&StokesVector::right_circular(), 0.4).unwrap();
        assert!((r.inverse().unwrap() - r.adjoint()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn fidelity_under_rotation_is_cos_squared_half_angle() {
        let r = rotation_about_axis(&StokesVector::right_circular(), 0.9).unwrap();
        let h = JonesVector::horizontal();
        assert_abs_diff_eq!(fidelity(&h, &r.apply(&h)), (0.45f64).cos().powi(2), epsilon = 1e-15);
    }
}
