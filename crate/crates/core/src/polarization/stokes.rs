use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Point on (or inside) the Poincaré sphere.
///
/// Components follow the convention `s1 = |ex|² − |ey|²`, `s2 = 2 Re(ex* ey)`,
/// `s3 = 2 Im(ex* ey)`; horizontal is `(1, 0, 0)`, +45° is `(0, 1, 0)` and
/// right-circular is `(0, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StokesVector<F> {
    pub s1: F,
    pub s2: F,
    pub s3: F,
}

impl<F: Real> StokesVector<F> {
    pub const fn new(s1: F, s2: F, s3: F) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn horizontal() -> Self {
        Self::new(F::one(), F::zero(), F::zero())
    }

    pub fn vertical() -> Self {
        Self::new(-F::one(), F::zero(), F::zero())
    }

    pub fn diagonal() -> Self {
        Self::new(F::zero(), F::one(), F::zero())
    }

    pub fn antidiagonal() -> Self {
        Self::new(F::zero(), -F::one(), F::zero())
    }

    pub fn right_circular() -> Self {
        Self::new(F::zero(), F::zero(), F::one())
    }

    pub fn left_circular() -> Self {
        Self::new(F::zero(), F::zero(), -F::one())
    }

    /// Linear polarization with its transmission axis at `angle` (radians, physical
    /// polarizer angle). Sits on the equator at longitude `2 * angle`.
    pub fn linear(angle: F) -> Self {
        let two = F::lit(2.0);
        Self::new((two * angle).cos(), (two * angle).sin(), F::zero())
    }

    pub fn from_array(a: [F; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [F; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn dot(&self, other: &Self) -> F {
        self.s1 * other.s1 + self.s2 * other.s2 + self.s3 * other.s3
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self::new(
            self.s2 * other.s3 - self.s3 * other.s2,
            self.s3 * other.s1 - self.s1 * other.s3,
            self.s1 * other.s2 - self.s2 * other.s1,
        )
    }

    pub fn norm(&self) -> F {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.s1.is_finite() && self.s2.is_finite() && self.s3.is_finite()
    }

    /// Rescales to unit length; rejects zero or non-finite vectors.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !n.is_finite() || n <= F::epsilon() {
            return Err(Error::invalid(format!("cannot normalize Stokes vector {self:?}")));
        }
        Ok(*self * n.recip())
    }

    /// Checks unit norm within the scalar's input tolerance and returns the
    /// exactly renormalized vector.
    pub fn validated_unit(&self) -> Result<Self> {
        let n = self.norm();
        if !n.is_finite() || (n - F::one()).abs() > F::input_tol() {
            return Err(Error::invalid(format!("Stokes vector must have unit norm, got |s| = {n}")));
        }
        Ok(*self * n.recip())
    }

    /// Right-handed rotation by `angle` about the unit `axis` (Rodrigues formula).
    pub fn rotated(&self, axis: &Self, angle: F) -> Self {
        let (s, c) = angle.sin_cos();
        let k_dot = axis.dot(self);
        *self * c + axis.cross(self) * s + *axis * (k_dot * (F::one() - c))
    }

    /// Angle between two directions on the sphere, in `[0, π]`.
    pub fn angle_to(&self, other: &Self) -> F {
        sphere_angle(self, other)
    }
}

/// Great-circle angle between two unit Stokes vectors, clamped to `[0, π]`.
///
/// Uses `atan2(|a × b|, a · b)`, which stays accurate for nearly parallel or
/// antiparallel vectors where `acos` loses half the significant digits.
pub fn sphere_angle<F: Real>(a: &StokesVector<F>, b: &StokesVector<F>) -> F {
    let cross = a.cross(b).norm();
    let dot = a.dot(b);
    cross.atan2(dot).max(F::zero()).min(F::PI())
}

impl<F: Real> Add for StokesVector<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.s1 + rhs.s1, self.s2 + rhs.s2, self.s3 + rhs.s3)
    }
}

impl<F: Real> Sub for StokesVector<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.s1 - rhs.s1, self.s2 - rhs.s2, self.s3 - rhs.s3)
    }
}

impl<F: Real> Neg for StokesVector<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.s1, -self.s2, -self.s3)
    }
}

impl<F: Real> Mul<F> for StokesVector<F> {
    type Output = Self;
    fn mul(self, k: F) -> Self {
        Self::new(self.s1 * k, self.s2 * k, self.s3 * k)
    }
}
