//! Scalar abstraction shared by the Jones/Stokes calculus, the fiber model and the controller.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by every generic type in this crate.
///
/// Besides the arithmetic supplied by `num_traits`, each scalar carries the two
/// tolerances used throughout: one for validating user-supplied inputs (unit
/// norms, unitarity) and one for algebraic identities that should hold up to
/// rounding.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for validating caller-supplied values.
    fn input_tol() -> Self;

    /// Tolerance for identities that hold exactly in real arithmetic.
    fn identity_tol() -> Self;

    /// Lossless-enough conversion of an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn input_tol() -> Self {
        1e-6
    }

    fn identity_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn input_tol() -> Self {
        1e-4
    }

    fn identity_tol() -> Self {
        1e-5
    }
}
