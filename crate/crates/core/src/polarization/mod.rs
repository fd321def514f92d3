//! Jones and Stokes calculus on pure polarization states.
//!
//! Every module shares the Stokes convention documented on [`StokesVector`]
//! and the Pauli triple of [`JonesMatrix::pauli_dot`].

mod jones;
mod matrix;
mod random;
mod stokes;

pub use jones::{fidelity, jones_to_stokes, stokes_to_jones, JonesVector};
pub(crate) use matrix::rotation_unchecked;
pub use matrix::{apply, compose, rotation_about_axis, JonesMatrix};
pub use random::haar_random;
pub use stokes::{sphere_angle, StokesVector};

use crate::scalar::Real;

/// Power lost through an analyzer aligned with the target when the received
/// state sits `angle` away on the sphere: `sin²(angle/2)`.
pub fn added_loss<F: Real>(angle: F) -> F {
    let s = (angle * F::lit(0.5)).sin();
    s * s
}
