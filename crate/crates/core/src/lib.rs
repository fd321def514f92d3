//! Simulation library for two-reference closed-loop polarization control on
//! fiber quantum channels.
//!
//! A drifting birefringent fiber with first-order PMD ([`fiber`]) is followed
//! by a two-stage controller ([`control`]) that only sees the intensities of
//! two non-orthogonal reference channels behind fixed polarizers. The residual
//! error on the signal channel is reported as a sphere deviation angle, power
//! penalty and added optical QBER ([`detection`]). [`harness`] wires the pieces
//! into reproducible experiments with file output.
//!
//! The polarization, fiber and control types are generic over the scalar type
//! ([`Real`]); the aliases below fix them to `f64` (and `f32`).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod detection;
pub mod error;
pub mod fiber;
pub mod harness;
pub mod polarization;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type JonesVector64 = polarization::JonesVector<f64>;
pub type JonesMatrix64 = polarization::JonesMatrix<f64>;
pub type StokesVector64 = polarization::StokesVector<f64>;
pub type ChannelSpec64 = fiber::ChannelSpec<f64>;
pub type FiberChannel64 = fiber::FiberChannel<f64>;
pub type ControllerState64 = control::ControllerState<f64>;
pub type ReferenceBasis64 = control::ReferenceBasis<f64>;

pub type JonesVector32 = polarization::JonesVector<f32>;
pub type JonesMatrix32 = polarization::JonesMatrix<f32>;
pub type StokesVector32 = polarization::StokesVector<f32>;
pub type FiberChannel32 = fiber::FiberChannel<f32>;
pub type ControllerState32 = control::ControllerState<f32>;
