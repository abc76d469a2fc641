//! Numerical verification of minimal Lagrangian submanifolds of ℂⁿ equipped
//! with the pseudo-Hermitian form of signature (p, n − p).
//!
//! The geometric core (`psherm`, `immersion`, `curvature`, `linalg`) is
//! generic over the real scalar; families, calibration experiments and the
//! group samplers work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::assign_op_pattern)]

pub mod calibration;
pub mod circular;
pub mod curvature;
pub mod error;
pub mod families;
pub mod groups;
pub mod immersion;
pub mod linalg;
pub mod psherm;
pub mod scalar;

pub use error::{Error, Result};
pub use immersion::{ImmersionPatch, Jet, ParamBox};
pub use psherm::{CVector, Frame, Plane, Signature};
pub use scalar::Real;

pub use num_complex::Complex64;

pub type CVec = CVector<f64>;
pub type Frame64 = Frame<f64>;
pub type Patch = ImmersionPatch<f64>;
pub type Box64 = ParamBox<f64>;
pub type Patch32 = ImmersionPatch<f32>;
