//! Harmonic analysis on `K^n` for non-Archimedean local fields.
//!
//! Radial functions are stored crown by crown ([`radial::RadialProfile`]);
//! non-radial functions live on finite quotients `G_{−M}/G_N` of `Q_q^n`
//! ([`vilenkin::QuotientFunction`]). Every closed form is paired with an
//! independent brute-force evaluator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod calculus;
pub mod cmath;
pub mod error;
pub mod evolution;
pub mod field;
pub mod gamma;
pub mod kernel;
pub mod operator;
pub mod par;
pub mod radial;
pub mod verify;
pub mod vilenkin;

pub use error::{Error, Result};
pub use field::{FieldModel, FieldParams, QNorm, QuotientLattice, ScaleIndex};
pub use kernel::{ComplexTime, KernelEvalConfig};
pub use par::Exec;
pub use radial::{Direction, InnerTail, RadialProfile};
