//! Zero-temperature limits of log-Hessian flows on the flat torus:
//! envelopes, Hopf formulas, shocks, Hele-Shaw growth and energies.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod envelope;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod heleshaw;
pub mod hj;
pub mod legendre;
pub mod shocks;
pub mod stochastic;
pub mod torus;

pub use error::{Error, Result};
