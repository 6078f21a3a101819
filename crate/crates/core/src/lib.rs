//! Optimal control of abstract evolution equations `x' = A x + b(t, x, u)` on a
//! truncated Fourier state space.
//!
//! The crate covers mild-solution simulation, the Hamiltonian and HJB
//! residuals, inf/sup-convolution regularization, piecewise-constant
//! epsilon-optimal synthesis and sufficient optimality checks. Runnable
//! walkthroughs live in `examples/`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convolution;
pub mod dynamics;
mod error;
pub mod export;
pub mod hamiltonian;
pub mod problem;
pub mod sampling;
pub mod statespace;
pub mod synthesis;
pub mod value;
pub mod verify;

pub use error::{Error, Result};
pub use statespace::{SmoothingOperator, SpectralOperator, StateVec};
