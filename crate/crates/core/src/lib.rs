//! Denoising of modulo-1 samples of a smooth function.
//!
//! Noisy residues are mapped onto the unit circle, smoothed by solving a
//! sphere-constrained quadratic program (a trust-region subproblem) whose
//! quadratic term is the Laplacian of a `k`-neighbourhood path graph, and
//! projected back to residues. The denoised residues are then unwrapped to
//! real-valued samples, up to a global shift.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod angular;
pub mod denoise;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod grid;
pub mod plot;
pub mod signals;
pub mod trs;
pub mod unwrap;

pub use error::{Error, Result};
