//! First-order solvers for linearly constrained convex programs and
//! convex-concave saddle-point problems.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`prox`]: closed-form proximal operators and projections,
//! - [`model`]: problem definitions (constrained, multi-block separable,
//!   saddle) behind a prox-oracle abstraction, plus validation and JSON I/O,
//! - [`solvers`]: the iterative schemes themselves — a penalty augmented
//!   Lagrangian method whose primal metric turns the subproblem into a plain
//!   prox (`palm`), the balanced baseline with a factorized dual solve
//!   (`balm`), parallel multi-block variants (`pdalm`, `dpalm`), two
//!   primal-dual hybrid gradient variants with extrapolation (`npdhg1`,
//!   `npdhg2`), the classic PDHG baseline (`pdhg`), and a relaxation wrapper,
//! - [`certify`]: numerical certificates for the convergence theory
//!   (weighted-norm contraction, ergodic gap bounds, dual residuals),
//! - [`gen`]: deterministic problem generators and reference oracles.
//!
//! All solvers emit a [`solvers::SolveTrace`] that the certification layer
//! consumes; every certificate is an explicit inequality checked with an
//! additive, magnitude-scaled slack.

// parameter guards are written `!(x > 0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod gen;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod solvers;

mod error;
mod serde_arrays;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
