//! Exact power-law solutions of nonlinear stationary fractional equations
//! `D^α y_j = λ_j x^{β_j} y_j^{m_j} (+ b_j x^{ν_j})`, `1 < α < 2`, on metric
//! star graphs, with weighted continuity and a generalized Kirchhoff rule at
//! the branch vertex.
//!
//! Layout:
//! - [`specfun`]: real Gamma function and Gamma ratios.
//! - [`frac_ops`]: Riemann–Liouville power rule plus numeric schemes.
//! - [`model`]: problem data and validation.
//! - [`closed_form`]: per-bond amplitudes and exponents.
//! - [`vertex`]: vertex matching conditions and their solvers.
//! - [`verify`]: independent numeric verification.
//! - [`cli`]: problem files and the `fracstar` command line.

// negated comparisons are how NaN inputs get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod closed_form;
pub mod error;
pub mod frac_ops;
pub mod model;
pub(crate) mod roots;
pub mod specfun;
pub mod verify;
pub mod vertex;

pub use error::{Error, Result};
