//! Certified sample average approximation for trace minimization.
//!
//! The crate minimizes `trace(A(θ)) + R(θ)` over a parameter space by
//! replacing the trace with Hutchinson's Rademacher estimator built from one
//! frozen bank of sign vectors. It computes sampling amounts `N` that bound
//! the backward error `F(θ̂) − F(θ*)` by `ε` with probability at least `1 − δ`,
//! and ships an exact enumeration oracle plus a Monte Carlo harness that
//! checks those guarantees empirically.
//!
//! The crate is `no_std` (with `alloc`). The `std` feature is only needed for
//! the `parallel` feature, which runs validation trials on rayon.
//!
//! Module map:
//!
//! - [`linalg`]: dense symmetric matrices, norms, eigendecomposition, SPD log and solve.
//! - [`family`]: parameter spaces, matrix families and offdiagonal mass.
//! - [`hutchinson`]: Rademacher sample banks and trace estimators.
//! - [`nets`]: covering numbers and η-nets of balls.
//! - [`certify`]: sampling-amount certificates and tail bounds.
//! - [`saa`]: exact and SAA minimization, backward error.
//! - [`applications`]: D-optimal sensor placement and hyperparameter estimation.
//! - [`validate`]: exact estimator laws, Clopper–Pearson, certificate validation.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod applications;
pub mod certify;
mod error;
pub mod family;
pub mod hutchinson;
pub mod linalg;
pub mod nets;
pub mod rng;
pub mod saa;
pub mod special;
pub mod validate;

pub use error::{Error, Result};
pub use linalg::{EigDecomp, Matrix, SymMatrix};
