#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN too

//! Classical simulation of the Chebyshev-series linear-combination-of-unitaries
//! method for applying smooth functions of sparse Hermitian matrices to states.
//!
//! The pipeline: a truncated Maclaurin series is rewritten exactly in the
//! Chebyshev basis ([`cheb`]), each `T_j(A/d)` is realized by a quantum walk
//! ([`walk`]), the terms are combined and post-selected ([`lcu`]), and the
//! success probability can be boosted by amplitude amplification
//! ([`amplify`]). Every result is checked against a dense eigendecomposition
//! ([`hermitian`]).

pub mod amplify;
pub mod catalog;
pub mod cheb;
pub mod error;
pub mod harness;
pub mod hermitian;
pub mod lcu;
pub mod linalg;
pub mod random;
pub mod report;
pub mod verify;
pub mod walk;

pub use error::{Error, Result};
pub use num_complex::Complex64;
