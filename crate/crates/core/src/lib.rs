//! Stability and recurrence classification for diffusions whose drift and
//! noise switch between regimes driven by a Markov chain.
//!
//! The criteria reduce to linear algebra on the switching generator: the
//! stationary distribution, nonsingular M-matrix tests, principal
//! eigenpairs and Poisson equations. Each verdict carries a certificate that
//! can be re-checked independently. A path simulator provides Monte Carlo
//! corroboration.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lp;
pub mod markov;
pub mod mmatrix;
pub mod criteria;
pub mod simulator;
pub mod model;
pub mod analysis;
pub mod report;
pub mod reproduce;
pub mod cli;
