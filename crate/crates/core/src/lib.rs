//! A second-order toolkit for unconstrained minimization built around
//! gradient-regularized, gradient-scaled trust-region subproblems.
//!
//! The subproblem solved at every iterate couples a quadratic regularizer
//! `sigma * ||g||^(1/2) * I` added to the Hessian with a trust radius
//! proportional to `||g||^(1/2)`. On top of that primitive the crate
//! provides:
//!
//! - [`utr`]: the fixed-parameter method driven by a Lipschitz constant,
//!   with per-iteration decrease/contraction accounting;
//! - [`autr`]: an adaptive variant steered by a single penalty parameter
//!   and the smallest Hessian eigenvalue, terminating at certified
//!   second-order stationary points;
//! - [`accel`]: a contracting-proximal outer loop with a cubic Bregman
//!   regularizer that accelerates the fixed method on convex problems;
//! - [`baselines`]: a classical ratio-test trust-region method and a
//!   fixed-regularization Newton method for comparison;
//! - [`problem`]: the objective-oracle contract, a built-in problem
//!   suite, LIBSVM ingestion, and finite-difference self-checks;
//! - [`harness`]: a benchmark runner producing JSON reports, CSV traces,
//!   and shifted-geometric-mean summary tables.

// Validation guards are written as `if !(x > 0.0)` on purpose: the
// negated form also rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod autr;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod problem;
pub mod report;
pub mod trs;
pub mod utr;

pub use error::Error;
pub use problem::{Dataset, Objective, Oracle, ProblemInstance};
pub use report::{IterationRecord, RunReport, RunStatus};
pub use trs::{TrsConfig, TrsProblem, TrsSolution};
