//! Gradient-regularized trust-region subproblem solvers.
//!
//! The subproblem is `min_d g^T d + 1/2 d^T (H + shift I) d` subject to
//! `||d|| <= radius`, where `shift = sigma * ||g||^(1/2)`. A solution is
//! certified by the four KKT conditions: primal feasibility, complementary
//! slackness, stationarity `(H + shift I + lambda I) d = -g`, and
//! positive semidefiniteness of the shifted-and-dualized matrix.
//!
//! Two routes are provided: a dense factorization solver with safeguarded
//! Newton/bisection dual search and explicit hard-case completion
//! ([`solve_trs_direct`]), and a Lanczos subspace solver for
//! Hessian-vector oracles ([`solve_trs_krylov`]).

mod direct;
mod eig;
mod krylov;

pub use direct::solve_trs_direct;
pub use eig::smallest_eigpair;
pub use krylov::solve_trs_krylov;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Shared matrix-vector callback for operator-form Hessians.
pub type ApplyFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Symmetric operator: either an explicit dense matrix or a
/// matrix-vector callback.
#[derive(Clone)]
pub enum SymmetricOp {
    Dense(DMatrix<f64>),
    Operator { dim: usize, apply: ApplyFn },
}

impl SymmetricOp {
    pub fn dim(&self) -> usize {
        match self {
            SymmetricOp::Dense(m) => m.nrows(),
            SymmetricOp::Operator { dim, .. } => *dim,
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SymmetricOp::Dense(m) => m * v,
            SymmetricOp::Operator { apply, .. } => apply(v),
        }
    }

    pub fn as_dense(&self) -> Option<&DMatrix<f64>> {
        match self {
            SymmetricOp::Dense(m) => Some(m),
            SymmetricOp::Operator { .. } => None,
        }
    }
}

/// One trust-region subproblem. `radius` is the realized bound (already
/// multiplied through `r * ||g||^(1/2)`, or an explicit override when
/// `g = 0`).
#[derive(Clone)]
pub struct TrsProblem {
    pub hessian: SymmetricOp,
    pub gradient: DVector<f64>,
    pub sigma: f64,
    pub radius: f64,
}

impl TrsProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::Config(format!(
                "trust radius must be positive, got {}",
                self.radius
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::Config(format!(
                "sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if !self.gradient.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("non-finite gradient".into()));
        }
        if self.gradient.len() != self.hessian.dim() {
            return Err(Error::Config(format!(
                "gradient dimension {} does not match operator dimension {}",
                self.gradient.len(),
                self.hessian.dim()
            )));
        }
        Ok(())
    }

    /// The regularization shift `sigma * ||g||^(1/2)` applied to `H`.
    pub fn shift(&self) -> f64 {
        self.sigma * self.gradient.norm().sqrt()
    }

    /// Applies the shifted operator `H + shift I`.
    pub fn apply_shifted(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = self.hessian.apply(v);
        let s = self.shift();
        if s != 0.0 {
            out += v * s;
        }
        out
    }

    /// Model value `m(d) = g^T d + 1/2 d^T (H + shift I) d`; `m(0) = 0`.
    pub fn model_value(&self, d: &DVector<f64>) -> f64 {
        self.gradient.dot(d) + 0.5 * d.dot(&self.apply_shifted(d))
    }
}

/// Primal-dual solution of a [`TrsProblem`].
#[derive(Debug, Clone)]
pub struct TrsSolution {
    pub step: DVector<f64>,
    pub multiplier: f64,
    /// `m(0) - m(d)`, nonnegative up to roundoff.
    pub model_decrease: f64,
    pub on_boundary: bool,
    pub hard_case: bool,
    pub inner_iterations: usize,
    /// Set by the Krylov solver on breakdown or subspace-cap exit.
    pub truncated: bool,
}

/// Krylov termination rule for the inexact solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KrylovInexactness {
    /// Stop once the stationarity residual is below
    /// `min(0.1, ||g||^(1/2)) * ||g||`.
    GradientScaled,
    /// Fixed absolute residual bound.
    Absolute(f64),
}

#[derive(Debug, Clone)]
pub struct TrsConfig {
    pub kkt_tol: f64,
    pub max_root_iters: usize,
    /// Lanczos subspace cap; `0` means the full dimension.
    pub krylov_dim_cap: usize,
    pub krylov_inexactness: KrylovInexactness,
}

impl Default for TrsConfig {
    fn default() -> Self {
        TrsConfig {
            kkt_tol: 1e-8,
            max_root_iters: 100,
            krylov_dim_cap: 0,
            krylov_inexactness: KrylovInexactness::GradientScaled,
        }
    }
}

/// The four KKT residuals of a candidate solution: primal feasibility,
/// complementary slackness, stationarity, and dual curvature.
#[derive(Debug, Clone, Copy)]
pub struct KktResidual {
    pub feas: f64,
    pub slack: f64,
    pub stat: f64,
    pub curv: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.feas.max(self.slack).max(self.stat).max(self.curv)
    }
}

/// The realized trust radius `r * ||g||^(1/2)`; zero gradient gives zero
/// and the caller must supply an override radius instead.
pub fn realized_radius(g: &DVector<f64>, r: f64) -> f64 {
    assert!(r > 0.0, "radius coefficient must be positive");
    r * g.norm().sqrt()
}

/// Evaluates the KKT residuals of `(d, lambda)` for problem `p`.
pub fn kkt_residual(p: &TrsProblem, s: &TrsSolution) -> KktResidual {
    let d = &s.step;
    let lambda = s.multiplier;
    let dnorm = d.norm();

    let feas = (dnorm - p.radius).max(0.0);
    let slack = (lambda * (dnorm - p.radius)).abs();
    let stat = (p.apply_shifted(d) + d * lambda + &p.gradient).norm();

    // Smallest eigenvalue of H + shift I + lambda I.
    let shifted = match &p.hessian {
        SymmetricOp::Dense(h) => {
            let mut m = h.clone();
            let total = p.shift() + lambda;
            for i in 0..m.nrows() {
                m[(i, i)] += total;
            }
            SymmetricOp::Dense(m)
        }
        SymmetricOp::Operator { dim, apply } => {
            let dim = *dim;
            let apply = apply.clone();
            let total = p.shift() + lambda;
            SymmetricOp::Operator {
                dim,
                apply: Arc::new(move |v: &DVector<f64>| apply(v) + v * total),
            }
        }
    };
    let curv = match smallest_eigpair(&shifted, 1e-10) {
        Ok((lmin, _)) => (-lmin).max(0.0),
        Err(Error::EigNonConvergence { best_estimate, .. }) => (-best_estimate).max(0.0),
        Err(_) => f64::INFINITY,
    };

    KktResidual {
        feas,
        slack,
        stat,
        curv,
    }
}
