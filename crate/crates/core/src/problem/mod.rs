//! Objective oracles, the built-in problem suite, and oracle self-checks.
//!
//! An [`Objective`] supplies analytic value/gradient/Hessian information;
//! an [`Oracle`] wraps one with evaluation counters and a symmetry check
//! on every Hessian it hands out. Solvers own one oracle per run, so
//! counters can be read off a finished run without synchronization
//! headaches; the counters themselves are atomic, making concurrent
//! evaluation at distinct points safe.

mod libsvm;
mod logistic;
mod suite;

pub use libsvm::{load_libsvm, write_libsvm};
pub use logistic::{logistic_oracle, LogisticObjective};
pub use suite::builtin_suite;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analytic value/gradient/Hessian evaluations of a twice-differentiable
/// function on `R^n`.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Hessian-vector product; the default forms the dense Hessian.
    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.hessian(x) * v
    }
}

/// Snapshot of per-kind evaluation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub f_evals: u64,
    pub g_evals: u64,
    pub h_evals: u64,
    pub hv_evals: u64,
}

impl EvalCounts {
    pub fn merge(&self, other: &EvalCounts) -> EvalCounts {
        EvalCounts {
            f_evals: self.f_evals + other.f_evals,
            g_evals: self.g_evals + other.g_evals,
            h_evals: self.h_evals + other.h_evals,
            hv_evals: self.hv_evals + other.hv_evals,
        }
    }
}

#[derive(Debug, Default)]
struct Counters {
    f: AtomicU64,
    g: AtomicU64,
    h: AtomicU64,
    hv: AtomicU64,
}

/// A counting wrapper around an [`Objective`].
///
/// Every Hessian returned is checked for symmetry at `1e-12` relative
/// tolerance; an asymmetric analytic Hessian is a bug in the objective,
/// not a recoverable condition, so the check panics.
pub struct Oracle {
    objective: Arc<dyn Objective>,
    counters: Counters,
}

impl Oracle {
    pub fn new(objective: Arc<dyn Objective>) -> Self {
        Oracle {
            objective,
            counters: Counters::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.counters.f.fetch_add(1, Ordering::Relaxed);
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.counters.g.fetch_add(1, Ordering::Relaxed);
        self.objective.gradient(x)
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.counters.h.fetch_add(1, Ordering::Relaxed);
        let h = self.objective.hessian(x);
        let scale = h.amax().max(1.0);
        for i in 0..h.nrows() {
            for j in (i + 1)..h.ncols() {
                assert!(
                    (h[(i, j)] - h[(j, i)]).abs() <= 1e-12 * scale,
                    "asymmetric Hessian at ({i},{j}): {} vs {}",
                    h[(i, j)],
                    h[(j, i)]
                );
            }
        }
        h
    }

    pub fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.counters.hv.fetch_add(1, Ordering::Relaxed);
        self.objective.hessian_vector(x, v)
    }

    pub fn counts(&self) -> EvalCounts {
        EvalCounts {
            f_evals: self.counters.f.load(Ordering::Relaxed),
            g_evals: self.counters.g.load(Ordering::Relaxed),
            h_evals: self.counters.h.load(Ordering::Relaxed),
            hv_evals: self.counters.hv.load(Ordering::Relaxed),
        }
    }
}

impl Objective for Oracle {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        Oracle::value(self, x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        Oracle::gradient(self, x)
    }
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        Oracle::hessian(self, x)
    }
    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        Oracle::hessian_vector(self, x, v)
    }
}

/// A named problem: objective, start point, and optional metadata.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub objective: Arc<dyn Objective>,
    pub start: DVector<f64>,
    /// Hessian Lipschitz constant valid on the sublevel set of `start`.
    pub lipschitz_hint: Option<f64>,
    pub known_optimum: Option<(DVector<f64>, f64)>,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn Objective>,
        start: DVector<f64>,
        lipschitz_hint: Option<f64>,
        known_optimum: Option<(DVector<f64>, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        if start.len() != objective.dim() {
            return Err(Error::Config(format!(
                "instance {name}: start has dimension {} but the objective expects {}",
                start.len(),
                objective.dim()
            )));
        }
        if !start.iter().all(|v| v.is_finite()) {
            return Err(Error::Config(format!("instance {name}: non-finite start")));
        }
        if let Some(m) = lipschitz_hint {
            if !(m > 0.0) {
                return Err(Error::Config(format!(
                    "instance {name}: lipschitz_hint must be positive, got {m}"
                )));
            }
        }
        Ok(ProblemInstance {
            name,
            objective,
            start,
            lipschitz_hint,
            known_optimum,
        })
    }

    pub fn oracle(&self) -> Oracle {
        Oracle::new(self.objective.clone())
    }
}

/// Sparse binary-classification dataset with labels in `{-1, +1}`.
///
/// Feature indices are stored zero-based; the LIBSVM text format is
/// one-based and the conversion happens at the I/O boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<f64>,
    pub n: usize,
}

impl Dataset {
    pub fn num_samples(&self) -> usize {
        self.rows.len()
    }
}

/// Compares analytic derivatives against central differences over the
/// canonical directions, returning `(grad_err, hess_err)` as relative
/// errors. Thresholding is left to the caller.
pub fn finite_difference_check(oracle: &Oracle, x: &DVector<f64>, h: f64) -> (f64, f64) {
    assert!(h > 0.0, "step size must be positive");
    let n = oracle.dim();
    let g = oracle.gradient(x);
    let gscale = g.amax().max(1.0);

    let mut grad_err: f64 = 0.0;
    let mut hess_err: f64 = 0.0;
    let mut hscale: f64 = 1.0;
    let mut hcols = Vec::with_capacity(n);

    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * h);
        grad_err = grad_err.max((fd - g[i]).abs() / gscale);

        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let hv = oracle.hessian_vector(x, &e);
        hscale = hscale.max(hv.amax());
        let gfd = (oracle.gradient(&xp) - oracle.gradient(&xm)) / (2.0 * h);
        hcols.push((hv, gfd));
    }
    for (hv, gfd) in &hcols {
        hess_err = hess_err.max((hv - gfd).amax() / hscale);
    }
    (grad_err, hess_err)
}
