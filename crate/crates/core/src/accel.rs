//! Accelerated scheme for convex problems via contracting proximal steps.
//!
//! Outer iteration `k` builds the contracted objective
//!
//! ```text
//! h_{k+1}(x) = A_{k+1} f((a_{k+1} x + A_k x_k) / A_{k+1}) + beta_d(v_k; x)
//! ```
//!
//! where `beta_d(v; x) = d(x) - d(v) - <grad d(v), x - v>` is the Bregman
//! divergence of the cubic prox function `d(x) = ||x - x_0||^3 / 3`, and
//! minimizes it inexactly with the fixed trust-region method to gradient
//! accuracy `delta_k`. The coefficient schedule `a_{k+1} = (k+1)^2 / (9M)`
//! yields `A_k = k(k+1)(2k+1) / (54M)` and an `O(1/k^3)` rate in function
//! value. The contracted objective has Hessian Lipschitz constant at most
//! `(a^3 / A_{k+1}^2) M + 2`, which is what the inner solver is given.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{Objective, ProblemInstance};
use crate::report::{OuterRecord, RunReport, RunStatus};
use crate::utr::{utr_minimize, Subsolver, UtrOptions};

/// Cubic prox function `d(x) = ||x - anchor||^3 / 3` and its derivatives.
#[derive(Clone)]
pub struct CubicBregman {
    pub anchor: DVector<f64>,
}

impl CubicBregman {
    pub fn new(anchor: DVector<f64>) -> Self {
        CubicBregman { anchor }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (x - &self.anchor).norm().powi(3) / 3.0
    }

    /// `grad d(x) = ||x - a|| (x - a)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = x - &self.anchor;
        let n = u.norm();
        u * n
    }

    /// `hess d(x) = ||u|| I + u u^T / ||u||`, the zero matrix at the anchor.
    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let u = x - &self.anchor;
        let n = u.norm();
        let dim = u.len();
        if n == 0.0 {
            return DMatrix::zeros(dim, dim);
        }
        let mut h = DMatrix::identity(dim, dim) * n;
        h += &u * u.transpose() / n;
        h
    }

    pub fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let u = x - &self.anchor;
        let n = u.norm();
        if n == 0.0 {
            return DVector::zeros(u.len());
        }
        v * n + &u * (u.dot(v) / n)
    }

    /// Bregman divergence `beta_d(v; x) >= 0`.
    pub fn divergence(&self, v: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.value(x) - self.value(v) - self.gradient(v).dot(&(x - v))
    }
}

/// The contracted-and-regularized objective of one outer iteration.
pub struct ContractedObjective {
    f: Arc<dyn Objective>,
    /// `a_{k+1}`.
    a: f64,
    /// `A_{k+1} = A_k + a_{k+1}`.
    a_next: f64,
    /// `A_k x_k`, the fixed part of the contraction.
    base: DVector<f64>,
    breg: CubicBregman,
    /// `grad d(v_k)`, fixed over the inner run.
    grad_d_v: DVector<f64>,
    /// `d(v_k) + <grad d(v_k), v_k>`, the constant making the Bregman
    /// divergence exact (so inner monotonicity matches `h` exactly).
    constant: f64,
}

impl ContractedObjective {
    pub fn new(
        f: Arc<dyn Objective>,
        a: f64,
        a_next: f64,
        x_k: &DVector<f64>,
        breg: CubicBregman,
        v_k: &DVector<f64>,
    ) -> Result<Self> {
        if !(a > 0.0 && a_next >= a) {
            return Err(Error::Config(format!(
                "invalid coefficients a = {a}, A_next = {a_next}"
            )));
        }
        let grad_d_v = breg.gradient(v_k);
        let constant = -breg.value(v_k) + grad_d_v.dot(v_k);
        Ok(ContractedObjective {
            f,
            a,
            a_next,
            base: x_k * (a_next - a),
            breg,
            grad_d_v,
            constant,
        })
    }

    /// The contraction point `z = (a x + A_k x_k) / A_{k+1}`.
    pub fn contract(&self, x: &DVector<f64>) -> DVector<f64> {
        (x * self.a + &self.base) / self.a_next
    }
}

impl Objective for ContractedObjective {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let z = self.contract(x);
        self.a_next * self.f.value(&z) + self.breg.value(x) - self.grad_d_v.dot(x)
            + self.constant
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = self.contract(x);
        self.f.gradient(&z) * self.a + self.breg.gradient(x) - &self.grad_d_v
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let z = self.contract(x);
        self.f.hessian(&z) * (self.a * self.a / self.a_next) + self.breg.hessian(x)
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let z = self.contract(x);
        self.f.hessian_vector(&z, v) * (self.a * self.a / self.a_next)
            + self.breg.hessian_vector(x, v)
    }
}

/// Options of [`accel_minimize`].
#[derive(Debug, Clone)]
pub struct AccelOptions {
    /// Hessian Lipschitz constant of the (convex) objective.
    pub m: f64,
    /// Target accuracy: `f(x_k) - f* <= eps` when the optimum is known,
    /// otherwise `||grad f(x_k)|| <= eps`.
    pub eps: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub subsolver: Subsolver,
}

impl Default for AccelOptions {
    fn default() -> Self {
        AccelOptions {
            m: 1.0,
            eps: 1e-5,
            max_outer: 10_000,
            max_inner: 5_000,
            subsolver: Subsolver::Direct,
        }
    }
}

pub fn accel_minimize(p: &ProblemInstance, opts: &AccelOptions) -> Result<RunReport> {
    if !(opts.m > 0.0) {
        return Err(Error::Config(format!(
            "Lipschitz constant must be positive, got {}",
            opts.m
        )));
    }
    if !(opts.eps > 0.0) {
        return Err(Error::Config(format!(
            "eps must be positive, got {}",
            opts.eps
        )));
    }

    let oracle = Arc::new(p.oracle());
    let t0 = Instant::now();
    let breg = CubicBregman::new(p.start.clone());
    let f_star = p.known_optimum.as_ref().map(|(_, f)| *f);

    let mut x = p.start.clone();
    let mut v = p.start.clone();
    let mut a_total = 0.0f64;
    let mut outer: Vec<OuterRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;
    let mut fx = oracle.value(&x);
    let mut gn = oracle.gradient(&x).norm();
    let delta_scale = opts.eps.powf(2.0 / 3.0).min(1.0);

    for k in 0..opts.max_outer {
        let converged = match f_star {
            Some(fs) => fx - fs <= opts.eps,
            None => gn <= opts.eps,
        };
        if converged {
            status = RunStatus::Fosp;
            break;
        }

        let a = ((k + 1) * (k + 1)) as f64 / (9.0 * opts.m);
        let a_next = a_total + a;
        let delta_k = delta_scale / (k as f64 + 1.0);
        let m_h = (a.powi(3) / (a_next * a_next)) * opts.m + 2.0;

        let contracted = ContractedObjective::new(
            oracle.clone() as Arc<dyn Objective>,
            a,
            a_next,
            &x,
            breg.clone(),
            &v,
        )?;
        let inner = ProblemInstance::new(
            format!("{}-contracted-{k}", p.name),
            Arc::new(contracted),
            v.clone(),
            Some(m_h),
            None,
        )?;
        let inner_report = utr_minimize(
            &inner,
            &UtrOptions {
                m: m_h,
                eps: delta_k,
                max_iter: opts.max_inner,
                convex_mode: true,
                subsolver: opts.subsolver,
                ..UtrOptions::default()
            },
        )?;
        if inner_report.status != RunStatus::Fosp {
            status = RunStatus::Failure;
            break;
        }

        v = DVector::from_vec(inner_report.final_point);
        x = (&v * a + &x * a_total) / a_next;
        a_total = a_next;
        fx = oracle.value(&x);
        gn = oracle.gradient(&x).norm();

        outer.push(OuterRecord {
            index: k,
            a,
            a_total,
            inner_iters: inner_report.iterations.len(),
            grad_h_norm: inner_report.final_gnorm,
            f_x: fx,
            elapsed: t0.elapsed().as_secs_f64(),
        });
    }

    if status == RunStatus::MaxIter {
        let converged = match f_star {
            Some(fs) => fx - fs <= opts.eps,
            None => gn <= opts.eps,
        };
        if converged {
            status = RunStatus::Fosp;
        }
    }

    Ok(RunReport {
        method: String::new(),
        problem: p.name.clone(),
        status,
        final_point: x.iter().copied().collect(),
        final_f: fx,
        final_gnorm: gn,
        iterations: Vec::new(),
        outer: Some(outer),
        counters: oracle.counts(),
        wall_time: t0.elapsed().as_secs_f64(),
        success: false,
    })
}
