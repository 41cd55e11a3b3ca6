//! Adaptive universal trust-region method with second-order termination.
//!
//! A single penalty parameter `rho` steers everything. At each iterate
//! the smallest Hessian eigenvalue `lambda_min` is computed once and the
//! pair `(sigma, Delta)` follows a four-way case split on `(||g||,
//! lambda_min)`; when the gradient is below tolerance and the curvature
//! is certifiably bounded below, the method stops at an approximate
//! second-order stationary point. Rejected steps multiply `rho` by
//! `gamma1` and retry at the same iterate; accepted steps relax it by
//! `gamma2` down to `rho_min`. No Lipschitz constant is ever consulted,
//! but when one exists a finite ceiling `rho_max` bounds how far the
//! inner retries can push `rho`.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::report::{
    AdaptiveBranch, AdaptiveInfo, ConditionFlags, IterationRecord, RunReport, RunStatus,
    StepClass, StepParams,
};
use crate::trs::{smallest_eigpair, SymmetricOp, TrsConfig, TrsSolution};
use crate::utr::{solve_subproblem, Subsolver};

#[derive(Debug, Clone)]
pub struct AdaptiveConfig {
    /// Modified-decrease coefficient, `0 < eta < 1/32`.
    pub eta: f64,
    /// Contraction factor, `1/4 < xi < 1`.
    pub xi: f64,
    pub rho0: f64,
    pub rho_min: f64,
    /// Rejection multiplier, `> 1`.
    pub gamma1: f64,
    /// Acceptance divisor, `> 1`.
    pub gamma2: f64,
    /// Stationarity tolerance (also sets the curvature tolerance
    /// `-rho * sqrt(eps)` of the termination certificate).
    pub eps: f64,
    pub max_outer: usize,
    /// Cap on rejected retries within one outer iteration.
    pub max_inner: usize,
    /// Eigensolver tolerance, relative to `max(1, ||H||)`.
    pub eig_tol: f64,
    pub trs: TrsConfig,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            eta: 1e-2,
            xi: 0.3,
            rho0: 1.0,
            rho_min: 1e-3,
            gamma1: 2.0,
            gamma2: 1.2,
            eps: 1e-5,
            max_outer: 10_000,
            max_inner: 100,
            eig_tol: 1e-6,
            trs: TrsConfig::default(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0 / 32.0) {
            return Err(Error::Config(format!(
                "eta must lie in (0, 1/32), got {}",
                self.eta
            )));
        }
        if !(self.xi > 0.25 && self.xi < 1.0) {
            return Err(Error::Config(format!(
                "xi must lie in (1/4, 1), got {}",
                self.xi
            )));
        }
        if !(self.rho_min > 0.0) {
            return Err(Error::Config(format!(
                "rho_min must be positive, got {}",
                self.rho_min
            )));
        }
        if !(self.rho0 >= self.rho_min) {
            return Err(Error::Config(format!(
                "rho0 = {} must be at least rho_min = {}",
                self.rho0, self.rho_min
            )));
        }
        if !(self.gamma1 > 1.0) {
            return Err(Error::Config(format!(
                "gamma1 must exceed 1, got {}",
                self.gamma1
            )));
        }
        if !(self.gamma2 > 1.0) {
            return Err(Error::Config(format!(
                "gamma2 must exceed 1, got {}",
                self.gamma2
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// What the adaptive parameter selection decided at one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDecision {
    /// The second-order stationarity certificate holds.
    Terminate,
    /// Solve the subproblem with this `(sigma, realized radius)` pair.
    Step {
        sigma: f64,
        radius: f64,
        branch: AdaptiveBranch,
    },
}

/// Four-way case split on `(||g||, lambda_min)` at penalty `rho`.
pub fn select_params(lambda_min: f64, gnorm: f64, rho: f64, eps: f64) -> ParamDecision {
    debug_assert!(rho > 0.0 && eps > 0.0);
    if gnorm >= eps {
        let threshold = rho * gnorm.sqrt();
        if lambda_min <= -threshold {
            ParamDecision::Step {
                sigma: 0.0,
                radius: gnorm.sqrt() / (2.0 * rho),
                branch: AdaptiveBranch::NegCurv,
            }
        } else if lambda_min >= threshold {
            ParamDecision::Step {
                sigma: 0.0,
                radius: gnorm.sqrt() / (2.0 * rho),
                branch: AdaptiveBranch::PosCurv,
            }
        } else {
            ParamDecision::Step {
                sigma: rho,
                radius: gnorm.sqrt() / (4.0 * rho),
                branch: AdaptiveBranch::Regularized,
            }
        }
    } else if lambda_min > -rho * eps.sqrt() {
        ParamDecision::Terminate
    } else {
        ParamDecision::Step {
            sigma: 0.0,
            radius: eps.sqrt() / (2.0 * rho),
            branch: AdaptiveBranch::Escape,
        }
    }
}

/// The modified sufficient-decrease condition at penalty `rho`: when the
/// gradient is above tolerance, either an `eta/rho`-scaled cubic drop or
/// a `xi`-contraction of the gradient; below tolerance, the cubic drop
/// with `eps` in place of `||g0||`.
pub fn check_modified_decrease(
    f0: f64,
    f1: f64,
    g0_norm: f64,
    g1_norm: f64,
    rho: f64,
    cfg: &AdaptiveConfig,
) -> bool {
    if g0_norm >= cfg.eps {
        f1 - f0 <= -(cfg.eta / rho) * g0_norm.powf(1.5) || g1_norm <= cfg.xi * g0_norm
    } else {
        f1 - f0 <= -(cfg.eta / rho) * cfg.eps.powf(1.5)
    }
}

/// Finite ceiling on the penalty when the Hessian is `M`-Lipschitz:
/// every `rho` at or above this value is accepted, so the inner retry
/// loop is bounded.
pub fn rho_max_bound(m: f64, cfg: &AdaptiveConfig) -> Result<f64> {
    cfg.validate()?;
    if !(m > 0.0) {
        return Err(Error::Config(format!(
            "Lipschitz constant must be positive, got {m}"
        )));
    }
    let candidates = [
        (m / (12.0 * (1.0 - 32.0 * cfg.eta))).sqrt(),
        (m / (6.0 * (1.0 - 8.0 * cfg.eta))).sqrt(),
        (m / (32.0 * cfg.xi - 8.0)).sqrt(),
        (m / (8.0 * cfg.xi)).sqrt(),
    ];
    let max = candidates.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return Err(Error::Numerical(format!(
            "rho_max is not finite for eta = {}, xi = {}",
            cfg.eta, cfg.xi
        )));
    }
    Ok(cfg.gamma1 * max)
}

/// Number of inner retries that suffices to climb from `rho_min` to
/// `rho_max`: `ceil(log_{gamma1}(rho_max / rho_min)) + 1`.
pub fn max_inner_retries(rho_max: f64, cfg: &AdaptiveConfig) -> usize {
    ((rho_max / cfg.rho_min).ln() / cfg.gamma1.ln()).ceil().max(0.0) as usize + 1
}

/// The second-order stationarity certificate: `||g|| <= eps` and
/// `lambda_min > -rho * sqrt(eps)`.
pub fn sosp_certificate(gnorm: f64, lambda_min: f64, rho: f64, eps: f64) -> bool {
    gnorm < eps && lambda_min > -rho * eps.sqrt()
}

pub fn autr_minimize(
    p: &ProblemInstance,
    cfg: &AdaptiveConfig,
    subsolver: Subsolver,
) -> Result<RunReport> {
    cfg.validate()?;
    let oracle = Arc::new(p.oracle());
    let t0 = Instant::now();
    let mut x = p.start.clone();
    let mut f = oracle.value(&x);
    let mut rho = cfg.rho0;

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;
    let mut gn = f64::NAN;

    'outer: for k in 0..cfg.max_outer {
        let g = oracle.gradient(&x);
        gn = g.norm();
        if !f.is_finite() || !gn.is_finite() {
            status = RunStatus::Failure;
            break;
        }

        // One eigenpair per outer iteration, reused across retries.
        let lambda_min = match subsolver {
            Subsolver::Direct => {
                let h = SymmetricOp::Dense(oracle.hessian(&x));
                smallest_eigpair(&h, cfg.eig_tol)?.0
            }
            Subsolver::Krylov => {
                let oracle = oracle.clone();
                let xc = x.clone();
                let op = SymmetricOp::Operator {
                    dim: x.len(),
                    apply: Arc::new(move |v: &DVector<f64>| oracle.hessian_vector(&xc, v)),
                };
                smallest_eigpair(&op, cfg.eig_tol)?.0
            }
        };

        let mut rho_j = rho;
        let mut retries = 0usize;
        loop {
            let (sigma, radius, branch) = match select_params(lambda_min, gn, rho_j, cfg.eps) {
                ParamDecision::Terminate => {
                    status = RunStatus::Sosp;
                    break 'outer;
                }
                ParamDecision::Step {
                    sigma,
                    radius,
                    branch,
                } => (sigma, radius, branch),
            };

            let sol = if gn == 0.0 {
                // Pure eigenvector escape; the subproblem has no gradient
                // to seed a Krylov space with.
                eigen_escape_step(&oracle, &x, radius, cfg.eig_tol, subsolver)?
            } else {
                solve_subproblem(&oracle, &x, &g, sigma, radius, subsolver, &cfg.trs)?
            };
            let x1 = &x + &sol.step;
            let f1 = oracle.value(&x1);
            let g1 = oracle.gradient(&x1);
            let gn1 = g1.norm();

            let monotone = f1.is_finite() && f1 <= f;
            let sufficient =
                monotone && check_modified_decrease(f, f1, gn, gn1, rho_j, cfg);

            if sufficient {
                let f_branch = if gn >= cfg.eps {
                    f1 - f <= -(cfg.eta / rho_j) * gn.powf(1.5)
                } else {
                    true
                };
                records.push(IterationRecord {
                    index: k,
                    f_before: f,
                    f_after: f1,
                    grad_norm_before: gn,
                    grad_norm_after: gn1,
                    lambda: sol.multiplier,
                    step_norm: sol.step.norm(),
                    classification: if f_branch {
                        StepClass::FSet
                    } else {
                        StepClass::GSet
                    },
                    condition_flags: ConditionFlags {
                        monotone,
                        sufficient,
                        growth_bounded: gn1 <= gn / cfg.xi,
                    },
                    params: StepParams {
                        sigma,
                        r: if gn > 0.0 { radius / gn.sqrt() } else { radius },
                        rho: Some(rho_j),
                    },
                    retries,
                    elapsed: t0.elapsed().as_secs_f64(),
                    adaptive: Some(AdaptiveInfo {
                        rho: rho_j,
                        lambda_min,
                        branch,
                        inner_retries: retries,
                    }),
                });
                x = x1;
                f = f1;
                gn = gn1;
                rho = (rho_j / cfg.gamma2).max(cfg.rho_min);
                break;
            }

            retries += 1;
            if retries > cfg.max_inner {
                return Err(Error::Numerical(format!(
                    "step rejected after {} retries (rho = {rho_j:.3e}, ||g|| = {gn:.3e}, \
                     lambda_min = {lambda_min:.3e} at iteration {k})",
                    cfg.max_inner
                )));
            }
            rho_j *= cfg.gamma1;
        }
    }

    if status == RunStatus::MaxIter && gn.is_finite() && gn <= cfg.eps {
        // Out of budget but first-order stationary; no curvature
        // certificate was obtained.
        status = RunStatus::Fosp;
    }

    Ok(RunReport {
        method: String::new(),
        problem: p.name.clone(),
        status,
        final_point: x.iter().copied().collect(),
        final_f: f,
        final_gnorm: gn,
        iterations: records,
        outer: None,
        counters: oracle.counts(),
        wall_time: t0.elapsed().as_secs_f64(),
        success: false,
    })
}

/// Boundary step along the leftmost eigenvector when the gradient
/// vanishes, sign chosen by the quadratic model.
fn eigen_escape_step(
    oracle: &Arc<crate::problem::Oracle>,
    x: &DVector<f64>,
    radius: f64,
    eig_tol: f64,
    subsolver: Subsolver,
) -> Result<TrsSolution> {
    let op = match subsolver {
        Subsolver::Direct => SymmetricOp::Dense(oracle.hessian(x)),
        Subsolver::Krylov => {
            let oracle = oracle.clone();
            let xc = x.clone();
            SymmetricOp::Operator {
                dim: x.len(),
                apply: Arc::new(move |v: &DVector<f64>| oracle.hessian_vector(&xc, v)),
            }
        }
    };
    let (lmin, v) = smallest_eigpair(&op, eig_tol)?;
    let step = &v * radius;
    // Either sign has the same model value for a pure eigenstep; keep +v.
    Ok(TrsSolution {
        step,
        multiplier: (-lmin).max(0.0),
        model_decrease: 0.5 * radius * radius * (-lmin).max(0.0),
        on_boundary: true,
        hard_case: true,
        inner_iterations: 0,
        truncated: false,
    })
}
