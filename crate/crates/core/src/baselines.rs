//! Reference methods for benchmark comparisons.
//!
//! Two classical baselines sharing the report schema of the main
//! solvers: a ratio-test trust-region method with the usual
//! shrink/grow radius update, and a fixed-regularization Newton method
//! with a monotone step-halving safeguard.

use std::time::Instant;

use nalgebra::{Cholesky, DVector};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::report::{
    ConditionFlags, IterationRecord, RunReport, RunStatus, StepClass, StepParams,
};
use crate::trs::{solve_trs_direct, SymmetricOp, TrsConfig, TrsProblem};

/// Classical trust-region options.
#[derive(Debug, Clone)]
pub struct ClassicTrOptions {
    pub delta0: f64,
    /// Accept when the actual/predicted ratio is at least this.
    pub eta_accept: f64,
    pub shrink: f64,
    pub grow: f64,
    pub delta_max: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub trs: TrsConfig,
}

impl Default for ClassicTrOptions {
    fn default() -> Self {
        ClassicTrOptions {
            delta0: 1.0,
            eta_accept: 0.1,
            shrink: 0.25,
            grow: 2.0,
            delta_max: 1e6,
            eps: 1e-5,
            max_iter: 10_000,
            trs: TrsConfig::default(),
        }
    }
}

/// Ratio-test trust-region method with exact dense subproblem solves.
pub fn classic_tr_minimize(p: &ProblemInstance, opts: &ClassicTrOptions) -> Result<RunReport> {
    if !(opts.delta0 > 0.0 && opts.eps > 0.0) {
        return Err(Error::Config(
            "delta0 and eps must be positive".into(),
        ));
    }
    if !(opts.eta_accept > 0.0 && opts.eta_accept < 0.25) {
        return Err(Error::Config(format!(
            "eta_accept must lie in (0, 0.25), got {}",
            opts.eta_accept
        )));
    }

    let oracle = p.oracle();
    let t0 = Instant::now();
    let mut x = p.start.clone();
    let mut f = oracle.value(&x);
    let mut delta = opts.delta0;

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;
    let mut gn = f64::NAN;
    let mut rejected_since_accept = 0usize;

    let mut accepted = 0usize;
    let mut total_steps = 0usize;
    while accepted < opts.max_iter && total_steps < 10 * opts.max_iter {
        let g = oracle.gradient(&x);
        gn = g.norm();
        if !f.is_finite() || !gn.is_finite() {
            status = RunStatus::Failure;
            break;
        }
        if gn <= opts.eps {
            status = RunStatus::Fosp;
            break;
        }
        total_steps += 1;

        let sub = TrsProblem {
            hessian: SymmetricOp::Dense(oracle.hessian(&x)),
            gradient: g.clone(),
            sigma: 0.0,
            radius: delta,
        };
        let sol = solve_trs_direct(&sub, &opts.trs)?;
        let predicted = sol.model_decrease;
        if !(predicted > 0.0) {
            // Model cannot improve inside this ball; shrink and retry.
            delta *= opts.shrink;
            rejected_since_accept += 1;
            if delta < 1e-300 {
                status = RunStatus::Failure;
                break;
            }
            continue;
        }

        let x1 = &x + &sol.step;
        let f1 = oracle.value(&x1);
        let ratio = (f - f1) / predicted;

        if ratio < 0.25 {
            delta *= opts.shrink;
        } else if ratio > 0.75 && sol.on_boundary {
            delta = (delta * opts.grow).min(opts.delta_max);
        }

        if ratio >= opts.eta_accept && f1.is_finite() {
            let gn1 = oracle.gradient(&x1).norm();
            records.push(IterationRecord {
                index: accepted,
                f_before: f,
                f_after: f1,
                grad_norm_before: gn,
                grad_norm_after: gn1,
                lambda: sol.multiplier,
                step_norm: sol.step.norm(),
                classification: StepClass::FSet,
                condition_flags: ConditionFlags {
                    monotone: f1 <= f,
                    sufficient: true,
                    growth_bounded: true,
                },
                params: StepParams {
                    sigma: 0.0,
                    r: delta,
                    rho: None,
                },
                retries: rejected_since_accept,
                elapsed: t0.elapsed().as_secs_f64(),
                adaptive: None,
            });
            x = x1;
            f = f1;
            gn = gn1;
            accepted += 1;
            rejected_since_accept = 0;
        } else {
            rejected_since_accept += 1;
            if delta < 1e-300 {
                status = RunStatus::Failure;
                break;
            }
        }
    }
    if status == RunStatus::MaxIter && gn.is_finite() && gn <= opts.eps {
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

/// Fixed-regularization Newton options.
#[derive(Debug, Clone)]
pub struct RegNewtonOptions {
    /// Regularization coefficient multiplying `||g||^power`.
    pub lam: f64,
    pub power: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for RegNewtonOptions {
    fn default() -> Self {
        RegNewtonOptions {
            lam: 1e-3,
            power: 0.5,
            eps: 1e-5,
            max_iter: 10_000,
            max_halvings: 30,
        }
    }
}

/// Regularized Newton: `x+ = x - (H + lam ||g||^power I)^-1 g`, with the
/// step halved while the objective increases. Intended for convex
/// problems; an indefinite shifted Hessian is reported as a failure.
pub fn reg_newton_minimize(p: &ProblemInstance, opts: &RegNewtonOptions) -> Result<RunReport> {
    if !(opts.lam > 0.0 && opts.eps > 0.0) {
        return Err(Error::Config("lam and eps must be positive".into()));
    }

    let oracle = p.oracle();
    let t0 = Instant::now();
    let mut x = p.start.clone();
    let mut f = oracle.value(&x);

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;
    let mut gn = f64::NAN;

    for k in 0..opts.max_iter {
        let g = oracle.gradient(&x);
        gn = g.norm();
        if !f.is_finite() || !gn.is_finite() {
            status = RunStatus::Failure;
            break;
        }
        if gn <= opts.eps {
            status = RunStatus::Fosp;
            break;
        }

        let shift = opts.lam * gn.powf(opts.power);
        let mut h = oracle.hessian(&x);
        for i in 0..h.nrows() {
            h[(i, i)] += shift;
        }
        let chol = match Cholesky::new(h) {
            Some(c) => c,
            None => {
                // Not positive definite even after the shift: outside this
                // method's (convex) domain.
                status = RunStatus::Failure;
                break;
            }
        };
        let mut d: DVector<f64> = chol.solve(&(-&g));

        let mut f1 = oracle.value(&(&x + &d));
        let mut halvings = 0usize;
        while !(f1 <= f) && halvings < opts.max_halvings {
            d *= 0.5;
            f1 = oracle.value(&(&x + &d));
            halvings += 1;
        }
        if !(f1 <= f) {
            status = RunStatus::Failure;
            break;
        }

        let x1 = &x + &d;
        let gn1 = oracle.gradient(&x1).norm();
        records.push(IterationRecord {
            index: k,
            f_before: f,
            f_after: f1,
            grad_norm_before: gn,
            grad_norm_after: gn1,
            lambda: shift,
            step_norm: d.norm(),
            classification: StepClass::FSet,
            condition_flags: ConditionFlags {
                monotone: true,
                sufficient: true,
                growth_bounded: true,
            },
            params: StepParams {
                sigma: opts.lam,
                r: 1.0,
                rho: None,
            },
            retries: halvings,
            elapsed: t0.elapsed().as_secs_f64(),
            adaptive: None,
        });
        x = x1;
        f = f1;
        gn = gn1;
    }
    if status == RunStatus::MaxIter && gn.is_finite() && gn <= opts.eps {
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
