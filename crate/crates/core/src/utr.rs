//! Fixed-parameter universal trust-region method.
//!
//! One iteration solves the gradient-regularized, gradient-scaled
//! subproblem with `(sigma, r) = (sqrt(M)/3, 1/(3 sqrt(M)))` and accepts
//! the step when it is monotone and satisfies the sufficient-decrease
//! condition: either
//!
//! ```text
//! f1 - f0 <= -(kappa / sqrt(M)) * ||g0||^(3/2)      (F-branch, kappa = 1/81)
//! ```
//!
//! or `||g1|| <= xi * ||g0||` with `xi = 1/6` (G-branch). Both hold
//! automatically when `M` really bounds the Hessian Lipschitz constant on
//! the sublevel set; a rejection therefore signals an underestimate and
//! doubles `M`.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::problem::{Oracle, ProblemInstance};
use crate::report::{
    ConditionFlags, IterationRecord, RunReport, RunStatus, StepClass, StepParams,
};
use crate::trs::{
    realized_radius, solve_trs_direct, solve_trs_krylov, SymmetricOp, TrsConfig, TrsProblem,
    TrsSolution,
};

/// Analysis constants of the fixed strategy.
#[derive(Debug, Clone, Copy)]
pub struct SimpleConstants {
    pub m: f64,
    /// Decrease coefficient, `1/81`.
    pub kappa: f64,
    /// Contraction factor, `1/6`.
    pub xi: f64,
}

impl SimpleConstants {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::Config(format!(
                "Lipschitz constant must be positive, got {m}"
            )));
        }
        Ok(SimpleConstants {
            m,
            kappa: 1.0 / 81.0,
            xi: 1.0 / 6.0,
        })
    }
}

/// `(sigma, r) = (sqrt(M)/3, 1/(3 sqrt(M)))`.
pub fn simple_strategy(m: f64) -> Result<StepParams> {
    if !(m > 0.0) {
        return Err(Error::Config(format!(
            "Lipschitz constant must be positive, got {m}"
        )));
    }
    let s = m.sqrt();
    Ok(StepParams {
        sigma: s / 3.0,
        r: 1.0 / (3.0 * s),
        rho: None,
    })
}

/// Outcome of the acceptance conditions at a candidate step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionOutcome {
    /// Monotone but neither sufficient-decrease branch held.
    MonotoneOnly,
    /// The function-decrease branch held (ties resolve here).
    FDecrease,
    /// Only the gradient-contraction branch held.
    GContract,
    /// Monotonicity (or, in convex mode, the gradient-growth bound) failed.
    Reject,
}

/// Evaluates monotonicity, the two sufficient-decrease branches, and — in
/// convex mode — the gradient-growth safeguard `||g1|| <= ||g0|| / xi`.
pub fn check_conditions(
    f0: f64,
    f1: f64,
    g0_norm: f64,
    g1_norm: f64,
    c: &SimpleConstants,
    convex_mode: bool,
) -> ConditionOutcome {
    if !(f1 <= f0) {
        return ConditionOutcome::Reject;
    }
    if convex_mode && g1_norm > g0_norm / c.xi {
        return ConditionOutcome::Reject;
    }
    let f_branch = f1 - f0 <= -(c.kappa / c.m.sqrt()) * g0_norm.powf(1.5);
    let g_branch = g1_norm <= c.xi * g0_norm;
    if f_branch {
        ConditionOutcome::FDecrease
    } else if g_branch {
        ConditionOutcome::GContract
    } else {
        ConditionOutcome::MonotoneOnly
    }
}

/// Recomputes the F/G classification of an accepted iteration from its
/// record. Errors when neither branch holds — an invariant violation for
/// a step accepted under constants `c`.
pub fn classify_iteration(rec: &IterationRecord, c: &SimpleConstants) -> Result<StepClass> {
    match check_conditions(
        rec.f_before,
        rec.f_after,
        rec.grad_norm_before,
        rec.grad_norm_after,
        c,
        false,
    ) {
        ConditionOutcome::FDecrease => Ok(StepClass::FSet),
        ConditionOutcome::GContract => Ok(StepClass::GSet),
        other => Err(Error::Contract(format!(
            "accepted iteration {} satisfies neither sufficient-decrease branch ({other:?})",
            rec.index
        ))),
    }
}

/// Which trust-region subproblem solver the outer method uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsolver {
    /// Dense factorization solver; requires explicit Hessians.
    Direct,
    /// Lanczos subspace solver; needs only Hessian-vector products.
    Krylov,
}

/// Options of [`utr_minimize`].
#[derive(Debug, Clone)]
pub struct UtrOptions {
    /// Initial Lipschitz estimate; doubled on rejection.
    pub m: f64,
    /// Gradient-norm tolerance for first-order stationarity.
    pub eps: f64,
    pub max_iter: usize,
    /// Enables the gradient-growth safeguard appropriate for convex
    /// objectives.
    pub convex_mode: bool,
    pub subsolver: Subsolver,
    pub trs: TrsConfig,
}

impl Default for UtrOptions {
    fn default() -> Self {
        UtrOptions {
            m: 1.0,
            eps: 1e-5,
            max_iter: 10_000,
            convex_mode: false,
            subsolver: Subsolver::Direct,
            trs: TrsConfig::default(),
        }
    }
}

const MAX_DOUBLINGS: usize = 50;

pub(crate) fn solve_subproblem(
    oracle: &Arc<Oracle>,
    x: &DVector<f64>,
    g: &DVector<f64>,
    sigma: f64,
    radius: f64,
    subsolver: Subsolver,
    trs_cfg: &TrsConfig,
) -> Result<TrsSolution> {
    let hessian = match subsolver {
        Subsolver::Direct => SymmetricOp::Dense(oracle.hessian(x)),
        Subsolver::Krylov => {
            let oracle = oracle.clone();
            let x = x.clone();
            SymmetricOp::Operator {
                dim: x.len(),
                apply: Arc::new(move |v: &DVector<f64>| oracle.hessian_vector(&x, v)),
            }
        }
    };
    let p = TrsProblem {
        hessian,
        gradient: g.clone(),
        sigma,
        radius,
    };
    match subsolver {
        Subsolver::Direct => solve_trs_direct(&p, trs_cfg),
        Subsolver::Krylov => solve_trs_krylov(&p, trs_cfg),
    }
}

pub fn utr_minimize(p: &ProblemInstance, opts: &UtrOptions) -> Result<RunReport> {
    if !(opts.eps > 0.0) {
        return Err(Error::Config(format!(
            "eps must be positive, got {}",
            opts.eps
        )));
    }
    if !(opts.m > 0.0) {
        return Err(Error::Config(format!(
            "initial Lipschitz estimate must be positive, got {}",
            opts.m
        )));
    }

    let oracle = Arc::new(p.oracle());
    let t0 = Instant::now();
    let mut x = p.start.clone();
    let mut f = oracle.value(&x);
    let mut g = oracle.gradient(&x);
    let mut gn = g.norm();
    let mut m_cur = opts.m;

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::MaxIter;

    if !f.is_finite() || !gn.is_finite() {
        status = RunStatus::Failure;
    } else {
        for k in 0..opts.max_iter {
            if gn <= opts.eps {
                status = RunStatus::Fosp;
                break;
            }

            let mut retries = 0usize;
            loop {
                let params = simple_strategy(m_cur)?;
                let radius = realized_radius(&g, params.r);
                let sol = solve_subproblem(
                    &oracle,
                    &x,
                    &g,
                    params.sigma,
                    radius,
                    opts.subsolver,
                    &opts.trs,
                )?;
                let x1 = &x + &sol.step;
                let f1 = oracle.value(&x1);
                let g1 = oracle.gradient(&x1);
                let gn1 = g1.norm();

                let c = SimpleConstants::new(m_cur)?;
                let outcome = if f1.is_finite() && gn1.is_finite() {
                    check_conditions(f, f1, gn, gn1, &c, opts.convex_mode)
                } else {
                    ConditionOutcome::Reject
                };

                match outcome {
                    ConditionOutcome::FDecrease | ConditionOutcome::GContract => {
                        records.push(IterationRecord {
                            index: k,
                            f_before: f,
                            f_after: f1,
                            grad_norm_before: gn,
                            grad_norm_after: gn1,
                            lambda: sol.multiplier,
                            step_norm: sol.step.norm(),
                            classification: if outcome == ConditionOutcome::FDecrease {
                                StepClass::FSet
                            } else {
                                StepClass::GSet
                            },
                            condition_flags: ConditionFlags {
                                monotone: true,
                                sufficient: true,
                                growth_bounded: gn1 <= gn / c.xi,
                            },
                            params,
                            retries,
                            elapsed: t0.elapsed().as_secs_f64(),
                            adaptive: None,
                        });
                        x = x1;
                        f = f1;
                        g = g1;
                        gn = gn1;
                        break;
                    }
                    ConditionOutcome::MonotoneOnly | ConditionOutcome::Reject => {
                        retries += 1;
                        if retries > MAX_DOUBLINGS {
                            return Err(Error::Numerical(format!(
                                "step rejected after {MAX_DOUBLINGS} doublings of M \
                                 (M = {m_cur:.3e}, ||g|| = {gn:.3e}, f = {f:.6e} at iteration {k})"
                            )));
                        }
                        m_cur *= 2.0;
                    }
                }
            }
        }
        if status == RunStatus::MaxIter && gn <= opts.eps {
            status = RunStatus::Fosp;
        }
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin_suite;
    use approx::assert_relative_eq;

    fn instance(name: &str) -> ProblemInstance {
        builtin_suite()
            .into_iter()
            .find(|p| p.name == name)
            .unwrap_or_else(|| panic!("no instance named {name}"))
    }

    #[test]
    fn strategy_identity() {
        // M/2 * r^2 + sigma * r = 1/18 + 1/9 = 1/6 for every M.
        for m in [0.5, 1.0, 100.0, 1e6] {
            let p = simple_strategy(m).unwrap();
            assert_relative_eq!(
                m / 2.0 * p.r * p.r + p.sigma * p.r,
                1.0 / 6.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn strategy_values_at_m9() {
        let p = simple_strategy(9.0).unwrap();
        assert_relative_eq!(p.sigma, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.r, 1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn conditions_prefer_f_branch_on_tie() {
        let c = SimpleConstants::new(1.0).unwrap();
        // Exactly the F-branch threshold, and also contracting.
        let f0 = 1.0;
        let g0: f64 = 1.0;
        let f1 = f0 - c.kappa * g0.powf(1.5);
        let out = check_conditions(f0, f1, g0, 0.0, &c, false);
        assert_eq!(out, ConditionOutcome::FDecrease);
    }

    #[test]
    fn conditions_reject_increase() {
        let c = SimpleConstants::new(1.0).unwrap();
        assert_eq!(
            check_conditions(1.0, 1.0 + 1e-12, 1.0, 0.5, &c, false),
            ConditionOutcome::Reject
        );
    }

    #[test]
    fn convex_mode_rejects_gradient_growth() {
        let c = SimpleConstants::new(1.0).unwrap();
        // Big f-drop but the gradient grew by more than 1/xi = 6.
        assert_eq!(
            check_conditions(1.0, 0.0, 1.0, 7.0, &c, true),
            ConditionOutcome::Reject
        );
        assert_eq!(
            check_conditions(1.0, 0.0, 1.0, 7.0, &c, false),
            ConditionOutcome::FDecrease
        );
    }

    #[test]
    fn quadratic_converges_in_one_shot_regime() {
        let p = instance("quadratic-2");
        let opts = UtrOptions {
            m: p.lipschitz_hint.unwrap(),
            ..UtrOptions::default()
        };
        let rep = utr_minimize(&p, &opts).unwrap();
        assert_eq!(rep.status, RunStatus::Fosp);
        assert!(rep.final_gnorm <= 1e-5);
        assert!(rep.is_monotone());
    }

    #[test]
    fn rosenbrock_two_converges() {
        let p = instance("rosenbrock-2");
        let opts = UtrOptions {
            m: 1.0,
            ..UtrOptions::default()
        };
        let rep = utr_minimize(&p, &opts).unwrap();
        assert_eq!(rep.status, RunStatus::Fosp);
        assert!(rep.is_monotone());
        assert_relative_eq!(rep.final_point[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(rep.final_point[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn krylov_route_matches_direct_on_quadratic() {
        let p = instance("quadratic-ill-10");
        let base = UtrOptions {
            m: p.lipschitz_hint.unwrap(),
            ..UtrOptions::default()
        };
        let direct = utr_minimize(&p, &base).unwrap();
        let krylov = utr_minimize(
            &p,
            &UtrOptions {
                subsolver: Subsolver::Krylov,
                ..base
            },
        )
        .unwrap();
        assert_eq!(direct.status, RunStatus::Fosp);
        assert_eq!(krylov.status, RunStatus::Fosp);
        assert!(krylov.counters.h_evals == 0);
        assert!(krylov.counters.hv_evals > 0);
    }

    #[test]
    fn every_accepted_step_classifies() {
        let p = instance("rosenbrock-2");
        let rep = utr_minimize(&p, &UtrOptions::default()).unwrap();
        for rec in &rep.iterations {
            // The record carries the realized M through sigma = sqrt(M)/3.
            let m = (3.0 * rec.params.sigma).powi(2);
            let c = SimpleConstants::new(m).unwrap();
            let class = classify_iteration(rec, &c).unwrap();
            assert_eq!(class, rec.classification);
        }
    }
}
