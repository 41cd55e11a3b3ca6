//! Per-iteration records, run reports, and CSV trace export.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::EvalCounts;

/// Per-iteration sufficient-decrease classification: `F` when the
/// function-decrease branch held (ties included), `G` when only the
/// gradient-contraction branch held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepClass {
    #[serde(rename = "F")]
    FSet,
    #[serde(rename = "G")]
    GSet,
}

impl std::fmt::Display for StepClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepClass::FSet => write!(f, "F"),
            StepClass::GSet => write!(f, "G"),
        }
    }
}

/// Outcome of the acceptance conditions at one step: monotonicity,
/// sufficient decrease (either branch), and the gradient-growth bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConditionFlags {
    pub monotone: bool,
    pub sufficient: bool,
    pub growth_bounded: bool,
}

/// Per-iteration parameter pair `(sigma, r)` plus the adaptive penalty.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepParams {
    pub sigma: f64,
    /// Radius coefficient; the realized radius itself when the gradient
    /// vanishes and no coefficient exists.
    pub r: f64,
    pub rho: Option<f64>,
}

/// Which row of the adaptive parameter table produced the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptiveBranch {
    NegCurv,
    PosCurv,
    Regularized,
    Escape,
}

impl std::fmt::Display for AdaptiveBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdaptiveBranch::NegCurv => write!(f, "neg-curv"),
            AdaptiveBranch::PosCurv => write!(f, "pos-curv"),
            AdaptiveBranch::Regularized => write!(f, "regularized"),
            AdaptiveBranch::Escape => write!(f, "escape"),
        }
    }
}

/// Extra per-iteration state recorded by the adaptive method.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdaptiveInfo {
    pub rho: f64,
    pub lambda_min: f64,
    pub branch: AdaptiveBranch,
    pub inner_retries: usize,
}

/// One accepted iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub f_before: f64,
    pub f_after: f64,
    pub grad_norm_before: f64,
    pub grad_norm_after: f64,
    pub lambda: f64,
    pub step_norm: f64,
    pub classification: StepClass,
    pub condition_flags: ConditionFlags,
    pub params: StepParams,
    pub retries: usize,
    /// Seconds since the run started, at record time.
    pub elapsed: f64,
    pub adaptive: Option<AdaptiveInfo>,
}

/// Outer-iteration record of the accelerated method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterRecord {
    pub index: usize,
    pub a: f64,
    pub a_total: f64,
    pub inner_iters: usize,
    pub grad_h_norm: f64,
    pub f_x: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Fosp,
    Sosp,
    MaxIter,
    Failure,
}

/// The unit of persistence for a solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub problem: String,
    pub status: RunStatus,
    pub final_point: Vec<f64>,
    pub final_f: f64,
    pub final_gnorm: f64,
    pub iterations: Vec<IterationRecord>,
    /// Outer trace of the accelerated method, absent otherwise.
    pub outer: Option<Vec<OuterRecord>>,
    pub counters: EvalCounts,
    pub wall_time: f64,
    /// Set by the harness once the success rule has been applied.
    pub success: bool,
}

impl RunReport {
    /// Iterations for aggregate accounting: outer iterations for the
    /// accelerated method, accepted iterations otherwise.
    pub fn iteration_count(&self) -> usize {
        match &self.outer {
            Some(o) => o.len(),
            None => self.iterations.len(),
        }
    }

    /// Objective values over accepted iterations are nonincreasing.
    pub fn is_monotone(&self) -> bool {
        self.iterations.iter().all(|r| r.f_after <= r.f_before)
            && self
                .iterations
                .windows(2)
                .all(|w| w[1].f_before <= w[0].f_after)
    }
}

/// Writes the per-iteration trace. Fixed base columns
/// `k,f,gnorm,lambda,stepnorm,class,retries`; adaptive runs append
/// `rho,lambda_min,branch,inner_retries`.
pub fn write_trace(report: &RunReport, mut out: impl Write) -> Result<()> {
    if let Some(outer) = &report.outer {
        writeln!(out, "k,a,A,inner_iters,grad_h_norm,f")?;
        for r in outer {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.index, r.a, r.a_total, r.inner_iters, r.grad_h_norm, r.f_x
            )?;
        }
        return Ok(());
    }

    let adaptive = report.iterations.iter().any(|r| r.adaptive.is_some());
    if adaptive {
        writeln!(out, "k,f,gnorm,lambda,stepnorm,class,retries,rho,lambda_min,branch,inner_retries")?;
    } else {
        writeln!(out, "k,f,gnorm,lambda,stepnorm,class,retries")?;
    }
    for r in &report.iterations {
        write!(
            out,
            "{},{},{},{},{},{},{}",
            r.index, r.f_after, r.grad_norm_after, r.lambda, r.step_norm, r.classification, r.retries
        )?;
        if adaptive {
            match &r.adaptive {
                Some(a) => writeln!(out, ",{},{},{},{}", a.rho, a.lambda_min, a.branch, a.inner_retries)?,
                None => writeln!(out, ",,,,")?,
            }
        } else {
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes the plotting-oriented trace `(k, f, gnorm, wall_time)`.
pub fn write_plot_data(report: &RunReport, mut out: impl Write) -> Result<()> {
    writeln!(out, "k,f,gnorm,wall_time")?;
    if let Some(outer) = &report.outer {
        for r in outer {
            writeln!(out, "{},{},{},{}", r.index, r.f_x, f64::NAN, r.elapsed)?;
        }
    } else {
        for r in &report.iterations {
            writeln!(out, "{},{},{},{}", r.index, r.f_after, r.grad_norm_after, r.elapsed)?;
        }
    }
    Ok(())
}
