//! Benchmark harness: runs a solver grid over a problem set and
//! aggregates shifted geometric means.
//!
//! Every run produces a [`RunReport`] persisted as JSON plus a
//! per-iteration CSV trace named `method__problem.csv`. The summary
//! table reports, per method, the success count and shifted geometric
//! means of wall time (shift 1 s), iterations, and evaluation counts
//! (shift 50); failed runs contribute a fixed sentinel to every
//! aggregate so that failures hurt instead of vanishing. Output
//! ordering is deterministic: reports and rows are sorted by method
//! name, then problem name.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accel::{accel_minimize, AccelOptions};
use crate::autr::{autr_minimize, AdaptiveConfig};
use crate::baselines::{classic_tr_minimize, reg_newton_minimize, ClassicTrOptions, RegNewtonOptions};
use crate::error::{Error, Result};
use crate::problem::{builtin_suite, load_libsvm, logistic_oracle, Objective, ProblemInstance};
use crate::report::{write_plot_data, write_trace, RunReport, RunStatus};
use crate::utr::{utr_minimize, Subsolver, UtrOptions};

/// Names accepted by [`SolverSpec::parse`].
pub const SOLVER_NAMES: [&str; 7] = [
    "utr",
    "utr-krylov",
    "autr",
    "autr-krylov",
    "accel",
    "classic-tr",
    "reg-newton",
];

/// One solver of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverSpec {
    Utr,
    UtrKrylov,
    Autr,
    AutrKrylov,
    Accel,
    ClassicTr,
    RegNewton,
}

impl SolverSpec {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "utr" => Ok(SolverSpec::Utr),
            "utr-krylov" => Ok(SolverSpec::UtrKrylov),
            "autr" => Ok(SolverSpec::Autr),
            "autr-krylov" => Ok(SolverSpec::AutrKrylov),
            "accel" => Ok(SolverSpec::Accel),
            "classic-tr" => Ok(SolverSpec::ClassicTr),
            "reg-newton" => Ok(SolverSpec::RegNewton),
            other => Err(Error::Config(format!(
                "unknown solver {other:?}; expected one of {SOLVER_NAMES:?}"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Utr => "utr",
            SolverSpec::UtrKrylov => "utr-krylov",
            SolverSpec::Autr => "autr",
            SolverSpec::AutrKrylov => "autr-krylov",
            SolverSpec::Accel => "accel",
            SolverSpec::ClassicTr => "classic-tr",
            SolverSpec::RegNewton => "reg-newton",
        }
    }
}

/// Experiment-wide settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub solvers: Vec<String>,
    /// Built-in problem names and/or LIBSVM file paths.
    pub problems: Vec<String>,
    pub eps: f64,
    /// Wall-clock budget per run, seconds.
    pub time_limit: f64,
    pub iter_limit: usize,
    /// Value a failed run contributes to each aggregate.
    pub failure_sentinel: f64,
    pub output_dir: PathBuf,
    /// Reserved for randomized solver variants; the built-in grid is
    /// deterministic regardless.
    pub seed: u64,
    /// Worker threads; `0` or `1` runs sequentially.
    pub workers: usize,
    /// Ridge coefficient for LIBSVM-loaded logistic problems.
    pub gamma: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            solvers: vec![
                "utr".into(),
                "autr".into(),
                "classic-tr".into(),
                "reg-newton".into(),
            ],
            problems: builtin_names(),
            eps: 1e-5,
            time_limit: 60.0,
            iter_limit: 10_000,
            failure_sentinel: 20_000.0,
            output_dir: PathBuf::from("out"),
            seed: 0,
            workers: 1,
            gamma: 1e-8,
        }
    }
}

pub fn builtin_names() -> Vec<String> {
    builtin_suite().into_iter().map(|p| p.name).collect()
}

/// One row of the summary table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub successes: usize,
    pub total: usize,
    /// Shifted geometric mean of wall time, shift 1 s.
    pub t_g: f64,
    /// Shifted geometric mean of iteration counts, shift 50.
    pub k_g: f64,
    /// Shifted geometric mean of `f` evaluations, shift 50.
    pub kf_g: f64,
    /// Shifted geometric mean of gradient-or-larger oracle calls
    /// (`g + H + Hv`), shift 50.
    pub kg_g: f64,
}

pub const TIME_SHIFT: f64 = 1.0;
pub const COUNT_SHIFT: f64 = 50.0;

/// `(prod_i (v_i + shift))^(1/n) - shift`, computed in log space.
pub fn shifted_geomean(values: &[f64], shift: f64) -> f64 {
    assert!(!values.is_empty(), "geometric mean of an empty slice");
    assert!(shift >= 0.0);
    let mean_log = values
        .iter()
        .map(|v| {
            assert!(*v >= 0.0 && v.is_finite(), "bad aggregate value {v}");
            (v + shift).ln()
        })
        .sum::<f64>()
        / values.len() as f64;
    mean_log.exp() - shift
}

fn resolve_problems(cfg: &ExperimentConfig) -> Result<Vec<ProblemInstance>> {
    let suite = builtin_suite();
    let mut out = Vec::with_capacity(cfg.problems.len());
    for sel in &cfg.problems {
        if let Some(p) = suite.iter().find(|p| &p.name == sel) {
            out.push(p.clone());
        } else if Path::new(sel).is_file() {
            let data = load_libsvm(Path::new(sel))?;
            let name = Path::new(sel)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("libsvm")
                .to_string();
            let obj = logistic_oracle(data, cfg.gamma)?;
            let n = obj.dim();
            let hint = obj.lipschitz_constant();
            out.push(ProblemInstance::new(
                name,
                std::sync::Arc::new(obj),
                nalgebra::DVector::zeros(n),
                Some(hint),
                None,
            )?);
        } else {
            return Err(Error::Config(format!(
                "unknown problem {sel:?}: not a built-in name and not a file"
            )));
        }
    }
    Ok(out)
}

fn dispatch(solver: SolverSpec, p: &ProblemInstance, cfg: &ExperimentConfig) -> Result<RunReport> {
    let m = p.lipschitz_hint.unwrap_or(1.0);
    match solver {
        SolverSpec::Utr | SolverSpec::UtrKrylov => utr_minimize(
            p,
            &UtrOptions {
                m,
                eps: cfg.eps,
                max_iter: cfg.iter_limit,
                subsolver: if solver == SolverSpec::Utr {
                    Subsolver::Direct
                } else {
                    Subsolver::Krylov
                },
                ..UtrOptions::default()
            },
        ),
        SolverSpec::Autr | SolverSpec::AutrKrylov => autr_minimize(
            p,
            &AdaptiveConfig {
                eps: cfg.eps,
                max_outer: cfg.iter_limit,
                ..AdaptiveConfig::default()
            },
            if solver == SolverSpec::Autr {
                Subsolver::Direct
            } else {
                Subsolver::Krylov
            },
        ),
        SolverSpec::Accel => accel_minimize(
            p,
            &AccelOptions {
                m,
                eps: cfg.eps,
                max_outer: cfg.iter_limit,
                ..AccelOptions::default()
            },
        ),
        SolverSpec::ClassicTr => classic_tr_minimize(
            p,
            &ClassicTrOptions {
                eps: cfg.eps,
                max_iter: cfg.iter_limit,
                ..ClassicTrOptions::default()
            },
        ),
        SolverSpec::RegNewton => reg_newton_minimize(
            p,
            &RegNewtonOptions {
                eps: cfg.eps,
                max_iter: cfg.iter_limit,
                ..RegNewtonOptions::default()
            },
        ),
    }
}

fn failure_report(method: &str, p: &ProblemInstance, err: &Error) -> RunReport {
    eprintln!("{}/{} failed: {err}", method, p.name);
    RunReport {
        method: method.to_string(),
        problem: p.name.clone(),
        status: RunStatus::Failure,
        final_point: p.start.iter().copied().collect(),
        final_f: f64::NAN,
        final_gnorm: f64::NAN,
        iterations: Vec::new(),
        outer: None,
        counters: Default::default(),
        wall_time: 0.0,
        success: false,
    }
}

/// Runs the full grid, writes `reports.json`, `summary.csv`, and one
/// trace CSV per run under `traces/`, and returns the reports and
/// summary rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RunReport>, Vec<SummaryRow>)> {
    if !(cfg.eps > 0.0 && cfg.time_limit > 0.0 && cfg.failure_sentinel > 0.0) {
        return Err(Error::Config(
            "eps, time_limit, and failure_sentinel must be positive".into(),
        ));
    }
    let solvers: Vec<SolverSpec> = cfg
        .solvers
        .iter()
        .map(|s| SolverSpec::parse(s))
        .collect::<Result<_>>()?;
    let problems = resolve_problems(cfg)?;

    let grid: Vec<(SolverSpec, &ProblemInstance)> = solvers
        .iter()
        .flat_map(|&s| problems.iter().map(move |p| (s, p)))
        .collect();

    let run_one = |&(solver, p): &(SolverSpec, &ProblemInstance)| -> RunReport {
        let mut report = match dispatch(solver, p, cfg) {
            Ok(r) => r,
            Err(e) => failure_report(solver.name(), p, &e),
        };
        report.method = solver.name().to_string();
        report.success = matches!(report.status, RunStatus::Fosp | RunStatus::Sosp)
            && report.final_gnorm.is_finite()
            && report.wall_time <= cfg.time_limit;
        report
    };

    let mut reports: Vec<RunReport> = if cfg.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| grid.par_iter().map(run_one).collect())
    } else {
        grid.iter().map(run_one).collect()
    };

    reports.sort_by(|a, b| (&a.method, &a.problem).cmp(&(&b.method, &b.problem)));
    let summary = summarize_reports(&reports, cfg.failure_sentinel);
    write_outputs(cfg, &reports, &summary)?;
    Ok((reports, summary))
}

/// Aggregates sorted reports into per-method summary rows.
pub fn summarize_reports(reports: &[RunReport], sentinel: f64) -> Vec<SummaryRow> {
    let mut methods: Vec<&str> = reports.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();

    methods
        .into_iter()
        .map(|m| {
            let runs: Vec<&RunReport> = reports.iter().filter(|r| r.method == m).collect();
            let mut times = Vec::new();
            let mut iters = Vec::new();
            let mut kf = Vec::new();
            let mut kg = Vec::new();
            let mut successes = 0usize;
            for r in &runs {
                if r.success {
                    successes += 1;
                    times.push(r.wall_time);
                    iters.push(r.iteration_count() as f64);
                    kf.push(r.counters.f_evals as f64);
                    kg.push((r.counters.g_evals + r.counters.h_evals + r.counters.hv_evals) as f64);
                } else {
                    times.push(sentinel);
                    iters.push(sentinel);
                    kf.push(sentinel);
                    kg.push(sentinel);
                }
            }
            SummaryRow {
                method: m.to_string(),
                successes,
                total: runs.len(),
                t_g: shifted_geomean(&times, TIME_SHIFT),
                k_g: shifted_geomean(&iters, COUNT_SHIFT),
                kf_g: shifted_geomean(&kf, COUNT_SHIFT),
                kg_g: shifted_geomean(&kg, COUNT_SHIFT),
            }
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], mut out: impl std::io::Write) -> Result<()> {
    writeln!(out, "method,successes,total,t_G,k_G,kf_G,kg_G")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{:.4}",
            r.method, r.successes, r.total, r.t_g, r.k_g, r.kf_g, r.kg_g
        )?;
    }
    Ok(())
}

fn write_outputs(
    cfg: &ExperimentConfig,
    reports: &[RunReport],
    summary: &[SummaryRow],
) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::create_dir_all(dir.join("traces"))?;

    let json = serde_json::to_string_pretty(reports)?;
    fs::write(dir.join("reports.json"), json)?;

    for r in reports {
        let file = fs::File::create(dir.join("traces").join(trace_file_name(r)))?;
        write_trace(r, std::io::BufWriter::new(file))?;
    }

    let file = fs::File::create(dir.join("summary.csv"))?;
    write_summary_csv(summary, std::io::BufWriter::new(file))?;
    Ok(())
}

fn trace_file_name(r: &RunReport) -> String {
    format!("{}__{}.csv", sanitize(&r.method), sanitize(&r.problem))
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

/// Writes one plotting CSV `(k, f, gnorm, wall_time)` per report into
/// `dir`, named `method__problem.csv`.
pub fn emit_trace_plots_data(reports: &[RunReport], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for r in reports {
        let file = fs::File::create(dir.join(trace_file_name(r)))?;
        write_plot_data(r, std::io::BufWriter::new(file))?;
    }
    Ok(())
}
