//! Benchmark CLI: run a solver grid, summarize stored reports, or
//! self-check the built-in oracles against finite differences.
//!
//! Exit codes: 0 on full success, 1 when any run failed (or a
//! finite-difference check exceeded its threshold), 2 on configuration
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use utr::harness::{
    emit_trace_plots_data, run_experiment, summarize_reports, write_summary_csv,
    ExperimentConfig,
};
use utr::problem::{builtin_suite, finite_difference_check};
use utr::report::RunReport;

#[derive(Parser)]
#[command(name = "utr", version, about = "Universal trust-region benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver grid over a problem set.
    Run(RunArgs),
    /// Recompute the summary table from stored reports.
    Summarize(SummarizeArgs),
    /// Finite-difference self-check of the built-in oracles.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated solver names.
    #[arg(long, value_delimiter = ',')]
    solver: Vec<String>,
    /// Comma-separated problem names or LIBSVM file paths.
    #[arg(long, value_delimiter = ',')]
    problem: Vec<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Per-run wall-clock budget, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for reports, traces, and the summary table.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plotting CSVs under `<out>/plots`.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    /// A `reports.json` file or a directory containing one.
    #[arg(long)]
    reports: PathBuf,
    /// Where to write the summary CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Failure sentinel used in the aggregates.
    #[arg(long, default_value_t = 20_000.0)]
    failure_sentinel: f64,
}

#[derive(Args)]
struct CheckArgs {
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Maximum tolerated relative error.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

/// TOML mirror of [`ExperimentConfig`] with every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    solvers: Option<Vec<String>>,
    problems: Option<Vec<String>>,
    eps: Option<f64>,
    time_limit: Option<f64>,
    iter_limit: Option<usize>,
    failure_sentinel: Option<f64>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    gamma: Option<f64>,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let file: FileConfig =
            toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        if let Some(v) = file.solvers {
            cfg.solvers = v;
        }
        if let Some(v) = file.problems {
            cfg.problems = v;
        }
        if let Some(v) = file.eps {
            cfg.eps = v;
        }
        if let Some(v) = file.time_limit {
            cfg.time_limit = v;
        }
        if let Some(v) = file.iter_limit {
            cfg.iter_limit = v;
        }
        if let Some(v) = file.failure_sentinel {
            cfg.failure_sentinel = v;
        }
        if let Some(v) = file.output_dir {
            cfg.output_dir = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.workers {
            cfg.workers = v;
        }
        if let Some(v) = file.gamma {
            cfg.gamma = v;
        }
    }
    if !args.solver.is_empty() {
        cfg.solvers = args.solver.clone();
    }
    if !args.problem.is_empty() {
        cfg.problems = args.problem.clone();
    }
    if let Some(v) = args.eps {
        cfg.eps = v;
    }
    if let Some(v) = args.max_iter {
        cfg.iter_limit = v;
    }
    if let Some(v) = args.time_limit {
        cfg.time_limit = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(v) = &args.out {
        cfg.output_dir = v.clone();
    }
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> ExitCode {
    let cfg = match build_config(args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let (reports, summary) = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(utr::Error::Config(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if args.plots {
        if let Err(e) = emit_trace_plots_data(&reports, &cfg.output_dir.join("plots")) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut stdout = std::io::stdout();
    if write_summary_csv(&summary, &mut stdout).is_err() {
        return ExitCode::from(1);
    }
    let failures = reports.iter().filter(|r| !r.success).count();
    println!(
        "# {} runs, {} failed; outputs in {}",
        reports.len(),
        failures,
        cfg.output_dir.display()
    );
    if failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_summarize(args: &SummarizeArgs) -> ExitCode {
    let path = if args.reports.is_dir() {
        args.reports.join("reports.json")
    } else {
        args.reports.clone()
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let reports: Vec<RunReport> = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: invalid reports file {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let summary = summarize_reports(&reports, args.failure_sentinel);
    let result = match &args.out {
        Some(out) => std::fs::File::create(out)
            .map_err(utr::Error::from)
            .and_then(|f| write_summary_csv(&summary, std::io::BufWriter::new(f))),
        None => write_summary_csv(&summary, std::io::stdout()),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn cmd_check(args: &CheckArgs) -> ExitCode {
    if !(args.step > 0.0 && args.tol > 0.0) {
        eprintln!("error: step and tol must be positive");
        return ExitCode::from(2);
    }
    let mut worst = 0.0f64;
    let mut failed = 0usize;
    println!("problem,grad_err,hess_err,ok");
    for inst in builtin_suite() {
        let oracle = inst.oracle();
        // Check at a generic off-start point too, not just the start.
        let shifted = &inst.start + nalgebra::DVector::from_element(inst.start.len(), 0.137);
        let mut ge = 0.0f64;
        let mut he = 0.0f64;
        for x in [&inst.start, &shifted] {
            let (g, h) = finite_difference_check(&oracle, x, args.step);
            ge = ge.max(g);
            he = he.max(h);
        }
        let ok = ge <= args.tol && he <= args.tol;
        if !ok {
            failed += 1;
        }
        worst = worst.max(ge).max(he);
        println!("{},{ge:.3e},{he:.3e},{ok}", inst.name);
    }
    println!("# worst relative error {worst:.3e}, {failed} failures");
    if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Summarize(args) => cmd_summarize(args),
        Command::Check(args) => cmd_check(args),
    }
}
