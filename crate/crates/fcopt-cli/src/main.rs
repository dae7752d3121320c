//! `fcopt` — run, verify and compare fully composite optimization methods
//! on JSON problem files.
//!
//! Exit codes: 0 success; 1 unreadable input; 2 configuration error
//! (including inapplicable methods); 3 convergence failure.
//! `FCOPT_LOG={error|info|debug}` controls stderr verbosity.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fcopt::error::FcError;
use fcopt::io::{trace_to_csv_string, ProblemFile};
use fcopt::methods::{run_method, MethodConfig, MethodId, RunStatus, RunTrace};
use fcopt::problem::CompositeProblem;
use fcopt::regularize::solve_via_regularization;
use fcopt::subproblem::StepOptions;
use fcopt::verify::{run_problem_checks, CheckStatus};

#[derive(Parser)]
#[command(name = "fcopt", about = "Solvers and verifiers for fully composite convex problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON problem file
    #[arg(long)]
    problem: PathBuf,
    /// One of: restricted|full|gm|cgm|fgm|cubic|contr-newton|contr-prox
    #[arg(long)]
    method: String,
    /// Model order for the basic methods
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Iteration budget K (the trace has K+1 rows)
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Scaling of M = alpha * F(L_p(f))
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Contraction for the restricted method (defaults to hat_beta)
    #[arg(long)]
    beta: Option<f64>,
    /// Inner accuracy of the contracting proximal scheme
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and write its trace
    Run(RunArgs),
    /// Check the structural inequalities on a problem (JSON lines report)
    Verify {
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated list or "all": theorem-main, remark-convexity,
        /// subhomo-equivalence, vector-growth
        #[arg(long, default_value = "all")]
        checks: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run several methods on one problem and summarize
    Compare {
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated method names
        #[arg(long)]
        methods: String,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (one CSV per method plus summary.json)
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a plain convex problem through the regularization scheme
    RegularizeSolve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// List bundled corpus entries or export one as a problem file
    Corpus {
        /// Entry id to export; omit to list all entries
        id: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &FcError) -> u8 {
    match err {
        FcError::Io(_) | FcError::Json(_) => 1,
        FcError::ConvergenceFailure { .. } | FcError::Numerical(_) | FcError::ModelInfeasible(_) => 3,
        _ => 2,
    }
}

fn load_problem(path: &Path) -> Result<CompositeProblem, FcError> {
    ProblemFile::load(path)?.to_problem()
}

fn cmd_run(args: &RunArgs) -> Result<u8, FcError> {
    let problem = load_problem(&args.problem)?;
    let method = MethodId::parse(&args.method)
        .ok_or_else(|| FcError::Config(format!("unknown method {:?}", args.method)))?;
    let mut cfg = MethodConfig::new(method);
    cfg.p = args.p;
    cfg.iters = args.iters;
    cfg.alpha = args.alpha;
    cfg.beta = args.beta;
    cfg.delta = args.delta;
    cfg.seed = args.seed;
    cfg.step_options = StepOptions::default();
    let trace = run_method(&problem, &cfg)?;
    write_trace(&trace, &args.out)?;
    for w in &trace.warnings {
        log::warn!("{w}");
    }
    match &trace.status {
        RunStatus::Success => Ok(0),
        RunStatus::ConvergenceFailure(msg) => {
            eprintln!("convergence failure: {msg}");
            Ok(3)
        }
    }
}

fn write_trace(trace: &RunTrace, path: &Path) -> Result<(), FcError> {
    std::fs::write(path, trace_to_csv_string(trace))?;
    Ok(())
}

fn cmd_verify(path: &Path, checks: &str, samples: usize, seed: u64) -> Result<u8, FcError> {
    let which: Vec<String> =
        checks.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if which.is_empty() {
        return Err(FcError::Config("empty check list".into()));
    }
    let known = ["all", "theorem-main", "remark-convexity", "subhomo-equivalence", "vector-growth"];
    for w in &which {
        if !known.contains(&w.as_str()) {
            return Err(FcError::Config(format!("unknown check {w:?}")));
        }
    }
    let problem = load_problem(path)?;
    let reports = run_problem_checks(&problem, &which, samples, seed);
    let mut all_ok = true;
    for r in &reports {
        let status = match r.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Inconclusive => "inconclusive",
        };
        if r.status == CheckStatus::Fail {
            all_ok = false;
        }
        let line = serde_json::json!({
            "id": r.id,
            "status": status,
            "samples": r.samples,
            "max_excess": r.max_excess,
            "witness": r.witness,
            "notes": r.notes,
            "seed": r.seed,
        });
        println!("{line}");
    }
    Ok(if all_ok { 0 } else { 3 })
}

fn cmd_compare(
    path: &Path,
    methods: &str,
    p: u32,
    iters: usize,
    alpha: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<u8, FcError> {
    let problem = load_problem(path)?;
    let names: Vec<&str> =
        methods.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(FcError::Config("empty method list".into()));
    }
    let mut ids = Vec::new();
    for n in &names {
        ids.push(
            MethodId::parse(n).ok_or_else(|| FcError::Config(format!("unknown method {n:?}")))?,
        );
    }
    std::fs::create_dir_all(out_dir)?;
    let mut traces = Vec::new();
    for id in &ids {
        let mut cfg = MethodConfig::new(*id);
        cfg.p = p;
        cfg.iters = iters;
        cfg.alpha = alpha;
        cfg.seed = seed;
        let trace = run_method(&problem, &cfg)?;
        traces.push(trace);
    }
    // shared reference value: known optimum, else best observed phi minus a
    // reported margin (a proxy, not ground truth)
    let best_final = traces.iter().map(|t| t.final_phi()).fold(f64::INFINITY, f64::min);
    let margin = 1e-9 * (1.0 + best_final.abs());
    let (phi_ref, reference) = match problem.known_opt {
        Some(o) => (o, "known_opt"),
        None => (best_final - margin, "best-final-minus-margin"),
    };
    let mut summary = serde_json::Map::new();
    summary.insert("reference".into(), serde_json::json!(reference));
    summary.insert("phi_ref".into(), serde_json::json!(phi_ref));
    summary.insert("margin".into(), serde_json::json!(margin));
    let slack = 1e-6 * (1.0 + phi_ref.abs());
    let mut per_method = serde_json::Map::new();
    for (id, trace) in ids.iter().zip(&traces) {
        let csv = trace_to_csv_string(trace);
        std::fs::write(out_dir.join(format!("{}.csv", id.name())), csv)?;
        let bound_ok = trace
            .rows
            .iter()
            .filter(|r| r.k >= 1)
            .filter_map(|r| r.bound.map(|b| (r.phi, b)))
            .all(|(phi, b)| phi - phi_ref <= b + slack);
        per_method.insert(
            id.name().into(),
            serde_json::json!({
                "final_phi": trace.final_phi(),
                "final_gap": trace.final_phi() - phi_ref,
                "bound_satisfied": bound_ok,
                "status": match &trace.status {
                    RunStatus::Success => "success".to_string(),
                    RunStatus::ConvergenceFailure(m) => format!("convergence-failure: {m}"),
                },
            }),
        );
    }
    summary.insert("methods".into(), serde_json::Value::Object(per_method));
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&serde_json::Value::Object(summary))?,
    )?;
    Ok(if traces.iter().all(|t| t.succeeded()) { 0 } else { 3 })
}

fn cmd_regularize(path: &Path, p: u32, epsilon: f64, out: &Path) -> Result<u8, FcError> {
    let problem = load_problem(path)?;
    let (trace, report) = solve_via_regularization(&problem, p, epsilon, &StepOptions::default())?;
    write_trace(&trace, out)?;
    log::info!(
        "regularize-solve: mu = {:.3e}, delta = {:.3e}, xi_hat = {:.3e}, {} iterations",
        report.mu,
        report.delta,
        report.xi_hat,
        report.iterates.last().map(|(k, _)| *k).unwrap_or(0)
    );
    for n in &trace.notes {
        eprintln!("{n}");
    }
    Ok(if trace.succeeded() { 0 } else { 3 })
}

fn cmd_corpus(id: Option<&str>, out: Option<&Path>) -> Result<u8, FcError> {
    match id {
        None => {
            for e in fcopt::corpus::corpus_list() {
                println!("{:<20} {:<28} {}", e.id, e.provenance, e.description);
            }
            Ok(0)
        }
        Some(id) => {
            let entry = fcopt::corpus::corpus_get(id)?;
            let json = entry.file.to_json()?;
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => println!("{json}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("FCOPT_LOG")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Verify { problem, checks, samples, seed } => {
            cmd_verify(problem, checks, *samples, *seed)
        }
        Command::Compare { problem, methods, p, iters, alpha, seed, out } => {
            cmd_compare(problem, methods, *p, *iters, *alpha, *seed, out)
        }
        Command::RegularizeSolve { problem, p, epsilon, out } => {
            cmd_regularize(problem, *p, *epsilon, out)
        }
        Command::Corpus { id, out } => cmd_corpus(id.as_deref(), out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
