//! The iterative methods, run uniformly over a `CompositeProblem` and
//! producing per-iteration traces with the theoretical bound for the
//! method's own theorem alongside the measured objective.

pub mod basic;
pub mod gradient;
pub mod newton;
pub mod prox;

pub use basic::{run_full_basic, run_restricted_basic};
pub use gradient::{run_cgm, run_fgm, run_fgm_detailed, run_gm, FgmDetails};
pub use newton::{run_contracting_newton, run_cubic_newton};
pub use prox::{run_contracting_prox, AcOuterRecord, ProxSubproblem};

use crate::error::{FcError, Result};
use crate::problem::CompositeProblem;
use crate::subproblem::StepOptions;

/// Identifiers of the eight methods, with their CLI spellings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    RestrictedBasic,
    FullBasic,
    GradientMethod,
    ContractingGradient,
    FastGradient,
    CubicNewton,
    ContractingNewton,
    ContractingProx,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::RestrictedBasic,
        MethodId::FullBasic,
        MethodId::GradientMethod,
        MethodId::ContractingGradient,
        MethodId::FastGradient,
        MethodId::CubicNewton,
        MethodId::ContractingNewton,
        MethodId::ContractingProx,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::RestrictedBasic => "restricted",
            MethodId::FullBasic => "full",
            MethodId::GradientMethod => "gm",
            MethodId::ContractingGradient => "cgm",
            MethodId::FastGradient => "fgm",
            MethodId::CubicNewton => "cubic",
            MethodId::ContractingNewton => "contr-newton",
            MethodId::ContractingProx => "contr-prox",
        }
    }

    pub fn parse(s: &str) -> Option<MethodId> {
        Self::ALL.iter().copied().find(|m| m.name() == s)
    }
}

/// Run parameters shared by every method. Fields that a method does not use
/// are ignored by it.
#[derive(Debug, Clone)]
pub struct MethodConfig {
    pub method: MethodId,
    /// Model order for the basic methods, 1 or 2.
    pub p: u32,
    /// Iteration budget K; the trace holds K+1 rows (k = 0 … K).
    pub iters: usize,
    /// Scaling of M = α·F(L_p(f)) in the gradient/cubic families, α ≥ 1.
    pub alpha: f64,
    /// Contraction for the restricted basic method; defaults to β̂_p(f).
    pub beta: Option<f64>,
    /// Inner accuracy of the contracting proximal scheme.
    pub delta: Option<f64>,
    /// Seed recorded in traces; the methods themselves are deterministic.
    pub seed: u64,
    pub step_options: StepOptions,
}

impl MethodConfig {
    pub fn new(method: MethodId) -> Self {
        MethodConfig {
            method,
            p: 1,
            iters: 100,
            alpha: 1.0,
            beta: None,
            delta: None,
            seed: 0,
            step_options: StepOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p == 1 || self.p == 2) {
            return Err(FcError::Config("p must be 1 or 2".into()));
        }
        if self.iters == 0 {
            return Err(FcError::Config("iteration budget must be at least 1".into()));
        }
        if !(self.alpha >= 1.0) {
            return Err(FcError::Config("alpha must be at least 1".into()));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) {
                return Err(FcError::Config("beta must be positive".into()));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(FcError::Config("delta must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Success,
    ConvergenceFailure(String),
}

/// One row per iterate x_k.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub k: usize,
    pub phi: f64,
    /// φ(x_k) − φ*, when φ* is known.
    pub gap: Option<f64>,
    /// The method's theorem bound on the gap at k, when computable.
    pub bound: Option<f64>,
    /// ‖x_k − x_{k−1}‖ in the B-norm (0 at k = 0).
    pub step_norm: f64,
    /// Inner iterations spent producing x_k (0 at k = 0).
    pub inner_iters: usize,
    /// KKT residual of the subproblem that produced x_k.
    pub kkt: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub method: MethodId,
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    /// Per-outer-iteration detail of the contracting proximal scheme.
    pub ac_details: Option<Vec<AcOuterRecord>>,
}

impl RunTrace {
    pub(crate) fn new(method: MethodId) -> Self {
        RunTrace {
            method,
            rows: Vec::new(),
            status: RunStatus::Success,
            warnings: Vec::new(),
            notes: Vec::new(),
            ac_details: None,
        }
    }

    pub fn final_phi(&self) -> f64 {
        self.rows.last().map(|r| r.phi).unwrap_or(f64::INFINITY)
    }

    pub fn succeeded(&self) -> bool {
        matches!(self.status, RunStatus::Success)
    }
}

/// Dispatch on the configured method id.
pub fn run_method(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    config.validate()?;
    log::debug!(
        "running {} (p = {}, K = {}, alpha = {})",
        config.method.name(),
        config.p,
        config.iters,
        config.alpha
    );
    let trace = match config.method {
        MethodId::RestrictedBasic => run_restricted_basic(problem, config),
        MethodId::FullBasic => run_full_basic(problem, config),
        MethodId::GradientMethod => run_gm(problem, config),
        MethodId::ContractingGradient => run_cgm(problem, config),
        MethodId::FastGradient => run_fgm(problem, config),
        MethodId::CubicNewton => run_cubic_newton(problem, config),
        MethodId::ContractingNewton => run_contracting_newton(problem, config),
        MethodId::ContractingProx => run_contracting_prox(problem, config),
    }?;
    for w in &trace.warnings {
        log::warn!("{}: {w}", config.method.name());
    }
    Ok(trace)
}

/// Composition value φ(x) = F(x, f(x)).
pub fn phi(problem: &CompositeProblem, x: &crate::linalg::Vector) -> f64 {
    problem.phi(x)
}

pub(crate) fn gap_of(problem: &CompositeProblem, phi_val: f64) -> Option<f64> {
    problem.known_opt.map(|o| phi_val - o)
}
