//! Restricted and full-step basic methods of order p ∈ {1, 2}.
//!
//! Under uniform convexity of every component the gap contracts linearly,
//! φ(x_k) − φ* ≤ (1 − β)^k (φ(x₀) − φ*) with β up to β̂_p(f); in the plain
//! convex subhomogeneous case the full-step method achieves the sublinear
//! rate (p+1)^{p+1} F(L_p(f)) D₀^{p+1} / (p! k^p).

use crate::error::{FcError, Result};
use crate::problem::CompositeProblem;
use crate::subproblem::full_step;

use super::{gap_of, MethodConfig, RunStatus, RunTrace, TraceRow};

pub fn run_restricted_basic(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    let p = config.p;
    if !problem.f.uniformly_convex(p) {
        return Err(FcError::Config(format!(
            "restricted basic method needs every component uniformly convex of degree {} with finite L_{p}",
            p + 1
        )));
    }
    if problem.outer.simple_phi_domain().is_none() {
        return Err(FcError::Inapplicable(
            "restricted basic method needs a simple dom phi".into(),
        ));
    }
    let hat = problem.f.hat_beta(p)?;
    let beta = config.beta.unwrap_or(hat);
    if !(beta > 0.0) {
        return Err(FcError::Config("beta must be positive".into()));
    }
    if beta > hat + 1e-12 {
        return Err(FcError::Config(format!(
            "beta = {beta} exceeds hat_beta_{p}(f) = {hat}"
        )));
    }

    let gap0 = gap_of(problem, problem.phi(&problem.x0));
    let bound = move |k: usize| gap0.map(|g| (1.0 - beta).powi(k as i32) * g);
    iterate_basic(problem, config, Some(beta), bound)
}

pub fn run_full_basic(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    let p = config.p;
    for (i, l) in problem.f.lipschitz_vec(p).iter().enumerate() {
        if !l.is_finite() {
            return Err(FcError::Inapplicable(format!(
                "component {i} has no finite L_{p}"
            )));
        }
    }
    let mut warnings = Vec::new();
    let phi0 = problem.phi(&problem.x0);
    let uc = problem.f.uniformly_convex(p);
    let gap0 = gap_of(problem, phi0);
    let hat = if uc { problem.f.hat_beta(p)? } else { 0.0 };

    let convex_const = {
        let flp = problem.f_of_lipschitz(p);
        let d0 = problem.effective_d0();
        if flp.is_finite() && flp > 0.0 && problem.outer.is_subhomogeneous() {
            d0.map(|d| {
                let fac = if p == 1 { 1.0 } else { 2.0 };
                (p as f64 + 1.0).powi(p as i32 + 1) * flp * d.powi(p as i32 + 1) / fac
            })
        } else {
            None
        }
    };
    let bound = move |k: usize| -> Option<f64> {
        if uc {
            if let Some(g) = gap0 {
                return Some((1.0 - hat).powi(k as i32) * g);
            }
        }
        if k >= 1 {
            if let Some(c) = convex_const {
                return Some(c / (k as f64).powi(p as i32));
            }
        }
        None
    };
    if !uc && convex_const.is_none() {
        warnings.push(
            "no valid bound: F(L_p(f)) infinite or D0 unknown and no uniform convexity".into(),
        );
    }
    let mut trace = iterate_basic(problem, config, None, bound)?;
    trace.warnings.extend(warnings);
    Ok(trace)
}

fn iterate_basic(
    problem: &CompositeProblem,
    config: &MethodConfig,
    restricted_beta: Option<f64>,
    bound: impl Fn(usize) -> Option<f64>,
) -> Result<RunTrace> {
    let method = config.method;
    let mut trace = RunTrace::new(method);
    let mut x = problem.x0.clone();
    let mut phi_x = problem.phi(&x);
    trace.rows.push(TraceRow {
        k: 0,
        phi: phi_x,
        gap: gap_of(problem, phi_x),
        bound: bound(0),
        step_norm: 0.0,
        inner_iters: 0,
        kkt: 0.0,
    });
    for k in 1..=config.iters {
        let step = full_step(problem, &x, config.p, restricted_beta, &config.step_options)?;
        let phi_next = problem.phi(&step.y);
        // the model dominates the new value and the method is monotone
        debug_assert!(step.model_value + 1e-8 >= phi_next, "model dominance violated");
        debug_assert!(phi_next <= phi_x + 1e-8, "basic step increased phi");
        let step_norm = problem.b.norm_vec(&(&step.y - &x));
        x = step.y;
        phi_x = phi_next;
        trace.rows.push(TraceRow {
            k,
            phi: phi_x,
            gap: gap_of(problem, phi_x),
            bound: bound(k),
            step_norm,
            inner_iters: step.inner_iterations,
            kkt: step.kkt_residual,
        });
        if !step.converged {
            trace.status = RunStatus::ConvergenceFailure(format!(
                "subproblem at iteration {k} stopped at KKT residual {:.3e}",
                step.kkt_residual
            ));
            break;
        }
    }
    Ok(trace)
}
