//! Second-order methods: the cubic Newton method with M = αF(L₂(f)) (rate
//! 9(1+α)F(L₂)D₀³/(2k²)) and the contracting Newton method with
//! γ_k = 3/(k+3) (rate 9F(L₂)𝒟³/k²).

use crate::error::{FcError, Result};
use crate::problem::CompositeProblem;
use crate::subproblem::{contracted_lmo, cubic_step};

use super::{gap_of, MethodConfig, RunStatus, RunTrace, TraceRow};

fn gate_second_order(problem: &CompositeProblem) -> Result<f64> {
    let fl2 = problem.f_of_lipschitz(2);
    if !fl2.is_finite() {
        return Err(FcError::Inapplicable(
            "F(L_2(f)) = +inf; a constraint component with L_2 > 0 blocks the second-order methods".into(),
        ));
    }
    Ok(fl2)
}

pub fn run_cubic_newton(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    let fl2 = gate_second_order(problem)?;
    let m_reg = config.alpha * fl2;
    if !(m_reg > 0.0) {
        return Err(FcError::Config(
            "M = alpha F(L_2(f)) = 0 is degenerate (all components quadratic or affine)".into(),
        ));
    }
    let d0 = problem.effective_d0();
    let alpha = config.alpha;
    let bound = move |k: usize| {
        if k >= 1 {
            d0.map(|d| 9.0 * (1.0 + alpha) * fl2 * d.powi(3) / (2.0 * (k * k) as f64))
        } else {
            None
        }
    };

    let mut trace = RunTrace::new(config.method);
    if d0.is_none() {
        trace.warnings.push("no D0 available; bound column omitted".into());
    }
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
        let step = cubic_step(problem, &x, m_reg, &config.step_options)?;
        let phi_next = problem.phi(&step.y);
        debug_assert!(step.model_value + 1e-8 >= phi_next, "model dominance violated");
        debug_assert!(phi_next <= phi_x + 1e-8, "cubic step increased phi");
        let sn = problem.b.norm_vec(&(&step.y - &x));
        x = step.y;
        phi_x = phi_next;
        trace.rows.push(TraceRow {
            k,
            phi: phi_x,
            gap: gap_of(problem, phi_x),
            bound: bound(k),
            step_norm: sn,
            inner_iters: step.inner_iterations,
            kkt: step.kkt_residual,
        });
        if !step.converged {
            trace.status = RunStatus::ConvergenceFailure(format!(
                "cubic subproblem at iteration {k} stopped at residual {:.3e}",
                step.kkt_residual
            ));
            break;
        }
    }
    Ok(trace)
}

pub fn run_contracting_newton(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    let fl2 = gate_second_order(problem)?;
    let diam = match problem.outer.simple_phi_domain() {
        Some(q) if q.is_bounded() => q.diameter(&problem.b).unwrap(),
        _ => {
            return Err(FcError::Inapplicable(
                "contracting Newton needs a bounded dom phi".into(),
            ))
        }
    };
    let bound = move |k: usize| {
        if k >= 1 {
            Some(9.0 * fl2 * diam.powi(3) / (k * k) as f64)
        } else {
            None
        }
    };

    let mut trace = RunTrace::new(config.method);
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
        let gamma = 3.0 / (k + 2) as f64; // gamma_k for k = 0, 1, … is 3/(k+3)
        let step = contracted_lmo(problem, &x, gamma, 2, &config.step_options)?;
        let phi_next = problem.phi(&step.y);
        let sn = problem.b.norm_vec(&(&step.y - &x));
        x = step.y;
        phi_x = phi_next;
        trace.rows.push(TraceRow {
            k,
            phi: phi_x,
            gap: gap_of(problem, phi_x),
            bound: bound(k),
            step_norm: sn,
            inner_iters: step.inner_iterations,
            kkt: step.kkt_residual,
        });
        if !step.converged {
            trace.status = RunStatus::ConvergenceFailure(format!(
                "contracted Newton subproblem at iteration {k} stopped at residual {:.3e}",
                step.kkt_residual
            ));
            break;
        }
    }
    Ok(trace)
}
