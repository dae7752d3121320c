//! First-order methods for the subhomogeneous convex case: the basic
//! gradient method (rate 4αF(L₁)D₀²/k), the contracting conditional
//! gradient method with γ_k = 2/(k+2) (rate 4F(L₁)𝒟²/k), and the fast
//! gradient method with the a²−a−A recurrence (rate 2M‖x*−x₀‖²/k²).

use crate::error::{FcError, Result};
use crate::linalg::Vector;
use crate::problem::CompositeProblem;
use crate::subproblem::{contracted_lmo, grad_reg_step};

use super::{gap_of, MethodConfig, RunStatus, RunTrace, TraceRow};

fn gate_first_order(problem: &CompositeProblem) -> Result<f64> {
    let fl1 = problem.f_of_lipschitz(1);
    if !fl1.is_finite() {
        return Err(FcError::Inapplicable(
            "F(L_1(f)) = +inf; a non-affine constraint component blocks the first-order gradient methods"
                .into(),
        ));
    }
    Ok(fl1)
}

pub fn run_gm(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    let fl1 = gate_first_order(problem)?;
    if !problem.outer.is_subhomogeneous() {
        return Err(FcError::Inapplicable("gradient method needs a subhomogeneous outer function".into()));
    }
    let m_reg = config.alpha * fl1;
    if !(m_reg > 0.0) {
        return Err(FcError::Config("M = alpha F(L_1(f)) = 0 is degenerate".into()));
    }
    let d0 = problem.effective_d0();
    let alpha = config.alpha;
    let bound = move |k: usize| {
        if k >= 1 {
            d0.map(|d| 4.0 * alpha * fl1 * d * d / k as f64)
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
    push_row(&mut trace, problem, 0, phi_x, bound(0), 0.0, 0, 0.0);
    for k in 1..=config.iters {
        let step = grad_reg_step(problem, &x, m_reg, &config.step_options)?;
        let phi_next = problem.phi(&step.y);
        debug_assert!(step.model_value + 1e-8 >= phi_next, "model dominance violated");
        debug_assert!(phi_next <= phi_x + 1e-8, "gradient step increased phi");
        let sn = problem.b.norm_vec(&(&step.y - &x));
        x = step.y;
        phi_x = phi_next;
        push_row(&mut trace, problem, k, phi_x, bound(k), sn, step.inner_iterations, step.kkt_residual);
        if !step.converged {
            trace.status = RunStatus::ConvergenceFailure(format!(
                "gradient subproblem at iteration {k} stopped at residual {:.3e}",
                step.kkt_residual
            ));
            break;
        }
    }
    Ok(trace)
}

pub fn run_cgm(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    let fl1 = gate_first_order(problem)?;
    let diam = match problem.outer.simple_phi_domain() {
        Some(q) if q.is_bounded() => q.diameter(&problem.b).unwrap(),
        _ => {
            return Err(FcError::Inapplicable(
                "contracting conditional gradient needs a bounded dom phi".into(),
            ))
        }
    };
    let bound = move |k: usize| {
        if k >= 1 {
            Some(4.0 * fl1 * diam * diam / k as f64)
        } else {
            None
        }
    };

    let mut trace = RunTrace::new(config.method);
    let mut x = problem.x0.clone();
    let mut phi_x = problem.phi(&x);
    push_row(&mut trace, problem, 0, phi_x, bound(0), 0.0, 0, 0.0);
    for k in 1..=config.iters {
        let gamma = 2.0 / (k + 1) as f64; // gamma_k for k = 0, 1, … is 2/(k+2)
        let step = contracted_lmo(problem, &x, gamma, 1, &config.step_options)?;
        let phi_next = problem.phi(&step.y);
        let sn = problem.b.norm_vec(&(&step.y - &x));
        x = step.y;
        phi_x = phi_next;
        push_row(&mut trace, problem, k, phi_x, bound(k), sn, step.inner_iterations, step.kkt_residual);
        if !step.converged {
            trace.status = RunStatus::ConvergenceFailure(format!(
                "LMO subproblem at iteration {k} stopped at residual {:.3e}",
                step.kkt_residual
            ));
            break;
        }
    }
    Ok(trace)
}

/// Auxiliary sequences of a fast-gradient run, exposed for the estimating-
/// inequality checks: a_{k+1}, A_k, v_k and y_k.
#[derive(Debug, Clone)]
pub struct FgmDetails {
    pub a_big: Vec<f64>,
    pub a_small: Vec<f64>,
    pub v_seq: Vec<Vector>,
    pub y_seq: Vec<Vector>,
}

pub fn run_fgm(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    run_fgm_detailed(problem, config).map(|(t, _)| t)
}

pub fn run_fgm_detailed(
    problem: &CompositeProblem,
    config: &MethodConfig,
) -> Result<(RunTrace, FgmDetails)> {
    let fl1 = gate_first_order(problem)?;
    if !problem.outer.is_subhomogeneous() {
        return Err(FcError::Inapplicable("fast gradient method needs a subhomogeneous outer function".into()));
    }
    let m_reg = config.alpha * fl1;
    if !(m_reg > 0.0) {
        return Err(FcError::Config("M = alpha F(L_1(f)) = 0 is degenerate".into()));
    }
    // R bound for the rate column: D0 dominates ‖x* − x0‖
    let r_bound = problem.effective_d0();
    let bound = move |k: usize| {
        if k >= 1 {
            r_bound.map(|r| 2.0 * m_reg * r * r / (k * k) as f64)
        } else {
            None
        }
    };

    let mut trace = RunTrace::new(config.method);
    if r_bound.is_none() {
        trace.warnings.push("no D0/R available; bound column omitted".into());
    }
    let mut details = FgmDetails {
        a_big: vec![0.0],
        a_small: Vec::new(),
        v_seq: Vec::new(),
        y_seq: Vec::new(),
    };
    let mut x = problem.x0.clone();
    let mut v = problem.x0.clone();
    let mut a_big = 0.0f64;
    details.v_seq.push(v.clone());
    let mut phi_x = problem.phi(&x);
    push_row(&mut trace, problem, 0, phi_x, bound(0), 0.0, 0, 0.0);

    for k in 1..=config.iters {
        // a_{k+1} is the positive root of a² − a − A_k = 0
        let a_small = 0.5 * (1.0 + (1.0 + 4.0 * a_big).sqrt());
        let a_next = a_big + a_small;
        let y = (&v * a_small + &x * a_big) / a_next;
        let step = grad_reg_step(problem, &y, m_reg, &config.step_options)?;
        let x_next = step.y;
        let v_next = &x_next + (&x_next - &x) * (a_big / a_small);
        let sn = problem.b.norm_vec(&(&x_next - &x));
        x = x_next;
        v = v_next;
        a_big = a_next;
        phi_x = problem.phi(&x);
        details.a_small.push(a_small);
        details.a_big.push(a_big);
        details.v_seq.push(v.clone());
        details.y_seq.push(y);
        push_row(&mut trace, problem, k, phi_x, bound(k), sn, step.inner_iterations, step.kkt_residual);
        if !step.converged {
            trace.status = RunStatus::ConvergenceFailure(format!(
                "fast gradient subproblem at iteration {k} stopped at residual {:.3e}",
                step.kkt_residual
            ));
            break;
        }
    }
    Ok((trace, details))
}

fn push_row(
    trace: &mut RunTrace,
    problem: &CompositeProblem,
    k: usize,
    phi: f64,
    bound: Option<f64>,
    step_norm: f64,
    inner_iters: usize,
    kkt: f64,
) {
    trace.rows.push(TraceRow {
        k,
        phi,
        gap: gap_of(problem, phi),
        bound,
        step_norm,
        inner_iters,
        kkt,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, NormOperator};
    use crate::methods::MethodId;
    use crate::oracle::{ComponentKind, SmoothComponent, VectorFunction};
    use crate::outer::{OuterFunction, OuterKind, SimpleSet};
    use approx::assert_relative_eq;

    fn v(s: &[f64]) -> Vector {
        Vector::from_column_slice(s)
    }

    fn quad_problem(d0: Option<f64>) -> CompositeProblem {
        let b = NormOperator::identity(2);
        let f1 = SmoothComponent::with_analytic_constants(
            ComponentKind::Quadratic { a: Matrix::identity(2, 2), b: v(&[0.0, 0.0]), c: 0.0 },
            &b,
        )
        .unwrap();
        let f = VectorFunction::new(vec![f1]).unwrap();
        let outer = OuterFunction::new(
            OuterKind::AdditiveComposite { q: SimpleSet::All, linear: None },
            1,
            2,
        )
        .unwrap();
        CompositeProblem::new(f, outer, b, v(&[1.0, 2.0]), Some(0.0), d0, None).unwrap()
    }

    #[test]
    fn gm_reduces_to_gradient_descent_and_meets_bound() {
        // D0 for phi(x) = ||x||^2/2 from x0: level set radius = ||x0||
        let p = quad_problem(Some((5.0f64).sqrt()));
        let mut cfg = MethodConfig::new(MethodId::GradientMethod);
        cfg.iters = 100;
        let trace = run_gm(&p, &cfg).unwrap();
        assert!(trace.succeeded());
        // alpha = 1, L1 = 1: x_{k+1} = x_k - grad = 0 after one step
        assert!(trace.rows[1].phi.abs() < 1e-20);
        for row in trace.rows.iter().skip(1) {
            assert!(row.gap.unwrap() <= row.bound.unwrap() + 1e-12);
        }
    }

    #[test]
    fn gm_rejects_infinite_f_of_l1() {
        // constraint form with a quadratic constraint component
        let b = NormOperator::identity(1);
        let f1 = SmoothComponent::with_analytic_constants(
            ComponentKind::Affine { a: v(&[1.0]), b: 0.0 },
            &b,
        )
        .unwrap();
        let f2 = SmoothComponent::with_analytic_constants(
            ComponentKind::Quadratic { a: Matrix::from_row_slice(1, 1, &[2.0]), b: v(&[0.0]), c: -1.0 },
            &b,
        )
        .unwrap();
        let f = VectorFunction::new(vec![f1, f2]).unwrap();
        let outer =
            OuterFunction::new(OuterKind::ConstraintForm { q: SimpleSet::All }, 2, 1).unwrap();
        let p = CompositeProblem::new(f, outer, b, v(&[0.0]), Some(-1.0), None, None).unwrap();
        let cfg = MethodConfig::new(MethodId::GradientMethod);
        let err = run_gm(&p, &cfg).unwrap_err();
        assert!(err.to_string().contains("F(L_1(f))"), "{err}");
    }

    #[test]
    fn cgm_gamma_schedule() {
        // gamma_k = 2/(k+2): 1, 2/3, 1/2 for k = 0, 1, 2
        assert_relative_eq!(2.0 / 2.0, 1.0);
        assert_relative_eq!(2.0 / 3.0, 0.6666666666666666);
        assert_relative_eq!(2.0 / 4.0, 0.5);
        // and the first CGM step with gamma = 1 is the plain Frank-Wolfe step
        let b = NormOperator::identity(2);
        let f1 = SmoothComponent::with_analytic_constants(
            ComponentKind::Quadratic { a: Matrix::identity(2, 2), b: v(&[-0.3, 0.7]), c: 0.0 },
            &b,
        )
        .unwrap();
        let f = VectorFunction::new(vec![f1]).unwrap();
        let q = SimpleSet::Box { lower: v(&[-1.0, -1.0]), upper: v(&[1.0, 1.0]) };
        let outer = OuterFunction::new(
            OuterKind::AdditiveComposite { q, linear: None },
            1,
            2,
        )
        .unwrap();
        let p = CompositeProblem::new(f, outer, b, v(&[0.0, 0.0]), None, None, None).unwrap();
        let mut cfg = MethodConfig::new(MethodId::ContractingGradient);
        cfg.iters = 1;
        let trace = run_cgm(&p, &cfg).unwrap();
        // gradient at x0 = (-0.3, 0.7) -> LMO vertex (1, -1); gamma_0 = 1
        assert_relative_eq!(trace.rows[1].step_norm, (1.0f64 + 1.0).sqrt() * 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fgm_a_sequence() {
        let p = quad_problem(None);
        let mut cfg = MethodConfig::new(MethodId::FastGradient);
        cfg.iters = 50;
        let (_, det) = run_fgm_detailed(&p, &cfg).unwrap();
        assert_relative_eq!(det.a_small[0], 1.0);
        assert_relative_eq!(det.a_big[1], 1.0);
        assert_relative_eq!(det.a_small[1], 0.5 * (1.0 + 5.0f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(det.a_big[2], 1.0 + 0.5 * (1.0 + 5.0f64.sqrt()), epsilon = 1e-14);
        for (k, a) in det.a_big.iter().enumerate() {
            assert!(*a >= (k * k) as f64 / 4.0 - 1e-12, "A_{k} = {a}");
        }
    }

    #[test]
    fn fgm_starts_from_v0_equals_x0() {
        let p = quad_problem(None);
        let mut cfg = MethodConfig::new(MethodId::FastGradient);
        cfg.iters = 1;
        let (_, det) = run_fgm_detailed(&p, &cfg).unwrap();
        // with A_0 = 0 the first y is v_0 = x_0
        assert!((&det.y_seq[0] - &p.x0).norm() < 1e-15);
    }
}
