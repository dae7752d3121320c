//! Full-step and restricted model minimization of order p ∈ {1, 2}:
//!
//!   min_y F(y, Ω_p(f, x̄; y) + p L_p(f)/(p+1)!·‖y − x̄‖^{p+1})
//!
//! subject (restricted variant) to x̄ + (y − x̄)/β ∈ dom φ. Constraint- and
//! max-form problems go through the dual over multipliers with the primal
//! recovered as y = x̄ − (Σλᵢ L₁(fᵢ) B)⁻¹ g(λ) for p = 1 and through the
//! secular solve with H(λ, τ) = Σλᵢ∇²fᵢ(x̄) + τB for p = 2.

use crate::error::{FcError, Result};
use crate::linalg::Vector;
use crate::outer::{OuterKind, SimpleSet};
use crate::problem::CompositeProblem;

use super::solvers::{cubic_regularized_step, damped_newton, dual_ascent, fista, LambdaSet, Smooth};
use super::{additive_linear, report_model_value, DualPoint, ModelData, StepOptions, SubproblemResult};

/// One full (β = None) or restricted (β = Some) basic-method step at x̄.
pub fn full_step(
    problem: &CompositeProblem,
    xbar: &Vector,
    p: u32,
    restricted_beta: Option<f64>,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    if !(p == 1 || p == 2) {
        return Err(FcError::Config("order p must be 1 or 2".into()));
    }
    for (i, l) in problem.f.lipschitz_vec(p).iter().enumerate() {
        if !l.is_finite() {
            return Err(FcError::Inapplicable(format!(
                "component {i} has no finite L_{p}; the order-{p} model does not exist"
            )));
        }
    }
    let (beta, domain) = match restricted_beta {
        Some(b) => {
            if !(b > 0.0 && b <= 1.0) {
                return Err(FcError::Config("restricted step needs beta in (0, 1]".into()));
            }
            let d = problem.outer.simple_phi_domain().ok_or_else(|| {
                FcError::Inapplicable(
                    "restricted step needs a simple dom phi; the constraint form's domain is not simple"
                        .into(),
                )
            })?;
            (b, d)
        }
        None => (1.0, problem.outer.q_set()),
    };
    let md = ModelData::new(problem, xbar, p, beta, true)?;

    match &problem.outer.kind {
        OuterKind::AdditiveComposite { .. } => additive_step(problem, &md, &domain, opts),
        OuterKind::ConstraintForm { .. } => {
            lambda_dual_step(problem, &md, &domain, LambdaSet::FixedFirst, opts)
        }
        OuterKind::MaxForm { .. } => lambda_dual_step(problem, &md, &domain, LambdaSet::Simplex, opts),
        OuterKind::LogSumExp => lse_step(problem, &md, opts),
    }
}

fn additive_step(
    problem: &CompositeProblem,
    md: &ModelData,
    domain: &SimpleSet,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    let b = &problem.b;
    let xbar = &md.anchor;
    let q = additive_linear(problem);
    let mut gtot = md.grads[0].clone();
    if let Some(ql) = q {
        gtot += ql;
    }
    let l = md.lvec[0];
    let (v, kkt, iters) = match md.p {
        1 => {
            if l > 0.0 {
                let v = domain.project(b, &(xbar - b.solve(&gtot) * (1.0 / (md.beta * l))));
                (v, 0.0, 1)
            } else {
                let v = domain.linear_min(b, &gtot).ok_or_else(|| {
                    FcError::ModelInfeasible(
                        "affine order-1 model is unbounded below on an unbounded domain".into(),
                    )
                })?;
                (v, 0.0, 1)
            }
        }
        _ => {
            if l <= 0.0 {
                return Err(FcError::Config(
                    "order-2 full step needs L_2(f_1) > 0 (the cubic term vanishes)".into(),
                ));
            }
            match domain {
                SimpleSet::All => {
                    let h2 = &md.hessians.as_ref().unwrap()[0] * (md.beta * md.beta);
                    let out = cubic_regularized_step(
                        &h2,
                        &(&gtot * md.beta),
                        b,
                        2.0 * l * md.beta.powi(3),
                        opts.secular_tol,
                    )?;
                    (xbar + out.step, out.residual, out.iters)
                }
                _ => {
                    let value = |v: &Vector| {
                        md.arg_value(b, 0, v)
                            + q.map_or(0.0, |ql| md.beta * ql.dot(v))
                    };
                    let grad = |v: &Vector| {
                        let mut g = md.arg_grad(b, 0, v);
                        if let Some(ql) = q {
                            g += ql * md.beta;
                        }
                        g
                    };
                    let l0 = crate::linalg::sym_eigen_bounds_wrt(&md.arg_hess(b, 0, xbar), b).1
                        + 6.0 * md.coef_v(0) * domain.diameter(b).unwrap_or(1.0)
                        + 1.0;
                    let out =
                        fista(domain, b, xbar, l0, value, grad, opts.fista_tol, opts.max_fista_iter);
                    let conv = out.converged;
                    let res = SubproblemResult {
                        y: md.y_from_v(&out.x),
                        dual: None,
                        model_value: report_model_value(problem, md, &md.y_from_v(&out.x), None),
                        kkt_residual: out.pg_norm,
                        inner_iterations: out.iters,
                        converged: conv,
                    };
                    return Ok(res);
                }
            }
        }
    };
    let y = md.y_from_v(&v);
    Ok(SubproblemResult {
        model_value: report_model_value(problem, md, &y, None),
        y,
        dual: None,
        kkt_residual: kkt,
        inner_iterations: iters,
        converged: true,
    })
}

/// Inner minimization over v for a fixed multiplier; exact for order 1 and
/// for order 2 on an unconstrained domain, FISTA otherwise.
fn primal_for_lambda(
    problem: &CompositeProblem,
    md: &ModelData,
    domain: &SimpleSet,
    lam: &[f64],
    opts: &StepOptions,
) -> Option<Vector> {
    let b = &problem.b;
    let xbar = &md.anchor;
    let (_, g, hopt, s) = md.weighted(lam);
    match md.p {
        1 => {
            let denom = md.beta * s;
            if denom > 1e-300 {
                Some(domain.project(b, &(xbar - b.solve(&g) * (1.0 / denom))))
            } else {
                domain.linear_min(b, &g)
            }
        }
        _ => {
            let hmat = hopt.unwrap() * (md.beta * md.beta);
            match domain {
                SimpleSet::All => {
                    if s > 0.0 {
                        cubic_regularized_step(
                            &hmat,
                            &(&g * md.beta),
                            b,
                            2.0 * s * md.beta.powi(3),
                            opts.secular_tol,
                        )
                        .ok()
                        .map(|out| xbar + out.step)
                    } else {
                        crate::linalg::spd_solve_vec(&hmat, &(-&g * md.beta))
                            .ok()
                            .map(|step| xbar + step)
                    }
                }
                _ => {
                    let coef = s * md.beta.powi(3) / 3.0;
                    let value = |v: &Vector| {
                        let h = v - xbar;
                        let r = b.norm_vec(&h);
                        md.beta * g.dot(&h)
                            + 0.5 * h.dot(&(&hmat * &h))
                            + coef * r.powi(3)
                    };
                    let grad = |v: &Vector| {
                        let h = v - xbar;
                        let r = b.norm_vec(&h);
                        &g * md.beta + &hmat * &h + b.apply(&h) * (3.0 * coef * r)
                    };
                    let l0 = crate::linalg::sym_eigen_bounds_wrt(&hmat, b).1
                        + 6.0 * coef * domain.diameter(b).unwrap_or(1.0)
                        + 1.0;
                    let out = fista(
                        domain,
                        b,
                        xbar,
                        l0,
                        value,
                        grad,
                        opts.fista_tol * 0.01,
                        opts.max_fista_iter,
                    );
                    Some(out.x)
                }
            }
        }
    }
}

fn lambda_dual_step(
    problem: &CompositeProblem,
    md: &ModelData,
    domain: &SimpleSet,
    set: LambdaSet,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    let b = &problem.b;
    let m = md.m();
    if md.p == 2 && !md.lvec.iter().any(|&l| l > 0.0) {
        return Err(FcError::Config(
            "order-2 full step needs at least one component with L_2 > 0".into(),
        ));
    }
    let eval = |lam: &[f64]| -> Option<(f64, Vec<f64>)> {
        let v = primal_for_lambda(problem, md, domain, lam, opts)?;
        let args: Vec<f64> = (0..m).map(|i| md.arg_value(b, i, &v)).collect();
        let val = lam.iter().zip(&args).map(|(l, a)| l * a).sum();
        Some((val, args))
    };
    let out = dual_ascent(set, m, eval, None, opts.dual_tol, opts.max_dual_iter)?;
    let v = primal_for_lambda(problem, md, domain, &out.lambda, opts).ok_or_else(|| {
        FcError::ModelInfeasible("dual is unbounded at the final multiplier".into())
    })?;
    let y = md.y_from_v(&v);
    let tau = if md.p == 2 {
        let s: f64 = out.lambda.iter().zip(&md.lvec).map(|(l, li)| l * li).sum();
        Some(s * b.norm_vec(&(&y - &md.anchor)))
    } else {
        None
    };
    Ok(SubproblemResult {
        model_value: report_model_value(problem, md, &y, Some(out.value)),
        y,
        dual: Some(DualPoint { lambda: out.lambda, tau }),
        kkt_residual: out.residual,
        inner_iterations: out.iters,
        converged: out.converged,
    })
}

struct LseModel<'a> {
    problem: &'a CompositeProblem,
    md: &'a ModelData,
}

impl Smooth for LseModel<'_> {
    fn value(&self, v: &Vector) -> f64 {
        let b = &self.problem.b;
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        crate::oracle::log_sum_exp(&args)
    }

    fn grad(&self, v: &Vector) -> Vector {
        let b = &self.problem.b;
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        let w = crate::oracle::softmax(&args);
        let mut g = Vector::zeros(v.len());
        for (i, wi) in w.iter().enumerate() {
            g.axpy(*wi, &self.md.arg_grad(b, i, v), 1.0);
        }
        g
    }

    fn hess(&self, v: &Vector) -> crate::linalg::Matrix {
        let b = &self.problem.b;
        let n = v.len();
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        let w = crate::oracle::softmax(&args);
        let mut h = crate::linalg::Matrix::zeros(n, n);
        let mut gbar = Vector::zeros(n);
        for (i, wi) in w.iter().enumerate() {
            let gi = self.md.arg_grad(b, i, v);
            h += self.md.arg_hess(b, i, v) * *wi;
            h += &gi * gi.transpose() * *wi;
            gbar.axpy(*wi, &gi, 1.0);
        }
        h -= &gbar * gbar.transpose();
        h
    }
}

fn lse_step(
    problem: &CompositeProblem,
    md: &ModelData,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    let obj = LseModel { problem, md };
    let out = damped_newton(&obj, &problem.b, &md.anchor, opts.newton_tol, opts.max_newton_iter);
    let y = md.y_from_v(&out.x);
    Ok(SubproblemResult {
        model_value: report_model_value(problem, md, &y, None),
        y,
        dual: None,
        kkt_residual: out.grad_norm,
        inner_iterations: out.iters,
        converged: out.converged,
    })
}
