//! Contracted linear-minimization steps for bounded domains: minimize
//! F(y, Ω_p(f, x_k; y)) subject to x_k + (y − x_k)/γ ∈ dom φ. The change of
//! variables v = x_k + (y − x_k)/γ turns this into a model minimization over
//! v ∈ Q, closed-form for the additive order-1 case (the classical
//! Frank–Wolfe vertex rule) and a small minimax otherwise.

use crate::error::{FcError, Result};
use crate::linalg::Vector;
use crate::outer::{OuterKind, SimpleSet};
use crate::problem::CompositeProblem;

use super::solvers::{dual_ascent, fista, LambdaSet};
use super::{additive_linear, report_model_value, DualPoint, ModelData, StepOptions, SubproblemResult};

pub fn contracted_lmo(
    problem: &CompositeProblem,
    xk: &Vector,
    gamma: f64,
    p: u32,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(FcError::Config("contraction factor must lie in (0, 1]".into()));
    }
    let domain = problem.outer.simple_phi_domain().ok_or_else(|| {
        FcError::Inapplicable(
            "contracted steps need a simple dom phi; the constraint form's domain is not simple".into(),
        )
    })?;
    if !domain.is_bounded() {
        return Err(FcError::Inapplicable("contracted steps need a bounded dom phi".into()));
    }
    let md = ModelData::new(problem, xk, p, gamma, false)?;
    let b = &problem.b;

    match &problem.outer.kind {
        OuterKind::AdditiveComposite { .. } => {
            let mut g = md.grads[0].clone();
            if let Some(ql) = additive_linear(problem) {
                g += ql;
            }
            match p {
                1 => {
                    let v = domain.linear_min(b, &g).expect("bounded domain has an LMO");
                    let y = md.y_from_v(&v);
                    Ok(SubproblemResult {
                        model_value: report_model_value(problem, &md, &y, None),
                        y,
                        dual: None,
                        kkt_residual: 0.0,
                        inner_iterations: 1,
                        converged: true,
                    })
                }
                _ => {
                    let q = additive_linear(problem);
                    let value = |v: &Vector| {
                        md.arg_value(b, 0, v) + q.map_or(0.0, |ql| md.beta * ql.dot(v))
                    };
                    let grad = |v: &Vector| {
                        let mut g = md.arg_grad(b, 0, v);
                        if let Some(ql) = q {
                            g += ql * md.beta;
                        }
                        g
                    };
                    let l0 =
                        crate::linalg::sym_eigen_bounds_wrt(&md.arg_hess(b, 0, xk), b).1 + 1e-12;
                    let out =
                        fista(&domain, b, xk, l0, value, grad, opts.fista_tol, opts.max_fista_iter);
                    let y = md.y_from_v(&out.x);
                    Ok(SubproblemResult {
                        model_value: report_model_value(problem, &md, &y, None),
                        y,
                        dual: None,
                        kkt_residual: out.pg_norm,
                        inner_iterations: out.iters,
                        converged: out.converged,
                    })
                }
            }
        }
        OuterKind::MaxForm { .. } => match p {
            1 => minimax_affine(problem, &md, &domain, opts),
            _ => minimax_quadratic(problem, &md, &domain, opts),
        },
        OuterKind::ConstraintForm { .. } => unreachable!("constraint form has no simple domain"),
        OuterKind::LogSumExp => unreachable!("log-sum-exp domain is unbounded"),
    }
}

/// min_{v∈Q} maxᵢ (cᵢ + ⟨wᵢ, v⟩) by proximal-point iterations whose inner
/// problems are strongly convex minimax steps with closed-form primal maps.
/// Certified by the true duality gap against the linear dual.
fn minimax_affine(
    problem: &CompositeProblem,
    md: &ModelData,
    domain: &SimpleSet,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    let b = &problem.b;
    let m = md.m();
    let consts: Vec<f64> = (0..m).map(|i| md.fvals[i] - md.beta * md.grads[i].dot(&md.anchor)).collect();
    let ws: Vec<Vector> = (0..m).map(|i| &md.grads[i] * md.beta).collect();

    let primal = |v: &Vector| -> f64 {
        (0..m).map(|i| consts[i] + ws[i].dot(v)).fold(f64::NEG_INFINITY, f64::max)
    };
    let dual_true = |lam: &[f64]| -> f64 {
        let mut g = Vector::zeros(md.anchor.len());
        let mut c = 0.0;
        for ((l, w), co) in lam.iter().zip(&ws).zip(&consts) {
            g.axpy(*l, w, 1.0);
            c += l * co;
        }
        let vmin = domain.linear_min(b, &g).expect("bounded");
        c + g.dot(&vmin)
    };

    let wmax = ws.iter().map(|w| b.dual_norm_vec(w)).fold(0.0f64, f64::max);
    let diam = domain.diameter(b).unwrap_or(1.0);
    let mut rho = (wmax / diam.max(1e-12)).max(1e-12);
    let mut vj = domain.project(b, &md.anchor);
    let mut lam_best: Vec<f64> = vec![1.0 / m as f64; m];
    let mut best_gap = f64::INFINITY;
    let mut best_v = vj.clone();
    let mut total_iters = 0usize;

    for _outer in 0..120 {
        let eval = |lam: &[f64]| -> Option<(f64, Vec<f64>)> {
            let mut g = Vector::zeros(md.anchor.len());
            for (l, w) in lam.iter().zip(&ws) {
                g.axpy(*l, w, 1.0);
            }
            let v = domain.project(b, &(&vj - b.solve(&g) * (1.0 / rho)));
            let args: Vec<f64> = (0..m).map(|i| consts[i] + ws[i].dot(&v)).collect();
            let r = b.norm_vec(&(&v - &vj));
            let val =
                lam.iter().zip(&args).map(|(l, a)| l * a).sum::<f64>() + 0.5 * rho * r * r;
            Some((val, args))
        };
        let out = dual_ascent(
            LambdaSet::Simplex,
            m,
            eval,
            Some(lam_best.clone()),
            opts.dual_tol,
            opts.max_dual_iter,
        )?;
        total_iters += out.iters;
        let mut g = Vector::zeros(md.anchor.len());
        for (l, w) in out.lambda.iter().zip(&ws) {
            g.axpy(*l, w, 1.0);
        }
        let vnext = domain.project(b, &(&vj - b.solve(&g) * (1.0 / rho)));
        let gap = primal(&vnext) - dual_true(&out.lambda);
        if gap < best_gap {
            best_gap = gap;
            best_v = vnext.clone();
            lam_best = out.lambda.clone();
        }
        if best_gap <= 1e-9 * (1.0 + primal(&best_v).abs()) {
            break;
        }
        let moved = b.norm_vec(&(&vnext - &vj));
        vj = vnext;
        if moved <= 1e-14 * (1.0 + b.norm_vec(&vj)) {
            rho *= 0.25;
        } else {
            rho *= 0.5;
        }
        if rho < 1e-15 {
            break;
        }
    }

    let y = md.y_from_v(&best_v);
    let converged = best_gap <= 1e-6 * (1.0 + primal(&best_v).abs());
    Ok(SubproblemResult {
        model_value: report_model_value(problem, md, &y, None),
        y,
        dual: Some(DualPoint { lambda: lam_best, tau: None }),
        kkt_residual: best_gap.max(0.0),
        inner_iterations: total_iters,
        converged,
    })
}

/// min_{v∈Q} maxᵢ quadᵢ(v): simplex dual with a FISTA inner solve per
/// multiplier (inexact Danskin); adequate for the small instances the
/// contracting Newton method feeds it.
fn minimax_quadratic(
    problem: &CompositeProblem,
    md: &ModelData,
    domain: &SimpleSet,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    let b = &problem.b;
    let m = md.m();
    let solve_inner = |lam: &[f64]| -> (Vector, usize) {
        let (_, g, hopt, _) = md.weighted(lam);
        let hmat = hopt.expect("order-2 model carries Hessians") * (md.beta * md.beta);
        let value = |v: &Vector| {
            let h = v - &md.anchor;
            md.beta * g.dot(&h) + 0.5 * h.dot(&(&hmat * &h))
        };
        let grad = |v: &Vector| &g * md.beta + &hmat * (v - &md.anchor);
        let l0 = crate::linalg::sym_eigen_bounds_wrt(&hmat, b).1 + 1e-12;
        let out = fista(domain, b, &md.anchor, l0, value, grad, opts.fista_tol * 1e-2, opts.max_fista_iter);
        (out.x, out.iters)
    };
    let mut inner_total = 0usize;
    let eval = |lam: &[f64]| -> Option<(f64, Vec<f64>)> {
        let (v, _) = solve_inner(lam);
        let args: Vec<f64> = (0..m).map(|i| md.arg_value(b, i, &v)).collect();
        let val = lam.iter().zip(&args).map(|(l, a)| l * a).sum();
        Some((val, args))
    };
    let out = dual_ascent(LambdaSet::Simplex, m, eval, None, opts.dual_tol.max(1e-9), opts.max_dual_iter)?;
    let (v, it) = solve_inner(&out.lambda);
    inner_total += it + out.iters;
    let y = md.y_from_v(&v);
    Ok(SubproblemResult {
        model_value: report_model_value(problem, md, &y, Some(out.value)),
        y,
        dual: Some(DualPoint { lambda: out.lambda, tau: None }),
        kkt_residual: out.residual,
        inner_iterations: inner_total,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NormOperator;
    use crate::oracle::{ComponentKind, SmoothComponent, VectorFunction};
    use crate::outer::OuterFunction;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn v(s: &[f64]) -> Vector {
        Vector::from_column_slice(s)
    }

    fn box_quadratic() -> CompositeProblem {
        let b = NormOperator::identity(2);
        let f1 = SmoothComponent::with_analytic_constants(
            ComponentKind::Quadratic { a: DMatrix::identity(2, 2), b: v(&[-0.3, 0.7]), c: 0.0 },
            &b,
        )
        .unwrap();
        let f = VectorFunction::new(vec![f1]).unwrap();
        let outer = OuterFunction::new(
            OuterKind::AdditiveComposite {
                q: SimpleSet::Box { lower: v(&[-1.0, -1.0]), upper: v(&[1.0, 1.0]) },
                linear: None,
            },
            1,
            2,
        )
        .unwrap();
        CompositeProblem::new(f, outer, b, v(&[0.0, 0.0]), None, None, None).unwrap()
    }

    #[test]
    fn vertex_rule_on_box() {
        let p = box_quadratic();
        let xk = v(&[0.25, -0.5]);
        // gradient at xk: (0.25 - 0.3, -0.5 + 0.7) = (-0.05, 0.2) -> v = (+1, -1)
        let out = contracted_lmo(&p, &xk, 0.5, 1, &StepOptions::default()).unwrap();
        let expect = &xk + (v(&[1.0, -1.0]) - &xk) * 0.5;
        assert!((out.y - expect).norm() < 1e-14);
    }

    #[test]
    fn gamma_one_is_plain_lmo() {
        let p = box_quadratic();
        let xk = v(&[0.25, -0.5]);
        let out = contracted_lmo(&p, &xk, 1.0, 1, &StepOptions::default()).unwrap();
        assert_relative_eq!(out.y[0], 1.0);
        assert_relative_eq!(out.y[1], -1.0);
    }

    #[test]
    fn unbounded_domain_rejected() {
        let b = NormOperator::identity(1);
        let f1 = SmoothComponent::with_analytic_constants(
            ComponentKind::Quadratic { a: DMatrix::identity(1, 1), b: v(&[0.0]), c: 0.0 },
            &b,
        )
        .unwrap();
        let f = VectorFunction::new(vec![f1]).unwrap();
        let outer = OuterFunction::new(
            OuterKind::AdditiveComposite { q: SimpleSet::All, linear: None },
            1,
            1,
        )
        .unwrap();
        let p = CompositeProblem::new(f, outer, b, v(&[0.0]), None, None, None).unwrap();
        assert!(matches!(
            contracted_lmo(&p, &v(&[0.0]), 0.5, 1, &StepOptions::default()),
            Err(FcError::Inapplicable(_))
        ));
    }

    #[test]
    fn max_form_minimax_matches_grid() {
        // two affine pieces over a box; gamma = 1
        let b = NormOperator::identity(2);
        let mk = |a: Vector, off: f64| {
            SmoothComponent::with_analytic_constants(ComponentKind::Affine { a, b: off }, &b).unwrap()
        };
        let f = VectorFunction::new(vec![
            mk(v(&[1.0, 0.3]), 0.1),
            mk(v(&[-0.8, 0.5]), -0.2),
            mk(v(&[0.1, -1.0]), 0.0),
        ])
        .unwrap();
        let q = SimpleSet::Box { lower: v(&[-1.0, -1.0]), upper: v(&[1.0, 1.0]) };
        let outer = OuterFunction::new(OuterKind::MaxForm { q: q.clone() }, 3, 2).unwrap();
        let p = CompositeProblem::new(f, outer, b.clone(), v(&[0.0, 0.0]), None, None, None).unwrap();
        let out = contracted_lmo(&p, &v(&[0.2, 0.1]), 1.0, 1, &StepOptions::default()).unwrap();
        assert!(out.converged, "gap {}", out.kkt_residual);

        // dense grid oracle over the box
        let mut best = f64::INFINITY;
        let phi = |x: &Vector| p.phi(x);
        for i in 0..=1000 {
            for j in 0..=1000 {
                let x = v(&[-1.0 + 2.0 * i as f64 / 1000.0, -1.0 + 2.0 * j as f64 / 1000.0]);
                best = best.min(phi(&x));
            }
        }
        // with gamma = 1 the model is the linearization = phi itself here,
        // so the solver value must match the grid minimum (the grid itself
        // is only accurate to its resolution)
        assert!(out.model_value <= best + 1e-6, "{} vs {}", out.model_value, best);
        assert!((out.model_value - best).abs() <= 4e-3, "{} vs {}", out.model_value, best);
        assert!(q.contains(&b, &out.y, 1e-9));
    }
}
