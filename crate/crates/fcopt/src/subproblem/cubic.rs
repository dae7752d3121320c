//! The cubic-regularized composite step: minimize F(y, Ω₂(f, x_k; y)) +
//! (M/6)‖y − x_k‖³. Unconstrained additive instances reduce to the classical
//! secular solve r = ‖(H + (M r/2)B)⁻¹∇‖; constraint/max forms wrap that
//! solve inside a dual ascent over the multiplier set.

use crate::error::{FcError, Result};
use crate::linalg::Vector;
use crate::oracle::power_hess;
use crate::outer::{OuterKind, SimpleSet};
use crate::problem::CompositeProblem;

use super::solvers::{cubic_regularized_step, damped_newton, dual_ascent, fista, LambdaSet, Smooth};
use super::{additive_linear, ModelData, StepOptions, SubproblemResult};

pub fn cubic_step(
    problem: &CompositeProblem,
    anchor: &Vector,
    m_reg: f64,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    if !(m_reg > 0.0) {
        return Err(FcError::Config("cubic step needs M > 0".into()));
    }
    let b = &problem.b;
    let md = ModelData::new(problem, anchor, 2, 1.0, false)?;
    let q = problem.outer.q_set();

    match &problem.outer.kind {
        OuterKind::AdditiveComposite { .. } => {
            let mut g = md.grads[0].clone();
            if let Some(ql) = additive_linear(problem) {
                g += ql;
            }
            match q {
                SimpleSet::All => {
                    let out = cubic_regularized_step(
                        &md.hessians.as_ref().unwrap()[0],
                        &g,
                        b,
                        m_reg,
                        opts.secular_tol,
                    )?;
                    let y = anchor + out.step;
                    Ok(finish(problem, &md, y, None, m_reg, out.residual, out.iters, true))
                }
                _ => {
                    let lq = additive_linear(problem);
                    let value = |v: &Vector| {
                        let r = b.norm_vec(&(v - anchor));
                        md.arg_value(b, 0, v)
                            + lq.map_or(0.0, |l| l.dot(v))
                            + m_reg / 6.0 * r.powi(3)
                    };
                    let grad = |v: &Vector| {
                        let h = v - anchor;
                        let r = b.norm_vec(&h);
                        let mut g = md.arg_grad(b, 0, v);
                        if let Some(l) = lq {
                            g += l;
                        }
                        g + b.apply(&h) * (0.5 * m_reg * r)
                    };
                    let l0 = crate::linalg::sym_eigen_bounds_wrt(&md.hessians.as_ref().unwrap()[0], b).1
                        + m_reg * q.diameter(b).unwrap_or(1.0)
                        + 1.0;
                    let out = fista(&q, b, anchor, l0, value, grad, opts.fista_tol, opts.max_fista_iter);
                    let conv = out.converged;
                    Ok(finish(problem, &md, out.x, None, m_reg, out.pg_norm, out.iters, conv))
                }
            }
        }
        OuterKind::ConstraintForm { .. } | OuterKind::MaxForm { .. } => {
            let set = if matches!(problem.outer.kind, OuterKind::MaxForm { .. }) {
                LambdaSet::Simplex
            } else {
                LambdaSet::FixedFirst
            };
            let m = md.m();
            let inner = |lam: &[f64]| -> Option<Vector> {
                let (_, g, hopt, _) = md.weighted(lam);
                let hmat = hopt.unwrap();
                match &q {
                    SimpleSet::All => cubic_regularized_step(&hmat, &g, b, m_reg, opts.secular_tol)
                        .ok()
                        .map(|o| anchor + o.step),
                    _ => {
                        let value = |v: &Vector| {
                            let h = v - anchor;
                            let r = b.norm_vec(&h);
                            g.dot(&h) + 0.5 * h.dot(&(&hmat * &h)) + m_reg / 6.0 * r.powi(3)
                        };
                        let grad = |v: &Vector| {
                            let h = v - anchor;
                            let r = b.norm_vec(&h);
                            &g + &hmat * &h + b.apply(&h) * (0.5 * m_reg * r)
                        };
                        let l0 = crate::linalg::sym_eigen_bounds_wrt(&hmat, b).1
                            + m_reg * q.diameter(b).unwrap_or(1.0)
                            + 1.0;
                        Some(fista(&q, b, anchor, l0, value, grad, opts.fista_tol * 1e-2, opts.max_fista_iter).x)
                    }
                }
            };
            let eval = |lam: &[f64]| -> Option<(f64, Vec<f64>)> {
                let v = inner(lam)?;
                let args: Vec<f64> = (0..m).map(|i| md.arg_value(b, i, &v)).collect();
                let r = b.norm_vec(&(&v - anchor));
                let val = lam.iter().zip(&args).map(|(l, a)| l * a).sum::<f64>()
                    + m_reg / 6.0 * r.powi(3);
                Some((val, args))
            };
            let tol = opts.dual_tol.max(1e-8);
            let out = dual_ascent(set, m, eval, None, tol, opts.max_dual_iter)?;
            let v = inner(&out.lambda)
                .ok_or_else(|| FcError::ModelInfeasible("cubic dual inner solve failed".into()))?;
            let conv = out.converged;
            Ok(finish(problem, &md, v, Some(out.lambda), m_reg, out.residual, out.iters, conv))
        }
        OuterKind::LogSumExp => {
            let obj = CubicLse { problem, md: &md, m_reg };
            let out = damped_newton(&obj, b, anchor, opts.newton_tol, opts.max_newton_iter);
            let conv = out.converged;
            Ok(finish(problem, &md, out.x, None, m_reg, out.grad_norm, out.iters, conv))
        }
    }
}

fn finish(
    problem: &CompositeProblem,
    md: &ModelData,
    y: Vector,
    lambda: Option<Vec<f64>>,
    m_reg: f64,
    kkt: f64,
    iters: usize,
    converged: bool,
) -> SubproblemResult {
    let b = &problem.b;
    let args: Vec<f64> = (0..md.m()).map(|i| md.arg_value_y(b, i, &y)).collect();
    let r = b.norm_vec(&(&y - &md.anchor));
    let model_value = problem.outer.eval(b, &y, &args) + m_reg / 6.0 * r.powi(3);
    SubproblemResult {
        y,
        dual: lambda.map(|l| super::DualPoint { lambda: l, tau: None }),
        model_value,
        kkt_residual: kkt,
        inner_iterations: iters,
        converged,
    }
}

struct CubicLse<'a> {
    problem: &'a CompositeProblem,
    md: &'a ModelData,
    m_reg: f64,
}

impl Smooth for CubicLse<'_> {
    fn value(&self, v: &Vector) -> f64 {
        let b = &self.problem.b;
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        let r = b.norm_vec(&(v - &self.md.anchor));
        crate::oracle::log_sum_exp(&args) + self.m_reg / 6.0 * r.powi(3)
    }

    fn grad(&self, v: &Vector) -> Vector {
        let b = &self.problem.b;
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        let w = crate::oracle::softmax(&args);
        let h = v - &self.md.anchor;
        let r = b.norm_vec(&h);
        let mut g = b.apply(&h) * (0.5 * self.m_reg * r);
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
        let mut h = power_hess(b, &self.md.anchor, 3, self.m_reg / 6.0, v);
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
