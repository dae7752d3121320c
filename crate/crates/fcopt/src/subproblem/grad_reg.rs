//! The basic gradient step: minimize F(y, f(x_k) + ⟨∇f(x_k), y − x_k⟩) +
//! (M/2)‖y − x_k‖² with the regularization *outside* the composite part.

use crate::error::{FcError, Result};
use crate::linalg::Vector;
use crate::outer::OuterKind;
use crate::problem::CompositeProblem;

use super::solvers::{damped_newton, dual_ascent, LambdaSet, Smooth};
use super::{additive_linear, DualPoint, ModelData, StepOptions, SubproblemResult};

pub fn grad_reg_step(
    problem: &CompositeProblem,
    anchor: &Vector,
    m_reg: f64,
    opts: &StepOptions,
) -> Result<SubproblemResult> {
    if !(m_reg > 0.0) {
        return Err(FcError::Config("gradient step needs M > 0".into()));
    }
    let b = &problem.b;
    let md = ModelData::new(problem, anchor, 1, 1.0, false)?;
    let q = problem.outer.q_set();

    match &problem.outer.kind {
        OuterKind::AdditiveComposite { .. } => {
            let mut g = md.grads[0].clone();
            if let Some(ql) = additive_linear(problem) {
                g += ql;
            }
            let y = q.project(b, &(anchor - b.solve(&g) * (1.0 / m_reg)));
            Ok(finish(problem, &md, y, None, m_reg, 0.0, 1, true))
        }
        OuterKind::ConstraintForm { .. } | OuterKind::MaxForm { .. } => {
            let set = if matches!(problem.outer.kind, OuterKind::MaxForm { .. }) {
                LambdaSet::Simplex
            } else {
                LambdaSet::FixedFirst
            };
            let m = md.m();
            let eval = |lam: &[f64]| -> Option<(f64, Vec<f64>)> {
                let (_, g, _, _) = md.weighted(lam);
                let v = q.project(b, &(anchor - b.solve(&g) * (1.0 / m_reg)));
                let args: Vec<f64> = (0..m).map(|i| md.arg_value(b, i, &v)).collect();
                let r = b.norm_vec(&(&v - anchor));
                let val: f64 =
                    lam.iter().zip(&args).map(|(l, a)| l * a).sum::<f64>() + 0.5 * m_reg * r * r;
                Some((val, args))
            };
            let out = dual_ascent(set, m, eval, None, opts.dual_tol, opts.max_dual_iter)?;
            let (_, g, _, _) = md.weighted(&out.lambda);
            let y = q.project(b, &(anchor - b.solve(&g) * (1.0 / m_reg)));
            let converged = out.converged;
            let mut res = finish(problem, &md, y, Some(out.lambda), m_reg, out.residual, out.iters, converged);
            res.converged = converged;
            Ok(res)
        }
        OuterKind::LogSumExp => {
            let obj = LseGrad { problem, md: &md, m_reg };
            let out = damped_newton(&obj, b, anchor, opts.newton_tol, opts.max_newton_iter);
            let converged = out.converged;
            Ok(finish(problem, &md, out.x, None, m_reg, out.grad_norm, out.iters, converged))
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
    let model_value = problem.outer.eval(b, &y, &args) + 0.5 * m_reg * r * r;
    SubproblemResult {
        y,
        dual: lambda.map(|l| DualPoint { lambda: l, tau: None }),
        model_value,
        kkt_residual: kkt,
        inner_iterations: iters,
        converged,
    }
}

struct LseGrad<'a> {
    problem: &'a CompositeProblem,
    md: &'a ModelData,
    m_reg: f64,
}

impl Smooth for LseGrad<'_> {
    fn value(&self, v: &Vector) -> f64 {
        let b = &self.problem.b;
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        let r = b.norm_vec(&(v - &self.md.anchor));
        crate::oracle::log_sum_exp(&args) + 0.5 * self.m_reg * r * r
    }

    fn grad(&self, v: &Vector) -> Vector {
        let b = &self.problem.b;
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        let w = crate::oracle::softmax(&args);
        let mut g = Vector::zeros(v.len());
        for (i, wi) in w.iter().enumerate() {
            g.axpy(*wi, &self.md.grads[i], 1.0);
        }
        g + b.apply(&(v - &self.md.anchor)) * self.m_reg
    }

    fn hess(&self, v: &Vector) -> crate::linalg::Matrix {
        let b = &self.problem.b;
        let n = v.len();
        let args: Vec<f64> =
            (0..self.md.m()).map(|i| self.md.arg_value(b, i, v)).collect();
        let w = crate::oracle::softmax(&args);
        let mut h = b.to_matrix() * self.m_reg;
        let mut gbar = Vector::zeros(n);
        for (i, wi) in w.iter().enumerate() {
            let gi = &self.md.grads[i];
            h += gi * gi.transpose() * *wi;
            gbar.axpy(*wi, gi, 1.0);
        }
        h -= &gbar * gbar.transpose();
        h
    }
}
