//! Per-iteration auxiliary problems: full-step model minimization (orders 1
//! and 2, with the restricted variant), regularized gradient steps,
//! contracted linear-minimization oracles, and cubic-regularized composite
//! steps.
//!
//! Constraint- and max-form subproblems are solved through their small
//! duals: projected gradient ascent over the multiplier set, with the primal
//! recovered in closed form (order 1) or by the secular solve (order 2).
//! Log-sum-exp outers give smooth strongly convex primals handled by damped
//! Newton. Everything is deterministic.

pub mod cubic;
pub mod full_step;
pub mod grad_reg;
pub mod lmo;
pub mod solvers;

pub use cubic::cubic_step;
pub use full_step::full_step;
pub use grad_reg::grad_reg_step;
pub use lmo::contracted_lmo;

use crate::error::{FcError, Result};
use crate::linalg::{Matrix, NormOperator, Vector};
use crate::oracle::{power_grad, power_hess};
use crate::outer::OuterKind;
use crate::problem::CompositeProblem;

/// Multipliers of a solved dual, when the subproblem has one.
///
/// `lambda` is on the unit simplex (max form) or has λ⁽¹⁾ = 1 (constraint
/// form); `tau` is the cubic dual variable of the order-2 dual, recovered as
/// τ = Σλᵢ L₂(fᵢ) · ‖y − x̄‖.
#[derive(Debug, Clone)]
pub struct DualPoint {
    pub lambda: Vec<f64>,
    pub tau: Option<f64>,
}

/// Result of one auxiliary problem.
#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub y: Vector,
    pub dual: Option<DualPoint>,
    /// Value of the minimized model at y; dominates φ(y) up to solver slack.
    pub model_value: f64,
    /// Solver-specific stationarity residual (dual KKT norm, projected
    /// gradient norm, or secular residual).
    pub kkt_residual: f64,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Common tolerances of the subproblem solvers. Defaults are two orders
/// tighter than anything the outer loops assert.
#[derive(Debug, Clone)]
pub struct StepOptions {
    pub dual_tol: f64,
    pub max_dual_iter: usize,
    pub newton_tol: f64,
    pub max_newton_iter: usize,
    pub fista_tol: f64,
    pub max_fista_iter: usize,
    pub secular_tol: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            dual_tol: 1e-10,
            max_dual_iter: 20_000,
            newton_tol: 1e-10,
            max_newton_iter: 300,
            fista_tol: 1e-8,
            max_fista_iter: 50_000,
            secular_tol: 1e-12,
        }
    }
}

/// Snapshot of f at an anchor plus the contraction factor β of the
/// restricted change of variables y = x̄ + β(v − x̄). β = 1 recovers the
/// full step. Model arguments live in v-space:
///
///   argᵢ(v) = fᵢ(x̄) + β⟨∇fᵢ, v−x̄⟩ + (β²/2)⟨∇²fᵢ(v−x̄), v−x̄⟩
///             + p Lᵢ β^{p+1}/(p+1)! · ‖v−x̄‖^{p+1}
pub(crate) struct ModelData {
    pub anchor: Vector,
    pub p: u32,
    pub beta: f64,
    pub fvals: Vec<f64>,
    pub grads: Vec<Vector>,
    pub hessians: Option<Vec<Matrix>>,
    pub lvec: Vec<f64>,
    /// When false, the coefs are zero (plain Taylor model, for LMO steps).
    pub regularized: bool,
}

impl ModelData {
    pub fn new(
        problem: &CompositeProblem,
        anchor: &Vector,
        p: u32,
        beta: f64,
        regularized: bool,
    ) -> Result<Self> {
        if !(p == 1 || p == 2) {
            return Err(FcError::Config("order p must be 1 or 2".into()));
        }
        let b = &problem.b;
        Ok(ModelData {
            anchor: anchor.clone(),
            p,
            beta,
            fvals: problem.f.eval_all(b, anchor),
            grads: problem.f.grad_all(b, anchor),
            hessians: if p == 2 { Some(problem.f.hess_all(b, anchor)) } else { None },
            lvec: problem.f.lipschitz_vec(p),
            regularized,
        })
    }

    pub fn m(&self) -> usize {
        self.fvals.len()
    }

    /// p Lᵢ / (p+1)! — the y-space regularization coefficient of component i.
    pub fn coef_y(&self, i: usize) -> f64 {
        if !self.regularized {
            return 0.0;
        }
        let l = self.lvec[i];
        match self.p {
            1 => 0.5 * l,
            _ => l / 3.0,
        }
    }

    /// v-space coefficient: coef_y · β^{p+1}.
    pub fn coef_v(&self, i: usize) -> f64 {
        self.coef_y(i) * self.beta.powi(self.p as i32 + 1)
    }

    pub fn y_from_v(&self, v: &Vector) -> Vector {
        if self.beta == 1.0 {
            v.clone()
        } else {
            &self.anchor + (v - &self.anchor) * self.beta
        }
    }

    pub fn arg_value(&self, b: &NormOperator, i: usize, v: &Vector) -> f64 {
        let h = v - &self.anchor;
        let mut val = self.fvals[i] + self.beta * self.grads[i].dot(&h);
        if self.p == 2 {
            let hs = &self.hessians.as_ref().unwrap()[i];
            val += 0.5 * self.beta * self.beta * h.dot(&(hs * &h));
        }
        let c = self.coef_v(i);
        if c > 0.0 {
            val += c * b.norm_vec(&h).powi(self.p as i32 + 1);
        }
        val
    }

    pub fn arg_grad(&self, b: &NormOperator, i: usize, v: &Vector) -> Vector {
        let h = v - &self.anchor;
        let mut g = &self.grads[i] * self.beta;
        if self.p == 2 {
            let hs = &self.hessians.as_ref().unwrap()[i];
            g += (hs * &h) * (self.beta * self.beta);
        }
        let c = self.coef_v(i);
        if c > 0.0 {
            g += power_grad(b, &self.anchor, self.p + 1, c, v);
        }
        g
    }

    pub fn arg_hess(&self, b: &NormOperator, i: usize, v: &Vector) -> Matrix {
        let n = self.anchor.len();
        let mut h = match &self.hessians {
            Some(hs) => &hs[i] * (self.beta * self.beta),
            None => Matrix::zeros(n, n),
        };
        let c = self.coef_v(i);
        if c > 0.0 {
            h += power_hess(b, &self.anchor, self.p + 1, c, v);
        }
        h
    }

    /// Model argument evaluated in y-space (β = 1 formulas on the same
    /// snapshot); this is Ω_p(fᵢ, x̄; y) + pLᵢ/(p+1)!·‖y−x̄‖^{p+1}.
    pub fn arg_value_y(&self, b: &NormOperator, i: usize, y: &Vector) -> f64 {
        let h = y - &self.anchor;
        let mut val = self.fvals[i] + self.grads[i].dot(&h);
        if self.p == 2 {
            let hs = &self.hessians.as_ref().unwrap()[i];
            val += 0.5 * h.dot(&(hs * &h));
        }
        let c = self.coef_y(i);
        if c > 0.0 {
            val += c * b.norm_vec(&h).powi(self.p as i32 + 1);
        }
        val
    }

    /// Aggregate Σλᵢ·argᵢ data at a multiplier: (Σλf, Σλ∇f, Σλ∇²f, ΣλL).
    pub fn weighted(&self, lam: &[f64]) -> (f64, Vector, Option<Matrix>, f64) {
        let n = self.anchor.len();
        let mut fsum = 0.0;
        let mut g = Vector::zeros(n);
        let mut l = 0.0;
        for (i, &li) in lam.iter().enumerate() {
            if li == 0.0 {
                continue;
            }
            fsum += li * self.fvals[i];
            g.axpy(li, &self.grads[i], 1.0);
            l += li * self.lvec[i];
        }
        let h = self.hessians.as_ref().map(|hs| {
            let mut m = Matrix::zeros(n, n);
            for (i, &li) in lam.iter().enumerate() {
                if li != 0.0 {
                    m += &hs[i] * li;
                }
            }
            m
        });
        (fsum, g, h, l)
    }
}

/// Model value in y-space including the outer function, reported on every
/// `SubproblemResult`. Falls back to the supplied dual bound when the
/// indicator tolerance still rejects y.
pub(crate) fn report_model_value(
    problem: &CompositeProblem,
    md: &ModelData,
    y: &Vector,
    dual_bound: Option<f64>,
) -> f64 {
    let args: Vec<f64> =
        (0..md.m()).map(|i| md.arg_value_y(&problem.b, i, y)).collect();
    let v = problem.outer.eval(&problem.b, y, &args);
    if v.is_finite() {
        v
    } else {
        dual_bound.unwrap_or(v)
    }
}

/// The linear part of ψ for the additive form, when present.
pub(crate) fn additive_linear(problem: &CompositeProblem) -> Option<&Vector> {
    match &problem.outer.kind {
        OuterKind::AdditiveComposite { linear, .. } => linear.as_ref(),
        _ => None,
    }
}
