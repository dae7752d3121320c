//! The contracting proximal-point scheme: outer iterations with
//! A_{k+1} = ((k+1)/3)³ and γ_k = (A_{k+1} − A_k)/A_{k+1} build subproblems
//!
//!   h_{k+1}(z) = A_{k+1} φ(γ_k z + (1 − γ_k) x_k) + ρ_d(v_k; z),
//!
//! with the cubic prox function d(x) = (α/3)‖x − x₀‖³, α = F(L₂(f)). Each
//! subproblem is driven to accuracy δ by cubic Newton steps whose
//! regularization constant γ_k³ A_{k+1} F(L₂(f)) never exceeds α, which is
//! what gives the inner solver its 3/4 linear factor per step.

use crate::error::{FcError, Result};
use crate::linalg::{Matrix, NormOperator, Vector};
use crate::oracle::{log_sum_exp, power_hess, softmax};
use crate::outer::{OuterKind, SimpleSet};
use crate::problem::CompositeProblem;
use crate::subproblem::solvers::{damped_newton, fista, Smooth};
use crate::subproblem::StepOptions;

use super::{gap_of, MethodConfig, RunTrace, TraceRow};

/// d(x) = (α/3)‖x − x₀‖³.
pub fn prox_d_value(b: &NormOperator, alpha: f64, x0: &Vector, x: &Vector) -> f64 {
    alpha / 3.0 * b.norm_vec(&(x - x0)).powi(3)
}

/// ∇d(x) = α‖x − x₀‖ B(x − x₀).
pub fn prox_d_grad(b: &NormOperator, alpha: f64, x0: &Vector, x: &Vector) -> Vector {
    let h = x - x0;
    b.apply(&h) * (alpha * b.norm_vec(&h))
}

/// Bregman divergence ρ_d(v; x) = d(x) − d(v) − ⟨∇d(v), x − v⟩.
pub fn bregman(b: &NormOperator, alpha: f64, x0: &Vector, v: &Vector, x: &Vector) -> f64 {
    prox_d_value(b, alpha, x0, x)
        - prox_d_value(b, alpha, x0, v)
        - prox_d_grad(b, alpha, x0, v).dot(&(x - v))
}

/// One outer subproblem of the scheme, exposed so tests can re-run inner
/// solves and measure per-step decrease against a long reference run.
#[derive(Debug, Clone)]
pub struct ProxSubproblem<'a> {
    pub problem: &'a CompositeProblem,
    pub a_next: f64,
    pub gamma: f64,
    pub xk: Vector,
    pub vk: Vector,
    pub alpha_prox: f64,
}

impl<'a> ProxSubproblem<'a> {
    pub fn map_x(&self, z: &Vector) -> Vector {
        z * self.gamma + &self.xk * (1.0 - self.gamma)
    }

    /// h(z) = A φ(γz + (1−γ)x_k) + ρ_d(v_k; z).
    pub fn h(&self, z: &Vector) -> f64 {
        let b = &self.problem.b;
        self.a_next * self.problem.phi(&self.map_x(z))
            + bregman(b, self.alpha_prox, &self.problem.x0, &self.vk, z)
    }

    /// z-space domain: the set {z : γz + (1−γ)x_k ∈ Q}.
    pub fn domain_z(&self) -> SimpleSet {
        let c = &self.xk * (1.0 - self.gamma);
        match self.problem.outer.q_set() {
            SimpleSet::All => SimpleSet::All,
            SimpleSet::Box { lower, upper } => SimpleSet::Box {
                lower: (lower - &c) / self.gamma,
                upper: (upper - &c) / self.gamma,
            },
            SimpleSet::Ball { center, radius } => SimpleSet::Ball {
                center: (center - &c) / self.gamma,
                radius: radius / self.gamma,
            },
        }
    }

    /// One cubic Newton step on h from anchor z with regularization M̄:
    /// minimize A·F(x(z'), Ω₂(f∘map, z; z')) + ρ_d(v_k; z') + (M̄/6)‖z'−z‖³.
    pub fn cubic_newton_step(
        &self,
        z: &Vector,
        mbar: f64,
        opts: &StepOptions,
    ) -> Result<(Vector, f64, usize)> {
        let b = &self.problem.b;
        let xz = self.map_x(z);
        let fvals = self.problem.f.eval_all(b, &xz);
        let grads: Vec<Vector> =
            self.problem.f.grad_all(b, &xz).into_iter().map(|g| g * self.gamma).collect();
        let hessians: Vec<Matrix> = self
            .problem
            .f
            .hess_all(b, &xz)
            .into_iter()
            .map(|h| h * (self.gamma * self.gamma))
            .collect();
        let lin = match &self.problem.outer.kind {
            OuterKind::AdditiveComposite { linear, .. } => {
                linear.as_ref().map(|l| l * (self.gamma * self.a_next))
            }
            _ => None,
        };
        let obj = InnerCubic {
            sub: self,
            z: z.clone(),
            fvals,
            grads,
            hessians,
            lin_scaled: lin,
            mbar,
        };
        // h is scaled by A_{k+1}, so stationarity tolerances must scale too
        let tol = opts.newton_tol * (1.0 + self.a_next);
        match self.domain_z() {
            SimpleSet::All => {
                let out = damped_newton(&obj, b, z, tol, opts.max_newton_iter);
                Ok((out.x, out.grad_norm, out.iters))
            }
            q => {
                let l0 = crate::linalg::sym_eigen_bounds_wrt(&obj.hess(z), b).1.abs() + 1.0;
                let out = fista(
                    &q,
                    b,
                    z,
                    l0,
                    |x| obj.value(x),
                    |x| obj.grad(x),
                    opts.fista_tol * (1.0 + self.a_next),
                    opts.max_fista_iter,
                );
                Ok((out.x, out.pg_norm, out.iters))
            }
        }
    }
}

struct InnerCubic<'a, 'b> {
    sub: &'a ProxSubproblem<'b>,
    z: Vector,
    fvals: Vec<f64>,
    grads: Vec<Vector>,
    hessians: Vec<Matrix>,
    /// A·γ·ψ-linear, pulled to z-space (additive form only).
    lin_scaled: Option<Vector>,
    mbar: f64,
}

impl InnerCubic<'_, '_> {
    fn args(&self, zp: &Vector) -> Vec<f64> {
        let d = zp - &self.z;
        (0..self.fvals.len())
            .map(|i| {
                self.fvals[i] + self.grads[i].dot(&d) + 0.5 * d.dot(&(&self.hessians[i] * &d))
            })
            .collect()
    }
}

impl Smooth for InnerCubic<'_, '_> {
    fn value(&self, zp: &Vector) -> f64 {
        let sub = self.sub;
        let b = &sub.problem.b;
        let args = self.args(zp);
        let outer_part = match &sub.problem.outer.kind {
            OuterKind::LogSumExp => sub.a_next * log_sum_exp(&args),
            _ => {
                sub.a_next * args[0] + self.lin_scaled.as_ref().map_or(0.0, |l| l.dot(zp))
            }
        };
        outer_part
            + bregman(b, sub.alpha_prox, &sub.problem.x0, &sub.vk, zp)
            + self.mbar / 6.0 * b.norm_vec(&(zp - &self.z)).powi(3)
    }

    fn grad(&self, zp: &Vector) -> Vector {
        let sub = self.sub;
        let b = &sub.problem.b;
        let d = zp - &self.z;
        let args = self.args(zp);
        let mut g = match &sub.problem.outer.kind {
            OuterKind::LogSumExp => {
                let w = softmax(&args);
                let mut g = Vector::zeros(zp.len());
                for (i, wi) in w.iter().enumerate() {
                    let gi = &self.grads[i] + &self.hessians[i] * &d;
                    g.axpy(sub.a_next * wi, &gi, 1.0);
                }
                g
            }
            _ => {
                let mut g = (&self.grads[0] + &self.hessians[0] * &d) * sub.a_next;
                if let Some(l) = &self.lin_scaled {
                    g += l;
                }
                g
            }
        };
        // prox term: ∇ρ_d(v_k; z') = ∇d(z') − ∇d(v_k)
        g += prox_d_grad(b, sub.alpha_prox, &sub.problem.x0, zp);
        g -= prox_d_grad(b, sub.alpha_prox, &sub.problem.x0, &sub.vk);
        // cubic regularizer
        let r = b.norm_vec(&d);
        if r > 0.0 {
            g += b.apply(&d) * (0.5 * self.mbar * r);
        }
        g
    }

    fn hess(&self, zp: &Vector) -> Matrix {
        let sub = self.sub;
        let b = &sub.problem.b;
        let d = zp - &self.z;
        let n = zp.len();
        let args = self.args(zp);
        let mut h = match &sub.problem.outer.kind {
            OuterKind::LogSumExp => {
                let w = softmax(&args);
                let mut h = Matrix::zeros(n, n);
                let mut gbar = Vector::zeros(n);
                for (i, wi) in w.iter().enumerate() {
                    let gi = &self.grads[i] + &self.hessians[i] * &d;
                    h += &self.hessians[i] * (sub.a_next * wi);
                    h += &gi * gi.transpose() * (sub.a_next * wi);
                    gbar.axpy(*wi, &gi, 1.0);
                }
                h -= &gbar * gbar.transpose() * sub.a_next;
                h
            }
            _ => &self.hessians[0] * sub.a_next,
        };
        h += power_hess(b, &sub.problem.x0, 3, sub.alpha_prox / 3.0, zp);
        h += power_hess(b, &self.z, 3, self.mbar / 6.0, zp);
        h
    }
}

/// Per-outer-iteration record of the scheme, kept on the trace for
/// inspection by the acceptance suite.
#[derive(Debug, Clone)]
pub struct AcOuterRecord {
    pub k: usize,
    pub a_next: f64,
    pub gamma: f64,
    pub mbar: f64,
    pub gap_estimate: f64,
    pub inner_cap: usize,
    /// h values along the inner run, starting at z₀ = v_k.
    pub h_values: Vec<f64>,
    pub x_prev: Vector,
    pub v_prev: Vector,
}

pub fn run_contracting_prox(problem: &CompositeProblem, config: &MethodConfig) -> Result<RunTrace> {
    let fl2 = problem.f_of_lipschitz(2);
    if !fl2.is_finite() {
        return Err(FcError::Inapplicable("F(L_2(f)) = +inf".into()));
    }
    if !(fl2 > 0.0) {
        return Err(FcError::Config(
            "F(L_2(f)) = 0 gives a degenerate prox function; nothing to accelerate".into(),
        ));
    }
    if !problem.outer.is_subhomogeneous() {
        return Err(FcError::Inapplicable(
            "contracting proximal scheme needs a subhomogeneous outer function".into(),
        ));
    }
    match &problem.outer.kind {
        OuterKind::AdditiveComposite { .. } | OuterKind::LogSumExp => {}
        _ => {
            return Err(FcError::Inapplicable(
                "contracting proximal scheme supports the additive and log-sum-exp outer forms".into(),
            ))
        }
    }
    let alpha_prox = fl2;
    let delta = config.delta.unwrap_or(1e-6);
    let b = &problem.b;

    // rho_d(x0; x*) estimate for the inner budget: D0 when available, else a
    // short cubic Newton pre-run to locate the optimum roughly.
    let rho_hat = match problem.effective_d0() {
        Some(d0) => alpha_prox / 3.0 * d0.powi(3),
        None => {
            // 50 cubic Newton steps to locate the optimum roughly
            let mut xk = problem.x0.clone();
            let mut best = (problem.phi(&xk), xk.clone());
            for _ in 0..50 {
                let step =
                    crate::subproblem::cubic_step(problem, &xk, fl2, &config.step_options)?;
                xk = step.y;
                let val = problem.phi(&xk);
                if val < best.0 {
                    best = (val, xk.clone());
                }
            }
            let r_hat = 2.0 * b.norm_vec(&(&best.1 - &problem.x0)) + 1e-6;
            alpha_prox / 3.0 * r_hat.powi(3)
        }
    };

    let mut trace = RunTrace::new(config.method);
    trace.notes.push(format!("delta = {delta:.6e}, rho_hat = {rho_hat:.6e}"));
    let mut details: Vec<AcOuterRecord> = Vec::new();

    let mut x = problem.x0.clone();
    let mut v = problem.x0.clone();
    let mut a_cur = 0.0f64;
    let phi0 = problem.phi(&x);
    trace.rows.push(TraceRow {
        k: 0,
        phi: phi0,
        gap: gap_of(problem, phi0),
        bound: None,
        step_norm: 0.0,
        inner_iters: 0,
        kkt: 0.0,
    });

    for k in 0..config.iters {
        let a_next = (((k + 1) as f64) / 3.0).powi(3);
        let gamma = (a_next - a_cur) / a_next;
        let sub = ProxSubproblem {
            problem,
            a_next,
            gamma,
            xk: x.clone(),
            vk: v.clone(),
            alpha_prox,
        };
        let mbar = gamma.powi(3) * a_next * fl2;
        let t3 = (k as f64).max(1.0).powi(3);
        let gap_est = 9.0 * (rho_hat + t3 * delta + t3 * (delta * rho_hat).sqrt());
        let n_cap = ((gap_est / delta).max(4.0 / 3.0).ln() / (4.0f64 / 3.0).ln()).ceil() as usize;
        let n_cap = n_cap.clamp(1, 400);

        let mut z = sub.domain_z().project(b, &v);
        let mut h_prev = sub.h(&z);
        let mut h_values = vec![h_prev];
        let mut last_kkt = 0.0;
        let mut used = 0usize;
        for _t in 0..n_cap {
            let (z_next, kkt, _) = sub.cubic_newton_step(&z, mbar, &config.step_options)?;
            let h_next = sub.h(&z_next);
            if !(h_next <= h_prev + 1e-12 * (1.0 + h_prev.abs())) {
                // inner model step failed to decrease h; keep the better point
                break;
            }
            z = z_next;
            last_kkt = kkt;
            used += 1;
            h_values.push(h_next);
            let decrease = h_prev - h_next;
            h_prev = h_next;
            if decrease < 0.25 * delta {
                break;
            }
        }
        if used == n_cap {
            trace.warnings.push(format!(
                "outer iteration {k}: inner budget {n_cap} exhausted; continuing with best iterate"
            ));
        }
        details.push(AcOuterRecord {
            k,
            a_next,
            gamma,
            mbar,
            gap_estimate: gap_est,
            inner_cap: n_cap,
            h_values,
            x_prev: x.clone(),
            v_prev: v.clone(),
        });

        let x_next = sub.map_x(&z);
        let sn = b.norm_vec(&(&x_next - &x));
        v = z;
        x = x_next;
        a_cur = a_next;
        let phi_x = problem.phi(&x);
        trace.rows.push(TraceRow {
            k: k + 1,
            phi: phi_x,
            gap: gap_of(problem, phi_x),
            bound: None,
            step_norm: sn,
            inner_iters: used,
            kkt: last_kkt,
        });
    }
    trace.ac_details = Some(details);
    Ok(trace)
}
