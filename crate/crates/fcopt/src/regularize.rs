//! Regularization of plain convex instances into uniformly convex ones:
//! build dᵢ(x) = fᵢ(x) + cᵢ/(p+1)·‖x − x₀‖^{p+1}, form
//! φ_μ(x) = F(x, (1−μ)f(x) + μd(x)), pick μ from the local measure ξ, and
//! drive the basic method on φ_μ until its linear-rate certificate covers
//! the requested accuracy of the original problem.

use crate::error::{FcError, Result};
use crate::linalg::Vector;
use crate::methods::{MethodId, RunStatus, RunTrace, TraceRow};
use crate::oracle::PowerTerm;
use crate::problem::CompositeProblem;
use crate::subproblem::{full_step, StepOptions};

/// The regularizing vector function d, relative to a center x₀.
#[derive(Debug, Clone)]
pub struct Regularizer {
    pub center: Vector,
    /// Model order p the regularizer is built for; the power degree is p+1.
    pub p: u32,
    pub coeffs: Vec<f64>,
    /// True when every cᵢ is the default L_p(fᵢ); the closed-form condition
    /// number below is only valid in that case.
    pub defaults_used: bool,
    /// True when no base component declares uniform convexity of degree p+1
    /// (the regime the regularization scheme targets).
    pub base_flat: bool,
}

impl Regularizer {
    /// d(x), componentwise.
    pub fn d_eval(&self, problem: &CompositeProblem, x: &Vector) -> Vec<f64> {
        let base = problem.f.eval_all(&problem.b, x);
        let r = problem.b.norm_vec(&(x - &self.center));
        let q = self.p + 1;
        base.iter()
            .zip(&self.coeffs)
            .map(|(f, c)| f + c / q as f64 * r.powi(q as i32))
            .collect()
    }

    /// d(x) − f(x) ≥ 0, componentwise (exactly zero at the center).
    pub fn gap_eval(&self, problem: &CompositeProblem, x: &Vector) -> Vec<f64> {
        let r = problem.b.norm_vec(&(x - &self.center));
        let q = self.p + 1;
        self.coeffs.iter().map(|c| c / q as f64 * r.powi(q as i32)).collect()
    }
}

/// Build the regularizer with cᵢ = L_p(fᵢ) by default; components with
/// L_p = 0 or L_p = ∞ need explicit coefficients.
pub fn build_regularizer(
    problem: &CompositeProblem,
    p: u32,
    coeffs: Option<Vec<f64>>,
) -> Result<Regularizer> {
    if !(p == 1 || p == 2) {
        return Err(FcError::Config("regularizer order must be 1 or 2".into()));
    }
    let lvec = problem.f.lipschitz_vec(p);
    let (coeffs, defaults_used) = match coeffs {
        Some(c) => {
            if c.len() != problem.m() {
                return Err(FcError::DimensionMismatch { expected: problem.m(), got: c.len() });
            }
            if c.iter().any(|ci| !(ci > &0.0) || !ci.is_finite()) {
                return Err(FcError::Config("regularizer coefficients must be positive and finite".into()));
            }
            let def = c.iter().zip(&lvec).all(|(ci, li)| (ci - li).abs() <= 1e-15 * li.max(1.0));
            (c, def)
        }
        None => {
            for (i, l) in lvec.iter().enumerate() {
                if *l == 0.0 || !l.is_finite() {
                    return Err(FcError::Config(format!(
                        "component {i} has L_{p} = {l}; supply an explicit regularizer coefficient"
                    )));
                }
            }
            (lvec.clone(), true)
        }
    };
    let base_flat = problem.f.sigma_vec(p).iter().all(|s| *s == 0.0);
    Ok(Regularizer { center: problem.x0.clone(), p, coeffs, defaults_used, base_flat })
}

/// The regularized problem φ_μ with its effective vector function
/// (1−μ)f + μd = f + μ·(cᵢ/(p+1))‖x−x₀‖^{p+1} and updated constants
/// σ_{p+1} += μcᵢ/2^{p−1}, L_p += μcᵢ·p!.
#[derive(Debug, Clone)]
pub struct RegularizedProblem {
    pub mu: f64,
    pub regularizer: Regularizer,
    pub problem: CompositeProblem,
}

pub fn regularized_problem(
    original: &CompositeProblem,
    reg: &Regularizer,
    mu: f64,
) -> Result<RegularizedProblem> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(FcError::Config("mu must lie in [0, 1]".into()));
    }
    let p = reg.p;
    let q = p + 1;
    let mut f = original.f.clone();
    for (i, comp) in f.components.iter_mut().enumerate() {
        let c = reg.coeffs[i];
        if mu > 0.0 {
            comp.augment = Some(PowerTerm {
                center: reg.center.clone(),
                degree: q,
                coeff: mu * c / q as f64,
            });
            let fact = if p == 1 { 1.0 } else { 2.0 };
            let pow2 = if p == 1 { 1.0 } else { 2.0 };
            match p {
                1 => {
                    comp.constants.l1 += mu * c * fact;
                    comp.constants.sigma2 += mu * c / pow2 * 2.0 / 2.0;
                }
                _ => {
                    comp.constants.l2 += mu * c * fact;
                    comp.constants.sigma3 += mu * c / pow2;
                    // a cubic term destroys global Lipschitz continuity of the gradient
                    comp.constants.l1 = f64::INFINITY;
                }
            }
        }
    }
    // the level sets of phi_mu sit inside those of phi, so D0 carries over
    let problem = CompositeProblem::new(
        f,
        original.outer.clone(),
        original.b.clone(),
        original.x0.clone(),
        None,
        original.d0,
        original.diameter,
    )?;
    Ok(RegularizedProblem { mu, regularizer: reg.clone(), problem })
}

/// Condition number β of the regularized problem. With the default
/// cᵢ = L_p(fᵢ) and a base with σ_{p+1}(f) = 0 it has the closed form
/// β = [1 + ((1+p)·2^{p−1}·(1/(μ·p!) + 1))^{1/p}]⁻¹; otherwise it is the
/// generic β̂_p of the effective vector function. μ = 0 gives 0.
pub fn regularized_condition_number(reg: &RegularizedProblem, p: u32) -> Result<f64> {
    if reg.mu == 0.0 {
        return Ok(0.0);
    }
    if reg.regularizer.defaults_used && reg.regularizer.base_flat {
        let pf = if p == 1 { 1.0 } else { 2.0 };
        let pow2 = if p == 1 { 1.0 } else { 2.0 };
        let inner = (1.0 + p as f64) * pow2 * (1.0 / (reg.mu * pf) + 1.0);
        Ok(1.0 / (1.0 + inner.powf(1.0 / p as f64)))
    } else {
        reg.problem.f.hat_beta(p)
    }
}

/// The local measure ξ_A(x; g) = min{λ > 0 : F(x, f(x) + g/λ) ≤ A},
/// computed by bisection over λ ∈ [1e-12, 1e12] (feasibility is monotone in
/// λ because F is monotone in u and g ≥ 0). Returns +∞ when even λ = 1e12
/// fails, and the lower bracket when it is already feasible (g = 0 case).
pub fn xi_measure(problem: &CompositeProblem, x: &Vector, g: &[f64], a: f64) -> Result<f64> {
    if g.len() != problem.m() {
        return Err(FcError::DimensionMismatch { expected: problem.m(), got: g.len() });
    }
    if g.iter().any(|gi| *gi < 0.0) {
        return Err(FcError::Domain("xi measure needs a nonnegative vector g".into()));
    }
    let phi_x = problem.phi(x);
    if !(phi_x < a) {
        return Err(FcError::Domain(format!(
            "xi measure needs phi(x) = {phi_x} strictly below the level A = {a}"
        )));
    }
    let fx = problem.f.eval_all(&problem.b, x);
    let feasible = |lam: f64| -> bool {
        let u: Vec<f64> = fx.iter().zip(g).map(|(fi, gi)| fi + gi / lam).collect();
        problem.outer.eval(&problem.b, x, &u) <= a
    };
    let (mut lo, mut hi) = (1e-12, 1e12);
    if feasible(lo) {
        return Ok(lo);
    }
    if !feasible(hi) {
        return Ok(f64::INFINITY);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// μ = δ²/ξ₀, clipped into (0, 1].
pub fn choose_mu(target_delta: f64, xi0_estimate: f64) -> Result<f64> {
    if !(xi0_estimate > 0.0) {
        return Err(FcError::Config("xi estimate must be positive".into()));
    }
    if !(target_delta > 0.0) {
        return Err(FcError::Config("delta must be positive".into()));
    }
    Ok((target_delta * target_delta / xi0_estimate).min(1.0))
}

/// Everything the regularization pipeline decided, for inspection/tests.
#[derive(Debug, Clone)]
pub struct RegSolveReport {
    pub mu: f64,
    pub delta: f64,
    pub xi_hat: f64,
    pub level_a: f64,
    pub gap0_hat: f64,
    pub beta: f64,
    pub inner_iterations: usize,
    pub reg: RegularizedProblem,
    /// Thinned iterates (k, x_k) along the regularized run.
    pub iterates: Vec<(usize, Vector)>,
}

/// Solve a plain convex instance through the regularization scheme to
/// original-problem accuracy ε: pre-run to estimate the initial gap and the
/// local measure, pick μ ≈ δ²/ξ̂, then run the full-step basic method on
/// φ_μ until its (1−β)^k certificate reaches δ.
pub fn solve_via_regularization(
    problem: &CompositeProblem,
    p: u32,
    epsilon: f64,
    opts: &StepOptions,
) -> Result<(RunTrace, RegSolveReport)> {
    if !(epsilon > 0.0) {
        return Err(FcError::Config("epsilon must be positive".into()));
    }
    let b = &problem.b;
    let phi0 = problem.phi(&problem.x0);

    // cheap pre-run of the plain full-step method for the estimates
    let mut x_hat = problem.x0.clone();
    let mut phi_hat = phi0;
    {
        let mut x = problem.x0.clone();
        for _ in 0..100 {
            let step = full_step(problem, &x, p, None, opts)?;
            x = step.y;
            let v = problem.phi(&x);
            if v < phi_hat {
                phi_hat = v;
                x_hat = x.clone();
            }
        }
    }
    let gap0_hat = (phi0 - phi_hat).max(epsilon * 1e-3).max(1e-14);
    let level_a = phi0 + gap0_hat;

    let reg = build_regularizer(problem, p, None)?;
    let g_hat = reg.gap_eval(problem, &x_hat);
    let xi_hat = match xi_measure(problem, &problem.x0, &g_hat, level_a)? {
        x if x.is_finite() => x.max(1e-12),
        _ => 1.0,
    };
    // split the budget: delta·gap0 for the inner run, 2√(μξ)(A − φ*) for the
    // regularization bias, each held below ε/2 with the pre-run estimates
    let delta = (epsilon / (4.0 * gap0_hat)).min(0.5);
    let s_hat = (level_a - phi_hat).max(gap0_hat);
    let mu = choose_mu(epsilon / (4.0 * s_hat), xi_hat)?;

    let rp = regularized_problem(problem, &reg, mu)?;
    let beta = regularized_condition_number(&rp, p)?;
    if !(beta > 0.0) {
        return Err(FcError::Numerical("regularized condition number vanished".into()));
    }
    let iters = ((1.0 / delta).ln() / -(1.0 - beta).ln()).ceil().max(1.0) as usize;
    let iters = iters.min(300_000_000);

    let mut trace = RunTrace::new(MethodId::FullBasic);
    trace.notes.push(format!(
        "regularize-solve: mu = {mu:.6e}, delta = {delta:.6e}, xi_hat = {xi_hat:.6e}, A = {level_a:.6e}, beta = {beta:.6e}, planned iterations = {iters}"
    ));
    trace.notes.push(format!(
        "accuracy split: delta*gap0_hat = {:.3e}, 2*sqrt(mu*xi_hat)*(A - phi_hat) = {:.3e}",
        delta * gap0_hat,
        2.0 * (mu * xi_hat).sqrt() * s_hat
    ));

    // thinned trace: keep every iterate early on, then sample geometrically
    let mut keep_every = 1usize;
    let mut x = problem.x0.clone();
    let mut iterates = vec![(0usize, x.clone())];
    let push = |trace: &mut RunTrace, k: usize, x: &Vector, sn: f64, kkt: f64, it: usize| {
        let phi_orig = problem.phi(x);
        trace.rows.push(TraceRow {
            k,
            phi: phi_orig,
            gap: problem.known_opt.map(|o| phi_orig - o),
            bound: Some((1.0 - beta).powi(k as i32) * gap0_hat),
            step_norm: sn,
            inner_iters: it,
            kkt,
        });
    };
    push(&mut trace, 0, &x, 0.0, 0.0, 0);
    let mut inner_total = 0usize;
    for k in 1..=iters {
        let step = full_step(&rp.problem, &x, p, None, opts)?;
        inner_total += step.inner_iterations;
        let sn = b.norm_vec(&(&step.y - &x));
        x = step.y;
        if k % keep_every == 0 || k == iters {
            push(&mut trace, k, &x, sn, step.kkt_residual, step.inner_iterations);
            iterates.push((k, x.clone()));
            if trace.rows.len() > 200 {
                keep_every *= 2;
            }
        }
        if !step.converged {
            trace.status = RunStatus::ConvergenceFailure(format!(
                "regularized subproblem stalled at iteration {k} (residual {:.3e})",
                step.kkt_residual
            ));
            break;
        }
    }
    let report = RegSolveReport {
        mu,
        delta,
        xi_hat,
        level_a,
        gap0_hat,
        beta,
        inner_iterations: inner_total,
        reg: rp,
        iterates,
    };
    Ok((trace, report))
}
