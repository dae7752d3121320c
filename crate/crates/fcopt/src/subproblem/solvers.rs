//! Generic numeric kernels shared by the per-iteration subproblem solvers:
//! projected gradient ascent for small concave duals, damped Newton for
//! smooth strongly convex primals, FISTA over simple sets, and the secular
//! one-dimensional root solve behind cubic-regularized steps.

use nalgebra::Cholesky;

use crate::error::{FcError, Result};
use crate::linalg::{Matrix, NormOperator, Vector};

/// Feasible set for dual multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSet {
    /// λ on the unit simplex (max-form duals).
    Simplex,
    /// λ⁽¹⁾ = 1, λ⁽ⁱ⁾ ≥ 0 for i ≥ 2 (constraint-form duals).
    FixedFirst,
}

/// Euclidean projection onto the unit simplex (Duchi et al.).
pub fn project_simplex(v: &mut [f64]) {
    let m = v.len();
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cssv = 0.0;
    let mut rho = 0usize;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cssv += ui;
        let t = (cssv - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            rho = i + 1;
            theta = t;
        }
    }
    if rho == 0 {
        // all mass on the largest coordinate
        let arg = (0..m).max_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap()).unwrap();
        for x in v.iter_mut() {
            *x = 0.0;
        }
        v[arg] = 1.0;
        return;
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

pub fn project_lambda(set: LambdaSet, lam: &mut [f64]) {
    match set {
        LambdaSet::Simplex => project_simplex(lam),
        LambdaSet::FixedFirst => {
            lam[0] = 1.0;
            for x in lam.iter_mut().skip(1) {
                *x = x.max(0.0);
            }
        }
    }
}

fn kkt_residual(set: LambdaSet, lam: &[f64], grad: &[f64]) -> f64 {
    match set {
        LambdaSet::FixedFirst => {
            let mut s = 0.0;
            for i in 1..lam.len() {
                let r = if lam[i] > 0.0 { grad[i] } else { grad[i].max(0.0) };
                s += r * r;
            }
            s.sqrt()
        }
        LambdaSet::Simplex => {
            let nu: f64 = lam.iter().zip(grad).map(|(l, g)| l * g).sum();
            let mut s = 0.0f64;
            for i in 0..lam.len() {
                let r = if lam[i] > 1e-14 { (grad[i] - nu).abs() } else { (grad[i] - nu).max(0.0) };
                s += r * r;
            }
            s.sqrt()
        }
    }
}

pub struct AscentOutcome {
    pub lambda: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Projected gradient ascent with Barzilai–Borwein step initialization and
/// backtracking. `eval` returns the concave dual value and its gradient, or
/// `None` on an infeasible/−∞ multiplier.
///
/// Terminates on the projected KKT residual; the caller decides what a
/// residual above `tol` means.
pub fn dual_ascent<F>(
    set: LambdaSet,
    m: usize,
    mut eval: F,
    lam0: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<AscentOutcome>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut lam = lam0.unwrap_or_else(|| vec![1.0 / m as f64; m]);
    project_lambda(set, &mut lam);
    let (mut val, mut grad) = match eval(&lam) {
        Some(vg) => vg,
        None => {
            // nudge into the relative interior and retry
            for x in lam.iter_mut() {
                *x += 0.1;
            }
            project_lambda(set, &mut lam);
            eval(&lam).ok_or_else(|| {
                FcError::ModelInfeasible("dual function is -infinity at the starting multiplier".into())
            })?
        }
    };
    let mut t = 1.0f64;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iters = 0usize;
    let mut resid = kkt_residual(set, &lam, &grad);

    while iters < max_iter {
        if resid <= tol {
            return Ok(AscentOutcome { lambda: lam, value: val, grad, residual: resid, iters, converged: true });
        }
        // BB step from the previous pair, guarded into a sane range
        if let Some((lp, gp)) = &prev {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..m {
                let dl = lam[i] - lp[i];
                let dg = grad[i] - gp[i];
                num += dl * dl;
                den += dl * dg;
            }
            if den.abs() > 1e-300 {
                t = (num / den.abs()).clamp(1e-12, 1e12);
            }
        }
        prev = Some((lam.clone(), grad.clone()));

        let mut accepted = false;
        for _ in 0..70 {
            let mut cand: Vec<f64> = lam.iter().zip(&grad).map(|(l, g)| l + t * g).collect();
            project_lambda(set, &mut cand);
            let step: f64 = cand
                .iter()
                .zip(&lam)
                .map(|(c, l)| (c - l) * (c - l))
                .sum::<f64>()
                .sqrt();
            if step == 0.0 {
                // projected gradient step goes nowhere: stationary
                return Ok(AscentOutcome {
                    lambda: lam,
                    value: val,
                    grad,
                    residual: resid,
                    iters,
                    converged: resid <= tol,
                });
            }
            if let Some((cv, cg)) = eval(&cand) {
                // sufficient ascent along the projected direction
                let lin: f64 =
                    cand.iter().zip(&lam).zip(&grad).map(|((c, l), g)| (c - l) * g).sum();
                if cv >= val + 1e-4 * lin - 1e-15 * (1.0 + val.abs()) {
                    lam = cand;
                    val = cv;
                    grad = cg;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // no progress at tiny steps: report what we have
            resid = kkt_residual(set, &lam, &grad);
            return Ok(AscentOutcome { lambda: lam, value: val, grad, residual: resid, iters, converged: resid <= tol });
        }
        t *= 1.3;
        resid = kkt_residual(set, &lam, &grad);
        iters += 1;
    }
    Ok(AscentOutcome { lambda: lam, value: val, grad, residual: resid, iters, converged: resid <= tol })
}

/// A smooth objective with oracle access, for damped Newton.
pub trait Smooth {
    fn value(&self, x: &Vector) -> f64;
    fn grad(&self, x: &Vector) -> Vector;
    fn hess(&self, x: &Vector) -> Matrix;
}

pub struct NewtonOutcome {
    pub x: Vector,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Damped Newton with Armijo backtracking and a Levenberg fallback when the
/// Hessian Cholesky fails. Intended for smooth convex objectives with
/// bounded sublevel sets; stops on ‖∇‖* ≤ tol.
pub fn damped_newton<S: Smooth>(
    obj: &S,
    b: &NormOperator,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> NewtonOutcome {
    let mut x = x0.clone();
    let mut val = obj.value(&x);
    let mut iters = 0usize;
    let bmat = b.to_matrix();
    loop {
        let g = obj.grad(&x);
        let gn = b.dual_norm_vec(&g);
        if gn <= tol || iters >= max_iter {
            return NewtonOutcome { x, value: val, grad_norm: gn, iters, converged: gn <= tol };
        }
        let h = obj.hess(&x);
        let mut tau = 0.0f64;
        let dir = loop {
            let hs = if tau == 0.0 { h.clone() } else { &h + &bmat * tau };
            if let Some(ch) = Cholesky::new(hs) {
                break ch.solve(&(-&g));
            }
            tau = if tau == 0.0 { 1e-12 * (1.0 + h.diagonal().amax()) } else { tau * 100.0 };
            if tau > 1e30 {
                // hopeless Hessian; fall back to a plain gradient direction
                break -b.solve(&g);
            }
        };
        let slope = g.dot(&dir);
        if slope >= 0.0 {
            // not a descent direction (numerical breakdown): steepest descent
            let d = -b.solve(&g);
            let mut s = 1.0 / (1.0 + gn);
            let mut ok = false;
            for _ in 0..80 {
                let cand = &x + &d * s;
                let cv = obj.value(&cand);
                if cv < val {
                    x = cand;
                    val = cv;
                    ok = true;
                    break;
                }
                s *= 0.5;
            }
            if !ok {
                return NewtonOutcome { x, value: val, grad_norm: gn, iters, converged: false };
            }
        } else {
            let mut s = 1.0f64;
            let mut ok = false;
            for _ in 0..80 {
                let cand = &x + &dir * s;
                let cv = obj.value(&cand);
                // Armijo with a float-resolution allowance so steps near the
                // minimum are not rejected for rounding noise
                if cv <= val + 1e-4 * s * slope + 4.0 * f64::EPSILON * (1.0 + val.abs()) {
                    x = cand;
                    val = cv;
                    ok = true;
                    break;
                }
                s *= 0.5;
            }
            if !ok {
                let gn = b.dual_norm_vec(&obj.grad(&x));
                return NewtonOutcome { x, value: val, grad_norm: gn, iters, converged: gn <= tol };
            }
        }
        iters += 1;
    }
}

pub struct FistaOutcome {
    pub x: Vector,
    pub value: f64,
    pub pg_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Monotone FISTA over a simple set in the B-geometry, with backtracking on
/// the smoothness constant. Stops when the prox-gradient mapping
/// L·(y − T(y)) has dual norm ≤ tol.
pub fn fista<FV, FG>(
    set: &crate::outer::SimpleSet,
    b: &NormOperator,
    x0: &Vector,
    l0: f64,
    value: FV,
    grad: FG,
    tol: f64,
    max_iter: usize,
) -> FistaOutcome
where
    FV: Fn(&Vector) -> f64,
    FG: Fn(&Vector) -> Vector,
{
    let mut l = l0.max(1e-12);
    let mut x = set.project(b, x0);
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut fx = value(&x);
    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut iters = 0usize;
    let mut pg = f64::INFINITY;

    while iters < max_iter {
        let gy = grad(&y);
        let fy = value(&y);
        // backtrack L until the upper model holds at the prox point
        let mut xn;
        loop {
            xn = set.project(b, &(&y - b.solve(&gy) * (1.0 / l)));
            let d = &xn - &y;
            let rhs = fy + gy.dot(&d) + 0.5 * l * b.norm_vec(&d).powi(2);
            let f_new = value(&xn);
            if f_new <= rhs + 1e-12 * (1.0 + rhs.abs()) || l > 1e18 {
                fx = f_new;
                break;
            }
            l *= 2.0;
        }
        // prox-gradient stationarity measured at the accepted point
        let gx = grad(&xn);
        let tx = set.project(b, &(&xn - b.solve(&gx) * (1.0 / l)));
        pg = l * b.norm_vec(&(&xn - &tx));
        if fx < best_f {
            best_f = fx;
            best_x = xn.clone();
        }
        if pg <= tol {
            return FistaOutcome { x: xn, value: fx, pg_norm: pg, iters, converged: true };
        }
        let theta_new = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_new;
        let y_new = &xn + (&xn - &x) * momentum;
        // restart on non-monotone value
        if fx > best_f + 1e-12 * (1.0 + best_f.abs()) {
            theta = 1.0;
            y = xn.clone();
        } else {
            theta = theta_new;
            y = y_new;
        }
        x = xn;
        l = (l * 0.7).max(1e-12);
        iters += 1;
    }
    let _ = best_x;
    FistaOutcome { x, value: fx, pg_norm: pg, iters, converged: pg <= tol }
}

pub struct SecularOutcome {
    pub step: Vector,
    pub radius: f64,
    pub residual: f64,
    pub iters: usize,
}

/// Minimize ⟨g, s⟩ + ½⟨Hs, s⟩ + (m/6)‖s‖³ over s ∈ E, with H ⪰ 0.
///
/// The stationary point satisfies (H + (m r/2)B) s = −g with r = ‖s‖, so r
/// solves the scalar secular equation ω(r) = ‖(H + (m r/2)B)⁻¹g‖ − r = 0,
/// which is strictly decreasing. Safeguarded Newton with a bisection
/// fallback; tolerance is relative, 1e-12 by default.
pub fn cubic_regularized_step(
    h: &Matrix,
    g: &Vector,
    b: &NormOperator,
    m_coef: f64,
    tol_rel: f64,
) -> Result<SecularOutcome> {
    let n = g.len();
    let gn = b.dual_norm_vec(g);
    if gn == 0.0 {
        return Ok(SecularOutcome { step: Vector::zeros(n), radius: 0.0, residual: 0.0, iters: 0 });
    }
    if m_coef <= 0.0 {
        let ch = Cholesky::new(h.clone()).ok_or_else(|| {
            FcError::NotSpd("cubic coefficient is zero and curvature matrix is singular".into())
        })?;
        let s = ch.solve(&(-g));
        let r = b.norm_vec(&s);
        return Ok(SecularOutcome { step: s, radius: r, residual: 0.0, iters: 1 });
    }
    let bmat = b.to_matrix();
    let solve_at = |r: f64| -> Option<(Vector, Cholesky<f64, nalgebra::Dyn>)> {
        let k = h + &bmat * (0.5 * m_coef * r);
        Cholesky::new(k).map(|ch| (ch.solve(&(-g)), ch))
    };

    // r_hi: ‖s(r)‖ ≤ 2‖g‖*/(m r), so ω < 0 once r² > 2‖g‖*/m
    let mut hi = (2.0 * gn / m_coef).sqrt() * 1.01 + 1e-300;
    let mut lo = 0.0f64;
    // make sure the system at `hi` factors (it must: H PSD, shift > 0)
    let mut r = match solve_at(hi) {
        Some((s, _)) => {
            let nrm = b.norm_vec(&s);
            if nrm > hi {
                // numerically ω(hi) > 0; widen
                hi *= 4.0;
            }
            0.5 * (nrm + hi).min(hi)
        }
        None => return Err(FcError::Numerical("cubic step: shifted system would not factor".into())),
    };
    r = r.clamp(1e-300, hi);

    let mut iters = 0usize;
    for _ in 0..200 {
        iters += 1;
        match solve_at(r) {
            Some((s, ch)) => {
                let nrm = b.norm_vec(&s);
                let omega = nrm - r;
                if omega.abs() <= tol_rel * r.max(1e-100) {
                    return Ok(SecularOutcome { step: s, radius: nrm, residual: omega.abs(), iters });
                }
                if omega > 0.0 {
                    lo = lo.max(r);
                } else {
                    hi = hi.min(r);
                }
                // Newton on ω: dω/dr = d‖s‖/dr − 1, d‖s‖/dr = −(m/2)⟨Bs, K⁻¹Bs⟩/‖s‖
                let bs = b.apply(&s);
                let kinv_bs = ch.solve(&bs);
                let dnrm = -(0.5 * m_coef) * bs.dot(&kinv_bs) / nrm.max(1e-300);
                let slope = dnrm - 1.0;
                let mut cand = r - omega / slope;
                if !(cand > lo && cand < hi) || !cand.is_finite() {
                    cand = 0.5 * (lo + hi);
                }
                r = cand;
            }
            None => {
                // singular on the low side; push the bracket up
                lo = lo.max(r);
                r = if hi.is_finite() { 0.5 * (lo + hi) } else { r * 2.0 };
            }
        }
        if hi - lo <= tol_rel * hi.max(1e-100) {
            break;
        }
    }
    match solve_at(r.max(lo).min(hi)) {
        Some((s, _)) => {
            let nrm = b.norm_vec(&s);
            let resid = (nrm - r).abs();
            if resid > 1e-6 * r.max(1.0) {
                return Err(FcError::Numerical(format!(
                    "cubic step bracket failed: r = {r:.6e}, |omega| = {resid:.3e}, bracket [{lo:.3e}, {hi:.3e}]"
                )));
            }
            Ok(SecularOutcome { step: s, radius: nrm, residual: resid, iters })
        }
        None => Err(FcError::Numerical("cubic step: final system singular".into())),
    }
}
