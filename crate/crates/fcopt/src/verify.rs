//! Executable verifiers for the structural inequalities the methods rest
//! on: the two growth inequalities of uniformly convex smooth functions,
//! convexity of their right-hand sides, the vector growth inequality, the
//! four equivalent subhomogeneity conditions, and rate checks on traces.
//!
//! Every check is a falsifier: it samples deterministically from a seed and
//! reports the worst violation against the stated slack, with a witness
//! that reproduces the failure.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{NormOperator, Vector};
use crate::methods::RunTrace;
use crate::oracle::{beta, SmoothComponent, VectorFunction};
use crate::outer::{OuterFunction, OuterKind};
use crate::problem::CompositeProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of one check. `max_excess` is the largest violation beyond the
/// per-sample slack (negative values mean the inequality held with margin);
/// the check passes iff it is ≤ 0.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub id: String,
    pub samples: usize,
    pub max_excess: f64,
    pub witness: Option<String>,
    pub status: CheckStatus,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(id: impl Into<String>, seed: u64) -> Self {
        CheckReport {
            id: id.into(),
            samples: 0,
            max_excess: f64::NEG_INFINITY,
            witness: None,
            status: CheckStatus::Pass,
            seed,
            notes: Vec::new(),
        }
    }

    fn record(&mut self, excess: f64, witness: impl FnOnce() -> String) {
        if excess > self.max_excess {
            self.max_excess = excess;
            if excess > 0.0 {
                self.witness = Some(witness());
            }
        }
    }

    fn finalize(mut self) -> Self {
        if self.samples == 0 {
            self.status = CheckStatus::Inconclusive;
        } else if self.max_excess > 0.0 {
            self.status = CheckStatus::Fail;
        } else {
            self.status = CheckStatus::Pass;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        z * scale
    })
}

/// Both inequalities of the main growth theorem for a uniformly convex
/// component with finite L_p, sampled over (x, y, β) with β ≤ β_p(f, α)
/// and the endpoint itself hit every eighth sample.
pub fn check_theorem_main(
    component: &SmoothComponent,
    b: &NormOperator,
    p: u32,
    alpha: f64,
    samples: usize,
    seed: u64,
    scale: f64,
) -> CheckReport {
    let mut report = CheckReport::new(format!("theorem-main-p{p}"), seed);
    let l = component.constants.lipschitz(p);
    let sigma = component.constants.sigma(p);
    if !(sigma > 0.0) || !l.is_finite() {
        report.notes.push("component is not uniformly convex with finite L_p; skipped".into());
        return report.finalize();
    }
    let beta_max = match beta(component, p, alpha) {
        Ok(v) => v,
        Err(e) => {
            report.notes.push(format!("beta undefined: {e}"));
            return report.finalize();
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = b.dim();
    for s in 0..samples {
        let x = gaussian(&mut rng, n, scale);
        let y = gaussian(&mut rng, n, scale);
        let bfrac: f64 = rng.gen_range(0.0..1.0);
        let bt = if s % 8 == 0 { beta_max } else { bfrac * beta_max };
        let h = &y - &x;
        let r = b.norm_vec(&h);
        let gx = component.grad(b, &x);
        let gy = component.grad(b, &y);
        let slack = 1e-8 * (1.0 + r.powi(p as i32 + 1));

        // gradient growth
        let lhs_g = (&gy - &gx).dot(&h);
        let mut rhs_g = alpha * l * bt.powi(p as i32) / fact(p) * r.powi(p as i32 + 1);
        if p == 2 {
            rhs_g += bt * h.dot(&(component.hess(b, &x) * &h));
        }
        report.record((rhs_g - lhs_g) - slack, || {
            format!("gradient growth at x={:?}, y={:?}, beta={bt}", x.as_slice(), y.as_slice())
        });

        // functional growth
        let lhs_f = component.eval(b, &y);
        let mut rhs_f = component.eval(b, &x)
            + gx.dot(&h)
            + alpha * l * bt.powi(p as i32) / fact(p + 1) * r.powi(p as i32 + 1);
        if p == 2 {
            rhs_f += 0.5 * bt * h.dot(&(component.hess(b, &x) * &h));
        }
        report.record((rhs_f - lhs_f) - slack, || {
            format!("functional growth at x={:?}, y={:?}, beta={bt}", x.as_slice(), y.as_slice())
        });
        report.samples += 1;
    }
    report.finalize()
}

fn fact(k: u32) -> f64 {
    (1..=k as u64).product::<u64>() as f64
}

/// Midpoint convexity in y of the functional-growth right-hand side, valid
/// for α ≥ p.
pub fn check_remark_convexity(
    component: &SmoothComponent,
    b: &NormOperator,
    p: u32,
    alpha: f64,
    samples: usize,
    seed: u64,
    scale: f64,
) -> CheckReport {
    let mut report = CheckReport::new(format!("remark-convexity-p{p}"), seed);
    if alpha < p as f64 {
        report.notes.push("convexity of the right-hand side needs alpha >= p; skipped".into());
        return report.finalize();
    }
    let l = component.constants.lipschitz(p);
    if !l.is_finite() {
        report.notes.push("L_p infinite; skipped".into());
        return report.finalize();
    }
    let beta_max = beta(component, p, alpha).unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = b.dim();
    for s in 0..samples {
        let x = gaussian(&mut rng, n, scale);
        let y1 = gaussian(&mut rng, n, scale);
        let y2 = gaussian(&mut rng, n, scale);
        let bfrac: f64 = rng.gen_range(0.0..1.0);
        let bt = if s % 8 == 0 { beta_max } else { bfrac * beta_max.max(1e-3) };
        let gx = component.grad(b, &x);
        let hx = if p == 2 { Some(component.hess(b, &x)) } else { None };
        let fx = component.eval(b, &x);
        let rhs = |y: &Vector| -> f64 {
            let h = y - &x;
            let r = b.norm_vec(&h);
            let mut v =
                fx + gx.dot(&h) + alpha * l * bt.powi(p as i32) / fact(p + 1) * r.powi(p as i32 + 1);
            if let Some(hm) = &hx {
                v += 0.5 * bt * h.dot(&(hm * &h));
            }
            v
        };
        let mid = (&y1 + &y2) * 0.5;
        let excess = rhs(&mid) - 0.5 * (rhs(&y1) + rhs(&y2)) - 1e-9;
        report.record(excess, || {
            format!("midpoint convexity at y1={:?}, y2={:?}, beta={bt}", y1.as_slice(), y2.as_slice())
        });
        report.samples += 1;
    }
    report.finalize()
}

/// A function of u that the subhomogeneity checks can interrogate: either a
/// built-in outer form frozen at an x in its domain, or the planted
/// counterexample F(u) = u² (not subhomogeneous past u = 1).
pub enum UOuter<'a> {
    Builtin { outer: &'a OuterFunction, b: &'a NormOperator, x: Vector },
    SquareExample,
}

impl UOuter<'_> {
    fn m(&self) -> usize {
        match self {
            UOuter::Builtin { outer, .. } => outer.m,
            UOuter::SquareExample => 1,
        }
    }

    fn eval(&self, u: &[f64]) -> f64 {
        match self {
            UOuter::Builtin { outer, b, x } => outer.eval(b, x, u),
            UOuter::SquareExample => u[0] * u[0],
        }
    }

    fn subgrad(&self, u: &[f64]) -> Vec<f64> {
        match self {
            UOuter::Builtin { outer, .. } => outer.subgrad_u(u),
            UOuter::SquareExample => vec![2.0 * u[0]],
        }
    }
}

/// The four equivalent subhomogeneity conditions on common samples:
/// scaling (F(γu) ≤ γF(u), γ ≥ 1), the two subgradient forms, and
/// subadditivity along rays. Samples with infinite values are skipped.
pub fn check_subhomo_equivalence(
    f: &UOuter<'_>,
    samples: usize,
    seed: u64,
    scale: f64,
) -> CheckReport {
    let mut report = CheckReport::new("subhomo-equivalence", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = f.m();
    let slack = 1e-9;
    let mut per_condition = [0usize; 4];
    for _ in 0..samples {
        let u: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect();
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect();
        let t: f64 = rng.gen_range(0.0..3.0);
        let gamma: f64 = rng.gen_range(1.0..3.0);
        let fu = f.eval(&u);
        let fv = f.eval(&v);
        if !fu.is_finite() || !fv.is_finite() {
            continue;
        }
        report.samples += 1;

        // (0) scaling
        let gu: Vec<f64> = u.iter().map(|x| gamma * x).collect();
        let fgu = f.eval(&gu);
        if fgu.is_finite() {
            let e = fgu - gamma * fu - slack;
            if e > 0.0 {
                per_condition[0] += 1;
            }
            report.record(e, || format!("scaling: u={u:?}, gamma={gamma}"));
        }
        // (1) ⟨g_u, u⟩ ≤ F(u)
        let g1 = f.subgrad(&u);
        let e1 = g1.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - fu - slack;
        if e1 > 0.0 {
            per_condition[1] += 1;
        }
        report.record(e1, || format!("subgradient-at-u: u={u:?}"));
        // (2) ⟨g_v, u⟩ ≤ F(u)
        let g2 = f.subgrad(&v);
        let e2 = g2.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - fu - slack;
        if e2 > 0.0 {
            per_condition[2] += 1;
        }
        report.record(e2, || format!("subgradient-at-v: u={u:?}, v={v:?}"));
        // (3) F(u + tv) ≤ F(u) + tF(v)
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + t * b).collect();
        let fuv = f.eval(&uv);
        if fuv.is_finite() {
            let e3 = fuv - (fu + t * fv) - slack;
            if e3 > 0.0 {
                per_condition[3] += 1;
            }
            report.record(e3, || format!("ray-subadditivity: u={u:?}, v={v:?}, t={t}"));
        }
    }
    report.notes.push(format!(
        "violations per condition [scaling, grad-at-u, grad-at-v, ray]: {per_condition:?}"
    ));
    report.finalize()
}

/// Entry point used by `OuterFunction::check_subhomogeneous`.
pub fn check_subhomogeneous_outer(
    outer: &OuterFunction,
    b: &NormOperator,
    x: &Vector,
    samples: usize,
    seed: u64,
) -> CheckReport {
    let f = UOuter::Builtin { outer, b, x: x.clone() };
    check_subhomo_equivalence(&f, samples, seed, 1.5)
}

/// Component-wise vector growth inequality at a given β. Guaranteed for
/// β < β̂_p(f); run with a larger β it becomes an adversarial probe that
/// should produce a witness.
pub fn check_vector_growth(
    f: &VectorFunction,
    b: &NormOperator,
    p: u32,
    beta_val: f64,
    samples: usize,
    seed: u64,
    scale: f64,
) -> CheckReport {
    let mut report = CheckReport::new(format!("vector-growth-p{p}"), seed);
    if !(0.0..1.0).contains(&beta_val) {
        report.notes.push("beta outside [0, 1); skipped".into());
        return report.finalize();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = b.dim();
    let lvec = f.lipschitz_vec(p);
    let skipped: Vec<usize> =
        (0..f.m()).filter(|i| !lvec[*i].is_finite()).collect();
    if !skipped.is_empty() {
        report.notes.push(format!("components with infinite L_p skipped: {skipped:?}"));
    }
    for _ in 0..samples {
        let x = gaussian(&mut rng, n, scale);
        let y = gaussian(&mut rng, n, scale);
        let h = &y - &x;
        let r = b.norm_vec(&h);
        let slack = 1e-8 * (1.0 + r.powi(p as i32 + 1));
        for (i, comp) in f.components.iter().enumerate() {
            if !lvec[i].is_finite() {
                continue;
            }
            let lhs = comp.eval(b, &y);
            let mut rhs = comp.eval(b, &x)
                + comp.grad(b, &x).dot(&h)
                + p as f64 * lvec[i] * beta_val.powi(p as i32) / fact(p + 1)
                    * r.powi(p as i32 + 1);
            if p == 2 {
                rhs += 0.5 * beta_val * h.dot(&(comp.hess(b, &x) * &h));
            }
            report.record((rhs - lhs) - slack, || {
                format!(
                    "component {i} at x={:?}, y={:?}, beta={beta_val}",
                    x.as_slice(),
                    y.as_slice()
                )
            });
        }
        report.samples += 1;
    }
    report.finalize()
}

/// Trace bound satisfaction: φ(x_k) − φ* ≤ bound_k + 1e-6(1 + |φ*|) for all
/// k ≥ 1 rows that carry a bound.
pub fn check_rate(trace: &RunTrace, phi_star: Option<f64>) -> CheckReport {
    let mut report = CheckReport::new(format!("rate-{}", trace.method.name()), 0);
    let star = match phi_star {
        Some(s) => s,
        None => {
            report.notes.push("phi* unknown; inconclusive".into());
            return report.finalize();
        }
    };
    let slack = 1e-6 * (1.0 + star.abs());
    for row in trace.rows.iter().filter(|r| r.k >= 1) {
        if let Some(bound) = row.bound {
            let excess = (row.phi - star) - bound - slack;
            report.record(excess, || format!("k = {}: gap {} > bound {}", row.k, row.phi - star, bound));
            report.samples += 1;
        }
    }
    if report.samples == 0 {
        report.notes.push("trace carries no bound column".into());
    }
    report.finalize()
}

/// The checks applicable to one problem, as run by the CLI `verify`
/// subcommand.
pub fn run_problem_checks(
    problem: &CompositeProblem,
    which: &[String],
    samples: usize,
    seed: u64,
) -> Vec<CheckReport> {
    let all = which.iter().any(|s| s == "all");
    let want = |name: &str| all || which.iter().any(|s| s == name);
    let scale = problem.effective_diameter().unwrap_or(2.0).min(5.0);
    let b = &problem.b;
    let mut out = Vec::new();

    if want("theorem-main") || want("remark-convexity") {
        for (i, comp) in problem.f.components.iter().enumerate() {
            for p in [1u32, 2] {
                let sigma = comp.constants.sigma(p);
                let l = comp.constants.lipschitz(p);
                if sigma > 0.0 && l.is_finite() && l > 0.0 {
                    if want("theorem-main") {
                        let mut r =
                            check_theorem_main(comp, b, p, p as f64, samples, seed, scale);
                        r.id = format!("theorem-main-p{p}-component{i}");
                        out.push(r);
                    }
                    if want("remark-convexity") {
                        let mut r =
                            check_remark_convexity(comp, b, p, p as f64, samples, seed, scale);
                        r.id = format!("remark-convexity-p{p}-component{i}");
                        out.push(r);
                    }
                }
            }
        }
    }
    if want("subhomo-equivalence") {
        let applicable = matches!(
            problem.outer.kind,
            OuterKind::MaxForm { .. } | OuterKind::LogSumExp
        ) || (matches!(problem.outer.kind, OuterKind::AdditiveComposite { .. })
            && problem.outer.is_subhomogeneous());
        if applicable {
            let f = UOuter::Builtin { outer: &problem.outer, b, x: problem.x0.clone() };
            out.push(check_subhomo_equivalence(&f, samples, seed, 1.5));
        }
    }
    if want("vector-growth") {
        for p in [1u32, 2] {
            if problem.f.all_lipschitz_finite(p) {
                let beta_hat = problem.f.hat_beta(p).unwrap_or(0.0);
                // the endpoint is where the inequality is tightest
                let bv = beta_hat.min(1.0 - 1e-12);
                out.push(check_vector_growth(&problem.f, b, p, bv, samples, seed, scale));
            }
        }
    }
    out
}
