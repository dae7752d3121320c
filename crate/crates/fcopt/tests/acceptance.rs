//! Acceptance suite: one test per criterion, each printing a PASS line when
//! its assertions hold (run with `--nocapture` to see them). Reference
//! optima come from closed forms where available and otherwise from
//! independent long-run oracles implemented here (projected gradient /
//! Newton on φ directly, never through the solvers under test).

use std::time::Instant;

use fcopt::corpus::corpus_get;
use fcopt::linalg::Vector;
use fcopt::methods::{
    run_cgm, run_contracting_newton, run_contracting_prox, run_cubic_newton, run_fgm_detailed,
    run_full_basic, run_gm, run_method, MethodConfig, MethodId,
    ProxSubproblem,
};
use fcopt::outer::OuterKind;
use fcopt::problem::CompositeProblem;
use fcopt::regularize::{regularized_condition_number, solve_via_regularization};
use fcopt::regularize::{build_regularizer, regularized_problem};
use fcopt::subproblem::{contracted_lmo, cubic_step, full_step, grad_reg_step, StepOptions};
use fcopt::verify::{
    check_rate, check_remark_convexity, check_subhomo_equivalence, check_theorem_main,
    check_vector_growth, CheckStatus, UOuter,
};

fn v(s: &[f64]) -> Vector {
    Vector::from_column_slice(s)
}

/// φ and ∇φ for problems whose outer is smooth at every point of the simple
/// domain (additive with smooth component, or log-sum-exp). Independent of
/// the solver stack: assembled directly from the component oracles.
fn phi_grad(p: &CompositeProblem, x: &Vector) -> Vector {
    let b = &p.b;
    match &p.outer.kind {
        OuterKind::AdditiveComposite { linear, .. } => {
            let mut g = p.f.components[0].grad(b, x);
            if let Some(l) = linear {
                g += l;
            }
            g
        }
        OuterKind::LogSumExp => {
            let u = p.f.eval_all(b, x);
            let w = fcopt::oracle::softmax(&u);
            let mut g = Vector::zeros(x.len());
            for (i, wi) in w.iter().enumerate() {
                g.axpy(*wi, &p.f.components[i].grad(b, x), 1.0);
            }
            g
        }
        _ => panic!("phi_grad supports additive/lse outers only"),
    }
}

/// Long projected-gradient run on φ over the problem's simple domain with
/// Armijo backtracking; the reference optimum oracle for smooth entries.
fn pgd_reference(p: &CompositeProblem, iters: usize) -> (Vector, f64) {
    let q = p.outer.simple_phi_domain().expect("simple domain");
    let b = &p.b;
    let mut x = q.project(b, &p.x0);
    let mut fx = p.phi(&x);
    let mut step = 1.0f64;
    for _ in 0..iters {
        let g = phi_grad(p, &x);
        let mut accepted = false;
        for _ in 0..60 {
            let cand = q.project(b, &(&x - b.solve(&g) * step));
            let fc = p.phi(&cand);
            if fc < fx - 1e-18 {
                x = cand;
                fx = fc;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, fx)
}

/// Newton on a smooth unconstrained φ (used for the log-sum-exp entry).
fn newton_reference(p: &CompositeProblem) -> (Vector, f64) {
    let b = &p.b;
    let mut x = p.x0.clone();
    for _ in 0..200 {
        let g = phi_grad(p, &x);
        if b.dual_norm_vec(&g) < 1e-14 {
            break;
        }
        // Hessian of lse(f_i) with the component oracles
        let u = p.f.eval_all(b, &x);
        let w = fcopt::oracle::softmax(&u);
        let n = x.len();
        let mut h = fcopt::linalg::Matrix::zeros(n, n);
        let mut gbar = Vector::zeros(n);
        for (i, wi) in w.iter().enumerate() {
            let gi = p.f.components[i].grad(b, &x);
            h += p.f.components[i].hess(b, &x) * *wi;
            h += &gi * gi.transpose() * *wi;
            gbar.axpy(*wi, &gi, 1.0);
        }
        h -= &gbar * gbar.transpose();
        let d = fcopt::linalg::spd_solve_vec(&(h + fcopt::linalg::Matrix::identity(n, n) * 1e-14), &(-&g))
            .expect("reference Newton system");
        // damp while the value increases
        let fx = p.phi(&x);
        let mut s = 1.0;
        for _ in 0..60 {
            if p.phi(&(&x + &d * s)) <= fx {
                break;
            }
            s *= 0.5;
        }
        x += &d * s;
    }
    let fx = p.phi(&x);
    (x, fx)
}

fn assert_rate_rows(trace: &fcopt::methods::RunTrace, phi_star: f64, kmax: usize, label: &str) {
    let slack = 1e-6 * (1.0 + phi_star.abs());
    for row in trace.rows.iter().filter(|r| r.k >= 1 && r.k <= kmax) {
        let bound = row.bound.unwrap_or_else(|| panic!("{label}: bound missing at k = {}", row.k));
        assert!(
            row.phi - phi_star <= bound + slack,
            "{label}: k = {}, gap {} exceeds bound {}",
            row.k,
            row.phi - phi_star,
            bound
        );
    }
}

#[test]
fn criterion_1_linear_rate_theorems() {
    let t0 = Instant::now();
    // order 1 on the uniformly convex quadratic, order 2 on the power entry
    for (id, p_ord) in [("quad-uc", 1u32), ("power-uc", 2u32)] {
        let entry = corpus_get(id).unwrap();
        let problem = entry.problem().unwrap();
        let phi_star = entry.analytic_opt.unwrap();
        for method in [MethodId::RestrictedBasic, MethodId::FullBasic] {
            let mut cfg = MethodConfig::new(method);
            cfg.p = p_ord;
            cfg.iters = 200;
            let trace = run_method(&problem, &cfg).unwrap();
            assert!(trace.succeeded(), "{id}/{method:?}: {:?}", trace.status);
            assert_eq!(trace.rows.len(), 201);
            assert_rate_rows(&trace, phi_star, 200, &format!("{id}/{method:?}"));
        }
    }
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 5.0, "criterion 1 took {dt:?}");
    println!("criterion 1 PASS: linear rates (1-beta)^k hold for restricted/full, p in {{1,2}}, k <= 200 ({dt:?})");
}

#[test]
fn criterion_2_convex_sublinear_rates() {
    // full-step basic method, p = 1, on the smooth LSE entry
    {
        let entry = corpus_get("lse-affine").unwrap();
        let problem = entry.problem().unwrap();
        let (_, phi_star) = newton_reference(&problem);
        // 10x high-accuracy run agrees with the independent reference
        let mut long_cfg = MethodConfig::new(MethodId::FullBasic);
        long_cfg.iters = 50;
        let long = run_full_basic(&problem, &long_cfg).unwrap();
        assert!((long.final_phi() - phi_star).abs() <= 1e-9);

        let mut cfg = MethodConfig::new(MethodId::FullBasic);
        cfg.iters = 500;
        let trace = run_full_basic(&problem, &cfg).unwrap();
        assert_rate_rows(&trace, phi_star, 500, "full-p1/lse-affine");
    }
    // full-step basic method, p = 2, on the box-constrained LSE entry
    {
        let entry = corpus_get("box-lse").unwrap();
        let problem = entry.problem().unwrap();
        let (_, phi_star) = pgd_reference(&problem, 200_000);
        let mut cfg = MethodConfig::new(MethodId::FullBasic);
        cfg.p = 2;
        cfg.iters = 100;
        let trace = run_full_basic(&problem, &cfg).unwrap();
        assert_rate_rows(&trace, phi_star, 100, "full-p2/box-lse");
    }
    // gradient method on the quadratic entry (analytic optimum)
    {
        let entry = corpus_get("quad-uc").unwrap();
        let problem = entry.problem().unwrap();
        let mut cfg = MethodConfig::new(MethodId::GradientMethod);
        cfg.iters = 500;
        let trace = run_gm(&problem, &cfg).unwrap();
        assert_rate_rows(&trace, 0.0, 500, "gm/quad-uc");
        let rate = check_rate(&trace, Some(0.0));
        assert_eq!(rate.status, CheckStatus::Pass);
    }
    // contracting conditional gradient on the box entry
    {
        let entry = corpus_get("box-lse").unwrap();
        let problem = entry.problem().unwrap();
        let (_, phi_star) = pgd_reference(&problem, 200_000);
        let mut cfg = MethodConfig::new(MethodId::ContractingGradient);
        cfg.iters = 500;
        let trace = run_cgm(&problem, &cfg).unwrap();
        // the reference must lower-bound everything the method saw
        assert!(trace.rows.iter().all(|r| r.phi >= phi_star - 1e-10));
        assert_rate_rows(&trace, phi_star, 500, "cgm/box-lse");
    }
    // cubic Newton on the power entry (analytic optimum)
    {
        let entry = corpus_get("power-uc").unwrap();
        let problem = entry.problem().unwrap();
        let mut cfg = MethodConfig::new(MethodId::CubicNewton);
        cfg.iters = 100;
        let trace = run_cubic_newton(&problem, &cfg).unwrap();
        assert_rate_rows(&trace, 0.0, 100, "cubic/power-uc");
    }
    // contracting Newton on the ball entry
    {
        let entry = corpus_get("ball-lse").unwrap();
        let problem = entry.problem().unwrap();
        let (_, phi_star) = pgd_reference(&problem, 200_000);
        let mut cfg = MethodConfig::new(MethodId::ContractingNewton);
        cfg.iters = 100;
        let trace = run_contracting_newton(&problem, &cfg).unwrap();
        assert_rate_rows(&trace, phi_star, 100, "contr-newton/ball-lse");
    }
    println!("criterion 2 PASS: sublinear bounds hold at every k (full k^-p, gm, cgm, cubic, contr-newton)");
}

#[test]
fn criterion_3_fast_gradient() {
    let entry = corpus_get("lse-affine").unwrap();
    let problem = entry.problem().unwrap();
    let (x_star, phi_star) = newton_reference(&problem);
    let m_reg = problem.f_of_lipschitz(1); // alpha = 1
    let mut cfg = MethodConfig::new(MethodId::FastGradient);
    cfg.iters = 100;
    let (trace, det) = run_fgm_detailed(&problem, &cfg).unwrap();
    assert!(trace.succeeded());

    let r0 = problem.b.norm_vec(&(&x_star - &problem.x0));
    // estimating inequality at x = x*, per iteration
    for k in 1..=100usize {
        let a_big = det.a_big[k];
        let vk = &det.v_seq[k];
        let lhs = a_big * trace.rows[k].phi + 0.5 * m_reg * problem.b.norm_vec(&(&x_star - vk)).powi(2);
        let rhs = a_big * phi_star + 0.5 * m_reg * r0 * r0;
        assert!(lhs <= rhs + 1e-6, "estimating inequality failed at k = {k}: {lhs} > {rhs}");
        // A_k >= k^2/4
        assert!(a_big >= (k * k) as f64 / 4.0 - 1e-12, "A_{k} = {a_big}");
    }
    // final gap at k = 100
    let final_gap = trace.rows[100].phi - phi_star;
    let target = 2.0 * m_reg * r0 * r0 / 1e4;
    assert!(final_gap <= target, "final gap {final_gap} exceeds {target}");
    println!(
        "criterion 3 PASS: estimating inequality per iteration, A_k >= k^2/4, final gap {final_gap:.3e} <= {target:.3e}"
    );
}

#[test]
fn criterion_4_contracting_proximal_scheme() {
    let entry = corpus_get("power-uc").unwrap();
    let problem = entry.problem().unwrap();
    let epsilon: f64 = 1e-4;
    let fl2 = problem.f_of_lipschitz(2);
    // x* = z is analytic here; rho_d(x0; x*) = (alpha/3)||x0 - x*||^3
    let r_star = problem.b.norm_vec(&(v(&[1.0, -1.0]) - &problem.x0));
    let rho0 = fl2 / 3.0 * r_star.powi(3);
    let delta = epsilon.min(epsilon * epsilon / rho0);

    let k_budget = ((fl2 * r_star.powi(3) / epsilon).powf(1.0 / 3.0).ceil() as usize) * 10;
    let mut cfg = MethodConfig::new(MethodId::ContractingProx);
    cfg.iters = k_budget;
    cfg.delta = Some(delta);
    let trace = run_contracting_prox(&problem, &cfg).unwrap();

    let reach = trace
        .rows
        .iter()
        .find(|r| r.gap.unwrap() <= epsilon)
        .unwrap_or_else(|| panic!("never reached gap <= {epsilon} within {k_budget} outer iterations"));
    assert!(reach.k <= k_budget);

    // inner-call budget: every call obeys ceil(log_{4/3}(gap_est/delta)) + 5
    let details = trace.ac_details.as_ref().unwrap();
    for d in details {
        let n_allowed =
            ((d.gap_estimate / delta).max(4.0 / 3.0).ln() / (4.0f64 / 3.0).ln()).ceil() as usize + 5;
        let used = d.h_values.len() - 1;
        assert!(used <= n_allowed, "outer {}: {} inner calls > {}", d.k, used, n_allowed);
    }

    // measured inner decrease factor: re-run a few subproblems, estimate h*
    // with a long tail, and average the per-step gap ratios
    let mut ratios = Vec::new();
    for d in details.iter().take(12) {
        let sub = ProxSubproblem {
            problem: &problem,
            a_next: d.a_next,
            gamma: d.gamma,
            xk: d.x_prev.clone(),
            vk: d.v_prev.clone(),
            alpha_prox: fl2,
        };
        let opts = StepOptions::default();
        let mut z = sub.domain_z().project(&problem.b, &d.v_prev);
        let mut hs = vec![sub.h(&z)];
        for _ in 0..(d.h_values.len() - 1 + 60) {
            let (zn, _, _) = sub.cubic_newton_step(&z, d.mbar, &opts).unwrap();
            let hn = sub.h(&zn);
            if hn > *hs.last().unwrap() {
                break;
            }
            z = zn;
            hs.push(hn);
        }
        let h_star = *hs.last().unwrap();
        let scale = (hs[0] - h_star).abs().max(1e-300);
        for t in 0..(d.h_values.len() - 1).min(hs.len() - 1) {
            let g0 = hs[t] - h_star;
            let g1 = hs[t + 1] - h_star;
            if g0 > 1e-10 * scale && g0 > 0.0 {
                ratios.push(g1 / g0);
            }
        }
    }
    assert!(!ratios.is_empty());
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(avg <= 0.75 + 0.05, "average inner decrease ratio {avg} too slow");
    println!(
        "criterion 4 PASS: gap <= {epsilon:.0e} at outer k = {} (budget {k_budget}), inner calls within log-budget, avg inner ratio {avg:.3}",
        reach.k
    );
}

#[test]
fn criterion_5_inequality_suites() {
    let b_id = fcopt::linalg::NormOperator::identity(2);
    let quad = corpus_get("quad-uc").unwrap().problem().unwrap();
    let power = corpus_get("power-uc").unwrap().problem().unwrap();
    let maxq = corpus_get("max-quadratics").unwrap().problem().unwrap();
    let lse = corpus_get("lse-affine").unwrap().problem().unwrap();

    for seed in [1u64, 2, 3] {
        // growth theorem + convexity remark on the uniformly convex components
        for (comp, p) in [(&quad.f.components[0], 1u32), (&power.f.components[0], 2u32)] {
            let r = check_theorem_main(comp, &b_id, p, p as f64, 10_000, seed, 1.5);
            assert_eq!(r.status, CheckStatus::Pass, "theorem-main p={p} seed={seed}: {:?}", r.witness);
            assert!(r.max_excess <= 0.0);
            let r = check_remark_convexity(comp, &b_id, p, p as f64, 10_000, seed, 1.5);
            assert_eq!(r.status, CheckStatus::Pass, "remark-convexity p={p} seed={seed}: {:?}", r.witness);
        }
        // vector growth at the beta_hat endpoint
        let r = check_vector_growth(&quad.f, &quad.b, 1, quad.f.hat_beta(1).unwrap(), 10_000, seed, 1.5);
        assert_eq!(r.status, CheckStatus::Pass, "{:?}", r.witness);
        let r = check_vector_growth(&maxq.f, &maxq.b, 1, maxq.f.hat_beta(1).unwrap(), 10_000, seed, 1.5);
        assert_eq!(r.status, CheckStatus::Pass, "{:?}", r.witness);
        let r = check_vector_growth(&power.f, &power.b, 2, power.f.hat_beta(2).unwrap(), 10_000, seed, 1.5);
        assert_eq!(r.status, CheckStatus::Pass, "{:?}", r.witness);
        // subhomogeneity equivalence on max and lse outers
        for problem in [&maxq, &lse] {
            let f = UOuter::Builtin { outer: &problem.outer, b: &problem.b, x: problem.x0.clone() };
            let r = check_subhomo_equivalence(&f, 10_000, seed, 1.5);
            assert_eq!(r.status, CheckStatus::Pass, "{:?}", r.witness);
        }
        // the planted counterexample fails with a witness
        let r = check_subhomo_equivalence(&UOuter::SquareExample, 10_000, seed, 1.5);
        assert_eq!(r.status, CheckStatus::Fail);
        assert!(r.witness.is_some());
    }
    println!("criterion 5 PASS: all inequality suites clean at 10^4 samples, seeds {{1,2,3}}; counterexample detected");
}

/// Two-stage dense grid minimizer over a square, the brute-force oracle of
/// criterion 6.
fn refined_grid_min(
    lo: f64,
    hi: f64,
    f: &dyn Fn(&Vector) -> f64,
    dim: usize,
) -> (Vector, f64) {
    assert!(dim <= 2);
    let stage = |lo: Vec<f64>, hi: Vec<f64>, pts: usize| -> (Vector, f64, f64) {
        let mut best = (Vector::zeros(dim), f64::INFINITY);
        let step = (hi[0] - lo[0]) / pts as f64;
        if dim == 1 {
            for i in 0..=pts {
                let x = v(&[lo[0] + step * i as f64]);
                let val = f(&x);
                if val < best.1 {
                    best = (x, val);
                }
            }
        } else {
            for i in 0..=pts {
                for j in 0..=pts {
                    let x = v(&[
                        lo[0] + (hi[0] - lo[0]) * i as f64 / pts as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / pts as f64,
                    ]);
                    let val = f(&x);
                    if val < best.1 {
                        best = (x, val);
                    }
                }
            }
        }
        (best.0, best.1, step)
    };
    let pts = if dim == 1 { 100_000 } else { 1000 };
    let (x1, _, step1) = stage(vec![lo; dim], vec![hi; dim], pts);
    let lo2: Vec<f64> = (0..dim).map(|i| x1[i] - 2.0 * step1).collect();
    let hi2: Vec<f64> = (0..dim).map(|i| x1[i] + 2.0 * step1).collect();
    let (x2, v2, _) = stage(lo2, hi2, pts.min(2000));
    (x2, v2)
}

#[test]
fn criterion_6_subproblem_oracle_equivalence() {
    let opts = StepOptions::default();

    // Dual1 on the 1-D constraint instance: lambda* = (1, 1/2), y = -1
    {
        let problem = corpus_get("one-dim-constraint").unwrap().problem().unwrap();
        let out = full_step(&problem, &v(&[1.0]), 1, None, &opts).unwrap();
        assert!((out.y[0] + 1.0).abs() <= 1e-8);
        assert!((out.model_value + 1.0).abs() <= 1e-8);
        let lam = out.dual.as_ref().unwrap();
        assert!((lam.lambda[0] - 1.0).abs() <= 1e-12);
        assert!((lam.lambda[1] - 0.5).abs() <= 1e-8);
    }

    // order-1 full step on the max-of-quadratics entry vs a dense grid
    {
        let problem = corpus_get("max-quadratics").unwrap().problem().unwrap();
        let xbar = v(&[0.5, 0.4]);
        let out = full_step(&problem, &xbar, 1, None, &opts).unwrap();
        let b = &problem.b;
        let fvals = problem.f.eval_all(b, &xbar);
        let grads = problem.f.grad_all(b, &xbar);
        let model = |y: &Vector| -> f64 {
            let h = y - &xbar;
            let r2 = b.norm_vec(&h).powi(2);
            (0..3)
                .map(|i| fvals[i] + grads[i].dot(&h) + 0.5 * r2)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let (gy, gv) = refined_grid_min(-2.0, 3.0, &model, 2);
        assert!(out.model_value <= gv + 1e-6, "{} vs {}", out.model_value, gv);
        assert!((out.y - gy).norm() <= 1e-3);
    }

    // order-2 full step on the power entry (1-D section through the center)
    {
        let b = fcopt::linalg::NormOperator::identity(1);
        let f1 = fcopt::oracle::SmoothComponent::with_analytic_constants(
            fcopt::oracle::ComponentKind::PowerOfNorm {
                center: v(&[0.0]),
                degree: 3,
                coeff: 1.0 / 3.0,
            },
            &b,
        )
        .unwrap();
        let f = fcopt::oracle::VectorFunction::new(vec![f1.clone()]).unwrap();
        let outer = fcopt::outer::OuterFunction::new(
            OuterKind::AdditiveComposite { q: fcopt::outer::SimpleSet::All, linear: None },
            1,
            1,
        )
        .unwrap();
        let problem =
            CompositeProblem::new(f, outer, b.clone(), v(&[0.0]), Some(0.0), None, None).unwrap();
        let xbar = v(&[1.0]);
        let out = full_step(&problem, &xbar, 2, None, &opts).unwrap();
        let model = |y: &Vector| -> f64 {
            let h = y[0] - 1.0;
            let fx = 1.0 / 3.0;
            let g = 1.0;
            let hess = 2.0;
            fx + g * h + 0.5 * hess * h * h + 2.0 / 3.0 * h.abs().powi(3)
        };
        let (gy, gv) = refined_grid_min(-3.0, 3.0, &model, 1);
        assert!(out.model_value <= gv + 1e-6);
        assert!((out.y[0] - gy[0]).abs() <= 1e-3);
        // the dual tau is consistent with the step norm
        let tau = out.dual.map(|d| d.tau.unwrap_or(0.0));
        if let Some(t) = tau {
            assert!((t - 2.0 * (out.y[0] - 1.0f64).abs()).abs() <= 1e-6);
        }
    }

    // gradient step on the max entry vs grid
    {
        let problem = corpus_get("max-quadratics").unwrap().problem().unwrap();
        let anchor = v(&[1.0, 1.5]);
        let m_reg = 1.0;
        let out = grad_reg_step(&problem, &anchor, m_reg, &opts).unwrap();
        let b = &problem.b;
        let fvals = problem.f.eval_all(b, &anchor);
        let grads = problem.f.grad_all(b, &anchor);
        let model = |y: &Vector| -> f64 {
            let h = y - &anchor;
            let lin =
                (0..3).map(|i| fvals[i] + grads[i].dot(&h)).fold(f64::NEG_INFINITY, f64::max);
            lin + 0.5 * m_reg * b.norm_vec(&h).powi(2)
        };
        let (gy, gv) = refined_grid_min(-2.0, 3.0, &model, 2);
        assert!(out.model_value <= gv + 1e-6);
        assert!((out.y - gy).norm() <= 1e-3);
    }

    // contracted LMO (order 1 and 2) on the box entry vs grid over v-space
    {
        let problem = corpus_get("box-lse").unwrap().problem().unwrap();
        let xk = v(&[0.2, -0.3]);
        let gamma = 0.5;
        for p_ord in [1u32, 2] {
            let out = contracted_lmo(&problem, &xk, gamma, p_ord, &opts).unwrap();
            let b = &problem.b;
            let comp = &problem.f.components[0];
            let fx = comp.eval(b, &xk);
            let gx = comp.grad(b, &xk);
            let hx = comp.hess(b, &xk);
            let model_of_v = |vv: &Vector| -> f64 {
                // y = xk + gamma (v - xk); clamp the grid to the box
                if !(vv.iter().all(|c| *c >= -1.0 - 1e-12 && *c <= 1.0 + 1e-12)) {
                    return f64::INFINITY;
                }
                let y = &xk + (vv - &xk) * gamma;
                let h = &y - &xk;
                let mut m = fx + gx.dot(&h);
                if p_ord == 2 {
                    m += 0.5 * h.dot(&(&hx * &h));
                }
                m
            };
            let (gv_arg, gv_val) = refined_grid_min(-1.0, 1.0, &model_of_v, 2);
            let y_grid = &xk + (&gv_arg - &xk) * gamma;
            assert!(out.model_value <= gv_val + 1e-6, "p={p_ord}: {} vs {}", out.model_value, gv_val);
            assert!((&out.y - &y_grid).norm() <= 1e-3, "p={p_ord}");
        }
    }

    // cubic step on a 2-D max instance vs grid
    {
        let problem = corpus_get("max-quadratics").unwrap().problem().unwrap();
        let anchor = v(&[0.3, 0.9]);
        let m_reg = 2.0;
        let out = cubic_step(&problem, &anchor, m_reg, &opts).unwrap();
        let b = &problem.b;
        let fvals = problem.f.eval_all(b, &anchor);
        let grads = problem.f.grad_all(b, &anchor);
        let hesss = problem.f.hess_all(b, &anchor);
        let model = |y: &Vector| -> f64 {
            let h = y - &anchor;
            let quad = (0..3)
                .map(|i| fvals[i] + grads[i].dot(&h) + 0.5 * h.dot(&(&hesss[i] * &h)))
                .fold(f64::NEG_INFINITY, f64::max);
            quad + m_reg / 6.0 * b.norm_vec(&h).powi(3)
        };
        let (gy, gv) = refined_grid_min(-2.0, 3.0, &model, 2);
        assert!(out.model_value <= gv + 1e-6);
        assert!((out.y - gy).norm() <= 1e-3);
    }

    println!("criterion 6 PASS: all subproblem solvers match brute-force grids (value 1e-6, argument 1e-3); Dual1 multipliers reproduced to 1e-8");
}

#[test]
fn criterion_7_regularization() {
    let entry = corpus_get("rankdef-quad").unwrap();
    let problem = entry.problem().unwrap();
    let phi_star = entry.analytic_opt.unwrap();
    let (trace, report) = solve_via_regularization(&problem, 1, 1e-3, &StepOptions::default()).unwrap();
    assert!(trace.succeeded());
    let final_gap = trace.final_phi() - phi_star;
    assert!(final_gap <= 1e-3, "final original-problem gap {final_gap}");

    // phi <= phi_mu along the trace, and the regularizer pins d(x0) = f(x0),
    // d >= f everywhere
    let reg_problem = &report.reg.problem;
    for (_, x) in &report.iterates {
        assert!(problem.phi(x) <= reg_problem.phi(x) + 1e-12);
    }
    let gaps0 = report.reg.regularizer.gap_eval(&problem, &problem.x0);
    assert!(gaps0.iter().all(|g| *g == 0.0));
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let x = Vector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
        let gaps = report.reg.regularizer.gap_eval(&problem, &x);
        assert!(gaps.iter().all(|g| *g >= 0.0));
        assert!(problem.phi(&x) <= reg_problem.phi(&x) + 1e-12);
    }

    // closed-form condition number vs the generic hat_beta, 100 random
    // (mu, p) draws across the two flat-base entries
    let box_lse = corpus_get("box-lse").unwrap().problem().unwrap();
    for trial in 0..100 {
        let mu: f64 = rng.gen_range(1e-8..1.0);
        let (prob, p_ord) = if trial % 2 == 0 { (&problem, 1u32) } else { (&box_lse, 2u32) };
        let reg = build_regularizer(prob, p_ord, None).unwrap();
        let rp = regularized_problem(prob, &reg, mu).unwrap();
        let closed = regularized_condition_number(&rp, p_ord).unwrap();
        let generic = rp.problem.f.hat_beta(p_ord).unwrap();
        assert!(
            (closed - generic).abs() <= 1e-12,
            "mu = {mu}, p = {p_ord}: closed {closed} vs hat_beta {generic}"
        );
    }
    println!(
        "criterion 7 PASS: regularized solve reaches gap {final_gap:.3e} <= 1e-3 (mu = {:.3e}); invariants and condition-number consistency hold",
        report.mu
    );
}

#[test]
fn criterion_8_determinism_and_interfaces() {
    // library-level determinism: identical configs give byte-identical CSVs
    for (id, method, p_ord) in [
        ("quad-uc", MethodId::FastGradient, 1u32),
        ("power-uc", MethodId::CubicNewton, 2u32),
        ("max-quadratics", MethodId::GradientMethod, 1u32),
        ("box-lse", MethodId::ContractingGradient, 1u32),
    ] {
        let problem = corpus_get(id).unwrap().problem().unwrap();
        let mut cfg = MethodConfig::new(method);
        cfg.p = p_ord;
        cfg.iters = 50;
        cfg.seed = 13;
        let t1 = run_method(&problem, &cfg).unwrap();
        let t2 = run_method(&problem, &cfg).unwrap();
        let c1 = fcopt::io::trace_to_csv_string(&t1);
        let c2 = fcopt::io::trace_to_csv_string(&t2);
        assert_eq!(c1, c2, "{id}/{method:?} traces differ between runs");
    }
    // problem-file round-trip across the whole corpus
    for entry in fcopt::corpus::corpus_list() {
        let json = entry.file.to_json().unwrap();
        let back = fcopt::io::ProblemFile::parse(&json).unwrap();
        assert_eq!(entry.file, back, "{} does not round-trip", entry.id);
        let again = back.to_json().unwrap();
        assert_eq!(json, again);
    }
    println!("criterion 8 PASS: byte-identical traces and corpus-wide problem-file round-trips (CLI-level rerun in fcopt-cli tests)");
}
