//! The smooth vector function f = (f₁, …, f_m): oracles, Taylor models and
//! smoothness/uniform-convexity constants.
//!
//! Each component is one of four analytic kinds with full domain E. The
//! constants L₁, L₂ (Lipschitz constants of the first/second derivative) and
//! σ₂, σ₃ (uniform convexity of degree 2/3) are *declared* from closed forms,
//! never estimated at runtime; the verifier module can falsify a bad
//! declaration by sampling but never infers one.
//!
//! All norms are taken with respect to the problem's operator B.

use crate::error::{FcError, Result};
use crate::linalg::{sym_eigen_bounds_wrt, Matrix, NormOperator, Vector};

/// Analytic form of one smooth component.
#[derive(Debug, Clone)]
pub enum ComponentKind {
    /// ½⟨Ax, x⟩ + ⟨b, x⟩ + c with A symmetric positive semidefinite.
    Quadratic { a: Matrix, b: Vector, c: f64 },
    /// ln Σ_j exp(⟨a_j, x⟩ + b_j).
    AffineLogSumExp { rows: Vec<Vector>, offsets: Vec<f64> },
    /// c‖x − z‖^q in the B-norm, q ∈ {2, 3}, c > 0.
    PowerOfNorm { center: Vector, degree: u32, coeff: f64 },
    /// ⟨a, x⟩ + b.
    Affine { a: Vector, b: f64 },
}

/// Declared constants of a component. `f64::INFINITY` means "no finite
/// Lipschitz constant of that order".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSet {
    pub l1: f64,
    pub l2: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl ConstantSet {
    pub fn zeros() -> Self {
        ConstantSet { l1: 0.0, l2: 0.0, sigma2: 0.0, sigma3: 0.0 }
    }

    pub fn lipschitz(&self, p: u32) -> f64 {
        match p {
            1 => self.l1,
            2 => self.l2,
            _ => panic!("order p must be 1 or 2"),
        }
    }

    pub fn sigma(&self, p: u32) -> f64 {
        match p {
            1 => self.sigma2,
            2 => self.sigma3,
            _ => panic!("order p must be 1 or 2"),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && !v.is_nan();
        if !(ok(self.l1) && ok(self.l2) && ok(self.sigma2) && ok(self.sigma3)) {
            return Err(FcError::InconsistentConstants("constants must be nonnegative".into()));
        }
        Ok(())
    }
}

/// An additional power-of-norm term coeff·‖x − center‖^degree folded into a
/// component. The regularization scheme uses this to represent
/// (1−μ)fᵢ + μdᵢ = fᵢ + (μcᵢ/(p+1))‖x − x₀‖^{p+1} without a new kind.
#[derive(Debug, Clone)]
pub struct PowerTerm {
    pub center: Vector,
    pub degree: u32,
    pub coeff: f64,
}

/// One smooth convex component with declared constants.
#[derive(Debug, Clone)]
pub struct SmoothComponent {
    pub kind: ComponentKind,
    pub constants: ConstantSet,
    pub augment: Option<PowerTerm>,
}

pub(crate) fn power_eval(b: &NormOperator, center: &Vector, degree: u32, coeff: f64, x: &Vector) -> f64 {
    let r = b.norm_vec(&(x - center));
    coeff * r.powi(degree as i32)
}

pub(crate) fn power_grad(b: &NormOperator, center: &Vector, degree: u32, coeff: f64, x: &Vector) -> Vector {
    let h = x - center;
    let r = b.norm_vec(&h);
    if r == 0.0 {
        return Vector::zeros(x.len());
    }
    // ∇ c r^q = c q r^{q-2} B(x - z)
    b.apply(&h) * (coeff * degree as f64 * r.powi(degree as i32 - 2))
}

pub(crate) fn power_hess(b: &NormOperator, center: &Vector, degree: u32, coeff: f64, x: &Vector) -> Matrix {
    let n = x.len();
    let h = x - center;
    let r = b.norm_vec(&h);
    let q = degree as f64;
    let bmat = match b {
        NormOperator::Identity { .. } => Matrix::identity(n, n),
        NormOperator::Diagonal { diag } => Matrix::from_diagonal(diag),
        NormOperator::Dense { b, .. } => b.clone(),
    };
    if degree == 2 {
        return bmat * (2.0 * coeff);
    }
    if r == 0.0 {
        return Matrix::zeros(n, n);
    }
    let bh = b.apply(&h);
    let outer = &bh * bh.transpose();
    // ∇² c r^q = c q [ (q-2) r^{q-4} (Bh)(Bh)ᵀ + r^{q-2} B ]
    outer * (coeff * q * (q - 2.0) * r.powf(q - 4.0)) + bmat * (coeff * q * r.powf(q - 2.0))
}

impl ComponentKind {
    pub fn dim(&self) -> usize {
        match self {
            ComponentKind::Quadratic { a, .. } => a.nrows(),
            ComponentKind::AffineLogSumExp { rows, .. } => rows[0].len(),
            ComponentKind::PowerOfNorm { center, .. } => center.len(),
            ComponentKind::Affine { a, .. } => a.len(),
        }
    }

    fn validate(&self, b: &NormOperator) -> Result<()> {
        let n = self.dim();
        if n != b.dim() {
            return Err(FcError::DimensionMismatch { expected: b.dim(), got: n });
        }
        match self {
            ComponentKind::Quadratic { a, b: lin, .. } => {
                if a.nrows() != a.ncols() || lin.len() != n {
                    return Err(FcError::DimensionMismatch { expected: n, got: lin.len() });
                }
                let scale = a.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
                for i in 0..n {
                    for j in 0..i {
                        if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                            return Err(FcError::NotSpd("quadratic matrix not symmetric".into()));
                        }
                    }
                }
                let (lo, _) = sym_eigen_bounds_wrt(a, b);
                if lo < -1e-9 * scale {
                    return Err(FcError::InconsistentConstants(format!(
                        "quadratic component not convex (min eigenvalue {lo:.3e})"
                    )));
                }
            }
            ComponentKind::AffineLogSumExp { rows, offsets } => {
                if rows.is_empty() || rows.len() != offsets.len() {
                    return Err(FcError::Config("log-sum-exp needs matching rows/offsets".into()));
                }
                for r in rows {
                    if r.len() != n {
                        return Err(FcError::DimensionMismatch { expected: n, got: r.len() });
                    }
                }
            }
            ComponentKind::PowerOfNorm { degree, coeff, .. } => {
                if !(*degree == 2 || *degree == 3) {
                    return Err(FcError::Config("power-of-norm degree must be 2 or 3".into()));
                }
                if !(*coeff > 0.0) {
                    return Err(FcError::Config("power-of-norm coefficient must be positive".into()));
                }
            }
            ComponentKind::Affine { .. } => {}
        }
        Ok(())
    }

    /// Closed-form constants of this kind in the B-geometry.
    pub fn analytic_constants(&self, b: &NormOperator) -> ConstantSet {
        match self {
            ComponentKind::Quadratic { a, .. } => {
                let (lo, hi) = sym_eigen_bounds_wrt(a, b);
                ConstantSet { l1: hi.max(0.0), l2: 0.0, sigma2: lo.max(0.0), sigma3: 0.0 }
            }
            ComponentKind::Affine { .. } => ConstantSet::zeros(),
            ComponentKind::AffineLogSumExp { rows, .. } => {
                let amax = rows.iter().map(|r| b.dual_norm_vec(r)).fold(0.0f64, f64::max);
                ConstantSet { l1: amax * amax, l2: 2.0 * amax.powi(3), sigma2: 0.0, sigma3: 0.0 }
            }
            ComponentKind::PowerOfNorm { degree, coeff, .. } => match degree {
                2 => ConstantSet { l1: 2.0 * coeff, l2: 0.0, sigma2: 2.0 * coeff, sigma3: 0.0 },
                // c‖x−z‖³ is uniformly convex of degree 3 with σ₃ = 3c/2 and
                // has L₂ = 6c; its gradient is not globally Lipschitz.
                3 => ConstantSet { l1: f64::INFINITY, l2: 6.0 * coeff, sigma2: 0.0, sigma3: 1.5 * coeff },
                _ => unreachable!(),
            },
        }
    }

    pub fn eval(&self, b: &NormOperator, x: &Vector) -> f64 {
        match self {
            ComponentKind::Quadratic { a, b: lin, c } => 0.5 * x.dot(&(a * x)) + lin.dot(x) + c,
            ComponentKind::Affine { a, b } => a.dot(x) + b,
            ComponentKind::AffineLogSumExp { rows, offsets } => {
                let t: Vec<f64> =
                    rows.iter().zip(offsets).map(|(a, off)| a.dot(x) + off).collect();
                log_sum_exp(&t)
            }
            ComponentKind::PowerOfNorm { center, degree, coeff } => {
                power_eval(b, center, *degree, *coeff, x)
            }
        }
    }

    pub fn grad(&self, b: &NormOperator, x: &Vector) -> Vector {
        match self {
            ComponentKind::Quadratic { a, b: lin, .. } => a * x + lin,
            ComponentKind::Affine { a, .. } => a.clone(),
            ComponentKind::AffineLogSumExp { rows, offsets } => {
                let t: Vec<f64> =
                    rows.iter().zip(offsets).map(|(a, off)| a.dot(x) + off).collect();
                let w = softmax(&t);
                let mut g = Vector::zeros(x.len());
                for (wj, a) in w.iter().zip(rows) {
                    g.axpy(*wj, a, 1.0);
                }
                g
            }
            ComponentKind::PowerOfNorm { center, degree, coeff } => {
                power_grad(b, center, *degree, *coeff, x)
            }
        }
    }

    pub fn hess(&self, b: &NormOperator, x: &Vector) -> Matrix {
        let n = x.len();
        match self {
            ComponentKind::Quadratic { a, .. } => a.clone(),
            ComponentKind::Affine { .. } => Matrix::zeros(n, n),
            ComponentKind::AffineLogSumExp { rows, offsets } => {
                let t: Vec<f64> =
                    rows.iter().zip(offsets).map(|(a, off)| a.dot(x) + off).collect();
                let w = softmax(&t);
                let mut g = Vector::zeros(n);
                for (wj, a) in w.iter().zip(rows) {
                    g.axpy(*wj, a, 1.0);
                }
                let mut h = Matrix::zeros(n, n);
                for (wj, a) in w.iter().zip(rows) {
                    h.syger(*wj, a, a, 1.0);
                }
                h.syger(-1.0, &g, &g, 1.0);
                // syger fills the lower triangle; mirror it
                for i in 0..n {
                    for j in (i + 1)..n {
                        h[(i, j)] = h[(j, i)];
                    }
                }
                h
            }
            ComponentKind::PowerOfNorm { center, degree, coeff } => {
                power_hess(b, center, *degree, *coeff, x)
            }
        }
    }
}

/// Numerically stable ln Σ exp(tⱼ).
pub fn log_sum_exp(t: &[f64]) -> f64 {
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + t.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// exp(tⱼ − lse(t)); sums to one.
pub fn softmax(t: &[f64]) -> Vec<f64> {
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = t.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl SmoothComponent {
    pub fn new(kind: ComponentKind, constants: ConstantSet, b: &NormOperator) -> Result<Self> {
        kind.validate(b)?;
        constants.validate()?;
        Ok(SmoothComponent { kind, constants, augment: None })
    }

    /// Component with constants taken from the closed form of its kind.
    pub fn with_analytic_constants(kind: ComponentKind, b: &NormOperator) -> Result<Self> {
        kind.validate(b)?;
        let constants = kind.analytic_constants(b);
        Ok(SmoothComponent { kind, constants, augment: None })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn eval(&self, b: &NormOperator, x: &Vector) -> f64 {
        let mut v = self.kind.eval(b, x);
        if let Some(t) = &self.augment {
            v += power_eval(b, &t.center, t.degree, t.coeff, x);
        }
        v
    }

    pub fn grad(&self, b: &NormOperator, x: &Vector) -> Vector {
        let mut g = self.kind.grad(b, x);
        if let Some(t) = &self.augment {
            g += power_grad(b, &t.center, t.degree, t.coeff, x);
        }
        g
    }

    pub fn hess(&self, b: &NormOperator, x: &Vector) -> Matrix {
        let mut h = self.kind.hess(b, x);
        if let Some(t) = &self.augment {
            h += power_hess(b, &t.center, t.degree, t.coeff, x);
        }
        h
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.kind, ComponentKind::Affine { .. }) && self.augment.is_none()
    }
}

/// Condition number γ_p = σ_{p+1} / L_p of one component.
///
/// Errors when L_p = 0 (undefined) and when the declared pair violates the
/// full-domain bound γ_p ≤ 1/p!.
pub fn condition_number(c: &SmoothComponent, p: u32) -> Result<f64> {
    let l = c.constants.lipschitz(p);
    let s = c.constants.sigma(p);
    if l == 0.0 {
        return Err(FcError::UndefinedConditionNumber(format!(
            "component has L_{p} = 0; gamma_{p} is undefined"
        )));
    }
    if l.is_infinite() {
        return Ok(0.0);
    }
    let gamma = s / l;
    let fact = if p == 1 { 1.0 } else { 2.0 };
    if gamma > 1.0 / fact + 1e-9 {
        return Err(FcError::InconsistentConstants(format!(
            "gamma_{p} = {gamma} exceeds 1/{p}! on a full-domain component"
        )));
    }
    Ok(gamma)
}

/// β_p(f, α) = (p!γ)^{1/p} / ((1+α)^{1/p} + (p!γ)^{1/p}).
pub fn beta_from_gamma(gamma: f64, p: u32, alpha: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let fact = if p == 1 { 1.0 } else { 2.0 };
    let pw = 1.0 / p as f64;
    let t = (fact * gamma).powf(pw);
    t / ((1.0 + alpha).powf(pw) + t)
}

/// β_p(fᵢ, α) for one component.
pub fn beta(c: &SmoothComponent, p: u32, alpha: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(FcError::Config("alpha must be nonnegative".into()));
    }
    let gamma = condition_number(c, p)?;
    Ok(beta_from_gamma(gamma, p, alpha))
}

/// The vector function f with m ≥ 1 components over a common space.
#[derive(Debug, Clone)]
pub struct VectorFunction {
    pub components: Vec<SmoothComponent>,
    pub dim: usize,
}

impl VectorFunction {
    pub fn new(components: Vec<SmoothComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(FcError::Config("vector function needs at least one component".into()));
        }
        let dim = components[0].dim();
        for c in &components {
            if c.dim() != dim {
                return Err(FcError::DimensionMismatch { expected: dim, got: c.dim() });
            }
        }
        Ok(VectorFunction { components, dim })
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn eval_all(&self, b: &NormOperator, x: &Vector) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(b, x)).collect()
    }

    pub fn grad_all(&self, b: &NormOperator, x: &Vector) -> Vec<Vector> {
        self.components.iter().map(|c| c.grad(b, x)).collect()
    }

    pub fn hess_all(&self, b: &NormOperator, x: &Vector) -> Vec<Matrix> {
        self.components.iter().map(|c| c.hess(b, x)).collect()
    }

    /// The constant vector L_p(f).
    pub fn lipschitz_vec(&self, p: u32) -> Vec<f64> {
        self.components.iter().map(|c| c.constants.lipschitz(p)).collect()
    }

    pub fn sigma_vec(&self, p: u32) -> Vec<f64> {
        self.components.iter().map(|c| c.constants.sigma(p)).collect()
    }

    pub fn all_lipschitz_finite(&self, p: u32) -> bool {
        self.components.iter().all(|c| c.constants.lipschitz(p).is_finite())
    }

    /// All components uniformly convex of degree p+1 with finite L_p.
    pub fn uniformly_convex(&self, p: u32) -> bool {
        self.components
            .iter()
            .all(|c| c.constants.sigma(p) > 0.0 && c.constants.lipschitz(p).is_finite())
    }

    /// β̂_p(f) = min over components of β_p(fᵢ, p).
    ///
    /// Components with L_p = 0 impose no restriction on β (their growth
    /// inequality holds for any β) and are excluded from the minimum; if every
    /// component is excluded the result is 1.
    pub fn hat_beta(&self, p: u32) -> Result<f64> {
        let mut best: Option<f64> = None;
        for c in &self.components {
            if c.constants.lipschitz(p) == 0.0 {
                continue;
            }
            let b = beta(c, p, p as f64)?;
            best = Some(match best {
                None => b,
                Some(cur) => cur.min(b),
            });
        }
        Ok(best.unwrap_or(1.0))
    }

    /// Snapshot of values/derivatives at x, good for Ω_p evaluations.
    pub fn taylor_model(&self, b: &NormOperator, p: u32, x: &Vector) -> TaylorModel {
        TaylorModel {
            order: p,
            anchor: x.clone(),
            values: self.eval_all(b, x),
            grads: self.grad_all(b, x),
            hessians: if p >= 2 { Some(self.hess_all(b, x)) } else { None },
        }
    }
}

/// Taylor approximation Ω_p(f, x; ·) of every component at a common anchor.
///
/// Ω_p(f, x; y) = f(x) + Σ_{k=1}^p D^k f(x)[y−x]^k / k!. Only p ∈ {1, 2} is
/// instantiated here; higher orders would add symmetric k-linear forms as
/// data, which nothing downstream consumes.
#[derive(Debug, Clone)]
pub struct TaylorModel {
    pub order: u32,
    pub anchor: Vector,
    pub values: Vec<f64>,
    pub grads: Vec<Vector>,
    pub hessians: Option<Vec<Matrix>>,
}

impl TaylorModel {
    /// Ω_p(fᵢ, x; y) for every component i.
    pub fn eval(&self, y: &Vector) -> Vec<f64> {
        let h = y - &self.anchor;
        let mut out = Vec::with_capacity(self.values.len());
        for i in 0..self.values.len() {
            let mut v = self.values[i] + self.grads[i].dot(&h);
            if self.order >= 2 {
                let hs = &self.hessians.as_ref().expect("order-2 model carries Hessians")[i];
                v += 0.5 * h.dot(&(hs * &h));
            }
            out.push(v);
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod fd {
    //! Central finite differences, the independent oracle for derivative
    //! checks in this crate's tests.
    use super::*;

    pub fn grad_fd(f: &dyn Fn(&Vector) -> f64, x: &Vector, h: f64) -> Vector {
        let n = x.len();
        Vector::from_fn(n, |i, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
    }

    pub fn hess_fd(g: &dyn Fn(&Vector) -> Vector, x: &Vector, h: f64) -> Matrix {
        let n = x.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let col = (g(&xp) - g(&xm)) / (2.0 * h);
            m.set_column(i, &col);
        }
        // symmetrize the FD noise away
        (&m + m.transpose()) * 0.5
    }
}
