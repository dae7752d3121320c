//! The simple outer function F(x, u) and the simple sets it is built from.
//!
//! Four built-in instantiations cover the classic composite settings:
//!
//! * `ConstraintForm`  — F(x,u) = u⁽¹⁾ + Σ_{i≥2} Ind(u⁽ⁱ⁾ ≤ 0) + Ind_Q(x)
//! * `AdditiveComposite` — F(x,u) = u⁽¹⁾ + ψ(x), ψ = Ind_Q plus an optional
//!   linear term
//! * `MaxForm` — F(x,u) = maxᵢ u⁽ⁱ⁾ + Ind_Q(x)
//! * `LogSumExp` — F(x,u) = ln Σᵢ exp(u⁽ⁱ⁾)
//!
//! All four are closed, convex in (x,u), monotone in u, and subhomogeneous in
//! u (for AdditiveComposite the flag requires a zero linear term; see
//! `is_subhomogeneous`).

use crate::error::{FcError, Result};
use crate::linalg::{NormOperator, Vector};
use crate::oracle::{log_sum_exp, softmax};

/// Indicator feasibility tolerance (absolute). Subproblem solvers return
/// approximately feasible points; exact indicator tests would spuriously
/// report +∞.
pub const FEAS_TOL: f64 = 1e-9;

/// A set simple enough for exact projections and linear minimization.
#[derive(Debug, Clone)]
pub enum SimpleSet {
    All,
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
}

impl SimpleSet {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            SimpleSet::All => Ok(()),
            SimpleSet::Box { lower, upper } => {
                if lower.len() != dim || upper.len() != dim {
                    return Err(FcError::DimensionMismatch { expected: dim, got: lower.len() });
                }
                if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
                    return Err(FcError::Config("box has lower > upper".into()));
                }
                Ok(())
            }
            SimpleSet::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(FcError::DimensionMismatch { expected: dim, got: center.len() });
                }
                if !(*radius > 0.0) {
                    return Err(FcError::Config("ball radius must be positive".into()));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, b: &NormOperator, x: &Vector, tol: f64) -> bool {
        match self {
            SimpleSet::All => true,
            SimpleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(xi, (l, u))| *xi >= l - tol && *xi <= u + tol),
            SimpleSet::Ball { center, radius } => b.norm_vec(&(x - center)) <= radius + tol,
        }
    }

    /// Projection in the B-norm. Exact for Ball (radial scaling) with any B
    /// and for Box (clamping) when B is separable; problems pairing a Box
    /// with a dense B are rejected at construction time.
    pub fn project(&self, b: &NormOperator, x: &Vector) -> Vector {
        match self {
            SimpleSet::All => x.clone(),
            SimpleSet::Box { lower, upper } => Vector::from_fn(x.len(), |i, _| {
                x[i].max(lower[i]).min(upper[i])
            }),
            SimpleSet::Ball { center, radius } => {
                let d = x - center;
                let r = b.norm_vec(&d);
                if r <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / r)
                }
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, SimpleSet::All)
    }

    /// Diameter in the B-norm, exact for Box and Ball.
    pub fn diameter(&self, b: &NormOperator) -> Option<f64> {
        match self {
            SimpleSet::All => None,
            SimpleSet::Box { lower, upper } => Some(b.norm_vec(&(upper - lower))),
            SimpleSet::Ball { radius, .. } => Some(2.0 * radius),
        }
    }

    /// argmin_{v ∈ Q} ⟨g, v⟩ for bounded Q. A zero gradient coordinate in the
    /// Box case resolves to the lower bound so traces stay reproducible.
    pub fn linear_min(&self, b: &NormOperator, g: &Vector) -> Option<Vector> {
        match self {
            SimpleSet::All => None,
            SimpleSet::Box { lower, upper } => Some(Vector::from_fn(g.len(), |i, _| {
                if g[i] < 0.0 {
                    upper[i]
                } else {
                    lower[i]
                }
            })),
            SimpleSet::Ball { center, radius } => {
                let gn = b.dual_norm_vec(g);
                if gn == 0.0 {
                    Some(center.clone())
                } else {
                    Some(center - b.solve(g) * (*radius / gn))
                }
            }
        }
    }
}

/// Which built-in outer function, with its parameters.
#[derive(Debug, Clone)]
pub enum OuterKind {
    ConstraintForm { q: SimpleSet },
    AdditiveComposite { q: SimpleSet, linear: Option<Vector> },
    MaxForm { q: SimpleSet },
    LogSumExp,
}

/// The outer function F with its number of u-coordinates.
#[derive(Debug, Clone)]
pub struct OuterFunction {
    pub kind: OuterKind,
    pub m: usize,
}

impl OuterFunction {
    pub fn new(kind: OuterKind, m: usize, dim: usize) -> Result<Self> {
        if m == 0 {
            return Err(FcError::Config("outer function needs m >= 1".into()));
        }
        match &kind {
            OuterKind::ConstraintForm { q } | OuterKind::MaxForm { q } => q.validate(dim)?,
            OuterKind::AdditiveComposite { q, linear } => {
                q.validate(dim)?;
                if m != 1 {
                    return Err(FcError::Config("additive composite form has m = 1".into()));
                }
                if let Some(l) = linear {
                    if l.len() != dim {
                        return Err(FcError::DimensionMismatch { expected: dim, got: l.len() });
                    }
                }
            }
            OuterKind::LogSumExp => {}
        }
        Ok(OuterFunction { kind, m })
    }

    /// F(x, u); +∞ is a regular value.
    pub fn eval(&self, b: &NormOperator, x: &Vector, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.m);
        match &self.kind {
            OuterKind::ConstraintForm { q } => {
                if !q.contains(b, x, FEAS_TOL) {
                    return f64::INFINITY;
                }
                if u[1..].iter().any(|&ui| ui > FEAS_TOL) {
                    return f64::INFINITY;
                }
                u[0]
            }
            OuterKind::AdditiveComposite { q, linear } => {
                if !q.contains(b, x, FEAS_TOL) {
                    return f64::INFINITY;
                }
                u[0] + linear.as_ref().map_or(0.0, |l| l.dot(x))
            }
            OuterKind::MaxForm { q } => {
                if !q.contains(b, x, FEAS_TOL) {
                    return f64::INFINITY;
                }
                u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            OuterKind::LogSumExp => log_sum_exp(u),
        }
    }

    /// The growth constant F(L_p(f)): the closed form of sup_x F(x, L) over
    /// the x-domain, which is also the exact increment constant in
    /// F(x, u + tL) ≤ F(x, u) + t·F(L) used by every convergence proof here.
    pub fn f_of_constants(&self, l: &[f64]) -> f64 {
        debug_assert_eq!(l.len(), self.m);
        match &self.kind {
            OuterKind::ConstraintForm { .. } => {
                if l[1..].iter().any(|&li| li != 0.0) {
                    f64::INFINITY
                } else {
                    l[0]
                }
            }
            OuterKind::AdditiveComposite { .. } => l[0],
            OuterKind::MaxForm { .. } => l.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            OuterKind::LogSumExp => log_sum_exp(l),
        }
    }

    /// Membership of x in the x-part of dom F (not of dom φ).
    pub fn domain_contains_x(&self, b: &NormOperator, x: &Vector) -> bool {
        match &self.kind {
            OuterKind::ConstraintForm { q }
            | OuterKind::AdditiveComposite { q, .. }
            | OuterKind::MaxForm { q } => q.contains(b, x, FEAS_TOL),
            OuterKind::LogSumExp => true,
        }
    }

    /// The x-domain of φ as a simple set, when it is one. For the constraint
    /// form dom φ involves the smooth constraints themselves and is not
    /// simple, so restricted/contracted steps are unavailable there.
    pub fn simple_phi_domain(&self) -> Option<SimpleSet> {
        match &self.kind {
            OuterKind::ConstraintForm { .. } => None,
            OuterKind::AdditiveComposite { q, .. } | OuterKind::MaxForm { q } => Some(q.clone()),
            OuterKind::LogSumExp => Some(SimpleSet::All),
        }
    }

    pub fn q_set(&self) -> SimpleSet {
        match &self.kind {
            OuterKind::ConstraintForm { q }
            | OuterKind::AdditiveComposite { q, .. }
            | OuterKind::MaxForm { q } => q.clone(),
            OuterKind::LogSumExp => SimpleSet::All,
        }
    }

    /// Strict subhomogeneity of u ↦ F(x, u). True for all built-ins except
    /// an AdditiveComposite with a nonzero linear term (the term shifts F by
    /// a constant in u, which breaks F(x, tu) ≤ tF(x, u) pointwise even
    /// though every scheme inequality still holds with F(L_p) = L⁽¹⁾).
    pub fn is_subhomogeneous(&self) -> bool {
        match &self.kind {
            OuterKind::AdditiveComposite { linear, .. } => {
                linear.as_ref().is_none_or(|l| l.iter().all(|&v| v == 0.0))
            }
            _ => true,
        }
    }

    /// One subgradient of u ↦ F(x, u) at a point with finite value.
    pub fn subgrad_u(&self, u: &[f64]) -> Vec<f64> {
        match &self.kind {
            OuterKind::ConstraintForm { .. } | OuterKind::AdditiveComposite { .. } => {
                let mut g = vec![0.0; self.m];
                g[0] = 1.0;
                g
            }
            OuterKind::MaxForm { .. } => {
                let mut g = vec![0.0; self.m];
                let (mut arg, mut best) = (0usize, f64::NEG_INFINITY);
                for (i, &ui) in u.iter().enumerate() {
                    if ui > best {
                        best = ui;
                        arg = i;
                    }
                }
                g[arg] = 1.0;
                g
            }
            OuterKind::LogSumExp => softmax(u),
        }
    }

    /// Sampled check of the subhomogeneity conditions at a fixed x; see the
    /// verifier module for the full report machinery.
    pub fn check_subhomogeneous(
        &self,
        b: &NormOperator,
        x: &Vector,
        samples: usize,
        seed: u64,
    ) -> crate::verify::CheckReport {
        crate::verify::check_subhomogeneous_outer(self, b, x, samples, seed)
    }
}
