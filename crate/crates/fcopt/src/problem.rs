//! The fully composite problem φ(x) = F(x, f(x)) as held in memory.

use crate::error::{FcError, Result};
use crate::linalg::{NormOperator, Vector};
use crate::oracle::VectorFunction;
use crate::outer::{OuterFunction, SimpleSet};

/// Problem data: the smooth vector f, the simple outer F, the norm operator
/// B, a feasible starting point, and optional metadata used by bound columns
/// and tests.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub f: VectorFunction,
    pub outer: OuterFunction,
    pub b: NormOperator,
    pub x0: Vector,
    /// φ*, when known analytically (testing metadata, never used by solvers).
    pub known_opt: Option<f64>,
    /// Radius of the initial level set around x*, when known.
    pub d0: Option<f64>,
    /// Diameter of dom φ, when known (exact values for Box/Ball are derived).
    pub diameter: Option<f64>,
}

impl CompositeProblem {
    pub fn new(
        f: VectorFunction,
        outer: OuterFunction,
        b: NormOperator,
        x0: Vector,
        known_opt: Option<f64>,
        d0: Option<f64>,
        diameter: Option<f64>,
    ) -> Result<Self> {
        if b.dim() != f.dim {
            return Err(FcError::DimensionMismatch { expected: f.dim, got: b.dim() });
        }
        if x0.len() != f.dim {
            return Err(FcError::DimensionMismatch { expected: f.dim, got: x0.len() });
        }
        if outer.m != f.m() {
            return Err(FcError::Config(format!(
                "outer function expects m = {}, smooth part has m = {}",
                outer.m,
                f.m()
            )));
        }
        // Box projections clamp per coordinate, which is the B-projection
        // only for separable B.
        if matches!(outer.q_set(), SimpleSet::Box { .. }) && !b.is_separable() {
            return Err(FcError::Config(
                "box-constrained problems require an identity or diagonal norm operator".into(),
            ));
        }
        let p = CompositeProblem { f, outer, b, x0, known_opt, d0, diameter };
        let v0 = p.phi(&p.x0);
        if !v0.is_finite() {
            return Err(FcError::Config("x0 is not in dom phi".into()));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.f.dim
    }

    pub fn m(&self) -> usize {
        self.f.m()
    }

    /// φ(x) = F(x, f(x)); +∞ outside dom φ.
    pub fn phi(&self, x: &Vector) -> f64 {
        let u = self.f.eval_all(&self.b, x);
        self.outer.eval(&self.b, x, &u)
    }

    /// F(L_p(f)), the composite smoothness constant of order p.
    pub fn f_of_lipschitz(&self, p: u32) -> f64 {
        self.outer.f_of_constants(&self.f.lipschitz_vec(p))
    }

    /// Diameter of dom φ in the B-norm: the exact Box/Ball value when the
    /// domain is simple and bounded, otherwise the user-supplied figure.
    pub fn effective_diameter(&self) -> Option<f64> {
        match self.outer.simple_phi_domain() {
            Some(q) => q.diameter(&self.b).or(self.diameter),
            None => self.diameter,
        }
    }

    /// D₀ for bound columns: the user-supplied value, else the domain
    /// diameter (a valid upper bound since the level set sits inside dom φ).
    pub fn effective_d0(&self) -> Option<f64> {
        self.d0.or_else(|| self.effective_diameter())
    }
}
