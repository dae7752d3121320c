//! Dense small-scale vectors, the B-induced primal/dual norms, and SPD solves.
//!
//! The ambient space E = ℝⁿ carries a Euclidean structure defined by a fixed
//! symmetric positive definite operator B:
//!
//!   ‖x‖  = ⟨Bx, x⟩^{1/2}   (primal, on E)
//!   ‖g‖* = ⟨g, B⁻¹g⟩^{1/2} (dual, on E*)
//!
//! Everything here is dense; at n ≤ ~500 a Cholesky factorization per solve
//! is cheap and simpler than anything iterative.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{FcError, Result};

/// Column vector of f64, the common currency of this crate.
pub type Vector = DVector<f64>;
/// Dense square matrix of f64.
pub type Matrix = DMatrix<f64>;

/// An element of the primal space E.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vector,
}

/// An element of the dual space E* (gradients live here).
#[derive(Debug, Clone, PartialEq)]
pub struct CoVector {
    pub coords: Vector,
}

impl Point {
    pub fn new(coords: Vector) -> Self {
        Point { coords }
    }
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl CoVector {
    pub fn new(coords: Vector) -> Self {
        CoVector { coords }
    }
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Dual pairing ⟨g, x⟩.
pub fn pairing(g: &Vector, x: &Vector) -> f64 {
    g.dot(x)
}

/// The operator B defining the conjugate Euclidean norms.
///
/// Identity and diagonal forms keep the common cases allocation-free; the
/// dense form factors B once at construction.
#[derive(Debug, Clone)]
pub enum NormOperator {
    Identity { dim: usize },
    Diagonal { diag: Vector },
    Dense { b: Matrix, chol: Cholesky<f64, Dyn> },
}

impl NormOperator {
    pub fn identity(dim: usize) -> Self {
        NormOperator::Identity { dim }
    }

    /// Diagonal B; every entry must be strictly positive.
    pub fn diagonal(diag: Vector) -> Result<Self> {
        if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(FcError::NotSpd("diagonal entry not strictly positive".into()));
        }
        Ok(NormOperator::Diagonal { diag })
    }

    /// Dense B; checked for symmetry (1e-12 relative) and positive
    /// definiteness (Cholesky must succeed).
    pub fn dense(b: Matrix) -> Result<Self> {
        if b.nrows() != b.ncols() {
            return Err(FcError::NotSpd("matrix not square".into()));
        }
        let scale = b.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        for i in 0..b.nrows() {
            for j in 0..i {
                if (b[(i, j)] - b[(j, i)]).abs() > 1e-12 * scale {
                    return Err(FcError::NotSpd(format!(
                        "asymmetry at ({i},{j}): {} vs {}",
                        b[(i, j)],
                        b[(j, i)]
                    )));
                }
            }
        }
        let chol = Cholesky::new(b.clone())
            .ok_or_else(|| FcError::NotSpd("Cholesky factorization failed".into()))?;
        Ok(NormOperator::Dense { b, chol })
    }

    pub fn dim(&self) -> usize {
        match self {
            NormOperator::Identity { dim } => *dim,
            NormOperator::Diagonal { diag } => diag.len(),
            NormOperator::Dense { b, .. } => b.nrows(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, NormOperator::Identity { .. })
    }

    /// True when B is identity or diagonal, i.e. coordinate-separable.
    /// Box projections by clamping are exact only in this case.
    pub fn is_separable(&self) -> bool {
        !matches!(self, NormOperator::Dense { .. })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(FcError::DimensionMismatch { expected: self.dim(), got: n });
        }
        Ok(())
    }

    /// B x (maps E to E*).
    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            NormOperator::Identity { .. } => x.clone(),
            NormOperator::Diagonal { diag } => x.component_mul(diag),
            NormOperator::Dense { b, .. } => b * x,
        }
    }

    /// B⁻¹ g (maps E* to E).
    pub fn solve(&self, g: &Vector) -> Vector {
        match self {
            NormOperator::Identity { .. } => g.clone(),
            NormOperator::Diagonal { diag } => g.component_div(diag),
            NormOperator::Dense { chol, .. } => chol.solve(g),
        }
    }

    /// ‖x‖ = ⟨Bx, x⟩^{1/2} for x in E.
    pub fn norm(&self, x: &Point) -> Result<f64> {
        self.check_dim(x.dim())?;
        Ok(self.norm_vec(&x.coords))
    }

    /// ‖·‖ on a raw vector; callers inside the crate use this directly.
    pub fn norm_vec(&self, x: &Vector) -> f64 {
        match self {
            NormOperator::Identity { .. } => x.norm(),
            NormOperator::Diagonal { diag } => {
                x.iter().zip(diag.iter()).map(|(xi, di)| di * xi * xi).sum::<f64>().sqrt()
            }
            NormOperator::Dense { b, .. } => (x.dot(&(b * x))).max(0.0).sqrt(),
        }
    }

    /// ‖g‖* = ⟨g, B⁻¹g⟩^{1/2} for g in E*.
    pub fn dual_norm(&self, g: &CoVector) -> Result<f64> {
        self.check_dim(g.dim())?;
        Ok(self.dual_norm_vec(&g.coords))
    }

    pub fn dual_norm_vec(&self, g: &Vector) -> f64 {
        match self {
            NormOperator::Identity { .. } => g.norm(),
            NormOperator::Diagonal { diag } => {
                g.iter().zip(diag.iter()).map(|(gi, di)| gi * gi / di).sum::<f64>().sqrt()
            }
            NormOperator::Dense { .. } => {
                let x = self.solve(g);
                pairing(g, &x).max(0.0).sqrt()
            }
        }
    }

    /// Materialize B as a dense matrix (model Hessians need it).
    pub fn to_matrix(&self) -> Matrix {
        let n = self.dim();
        match self {
            NormOperator::Identity { .. } => Matrix::identity(n, n),
            NormOperator::Diagonal { diag } => Matrix::from_diagonal(diag),
            NormOperator::Dense { b, .. } => b.clone(),
        }
    }

    /// Largest eigenvalue of B (used for Lipschitz bounds of ‖·‖-powers).
    pub fn lambda_max(&self) -> f64 {
        match self {
            NormOperator::Identity { .. } => 1.0,
            NormOperator::Diagonal { diag } => diag.iter().cloned().fold(f64::MIN, f64::max),
            NormOperator::Dense { b, .. } => {
                nalgebra::SymmetricEigen::new(b.clone()).eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
            }
        }
    }
}

/// Solve A y = rhs for symmetric positive definite A.
///
/// Fails with a singularity error when the Cholesky factorization breaks
/// down (a pivot ≤ 0, i.e. A is not SPD).
pub fn spd_solve(a: &Matrix, rhs: &CoVector) -> Result<Point> {
    if a.nrows() != a.ncols() {
        return Err(FcError::NotSpd("matrix not square".into()));
    }
    if a.nrows() != rhs.dim() {
        return Err(FcError::DimensionMismatch { expected: a.nrows(), got: rhs.dim() });
    }
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| FcError::NotSpd("Cholesky pivot not positive".into()))?;
    Ok(Point::new(chol.solve(&rhs.coords)))
}

/// Solve (A) y = rhs returning the raw vector, for solver internals.
pub fn spd_solve_vec(a: &Matrix, rhs: &Vector) -> Result<Vector> {
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| FcError::NotSpd("Cholesky pivot not positive".into()))?;
    Ok(chol.solve(rhs))
}

/// Extremal eigenvalues (min, max) of a symmetric matrix.
pub fn sym_eigen_bounds(a: &Matrix) -> (f64, f64) {
    if a.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Extremal eigenvalues of A measured in the B-geometry, i.e. of B⁻¹A.
///
/// Computed from the symmetric form L⁻¹ A L⁻ᵀ where B = LLᵀ.
pub fn sym_eigen_bounds_wrt(a: &Matrix, b: &NormOperator) -> (f64, f64) {
    match b {
        NormOperator::Identity { .. } => sym_eigen_bounds(a),
        NormOperator::Diagonal { diag } => {
            let n = a.nrows();
            let mut m = a.clone();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] /= (diag[i] * diag[j]).sqrt();
                }
            }
            sym_eigen_bounds(&m)
        }
        NormOperator::Dense { chol, .. } => {
            let l = chol.l();
            // M = L⁻¹ A L⁻ᵀ via two triangular solves
            let mut m = a.clone();
            l.solve_lower_triangular_mut(&mut m);
            let mut mt = m.transpose();
            l.solve_lower_triangular_mut(&mut mt);
            // mt = L⁻¹ Aᵀ L⁻ᵀ = M (A symmetric); symmetrize against rounding
            let ms = (&mt + mt.transpose()) * 0.5;
            sym_eigen_bounds(&ms)
        }
    }
}
