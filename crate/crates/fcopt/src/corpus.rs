//! Bundled desk-scale problem instances. Each entry ships as a JSON problem
//! file embedded in the crate (the same files live under `crates/fcopt/corpus/`
//! for use with the CLI), with analytic optima where available and the list
//! of methods whose preconditions it satisfies.

use once_cell::sync::Lazy;

use crate::error::{FcError, Result};
use crate::io::ProblemFile;
use crate::methods::MethodId;
use crate::problem::CompositeProblem;

use MethodId::*;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub description: &'static str,
    /// Which corpus slot of the test plan this instance fills.
    pub provenance: &'static str,
    /// Closed-form optimum, when one exists.
    pub analytic_opt: Option<f64>,
    /// Methods whose precondition gates this entry passes.
    pub applicable: &'static [MethodId],
    pub file: ProblemFile,
}

impl CorpusEntry {
    pub fn problem(&self) -> Result<CompositeProblem> {
        self.file.to_problem()
    }
}

macro_rules! entry {
    ($id:literal, $file:literal, $desc:literal, $prov:literal, $opt:expr, $methods:expr) => {
        CorpusEntry {
            id: $id,
            description: $desc,
            provenance: $prov,
            analytic_opt: $opt,
            applicable: $methods,
            file: ProblemFile::parse(include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/corpus/",
                $file
            )))
            .expect("bundled corpus file parses"),
        }
    };
}

static ENTRIES: Lazy<Vec<CorpusEntry>> = Lazy::new(|| {
    vec![
        entry!(
            "quad-uc",
            "quad-uc.json",
            "unconstrained strongly convex quadratic, diag(1,4); gamma_1 = 1/4",
            "(a), (g) order-1 variant",
            Some(0.0),
            &[RestrictedBasic, FullBasic, GradientMethod, FastGradient]
        ),
        entry!(
            "constrained-quad",
            "constrained-quad.json",
            "||x||^2/2 under two affine constraints, optimum at their vertex (0,-1)",
            "(b)",
            Some(0.5),
            &[FullBasic, GradientMethod, FastGradient]
        ),
        entry!(
            "one-dim-constraint",
            "one-dim-constraint.json",
            "minimize x subject to x^2 - 1 <= 0; optimum -1 at x = -1",
            "(c)",
            Some(-1.0),
            &[FullBasic]
        ),
        entry!(
            "max-quadratics",
            "max-quadratics.json",
            "max of three unit quadratics with centers (1,0), (-1,0), (0,2)",
            "(d)",
            Some(0.78125),
            &[RestrictedBasic, FullBasic, GradientMethod, FastGradient]
        ),
        entry!(
            "lse-affine",
            "lse-affine.json",
            "log-sum-exp of five affine pieces in R^3 (smooth, fast-gradient target)",
            "(e)",
            None,
            &[FullBasic, GradientMethod, FastGradient, CubicNewton, ContractingProx]
        ),
        entry!(
            "box-lse",
            "box-lse.json",
            "smooth log-sum-exp component over the box [-1,1]^2 (conditional-gradient target)",
            "(f)",
            None,
            &[
                FullBasic,
                GradientMethod,
                ContractingGradient,
                FastGradient,
                CubicNewton,
                ContractingNewton,
                ContractingProx
            ]
        ),
        entry!(
            "power-uc",
            "power-uc.json",
            "(1/3)||x - z||^3: uniformly convex of degree 3, gamma_2 = 1/4",
            "(g) order-2 variant",
            Some(0.0),
            &[RestrictedBasic, FullBasic, CubicNewton, ContractingProx]
        ),
        entry!(
            "rankdef-quad",
            "rankdef-quad.json",
            "rank-deficient convex quadratic x_1^2/2 - x_1 (regularization demo)",
            "(h)",
            Some(-0.5),
            &[FullBasic, GradientMethod, FastGradient]
        ),
        entry!(
            "ball-lse",
            "ball-lse.json",
            "log-sum-exp component over the unit ball (contracting Newton target)",
            "(i) extra",
            None,
            &[
                FullBasic,
                GradientMethod,
                ContractingGradient,
                FastGradient,
                CubicNewton,
                ContractingNewton,
                ContractingProx
            ]
        ),
        entry!(
            "quad-diag-norm",
            "quad-diag-norm.json",
            "the (a) quadratic measured in the diagonal norm B = diag(2, 1/2)",
            "(j) extra",
            Some(0.0),
            &[RestrictedBasic, FullBasic, GradientMethod, FastGradient]
        ),
    ]
});

pub fn corpus_list() -> &'static [CorpusEntry] {
    &ENTRIES
}

pub fn corpus_get(id: &str) -> Result<&'static CorpusEntry> {
    ENTRIES
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| FcError::UnknownCorpusEntry(id.to_string()))
}
