//! Problem files (JSON) and trace files (CSV).
//!
//! A problem file is a JSON document:
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "norm": {"type": "identity"},
//!   "components": [
//!     {"kind": "quadratic", "a": [[1.0,0.0],[0.0,4.0]], "b": [1.0,-2.0], "c": 1.0,
//!      "constants": {"l1": 4.0, "l2": 0.0, "sigma2": 1.0, "sigma3": 0.0}}
//!   ],
//!   "outer": {"kind": "additive", "q": {"type": "all"}},
//!   "x0": [2.0, 2.0],
//!   "known_opt": 0.0,
//!   "d0": 4.242640687119285
//! }
//! ```
//!
//! Constants may be the string "inf" for +∞ (JSON has no infinity literal).
//! Trace files are CSV with the fixed header
//! `k,phi,gap,bound,step_norm,inner_iters,subproblem_kkt`; absent values
//! (unknown gap or bound) serialize as empty fields.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::io::Write;

use crate::error::{FcError, Result};
use crate::linalg::{Matrix, NormOperator, Vector};
use crate::methods::RunTrace;
use crate::oracle::{ComponentKind, ConstantSet, SmoothComponent, VectorFunction};
use crate::outer::{OuterFunction, OuterKind, SimpleSet};
use crate::problem::CompositeProblem;

/// f64 that serializes +∞ as the string "inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal(v)),
            Raw::Word(w) => match w.as_str() {
                "inf" | "infinity" | "+inf" => Ok(ExtReal(f64::INFINITY)),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number or \"inf\", got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSpec {
    pub l1: ExtReal,
    pub l2: ExtReal,
    pub sigma2: f64,
    pub sigma3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NormSpec {
    Identity,
    Diagonal { data: Vec<f64> },
    Dense { data: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentSpec {
    Quadratic { a: Vec<Vec<f64>>, b: Vec<f64>, c: f64, constants: ConstantsSpec },
    AffineLogSumExp { rows: Vec<Vec<f64>>, offsets: Vec<f64>, constants: ConstantsSpec },
    PowerOfNorm { center: Vec<f64>, degree: u32, coeff: f64, constants: ConstantsSpec },
    Affine { a: Vec<f64>, b: f64, constants: ConstantsSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetSpec {
    All,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterSpec {
    Constraint {
        q: SetSpec,
    },
    Additive {
        q: SetSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        linear: Option<Vec<f64>>,
    },
    Max {
        q: SetSpec,
    },
    LogSumExp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub dimension: usize,
    pub norm: NormSpec,
    pub components: Vec<ComponentSpec>,
    pub outer: OuterSpec,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_opt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
}

fn vec_of(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

fn matrix_of(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(FcError::ProblemFile("matrix rows have inconsistent lengths".into()));
    }
    let m = rows[0].len();
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<ProblemFile> {
        let text = std::fs::read_to_string(path)?;
        ProblemFile::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn set_of(&self, s: &SetSpec) -> SimpleSet {
        match s {
            SetSpec::All => SimpleSet::All,
            SetSpec::Box { lower, upper } => {
                SimpleSet::Box { lower: vec_of(lower), upper: vec_of(upper) }
            }
            SetSpec::Ball { center, radius } => {
                SimpleSet::Ball { center: vec_of(center), radius: *radius }
            }
        }
    }

    /// Build the in-memory problem, validating dimensions, constants and
    /// feasibility of x0.
    pub fn to_problem(&self) -> Result<CompositeProblem> {
        let b = match &self.norm {
            NormSpec::Identity => NormOperator::identity(self.dimension),
            NormSpec::Diagonal { data } => NormOperator::diagonal(vec_of(data))?,
            NormSpec::Dense { data } => NormOperator::dense(matrix_of(data)?)?,
        };
        let mut comps = Vec::new();
        for spec in &self.components {
            let (kind, c) = match spec {
                ComponentSpec::Quadratic { a, b: lin, c, constants } => (
                    ComponentKind::Quadratic { a: matrix_of(a)?, b: vec_of(lin), c: *c },
                    constants,
                ),
                ComponentSpec::AffineLogSumExp { rows, offsets, constants } => (
                    ComponentKind::AffineLogSumExp {
                        rows: rows.iter().map(|r| vec_of(r)).collect(),
                        offsets: offsets.clone(),
                    },
                    constants,
                ),
                ComponentSpec::PowerOfNorm { center, degree, coeff, constants } => (
                    ComponentKind::PowerOfNorm {
                        center: vec_of(center),
                        degree: *degree,
                        coeff: *coeff,
                    },
                    constants,
                ),
                ComponentSpec::Affine { a, b: off, constants } => {
                    (ComponentKind::Affine { a: vec_of(a), b: *off }, constants)
                }
            };
            let constants = ConstantSet {
                l1: c.l1.0,
                l2: c.l2.0,
                sigma2: c.sigma2,
                sigma3: c.sigma3,
            };
            comps.push(SmoothComponent::new(kind, constants, &b)?);
        }
        let f = VectorFunction::new(comps)?;
        let m = f.m();
        let outer_kind = match &self.outer {
            OuterSpec::Constraint { q } => OuterKind::ConstraintForm { q: self.set_of(q) },
            OuterSpec::Additive { q, linear } => OuterKind::AdditiveComposite {
                q: self.set_of(q),
                linear: linear.as_ref().map(|l| vec_of(l)),
            },
            OuterSpec::Max { q } => OuterKind::MaxForm { q: self.set_of(q) },
            OuterSpec::LogSumExp => OuterKind::LogSumExp,
        };
        let outer = OuterFunction::new(outer_kind, m, self.dimension)?;
        CompositeProblem::new(
            f,
            outer,
            b,
            vec_of(&self.x0),
            self.known_opt,
            self.d0,
            self.diameter,
        )
    }
}

/// Fixed CSV header of trace files.
pub const TRACE_HEADER: &str = "k,phi,gap,bound,step_norm,inner_iters,subproblem_kkt";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

/// Serialize a trace to CSV. Formatting uses Rust's shortest round-trip
/// float notation, so identical runs produce byte-identical files.
pub fn write_trace_csv<W: Write>(trace: &RunTrace, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for row in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            row.k,
            row.phi,
            fmt_opt(row.gap),
            fmt_opt(row.bound),
            row.step_norm,
            row.inner_iters,
            row.kkt
        )?;
    }
    Ok(())
}

pub fn trace_to_csv_string(trace: &RunTrace) -> String {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf).expect("vec write cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}
