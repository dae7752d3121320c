#![allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0) deliberately rejects NaN
#![allow(clippy::too_many_arguments)]

//! fcopt — solvers for fully composite convex optimization problems
//! φ(x) = F(x, f(x)), where f is a smooth convex vector function and F is a
//! simple, closed, convex outer function, monotone in its second argument.
//!
//! The crate ships:
//!
//! * first- and second-order basic methods with global linear rates under
//!   uniform convexity, and their restricted variants;
//! * gradient, conditional-gradient, fast-gradient, cubic Newton,
//!   contracting Newton, and contracting proximal-point methods for the
//!   subhomogeneous convex case;
//! * a regularization pipeline that turns plain convex instances into
//!   uniformly convex ones;
//! * executable verifiers for the structural inequalities behind all of the
//!   above, a problem-file format, a bundled corpus, and trace output for
//!   the `fcopt` CLI.

pub mod corpus;
pub mod error;
pub mod io;
pub mod linalg;
pub mod methods;
pub mod oracle;
pub mod outer;
pub mod problem;
pub mod regularize;
pub mod subproblem;
pub mod verify;

pub use error::{FcError, Result};
pub use linalg::{CoVector, NormOperator, Point, Vector};
pub use oracle::{ComponentKind, ConstantSet, SmoothComponent, TaylorModel, VectorFunction};
pub use outer::{OuterFunction, OuterKind, SimpleSet};
pub use problem::CompositeProblem;
