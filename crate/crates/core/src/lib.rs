//! Meshfree operator approximation with local cubic polyharmonic-spline
//! interpolants, a degree-extension error estimate, and adaptive refinement.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod basis;
pub mod driver;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod local_interp;
pub mod point;
pub mod rules;
pub mod test_functions;
pub mod timing;

pub use basis::{count_monomials, enumerate_basis, MultiIndex, MultiIndexBasis};
pub use driver::{run_adaptive, AdaptiveConfig, AdaptiveReport, ExactOperator, Task, Termination, UpdatePolicy};
pub use error::{Error, Result};
pub use geometry::{NodeSet, Tessellation};
pub use kernel::Cell;
pub use local_interp::{ExtensionMode, OperatorSpec, Stencil, WeightPair};
pub use point::Point;
pub use test_functions::{FunctionKind, TestFunction};
