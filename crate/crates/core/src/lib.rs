//! Curvature of metrics given as expressions, and the eigenproblems of the
//! Riemann tensor: the antisymmetric-pair ("classical") problem and the
//! M-eigenproblem with its orthogonal variant.
// NaN must fail the positivity and degeneracy guards, hence `!(x > t)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cases;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jacobi;
pub mod meig;
pub mod spectra;
pub mod tensor;

pub use error::{Error, Result};
pub use nalgebra;
