//! Derivatives of solution mappings of parameterized composite convex
//! problems `min_x f(x, u) + g(x, u)`.
//!
//! Four engines differentiate the proximal gradient method and its
//! accelerated variant: unrolled forward and reverse AD over a recorded
//! trace, fixed-point forward and reverse AD (FPAD) at a frozen anchor, and
//! implicit differentiation of the fixed-point equation. A reduced-system
//! oracle provides ground truth on Lasso and Group Lasso, and the `denoise`
//! module applies the reverse fixed-point engine to bilevel filter learning.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, which the experiments need.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod bench;
pub mod denoise;
pub mod error;
pub mod glfpi;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod rate;
pub mod scalar;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

/// Dense row-major `f64` matrix.
pub type Matrix = linalg::DenseMatrix<f64>;
/// `½‖Ax − b‖² + λ‖x‖₁`.
pub type Lasso = problems::Problem<f64, problems::L1Norm>;
/// `½‖AX − B‖²_F + λ‖X‖₂,₁`.
pub type GroupLasso = problems::Problem<f64, problems::GroupL21Norm>;
/// Parameters `(A, B, λ)` in `f64`.
pub type Params = problems::ParamPack<f64>;
/// Parameter tangent or cotangent in `f64`.
pub type ParamDir = problems::ParamDirection<f64>;
