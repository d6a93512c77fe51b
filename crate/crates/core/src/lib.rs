//! Minimum-l1 estimation of linear-model parameters with a modeled noise
//! basis.
//!
//! The data model is `d = V xi + Ve eta`: `V` is an ill-conditioned design
//! matrix and the columns of `Ve` form a basis in which the noise has random
//! coefficients `eta`. The estimator solves `min ||[xi; eta]||_1` subject to
//! the extended system, and for noise variance above a computable threshold
//! its mean square error is smaller than that of least squares.
//!
//! Numerical routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the experiments use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decomp;
pub mod error;
pub mod estimator;
pub mod l1solve;
pub mod linalg;
pub mod realiso;
pub mod scalar;
pub mod simlab;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_complex::{Complex, Complex64};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type RealMatrix = linalg::Matrix<f64>;
pub type CMatrix = realiso::ComplexMatrix<f64>;
pub type CVector = realiso::ComplexVector<f64>;
pub type Svd = decomp::SvdFactors<f64>;
pub type Gsvd = decomp::GsvdFactors<f64>;
pub type L1Solution = l1solve::L1Solution<f64>;
pub type BarrierSettings = l1solve::BarrierSettings<f64>;
pub type LinearModel = estimator::LinearModel<f64>;
pub type DominatingEstimate = estimator::DominatingEstimate<f64>;
pub type ThresholdReport = estimator::ThresholdReport<f64>;
