//! Unconstrained reference predictors: minimum-norm and ridge polynomial least
//! squares, and Gaussian-process regression with an anisotropic RBF kernel.
//!
//! All of them work in the same scaled coordinates as the constrained fit.

mod gpr;
mod poly;

use thiserror::Error;

use crate::basis::BasisError;
use crate::dataset::DataError;
use crate::globalopt::GlobalOptError;

pub use gpr::{gpr_fit, gpr_fit_with, gpr_predict, GprKernel, GprModel, LengthscalePolicy, GPR_NOISE};
pub use poly::{fit_ridge_poly, fit_unconstrained_poly, ridge_solve, PINV_RELATIVE_CUTOFF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefModelError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    GlobalOpt(#[from] GlobalOptError),
    #[error("ridge parameter must be finite and nonnegative, got {0}")]
    InvalidRidge(f64),
    #[error("noise level must be finite and positive, got {0}")]
    InvalidNoise(f64),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("kernel matrix is not positive definite")]
    Factorization,
    #[error("singular value decomposition did not converge")]
    Svd,
    #[error("point has dimension {found}, model has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}
