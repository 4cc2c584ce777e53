//! Simulation and verification toolkit for nonparametric regression under
//! covariate shift with Markovian data.
//!
//! The deterministic numerics (finite kernels, spectral quantities, exact
//! similarity values, estimator arithmetic, bounds) are generic over
//! [`Real`], implemented for `f32` and `f64`. Sampling code works in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chains;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod num;
pub mod points;
pub mod risk;
pub mod rng;
pub mod serde_inf;
pub mod similarity;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use num::Real;

pub type FiniteKernelF64 = chains::FiniteKernel<f64>;
pub type FiniteKernelF32 = chains::FiniteKernel<f32>;
pub type PointSetF64 = points::PointSet<f64>;
pub type PointSetF32 = points::PointSet<f32>;
pub type MatrixF64 = linalg::Matrix<f64>;
pub type MatrixF32 = linalg::Matrix<f32>;
pub type FittedNwF64 = estimator::FittedNw<f64>;
pub type FittedNwF32 = estimator::FittedNw<f32>;
