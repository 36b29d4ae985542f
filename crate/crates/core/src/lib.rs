//! Krylov solvers on sample covariance matrices and their random matrix laws.

pub mod chimodel;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod orthopoly;
pub mod scalar;
pub mod solvers;
pub mod theory;
pub mod tridiag;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub use num_complex::{Complex32, Complex64};

pub type JacobiMatrix64 = tridiag::JacobiMatrix<f64>;
pub type JacobiMatrix32 = tridiag::JacobiMatrix<f32>;
pub type BidiagonalFactor64 = tridiag::BidiagonalFactor<f64>;
pub type BidiagonalFactor32 = tridiag::BidiagonalFactor<f32>;
pub type SpectralMeasure64 = orthopoly::SpectralMeasure<f64>;
pub type MomentSequence64 = orthopoly::MomentSequence<f64>;
pub type SolveTrace64 = solvers::SolveTrace<f64>;
pub type SolveTrace32 = solvers::SolveTrace<f32>;
pub type RealMatrix = linalg::Matrix<f64>;
pub type ComplexMatrix = linalg::Matrix<Complex64>;
