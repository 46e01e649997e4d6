//! Robust estimation of a vector from many small linear sensor subsystems, some of which
//! are unreliable.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar to `f64`, which is what the experiments and the CLI use.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use model::{GroundTruth, OutlierModel, SensingProblem, SensorBlock, SolverConfig, SolverOutput};
pub use rng::{Distribution, RngStream};
pub use scalar::Real;

pub type Matrix = DenseMatrix<f64>;
pub type Problem = SensingProblem<f64>;
pub type Truth = GroundTruth<f64>;
pub type Config = SolverConfig<f64>;
pub type Output = SolverOutput<f64>;

pub type Matrix32 = DenseMatrix<f32>;
pub type Problem32 = SensingProblem<f32>;
pub type Config32 = SolverConfig<f32>;
pub type Output32 = SolverOutput<f32>;
