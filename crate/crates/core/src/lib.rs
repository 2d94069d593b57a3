//! Post-Markovian master equations for open quantum systems.

mod error;
pub mod bath;
pub mod diagnostics;
pub mod generators;
pub mod integrator;
pub mod linalg;
pub mod oracles;
mod quadrature;

pub use bath::{CoefficientSet, CorrelationKernel};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityOperator, C64};
