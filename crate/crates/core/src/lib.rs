//! Free-probability predictions for random quantum channels built from Haar
//! unitaries, together with the Monte-Carlo and optimization machinery that
//! checks them at finite size.

pub mod entropy;
pub mod error;
pub mod free;
pub mod kernel;
pub mod majorization;
pub mod opt;
pub mod prob;
pub mod quad;
pub mod selftest;
pub mod sim;

pub use error::{Error, Result};
pub use kernel::{ComplexMatrix, RngStream, C64};
pub use prob::ProbabilityVector;
