//! Spectral points of small tensors: Strassen support functionals, quantum
//! functionals, asymptotic subrank of tight supports and asymptotic slice rank.

pub mod asymptotics;
pub mod entropy;
pub mod error;
pub mod family;
pub mod field;
pub mod functionals;
pub mod linalg;
pub mod lp;
pub mod partition;
pub mod quantum;
pub mod subrank;
pub mod support;
pub mod tensor;
pub mod tight;

pub use error::{Result, SpectralError};
pub use field::Domain;
pub use support::SupportSet;
pub use tensor::{Matrix, Scalar, Tensor};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
