//! Eigenvalues and eigenfunctions of fractional Brownian covariance operators,
//! computed by a Galerkin reference discretisation, closed-form asymptotics and an
//! integro-algebraic solver, with small-ball, perturbation, filtering and sampling tools.

pub mod applications;
pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod iasolver;
pub mod nystrom;
pub mod operators;
pub mod quad;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
pub use specfun::{Family, HurstParams};
