//! Discrete Brakke flow of multiphase curve networks with fixed boundary.

pub mod cutoff;
pub mod diagnostics;
pub mod driver;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod partition;
pub mod quadrature;
pub mod steps;
pub mod varifold;
