//! Bernoulli bond percolation on T_d □ Z: exact small-instance oracles,
//! Monte Carlo estimation of the two-point decay rates, and estimation of the
//! critical probability by inverting the horizontal decay rate at 1/(d-1).

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod estimators;
pub mod inversion;
pub mod lattice;
pub mod oracle;
pub mod percolation;
pub mod rng;

pub use error::{Error, Result};
