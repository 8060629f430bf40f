//! Exact diagonalization and spin-vector Monte Carlo for the disordered
//! transverse-field Ising model on Chimera unit cells.

pub mod chimera;
pub mod cli;
pub mod eigen;
pub mod ensemble;
pub mod entanglement;
pub mod error;
pub mod levelstats;
pub mod model;
pub mod rng;
pub mod svmc;

pub use error::{Error, Result};
