use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cell size {0}: half-cell size must be in 1..=8")]
    InvalidCellSize(usize),

    #[error("invalid tiling: {0}")]
    InvalidTiling(String),

    #[error("unknown bipartition name `{0}` (expected `up-down` or `left-right`)")]
    UnknownPartition(String),

    #[error("named bipartitions are defined on a single 8-spin cell, got a graph with {0} spins")]
    PartitionGraphMismatch(usize),

    #[error("invalid bipartition: {0}")]
    InvalidPartition(String),

    #[error("invalid disorder realization: {0}")]
    InvalidRealization(String),

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("{n_spins} spins exceeds the configured maximum of {max} for dense matrices")]
    DimensionOverflow { n_spins: usize, max: usize },

    #[error("eigensolver failed to converge (matrix seed {seed:?})")]
    NoConvergence { seed: Option<u64> },

    #[error("state of length {len} does not match a {n_spins}-spin bipartition")]
    StateSizeMismatch { len: usize, n_spins: usize },

    #[error("state is not normalized: norm {0}")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("degenerate spectrum: all energies equal")]
    DegenerateSpectrum,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid scan configuration: {0}")]
    InvalidConfig(String),

    #[error("too many eigensolver failures: {failures} of {total} realizations")]
    TooManyFailures { failures: usize, total: usize },

    #[error("invalid annealing schedule: {0}")]
    InvalidSchedule(String),

    #[error("target ratio B/A = {target} outside achievable range [{min}, {max}]")]
    RatioOutOfRange { target: f64, min: f64, max: f64 },

    #[error("invalid SVMC configuration: {0}")]
    InvalidSvmc(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
