use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system specification: {0}")]
    InvalidSpec(String),

    #[error("capacity exceeded: {what} supports at most {limit} sites, got {requested}")]
    Capacity {
        what: &'static str,
        limit: usize,
        requested: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("site index {site} out of range for {n_sites} sites")]
    InvalidSite { site: usize, n_sites: usize },

    #[error("invalid entanglement spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("not applicable: {0}")]
    Inapplicable(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
