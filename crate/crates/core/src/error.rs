use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("{what} exceeds the configured cap of {cap}")]
    ResourceLimit { what: String, cap: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate Hamiltonian: {0}")]
    DegenerateHamiltonian(String),

    #[error("invalid coupling variant: {0}")]
    InvalidVariant(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("truncation leakage {leakage:.3e} exceeds {tolerance:.1e}; increase the system dimension (currently {dim})")]
    TruncationLeakage {
        leakage: f64,
        tolerance: f64,
        dim: usize,
    },

    #[error("perturbative expansion invalid: total excitation probability {0:.3e}")]
    PerturbationBreakdown(f64),

    #[error("inequality {name} violated at N={n}, x={x}, y={y}: margin {margin:.3e}")]
    InequalityViolation {
        name: String,
        n: u32,
        x: f64,
        y: f64,
        margin: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::NumericalFailure(e.to_string())
    }
}
