use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The environment generator is not irreducible.
    #[error("reducible generator: {0}")]
    Reducible(String),

    /// The numerical flow left its admissible region.
    #[error("integration left the admissible region near t = {time}")]
    LeftRegion { time: f64, state: Vec<f64> },

    /// A model or engine configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A state-dependent rate exceeded the caller-supplied thinning bound.
    #[error("thinning majorant {majorant} exceeded by rate {rate} at state {state:?}")]
    MajorantViolated { rate: f64, majorant: f64, state: Vec<f64> },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("population exceeded the cap of {cap} individuals")]
    PopulationOverflow { cap: usize },

    #[error("molecule count exceeded the cap of {cap}")]
    CountOverflow { cap: u64 },

    /// No individual is alive at the requested time.
    #[error("population extinct at t = {0}")]
    Extinct(f64),

    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
