use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("all particle weights are zero")]
    AllWeightsZero,
    #[error("non-finite weight at particle {index}")]
    NonFiniteWeight { index: usize },
    #[error("particle count {n} is not a power of two")]
    NotPowerOfTwo { n: usize },
    #[error("empty input")]
    Empty,
    #[error("invalid CDF: {0}")]
    InvalidCdf(String),
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("particle degeneracy at time step {step}: {source}")]
    Degenerate {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
