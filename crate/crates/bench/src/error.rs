use std::path::PathBuf;

use crate::config::Algorithm;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{algorithm} n={n} trial {trial}: {source}")]
    Filter {
        algorithm: Algorithm,
        n: usize,
        trial: usize,
        #[source]
        source: parsmc::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{algorithm}: need at least 3 particle counts for a slope, have {have}")]
    InsufficientPoints { algorithm: Algorithm, have: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// True when a filter run failed because every weight vanished.
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            BenchError::Filter {
                source: parsmc::Error::Degenerate { .. } | parsmc::Error::AllWeightsZero,
                ..
            }
        )
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
