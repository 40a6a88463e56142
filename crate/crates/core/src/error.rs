use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("stacked dimension {dim} exceeds the supported maximum {max}")]
    Sizing { dim: usize, max: usize },

    #[error("model error: {0}")]
    Model(String),

    #[error("gain violates causality pattern: max forbidden entry {max_violation:e}")]
    Causality { max_violation: f64 },

    #[error("ill-conditioned matrix (condition estimate {condition:e})")]
    Conditioning { condition: f64 },

    #[error("system not observable over the window: rank {rank} < {required}")]
    Unobservable { rank: usize, required: usize },

    #[error("l1 solver did not converge after {iterations} iterations (best objective {best_objective})")]
    NonConvergence {
        iterations: usize,
        best_objective: f64,
    },

    #[error("l1 solver failed on row {row}: {source}")]
    Solver {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("state diverged at step {step} (|x| = {magnitude:e})")]
    Instability { step: usize, magnitude: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("csv error at {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
