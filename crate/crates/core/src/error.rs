use thiserror::Error;

/// Errors raised while validating or evaluating the system model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {what} has {found}, expected {expected}")]
    Shape {
        what: &'static str,
        found: usize,
        expected: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("malformed instance: {0}")]
    Parse(String),
}

/// Errors from the dual solver and the oracles.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid dual state: tail sum at user {user}, slot {slot} is {value} (must be > 0)")]
    InvalidDual {
        user: usize,
        slot: usize,
        value: f64,
    },

    #[error("invalid solver options: {0}")]
    Options(String),

    #[error("grid search refused: {dims} decision variables exceeds the limit of {limit}")]
    TooLarge { dims: usize, limit: usize },
}

/// Errors from instance generation, sweeps and result export.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid sweep config: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Parse { path: String, reason: String },
}
