//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied index was outside the structure it addresses.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The random and optimal references coincide, so no score scale exists;
    /// callers are expected to resample the task.
    #[error("task not normalizable: optimal and random references both equal {0}")]
    NotNormalizable(f64),

    /// Hardware-fidelity runs are limited by the emulated crossbar size.
    #[error("crossbar capacity exceeded: {n_states} states + {n_actions} actions > {cap}")]
    CrossbarCapacity {
        n_states: usize,
        n_actions: usize,
        cap: usize,
    },

    /// A Gittins lookup fell outside the table's posterior coverage.
    #[error("gittins table lookup out of range: posterior counts ({a}, {b})")]
    GittinsOutOfRange { a: usize, b: usize },

    /// Configuration parsing or cross-field validation failed.
    #[error("config error: {0}")]
    Config(String),

    /// A run failed after configuration was accepted.
    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code contract: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            _ => 3,
        }
    }
}
