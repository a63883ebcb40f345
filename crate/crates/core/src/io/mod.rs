//! Scenario library, configuration parsing, trajectory persistence and SVG rendering.

pub mod config;
pub mod render;
pub mod scenario;
pub mod snapshot;

use thiserror::Error;

use crate::driver::ConfigError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("scenario {name:?}: {message}")]
    Scenario { name: String, message: String },
    #[error("row {row}: {message}")]
    Format { row: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
