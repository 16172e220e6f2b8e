use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("{context}: {message}")]
    Schema { context: String, message: String },

    #[error("boundary condition error: {0}")]
    Boundary(String),

    #[error("singular system: zero or negative pivot at node {node} (dof {dof})")]
    Singular { node: usize, dof: usize },

    #[error("phase-field Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("invariant violated at increment {increment}: {message}")]
    Invariant { increment: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("post-processing error: {0}")]
    Postproc(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
