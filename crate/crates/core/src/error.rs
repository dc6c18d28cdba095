//! Crate-wide error type.
//!
//! Every error carries a [`ErrorCategory`] so callers (the CLI in
//! particular) can map failures to stable exit codes without matching on
//! individual variants.

use std::path::PathBuf;

/// Broad failure class, used for exit-code mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad user-supplied data: malformed files, invalid parameters,
    /// missing mesh attributes.
    Input,
    /// An external service (delight, super-resolution, estimator, VLM
    /// checker) failed or returned garbage.
    Service,
    /// Everything else: I/O failures, codec errors, internal bugs.
    Internal,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty geometry")]
    EmptyGeometry,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh is missing required attribute(s): {0}")]
    MissingAttribute(String),

    #[error("{path}:{line}: {message}")]
    ObjParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inertia requires watertight geometry")]
    NotWatertight,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("service {name} failed: {message}")]
    Service { name: String, message: String },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Attach a pipeline stage label, preserving the underlying category.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Shorthand for a service failure.
    pub fn service(name: &str, message: impl Into<String>) -> Error {
        Error::Service {
            name: name.to_string(),
            message: message.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::EmptyGeometry
            | Error::InvalidMesh(_)
            | Error::InvalidParameter(_)
            | Error::MissingAttribute(_)
            | Error::ObjParse { .. }
            | Error::DimensionMismatch(_)
            | Error::NotWatertight
            | Error::InvalidInput(_) => ErrorCategory::Input,
            Error::Service { .. } => ErrorCategory::Service,
            Error::Stage { source, .. } => source.category(),
            Error::Io(_) | Error::Image(_) | Error::Internal(_) => ErrorCategory::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
