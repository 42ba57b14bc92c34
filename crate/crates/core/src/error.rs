use thiserror::Error;

use crate::expr::{EvalError, ParseError};

/// Errors raised by the engine. Input problems (schema, parse, unknown names)
/// are distinguished from per-point numerical failures so the CLI can map
/// them to different exit codes.
#[derive(Debug, Error)]
pub enum MkvError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("parse error at {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("spec has no almost contact structure block")]
    MissingStructure,
    #[error("almost contact structures need odd dimension, got {0}")]
    EvenDimension(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("degenerate metric at {point:?} (|det| = {det:e})")]
    DegenerateMetric { point: Vec<f64>, det: f64 },
    #[error("internal consistency fault in {what}: residual {residual:e}")]
    InternalConsistency { what: String, residual: f64 },
    #[error("no sample points")]
    NoSamples,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl MkvError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        MkvError::Schema { path: path.into(), message: message.into() }
    }

    /// True for errors caused by the user's input rather than by a check.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            MkvError::Eval { .. }
                | MkvError::DegenerateMetric { .. }
                | MkvError::InternalConsistency { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, MkvError>;
