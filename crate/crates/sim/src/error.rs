use std::path::PathBuf;

use dtieval_core::error::{EvalError, IngestError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<IngestError> for SimError {
    fn from(e: IngestError) -> Self {
        SimError::Eval(EvalError::Ingest(e))
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> SimError {
    SimError::ConfigInvalid(msg.into())
}
