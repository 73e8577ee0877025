use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{id}: needs at least {needed} samples, got {got}")]
    TooFewSamples { id: String, needed: usize, got: usize },
    #[error("{id}: time {t} does not increase")]
    NonMonotonicTime { id: String, t: f64 },
    #[error("{id}: non-finite time or position")]
    NonFinite { id: String },
    #[error("{id}: time {t} outside trajectory span [{start}, {end}]")]
    OutOfRange { id: String, t: f64, start: f64, end: f64 },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse { path: PathBuf, line: usize, field: String, message: String },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("{path}:{line}: timestamps for {id:?} do not strictly increase")]
    NonMonotonicTime { path: PathBuf, line: usize, id: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid coordinate lat={lat} lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("time window [{start}, {end}] is empty")]
    EmptyWindow { start: f64, end: f64 },
    #[error("invalid area of interest: {0}")]
    InvalidAoi(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("metric {0:?} has no scoring context")]
    MissingContext(String),
    #[error("scoring context for {0:?}: worst and best anchors must differ and be finite")]
    InvalidAnchors(String),
    #[error("negative weight {value} for {key:?}")]
    NegativeWeight { key: String, value: f64 },
    #[error("all weights are zero at level {0:?}")]
    AllZeroWeights(String),
    #[error("rating store corrupt at line {line}: {message}")]
    StoreCorrupt { line: usize, message: String },
    #[error("rating store: {0}")]
    Io(String),
    #[error("{0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}
