use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{column}` in header of {source_name}")]
    MissingColumn { source_name: String, column: String },

    #[error("duplicate collision id `{id}` at row {row}")]
    DuplicateKey { id: String, row: usize },

    #[error("malformed cell at row {row}, column `{column}`: {reason}")]
    MalformedCell { row: usize, column: String, reason: String },

    #[error("column `{0}` has no valid value to impute from")]
    AllInvalidColumn(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("target maps disagree on collision id `{0}`")]
    KeyMismatch(String),

    #[error("class {class} has {count} rows; at least {required} required")]
    DegenerateClass { class: u8, count: usize, required: usize },

    #[error("empty node: impurity undefined")]
    EmptyNode,

    #[error("feature index {index} out of range for row of width {width}")]
    FeatureOutOfRange { index: usize, width: usize },

    #[error("length mismatch: {left} labels vs {right} scores")]
    LengthMismatch { left: usize, right: usize },

    #[error("labels contain a single class; both classes are required")]
    SingleClassLabels,

    #[error("tree node {0} has no cover")]
    MissingCover(usize),

    #[error("invalid ring in district `{district}`: {reason}")]
    InvalidRing { district: String, reason: String },

    #[error("district `{0}` not present in boundaries")]
    UnknownDistrict(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("every grid cell failed")]
    GridExhausted,

    #[error("unsupported model schema version {0}")]
    SchemaVersion(u32),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
