use std::path::PathBuf;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid pair ({i},{j}) for p={p}: indices must be distinct and < p")]
    PairIndex { i: usize, j: usize, p: usize },

    #[error("linear pair index {k} out of range for m={m}")]
    LinearIndex { k: usize, m: usize },

    #[error("label vector has unlabelled entries (first at pair {k})")]
    IncompleteLabels { k: usize },

    #[error("variable '{name}' is constant (no spread to standardize)")]
    ConstantVariable { name: String },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("empty scatter: at least one sample is required")]
    EmptyData,

    #[error("point ({x}, {y}) lies outside the histogram domain [{lo}, {hi}]^2")]
    OutOfDomain { x: f64, y: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("row {k} of the similarity matrix has non-positive degree; cannot normalize")]
    Degree { k: usize },

    #[error("no labelled pairs: at least one label is required to fit")]
    NoLabels,

    #[error("linear solve failed: system is singular even after ridge perturbation")]
    Solve,

    #[error("degenerate cross-validation split: {0}")]
    Cv(String),

    #[error("edge set contains a directed cycle; a topological order is required")]
    Cycle,

    #[error("scores cannot be ranked: truth labels contain a single class")]
    SingleClass,

    #[error("unknown variable name '{name}'")]
    UnknownVariable { name: String },

    #[error("non-finite value at row {row}, column '{column}'")]
    NonFiniteValue { row: usize, column: String },

    #[error("duplicate variable name '{name}'")]
    DuplicateVariable { name: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
