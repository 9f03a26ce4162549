use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("duplicate market id `{0}`")]
    DuplicateMarket(String),

    #[error("unknown market `{0}`")]
    UnknownMarket(String),

    #[error("empty date range {start}..={end}")]
    EmptyRange { start: NaiveDate, end: NaiveDate },

    #[error("date range {start}..={end} lies outside the panel calendar")]
    RangeOutsideCalendar { start: NaiveDate, end: NaiveDate },

    #[error("csv header is missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("no records survive for commodity `{0}`")]
    NoRecords(String),

    #[error("format version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: String, found: String },

    #[error("feature layout mismatch: model expects `{expected}`, got `{found}`")]
    LayoutMismatch { expected: String, found: String },

    #[error("truncated or malformed file: {0}")]
    Truncated(String),

    #[error("calendar has {days} days but the window needs at least {needed}")]
    CalendarTooShort { days: usize, needed: usize },

    #[error("anchor {anchor} has fewer than {needed} predecessor days in the panel")]
    AnchorTooEarly { anchor: NaiveDate, needed: usize },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("empty label multiset")]
    EmptyLabels,

    #[error("no observed targets to evaluate")]
    NoObservedTargets,

    #[error("evidence retrieval needs a tree ensemble, but the model family is {0}")]
    NotTreeModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
