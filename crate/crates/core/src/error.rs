use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("csv error: {0}")]
    Csv(String),
    #[error("no data rows")]
    NoDataRows,
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),
    #[error("missing value at row {row}, column {column:?}")]
    MissingValue { row: usize, column: String },
    #[error("non-finite numeric value at row {row}, column {column:?}")]
    NonFinite { row: usize, column: String },
    #[error("cannot parse {value:?} at row {row}, column {column:?}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("column {column:?} is {actual}, constraint expects {expected}")]
    KindMismatch {
        column: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("unknown category {category:?} in column {column:?}")]
    UnknownCategory { column: String, category: String },
    #[error("need at least 2 probability columns, found {0}")]
    TooFewClasses(usize),
    #[error("negative probability {value} at row {row}, column {column}")]
    NegativeProbability { row: usize, column: usize, value: f64 },
    #[error("row sum {sum} exceeds tolerance at row {row}")]
    RowSum { row: usize, sum: f64 },
    #[error("one-hot label row {row} sums to {sum}, expected exactly 1")]
    OneHot { row: usize, sum: f64 },
    #[error("label out of range at row {row}: {label} >= {classes}")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        classes: usize,
    },
    #[error("labels have {found} columns; expected 1 (index) or {classes} (one-hot)")]
    LabelShape { found: usize, classes: usize },
    #[error("row count mismatch: {what} has {found} rows, expected {expected}")]
    RowCountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("duplicate model name {0:?}")]
    DuplicateModel(String),
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("empty selection")]
    EmptySelection,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("too few observations: need at least {needed}, found {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("all scores are NaN")]
    AllScoresNan,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
