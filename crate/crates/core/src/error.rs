use std::path::PathBuf;

/// Errors produced by the dependence-measure routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("non-numeric cell {value:?} at row {row}, column {column}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("column {column} out of range (row {row} has {width} columns)")]
    SelectorOutOfRange {
        column: usize,
        row: usize,
        width: usize,
    },

    #[error("invalid column selector: {0}")]
    InvalidSelector(String),

    #[error("fewer than 2 rows (got {0})")]
    TooFewRows(usize),

    #[error("row count mismatch: x has {x} rows, y has {y}")]
    RowMismatch { x: usize, y: usize },

    #[error("ragged matrix: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("constant column {0}: max equals min")]
    ConstantColumn(usize),

    #[error("fast path requires scalar columns (got p={p}, q={q})")]
    NotScalar { p: usize, q: usize },

    #[error("rank-deficient design: column {0} is collinear with earlier columns")]
    RankDeficient(usize),

    #[error("need more rows than design columns (n={n}, columns={columns})")]
    Underdetermined { n: usize, columns: usize },

    #[error("value {value} at row {row} lies outside [0,1]")]
    OutsideUnitInterval { row: usize, value: f64 },

    #[error("weight sequence has length {got}, expected {expected}")]
    WeightLength { expected: usize, got: usize },

    #[error("weight {index} is {value}; weights must be positive and finite")]
    InvalidWeight { index: usize, value: f64 },

    #[error(
        "coefficient matrix is {rows}x{cols}, basis counts are {expected_rows}x{expected_cols}"
    )]
    CoefficientShape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
