use thiserror::Error;

#[derive(Debug, Error)]
pub enum Mr2Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(String),

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("cannot parse value {value:?} at data row {row}, column '{column}'")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value at data row {row}, column '{column}'")]
    NonFinite { row: usize, column: String },

    #[error("degenerate instrument {0}: zero sample variance")]
    DegenerateInstrument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("capacity exceeded: {what} requires {required}, cap is {cap}")]
    Capacity {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("collinear design: column(s) {} are linearly dependent on the rest", .columns.join(", "))]
    Collinearity { columns: Vec<String> },

    #[error("sample size n={n} too small: need n > {required}")]
    SampleSize { n: usize, required: usize },

    #[error("weak identification: |{quantity}| = {value:.3e} is below tolerance{}", .first_stage_f.map(|f| format!(" (first-stage F = {f:.4})")).unwrap_or_default())]
    WeakIdentification {
        quantity: &'static str,
        value: f64,
        first_stage_f: Option<f64>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Mr2Error>;
