use std::path::PathBuf;

/// Errors raised across assembly, reduction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum MorError {
    #[error("index ({row}, {col}) out of range for {nrows}x{ncols} matrix")]
    InvalidIndex {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("singular operator: {0}")]
    SingularOperator(String),

    #[error("singular reduced operator at k = {k} (r = {r})")]
    SingularReducedOperator { k: f64, r: usize },

    #[error("Neumann boundary segment contains no mesh edge")]
    EmptyNeumannBoundary,

    #[error("mesh boundary has not been classified")]
    NotClassified,

    #[error("probe {index} at ({x}, {y}) lies outside the unit square")]
    ProbeOutside { index: usize, x: f64, y: f64 },

    #[error("invalid expansion plan: {0}")]
    InvalidPlan(String),

    #[error("projection basis is full (dimension {0})")]
    BasisFull(usize),

    #[error("all expansion-point budgets are exhausted after {0} slots")]
    BudgetExhausted(usize),

    #[error("degenerate denominator at k = {k}: {what} has zero norm")]
    DegenerateDenominator { k: f64, what: &'static str },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("result contains no rows")]
    EmptyResult,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("at r = {r}, k = {k}: {source}")]
    AtSample {
        r: usize,
        k: f64,
        #[source]
        source: Box<MorError>,
    },
}

impl MorError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MorError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from the physical model or the numerics
    /// rather than from I/O or configuration.
    pub fn is_model_error(&self) -> bool {
        match self {
            MorError::Io { .. } | MorError::Parse { .. } | MorError::InvalidConfig(_) => false,
            MorError::AtSample { source, .. } => source.is_model_error(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, MorError>;
