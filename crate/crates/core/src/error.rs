use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("centre caustic: |det(1 + M)| = {det:e}")]
    CentreCaustic { det: f64 },

    #[error("chord caustic: |det(1 - M)| = {det:e}")]
    ChordCaustic { det: f64 },

    #[error("integration blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("step halving did not converge: endpoint change {change:e} after {halvings} halvings")]
    StepControl { change: f64, halvings: usize },

    #[error("fixed-point solve failed after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian in Newton solve (|det| = {det:e})")]
    SingularJacobian { det: f64 },

    #[error("degenerate transformation: {0}")]
    Degenerate(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("quadrature under-resolved: {0}")]
    Resolution(String),

    #[error("{0}")]
    Invalid(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("oracle memory guard: N = {0} exceeds 1024")]
    OracleTooLarge(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_caustic(&self) -> bool {
        matches!(self, Error::CentreCaustic { .. } | Error::ChordCaustic { .. })
    }
}
