use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} lies outside the support [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("segment {segment} has {found} distinct points, {required} required")]
    InsufficientData {
        segment: usize,
        found: usize,
        required: usize,
    },

    #[error("singular linear system while fitting spline")]
    SingularSystem,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("rejection sampling gave up after {0} draws")]
    RetryCap(usize),

    #[error("probability {0} outside (0, 1)")]
    Range(f64),

    #[error("degenerate scale: {0}")]
    Scale(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
