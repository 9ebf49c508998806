use thiserror::Error;

/// Every failure the library can report. `code()` gives a stable
/// machine-readable identifier used by the command-line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("element is too close to a rotation for a unique Cartan decomposition (norm {norm})")]
    NearRotation { norm: f64 },
    #[error("logarithm undefined: {0}")]
    OutsideLogDomain(String),
    #[error("grid sizes differ: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("stopping time exceeded {cap} steps")]
    StoppingTimeOverflow { cap: u64 },
    #[error("fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("entries live in different quadratic fields (sqrt({0}) and sqrt({1}))")]
    MixedFields(u64, u64),
    #[error("enumeration would exceed {limit} products at step {step}")]
    ExplosionGuard { step: usize, limit: u64 },
    #[error("arcs {0} and {1} overlap")]
    ArcsOverlap(String, String),
    #[error("parameter out of scope: {0}")]
    ParameterOutOfScope(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("parse error at {location}: {message}")]
    ParseError { location: String, message: String },
    #[error("determinant is not exactly one at {0}")]
    DeterminantNotOne(String),
    #[error("weights do not sum to one (sum is {0})")]
    WeightsNotProbability(String),
    #[error("operation needs exact matrices but atom {0} is floating point only")]
    NotExact(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NearRotation { .. } => "near_rotation",
            Error::OutsideLogDomain(_) => "outside_log_domain",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::StoppingTimeOverflow { .. } => "stopping_time_overflow",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::MixedFields(..) => "mixed_fields",
            Error::ExplosionGuard { .. } => "explosion_guard",
            Error::ArcsOverlap(..) => "arcs_overlap",
            Error::ParameterOutOfScope(_) => "parameter_out_of_scope",
            Error::DomainError(_) => "domain_error",
            Error::ParseError { .. } => "parse_error",
            Error::DeterminantNotOne(_) => "determinant_not_one",
            Error::WeightsNotProbability(_) => "weights_not_probability",
            Error::NotExact(_) => "not_exact",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
