use thiserror::Error;

/// Errors raised by the shift, thermodynamic, flow and recurrence routines.
///
/// Every variant maps to a stable machine-readable code (see [`Error::code`]),
/// which the experiment runner surfaces in its reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transition matrix is not square 0/1: {0}")]
    MalformedMatrix(String),
    #[error("symbol {symbol} has an empty {side}")]
    DeadSymbol { symbol: usize, side: &'static str },
    #[error("transition matrix is not primitive (no positive power up to {bound})")]
    NotPrimitive { bound: usize },
    #[error("enumeration of {requested} items exceeds the cap of {cap}")]
    SizeOverflow { requested: u128, cap: usize },
    #[error("word {0:?} is not admissible")]
    Inadmissible(Vec<u8>),
    #[error("locally constant function table is invalid: {0}")]
    BadFunction(String),
    #[error("Perron eigen-data did not converge after {iterations} iterations")]
    EigenFailure { iterations: usize },
    #[error("cocycle mean {mean:e} is not zero")]
    NotCentered { mean: f64 },
    #[error("fundamental matrix is singular")]
    SingularSolve,
    #[error("sum range {requested} exceeds the cap of {cap}")]
    RangeOverflow { requested: u128, cap: usize },
    #[error("cocycle variance {sigma2:e} is degenerate")]
    Degenerate { sigma2: f64 },
    #[error("cocycle is periodic (twisted spectral radius {radius} at theta = {theta})")]
    Periodic { radius: f64, theta: f64 },
    #[error("cylinder has zero measure")]
    ZeroMeasure,
    #[error("capped fraction {fraction} at q = {q} exceeds {limit}")]
    CapTooSmall { q: usize, fraction: f64, limit: f64 },
    #[error("empty sample")]
    EmptySample,
    #[error("regression needs at least two distinct abscissae")]
    DegenerateX,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable identifier used in reports and on stderr.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedMatrix(_) => "MalformedMatrix",
            Error::DeadSymbol { .. } => "DeadSymbol",
            Error::NotPrimitive { .. } => "NotPrimitive",
            Error::SizeOverflow { .. } => "SizeOverflow",
            Error::Inadmissible(_) => "Inadmissible",
            Error::BadFunction(_) => "BadFunction",
            Error::EigenFailure { .. } => "EigenFailure",
            Error::NotCentered { .. } => "NotCentered",
            Error::SingularSolve => "SingularSolve",
            Error::RangeOverflow { .. } => "RangeOverflow",
            Error::Degenerate { .. } => "Degenerate",
            Error::Periodic { .. } => "Periodic",
            Error::ZeroMeasure => "ZeroMeasure",
            Error::CapTooSmall { .. } => "CapTooSmall",
            Error::EmptySample => "EmptySample",
            Error::DegenerateX => "DegenerateX",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
