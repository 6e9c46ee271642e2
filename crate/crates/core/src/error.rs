use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant maps to a stable, machine-greppable tag (see [`Error::tag`]).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("h is not monotone on the bracket: {0}")]
    NonMonotone(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("m(t) = a is not solvable: {0}")]
    NotSolvable(String),
    #[error("bracketing failed: {0}")]
    BracketFail(String),
    #[error("quadrature failed: {0}")]
    QuadratureFail(String),
    #[error("grid too narrow, boundary mass {0:.3e}")]
    MassLeak(f64),
    #[error("importance weights degenerate: effective sample size {0:.1}")]
    DegenerateWeights(f64),
    #[error("sampling table could not be built: {0}")]
    TableBuildFail(String),
    #[error("infeasible chain start: {0}")]
    InfeasibleStart(String),
    #[error("acceptance rate {0:.3e} below threshold")]
    LowAcceptance(f64),
    #[error("too few samples: {got} < {needed}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("window schedule infeasible: epsilon/a = {0:.3}")]
    ScheduleInfeasible(f64),
    #[error("pushforward tilt unsolvable: {0}")]
    PushforwardUnsolvable(String),
    #[error("conditional mass lower bound {0:.3e} below 0.01")]
    MassTooSmall(f64),
}

impl Error {
    /// Stable upper-case tag used on the command line.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::Domain(_) => "DOMAIN_ERROR",
            Error::NonMonotone(_) => "NON_MONOTONE",
            Error::OutOfRange(_) => "OUT_OF_RANGE",
            Error::Divergent(_) => "DIVERGENT",
            Error::NotSolvable(_) => "NOT_SOLVABLE",
            Error::BracketFail(_) => "BRACKET_FAIL",
            Error::QuadratureFail(_) => "QUADRATURE_FAIL",
            Error::MassLeak(_) => "MASS_LEAK",
            Error::DegenerateWeights(_) => "DEGENERATE_WEIGHTS",
            Error::TableBuildFail(_) => "TABLE_BUILD_FAIL",
            Error::InfeasibleStart(_) => "INFEASIBLE_START",
            Error::LowAcceptance(_) => "LOW_ACCEPTANCE",
            Error::TooFewSamples { .. } => "TOO_FEW_SAMPLES",
            Error::ScheduleInfeasible(_) => "SCHEDULE_INFEASIBLE",
            Error::PushforwardUnsolvable(_) => "PUSHFORWARD_UNSOLVABLE",
            Error::MassTooSmall(_) => "MASS_TOO_SMALL",
        }
    }

    /// Whether the error comes from bad user input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
