use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures reported by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Parameters outside the supported domain.
    Domain(String),
    /// The adaptive step fell below the representable resolution at `r`.
    StepUnderflow { r: f64 },
    /// The integrator hit its step budget before reaching an event.
    StepLimit { r: f64 },
    /// A NaN or infinity appeared in the state at `r`.
    NonFinite { r: f64 },
    /// Both ends of a shooting bracket classify the same way.
    BracketNotStraddling { lo: f64, hi: f64 },
    /// The exponential tail model could not be matched.
    TailFit(String),
    /// Energy functionals need a profile with a closed tail.
    MissingTail,
    /// Invalid input for a fit or a reduction.
    InvalidData(String),
    /// Refinement of a sampled curve did not converge.
    CurveTooCoarse(String),
    /// The confinement bracket is not positive at this `t`.
    BracketNonPositive { t: f64, value: f64 },
    /// The mesh solution leaves too much mass at the far boundary.
    BoundaryContamination { fraction: f64 },
    /// An iterative solve stopped before reaching its tolerance.
    NoConvergence { iterations: usize, residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "parameter out of domain: {msg}"),
            Error::StepUnderflow { r } => write!(f, "step size underflow at r = {r:e}"),
            Error::StepLimit { r } => write!(f, "step budget exhausted at r = {r:e}"),
            Error::NonFinite { r } => write!(f, "non-finite state at r = {r:e}"),
            Error::BracketNotStraddling { lo, hi } => {
                write!(f, "heights {lo:e} and {hi:e} do not bracket a classification change")
            }
            Error::TailFit(msg) => write!(f, "tail fit rejected: {msg}"),
            Error::MissingTail => write!(f, "profile has no tail model"),
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::CurveTooCoarse(msg) => write!(f, "sampled curve too coarse: {msg}"),
            Error::BracketNonPositive { t, value } => {
                write!(f, "confinement bracket is {value:e} <= 0 at t = {t:e}")
            }
            Error::BoundaryContamination { fraction } => {
                write!(f, "boundary layer holds {fraction:e} of the mass")
            }
            Error::NoConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
