use thiserror::Error;

/// Errors raised by the analytic, oracle and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("parameters are not ergodic: {0}")]
    NonErgodic(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("coefficient extraction did not converge: imaginary residual {residual:e} exceeds {tolerance:e}")]
    Extraction { residual: f64, tolerance: f64 },

    #[error("stationary solve did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit status for a failed validation run.
pub const EXIT_VALIDATION: i32 = 2;
/// Process exit status for a request outside the stable region.
pub const EXIT_NON_ERGODIC: i32 = 3;
/// Process exit status for malformed input.
pub const EXIT_BAD_INPUT: i32 = 4;

impl Error {
    /// Exit status a command-line front end should report for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonErgodic(_) => EXIT_NON_ERGODIC,
            Error::InvalidParam { .. } | Error::Config { .. } | Error::Domain(_) => EXIT_BAD_INPUT,
            _ => 1,
        }
    }

    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
