use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Equation parameters failed validation.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The operation needs a property the input does not have (regime, sign, ...).
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Support radius requested for a solution with unbounded support.
    #[error("unbounded support: the {0} solution is positive everywhere")]
    UnboundedSupport(&'static str),

    /// A singular operator evaluation (vanishing gradient with q < 2).
    #[error("singular point at r = {r}: vanishing gradient with q < 2")]
    SingularPoint { r: f64 },

    /// Iterative procedure did not reach its tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// The solver produced a non-finite value.
    #[error("non-finite value in cell {cell} at t = {t}")]
    NonFinite { cell: usize, t: f64 },

    /// Adaptive time step collapsed.
    #[error("time step underflow: dt = {dt:e} at t = {t}")]
    TimeStepUnderflow { dt: f64, t: f64 },

    /// A fit or search had nothing to work with.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A probe region does not fit inside the simulated domain or horizon.
    #[error("containment violated: {0}")]
    Containment(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the time integrator itself.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::TimeStepUnderflow { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
