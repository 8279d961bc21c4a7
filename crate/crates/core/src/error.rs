use thiserror::Error;

/// Errors raised by the analytic, quadrature and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    /// The partial result is carried along.
    #[error(
        "quadrature budget exceeded after {evaluations} evaluations \
         (partial value {value:e}, error estimate {error_estimate:e})"
    )]
    BudgetExceeded {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    /// A simulation request is too large to run.
    #[error("simulation budget exceeded: {0}")]
    SimulationBudget(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
