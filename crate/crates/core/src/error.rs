use thiserror::Error;

/// Failures reported by the platoon toolkit.
///
/// The variants map onto the exit-code contract of the command line frontend:
/// [`Error::is_numerical`] distinguishes numerical breakdowns from invalid
/// input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),

    #[error("argument {name} = {value} outside domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigenvalue iteration did not converge for eigenvalue {index} of {order} after {iterations} iterations")]
    NoConvergence {
        index: usize,
        order: usize,
        iterations: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate mode: |2 r0 + b0| = {0:e} (eigenvalue collision near the critical platoon size)")]
    DegenerateMode(f64),

    #[error("simulation diverged at t = {time}: vehicle {vehicle} error {value:e}")]
    Divergence {
        time: f64,
        vehicle: usize,
        value: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Numerical(_)
                | Error::DegenerateMode(_)
                | Error::Divergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
