use thiserror::Error;

/// Errors raised by the design, analysis and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or malformed.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Targets fall outside an admissible region or violate a per-user cap.
    #[error("infeasible targets{}: {message}", cell_suffix(*.cell))]
    Feasibility { cell: Option<usize>, message: String },

    /// The requested dimensions are outside the supported `K_tot > K > tau` regime.
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    /// An operation was called with an input that breaks its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The T-transform selected a pivot pair with (numerically) equal entries.
    #[error("degenerate T-transform pivot at ({k_min}, {k_max}): x[k_min] - x[k_max] = {gap:e}")]
    DegeneratePivot { k_min: usize, k_max: usize, gap: f64 },

    /// Required state (e.g. adjusted targets) has not been produced yet.
    #[error("missing state: {0}")]
    State(String),

    /// Scenario text could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Scenario parsed but breaks a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn cell_suffix(cell: Option<usize>) -> String {
    match cell {
        Some(c) => format!(" in cell {}", c + 1),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn infeasible(cell: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Feasibility {
            cell,
            message: msg.into(),
        }
    }

    /// True for errors caused by user input rather than internal faults.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::Internal(_) | Error::DegeneratePivot { .. } | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
