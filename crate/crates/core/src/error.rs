//! Error types shared across the crate.
//!
//! Every error carries a human-readable message naming the operation that
//! produced it. [`Error::category`] groups the variants into the three
//! classes a front end needs to distinguish: input/parse problems, domain
//! or model violations, and search/convergence failures.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on a numeric argument was violated.
    #[error("{0}")]
    Domain(String),

    /// An impedance denominator or permittivity collapsed to (near) zero.
    #[error("{0}")]
    Singularity(String),

    /// The request falls outside the physical model (no critical angle,
    /// propagating instead of evanescent field, out-of-range reflectance).
    #[error("{0}")]
    Model(String),

    /// A search bracket does not contain an interior minimum.
    #[error("{0}")]
    Bracket(String),

    /// More than one candidate minimum, or a non-monotonic forward map.
    #[error("{0}")]
    Ambiguity(String),

    /// A target value is outside the achievable range of the forward map.
    #[error("{0}")]
    Range(String),

    /// An iterative search exhausted its budget without meeting tolerance.
    #[error("{0}")]
    Convergence(String),

    /// A resonance was lost while perturbing a stack.
    #[error("{0}")]
    Perturbation(String),

    /// A time window holds too few samples or empties a series.
    #[error("{0}")]
    Window(String),

    /// Two time series have no usable temporal overlap.
    #[error("{0}")]
    Alignment(String),

    /// A sensitivity profile is not a positive, decaying sequence.
    #[error("{0}")]
    Profile(String),

    /// A regression has too few valid points or a degenerate design.
    #[error("{0}")]
    Fit(String),

    /// A malformed row in a text input; `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally valid input that violates a data invariant.
    #[error("{0}")]
    Validation(String),
}

/// Coarse classification used to map errors to process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Unreadable or malformed input data.
    Parse,
    /// Domain, model, or data-invariant violations.
    Domain,
    /// Bracketing, ambiguity, or convergence failures.
    Convergence,
}

impl ErrorCategory {
    /// Conventional process exit code for this class of failure.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Parse => 2,
            ErrorCategory::Domain => 3,
            ErrorCategory::Convergence => 4,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Parse { .. } | Error::Validation(_) => ErrorCategory::Parse,
            Error::Domain(_)
            | Error::Singularity(_)
            | Error::Model(_)
            | Error::Range(_)
            | Error::Window(_)
            | Error::Alignment(_)
            | Error::Profile(_)
            | Error::Fit(_) => ErrorCategory::Domain,
            Error::Bracket(_) | Error::Ambiguity(_) | Error::Convergence(_) | Error::Perturbation(_) => {
                ErrorCategory::Convergence
            }
        }
    }

    /// Re-wraps the error with a prefixed message, keeping the variant.
    pub(crate) fn with_context(self, context: &str) -> Error {
        match self {
            Error::Domain(m) => Error::Domain(format!("{context}: {m}")),
            Error::Singularity(m) => Error::Singularity(format!("{context}: {m}")),
            Error::Model(m) => Error::Model(format!("{context}: {m}")),
            Error::Bracket(m) => Error::Bracket(format!("{context}: {m}")),
            Error::Ambiguity(m) => Error::Ambiguity(format!("{context}: {m}")),
            Error::Range(m) => Error::Range(format!("{context}: {m}")),
            Error::Convergence(m) => Error::Convergence(format!("{context}: {m}")),
            Error::Perturbation(m) => Error::Perturbation(format!("{context}: {m}")),
            Error::Window(m) => Error::Window(format!("{context}: {m}")),
            Error::Alignment(m) => Error::Alignment(format!("{context}: {m}")),
            Error::Profile(m) => Error::Profile(format!("{context}: {m}")),
            Error::Fit(m) => Error::Fit(format!("{context}: {m}")),
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{context}: {message}"),
            },
            Error::Validation(m) => Error::Validation(format!("{context}: {m}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        assert_eq!(ErrorCategory::Parse.exit_code(), 2);
        assert_eq!(ErrorCategory::Domain.exit_code(), 3);
        assert_eq!(ErrorCategory::Convergence.exit_code(), 4);
    }

    #[test]
    fn categories() {
        assert_eq!(
            Error::Parse { line: 3, message: "bad".into() }.category(),
            ErrorCategory::Parse
        );
        assert_eq!(Error::Domain("x".into()).category(), ErrorCategory::Domain);
        assert_eq!(Error::Bracket("x".into()).category(), ErrorCategory::Convergence);
    }
}
