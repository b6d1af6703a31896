use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{context} requires a subspace of dimension at least 1")]
    ZeroDimensional { context: &'static str },

    #[error("rank deficient {context}: rank {found}, required {required}")]
    RankDeficient {
        context: &'static str,
        found: usize,
        required: usize,
    },

    #[error("similar-system data is not informative: rank [X-; U-] = {found}, required {required}")]
    Uninformative { found: usize, required: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("identification already complete at step {step}; no further data accepted")]
    AlreadyComplete { step: usize },

    #[error("identifier mode mismatch: {0}")]
    ModeMismatch(String),

    #[error(
        "dim(H) = {found} != {expected} at step {step}; the similar and true behaviours are \
         probably partially orthogonal"
    )]
    DimensionNotPreserved {
        step: usize,
        found: usize,
        expected: usize,
    },

    #[error("bound undefined: {0}")]
    UndefinedBound(String),

    #[error("pair (A, B) is not controllable (controllable subspace has dimension {rank} < {n})")]
    Uncontrollable { rank: usize, n: usize },

    #[error("target poles are not closed under complex conjugation")]
    NotConjugateClosed,

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }

    /// True for errors caused by a numerical guard rather than by bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::DimensionNotPreserved { .. }
                | Error::Numerical(_)
                | Error::RankDeficient { .. }
                | Error::UndefinedBound(_)
        )
    }
}
