use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate cone: {0}")]
    DegenerateCone(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("closed-form weights support at most 2 inequality constraints, got {0}; use weights_monte_carlo")]
    UnsupportedRank(usize),

    #[error(
        "probability {prob} is not above the atom at zero ({atom}); no finite positive quantile"
    )]
    NoFiniteQuantile { prob: f64, atom: f64 },

    #[error("ill-conditioned kernel: factorization failed at maximum jitter (smallest eigenvalue estimate {min_eigenvalue:e})")]
    IllConditionedKernel { min_eigenvalue: f64 },

    #[error("singular information: {0}")]
    SingularInformation(String),

    #[error("inconsistent spectral decomposition: sum of kappa matrices deviates from identity by {deviation:e}")]
    InconsistentDecomposition { deviation: f64 },

    #[error("outside model domain: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
