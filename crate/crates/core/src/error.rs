use alloc::string::String;

/// Failures of the effective-model pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A denominator of the perturbative expansion came within the floor.
    #[error("perturbation theory breakdown: |{quantity}| = {value:e} is below the floor {floor:e}")]
    DivisionHazard {
        quantity: &'static str,
        value: f64,
        floor: f64,
    },

    #[error("eigenvector labeling is ambiguous (best bare-state overlap {overlap:.4})")]
    LabelingAmbiguity { overlap: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("steady state is not unique (null-space dimension > 1): {0}")]
    DegenerateNullSpace(String),

    #[error("steady state is not positive: minimum eigenvalue {0:e}")]
    Negativity(f64),

    #[error("no sign change of the residual on [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    /// Stable integer code used in tabular output.
    pub fn code(&self) -> u32 {
        match self {
            Error::NonPositive { .. } | Error::InvalidParameter { .. } => 1,
            Error::DivisionHazard { .. } => 2,
            Error::LabelingAmbiguity { .. } => 3,
            Error::Precondition(_) => 4,
            Error::DegenerateNullSpace(_) => 5,
            Error::Negativity(_) => 6,
            Error::NoRootInBracket { .. } => 7,
            Error::NoConvergence(_) => 8,
        }
    }

    /// Errors that signal leaving the physical validity regime rather than a
    /// malformed request.
    pub fn is_physics_validity(&self) -> bool {
        !matches!(self, Error::NonPositive { .. } | Error::InvalidParameter { .. })
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
