use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension {dim} needs {required_bytes} bytes for a dense matrix, cap is {cap_bytes}")]
    Resource {
        dim: u128,
        required_bytes: u128,
        cap_bytes: u128,
    },

    #[error("matrix is not Hermitian (max |H - H^T| = {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("vibrationless branch states are degenerate within {gap_cm:e} cm^-1")]
    AmbiguousBranches { gap_cm: f64 },

    #[error("integrator failure: norm drift {drift:e} at t = {time_fs} fs (dt too large?)")]
    IntegratorFailure { drift: f64, time_fs: f64 },

    #[error("inversion ill-conditioned: kappa = {kappa:e} exceeds {threshold:e}")]
    IllConditioned { kappa: f64, threshold: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical contract (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. }
                | Error::AmbiguousBranches { .. }
                | Error::IntegratorFailure { .. }
                | Error::IllConditioned { .. }
        )
    }
}
