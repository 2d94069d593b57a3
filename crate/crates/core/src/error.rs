use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller passed arguments outside an operation's domain.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("quadrature for {integral} did not reach tolerance at t = {t}")]
    Quadrature { integral: &'static str, t: f64 },

    #[error("non-finite right-hand side at t = {t}")]
    NonFinite { t: f64 },

    #[error("step size underflow at t = {t}; problem is too stiff for the explicit integrator")]
    StepUnderflow { t: f64 },

    #[error("Fock truncation leakage: top level holds population {population:.3e} at n_trunc = {n_trunc}")]
    Truncation { n_trunc: usize, population: f64 },

    #[error("exact two-level solution routes disagree by {deviation:.3e}")]
    Inconsistent { deviation: f64 },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_))
    }
}
