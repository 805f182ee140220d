use thiserror::Error;

/// Errors raised anywhere in the recoil-spectroscopy pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular matrix: {0}")]
    SingularMatrix(&'static str),

    #[error("time ordering violated: t' = {t_prime} > t = {t}")]
    TimeOrdering { t: f64, t_prime: f64 },

    #[error("quadrature did not converge for {quantity}: relative change {change:.3e} on node doubling")]
    QuadratureNonConvergence { quantity: &'static str, change: f64 },

    #[error("finite-difference derivative did not converge for {quantity} (last relative change {change:.3e})")]
    DerivativeNonConvergence { quantity: &'static str, change: f64 },

    #[error("overlap never reaches working point {p0} on t in [0, {bracket_end:.4e}]")]
    NoCrossing { p0: f64, bracket_end: f64 },

    #[error("no squeezing strength reaches working point {p0}")]
    NoSolution { p0: f64 },

    #[error("damping g = {g} is not supported for {family} states")]
    UnsupportedDamping { family: &'static str, g: f64 },

    #[error("perturbative regime violated: |g t| = {gt:.3e} > {limit}")]
    PerturbativeRegime { gt: f64, limit: f64 },

    #[error("resonance flank too flat: |dP/dDelta| = {slope:.3e}")]
    FlatFlank { slope: f64 },

    #[error("phase-space grid lost mass: {mass:.9} remaining")]
    GridUnderflow { mass: f64 },

    #[error("optimizer did not converge: best gradient norm {grad_norm:.3e}")]
    OptimizerNonConvergence { grad_norm: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidParameter { .. } | Error::TimeOrdering { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
