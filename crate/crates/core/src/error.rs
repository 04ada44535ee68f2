//! Error type shared across the crate.

/// Errors produced by the numerical machinery.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Convolution order below the minimum for which the inversion
    /// integrand is absolutely integrable with margin.
    #[error("unsupported convolution order n={n}; minimum is {min}")]
    UnsupportedOrder { n: u32, min: u32 },

    /// The frequency cutoff needed to meet the tail tolerance exceeds the
    /// configured limit.
    #[error("required frequency cutoff {required:.3e} exceeds configured limit {limit:.3e}")]
    CutoffExceeded { required: f64, limit: f64 },

    /// A quantity is indistinguishable from zero at the achieved quadrature
    /// accuracy, so its logarithm has no determinate sign.
    #[error("indeterminate sign: value {value:.3e} within quadrature error {err:.3e}")]
    IndeterminateSign { value: f64, err: f64 },

    /// Self-normalized importance sampling collapsed onto too few effective
    /// samples to be trustworthy.
    #[error("unreliable estimate: effective sample size {ess:.1} below {min}")]
    UnreliableEstimate { ess: f64, min: f64 },

    /// Grid refinement failed to stabilize the result.
    #[error("refinement failed: relative change {change:.3e} above {tol:.3e} at finest grid")]
    RefinementFailed { change: f64, tol: f64 },

    /// A bound certificate cannot be formed from the supplied measurements.
    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    /// A measurement contradicts an invariant that must hold; signals an
    /// implementation bug rather than bad input.
    #[error("inconsistent measurement: {0}")]
    Inconsistency(String),

    /// Not enough data points for the requested fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
