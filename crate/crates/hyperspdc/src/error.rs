use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectral axis: {0}")]
    InvalidAxis(String),

    #[error("spectral axis too narrow: {0}")]
    AxisTooNarrow(String),

    #[error("invalid shaper configuration: {0}")]
    InvalidShaper(String),

    #[error("invalid crystal parameter: {0}")]
    InvalidCrystal(String),

    #[error("poling synthesis failed: {reason} (best achievable fidelity {fidelity:.4})")]
    PolingSynthesis { reason: String, fidelity: f64 },

    #[error("frequency out of dispersion-model range: {0}")]
    DispersionRange(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(
        "fit did not converge after {iterations} iterations (residual {residual:.3e}, \
         best so far sigma={sigma:.4}, delta={delta:.4}, V={visibility:.4})"
    )]
    FitDiverged {
        iterations: usize,
        residual: f64,
        sigma: f64,
        delta: f64,
        visibility: f64,
    },

    #[error("time window overflow: {0}")]
    TimeWindow(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
