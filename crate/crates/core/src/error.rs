use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("blow-up at t = {t:.6e}: max |Du| = {max_grad:.6e}")]
    BlowUp { t: f64, max_grad: f64 },

    #[error("positivity violated at slice {slice}: min = {min:.3e}, tolerance = {tol:.3e}")]
    PositivityViolation { slice: usize, min: f64, tol: f64 },

    #[error("mass drift at slice {slice}: {drift:.3e}")]
    MassDrift { slice: usize, drift: f64 },

    #[error("imaginary residue {0:.3e} after inverse transform")]
    ImaginaryResidue(f64),

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn param(name: &str, reason: impl Into<String>) -> Self {
        LabError::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }

    /// True for outcomes that are data rather than failures.
    pub fn is_blow_up(&self) -> bool {
        matches!(self, LabError::BlowUp { .. })
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
