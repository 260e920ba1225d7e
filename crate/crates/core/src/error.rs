use thiserror::Error;

#[derive(Debug, Error)]
pub enum SavError {
    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Imaginary residue of a spectral operation on a real field exceeded roundoff.
    #[error("imaginary residue {residue:e} exceeds {limit:e} for a real field")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("energy shift too small: E1 + Ec = {e1} + {shift} <= 0")]
    EnergyShiftTooSmall { e1: f64, shift: f64 },

    #[error("extrapolation history is empty")]
    EmptyHistory,

    #[error("step {step} failed: {reason}")]
    StepFailure { step: usize, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SavError {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            SavError::Config(_)
                | SavError::InvalidParameter(_)
                | SavError::InvalidGrid(_)
                | SavError::Unsupported(_)
                | SavError::LengthMismatch { .. }
                | SavError::Io(_)
                | SavError::Csv(_)
        )
    }
}

pub type Result<T, E = SavError> = std::result::Result<T, E>;
