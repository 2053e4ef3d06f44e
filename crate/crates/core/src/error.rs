use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A spin-system invariant does not hold; the message names it.
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("unknown spin label `{0}`")]
    UnknownLabel(String),

    #[error("duration must be non-negative, got {0} s")]
    NegativeDuration(f64),

    #[error("delay must be positive, got {0} s")]
    NonPositiveDelay(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("invalid product term `{0}`")]
    InvalidTerm(String),

    #[error("sequence syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("gradient events are not unitary and cannot be compiled")]
    GradientInUnitary,

    #[error("spins `{0}` and `{1}` have zero scalar coupling")]
    ZeroCoupling(String, String),

    #[error("invalid gate parameters: {0}")]
    InvalidGate(String),

    #[error("invalid acquisition parameters: {0}")]
    InvalidAcquisition(String),

    #[error("integration window [{lo}, {hi}] Hz is outside the spectrum axis [{min}, {max}] Hz")]
    WindowOutsideAxis {
        lo: f64,
        hi: f64,
        min: f64,
        max: f64,
    },

    #[error("phase is indeterminate: both readout signals vanish")]
    IndeterminatePhase,

    #[error("invalid error model: {0}")]
    InvalidErrorModel(String),

    #[error("invalid calibration settings: {0}")]
    InvalidCalibration(String),

    #[error(
        "calibration did not converge after {} iterations (residual {:.4}°)",
        .0.iterations, .0.residual_deg
    )]
    NotConverged(Box<crate::readout::CalibrationResult>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
