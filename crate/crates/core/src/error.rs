//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CharmError>;

#[derive(Debug, Error)]
pub enum CharmError {
    /// Invalid configuration or argument (bad counts, ranges, names).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Array or tensor dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// All-zero channel makes the requested finite SNR undefined.
    #[error("cannot calibrate noise for an all-zero channel at finite SNR")]
    ZeroChannel,

    /// NMSE reference channel has zero energy.
    #[error("reference channel has zero norm")]
    ZeroNorm,

    /// Power grid has no usable peaks (all-zero or degenerate).
    #[error("power grid is degenerate: {0}")]
    DegenerateGrid(String),

    /// No peaks survived extraction; the estimator has nothing to work with.
    #[error("empty path support")]
    EmptySupport,

    /// Three-point refinement called on a triple that is not a peak.
    #[error("peak precondition violated: {0}")]
    PeakPrecondition(String),

    /// Support larger than the receive array cannot be projected.
    #[error("support of {len} paths exceeds {n_rx} receive antennas")]
    SupportTooLarge { len: usize, n_rx: usize },

    /// Projection matrix could not be formed even after regularization.
    #[error("singular projection system (condition number {kappa:.3e})")]
    SingularProjection { kappa: f64 },

    /// Every dictionary atom was excluded by the pilot matrix.
    #[error("no usable transmit dictionary atoms")]
    NoUsableAtoms,

    /// Covariance input fails the positive-semidefinite check.
    #[error("covariance matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NonPsdCovariance { min_eig: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A results or scenario file failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl CharmError {
    /// Process exit code category: 2 config, 3 i/o, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CharmError::Config(_) | CharmError::Dimension(_) => 2,
            CharmError::Io(_) | CharmError::Parse { .. } => 3,
            _ => 4,
        }
    }
}
