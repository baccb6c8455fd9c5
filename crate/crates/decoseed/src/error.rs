use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the model
/// modules and the harness; message text carries the measured defect so a
/// failing run is diagnosable from the error alone.
#[derive(Debug, Error)]
pub enum DecoError {
    #[error("input matrix is not Hermitian (defect {0:.3e})")]
    NonHermitianInput(f64),

    #[error(
        "eigenvalue cluster of diameter {diameter:.3e} exceeds the clustering \
         tolerance {tol:.3e}; sector membership is ambiguous"
    )]
    DegenerateClustering { diameter: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("model assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("spectral measure is not normalized (total mass {0:.12})")]
    UnnormalizedMeasure(f64),

    #[error("ill-formed spectral measure: {0}")]
    InvalidMeasure(String),

    #[error("dephasing curve invariant violated: {0}")]
    CurveInvariant(String),

    #[error(
        "time horizon {t_max} exceeds the Nyquist limit for grid spacing \
         {max_gap:.3e}; t_max * max_gap must stay at or below pi"
    )]
    NyquistViolated { t_max: f64, max_gap: f64 },

    #[error("mixture weights sum to {0:.12}, expected 1")]
    WeightSumInvalid(f64),

    #[error("spectral windows must have positive distance (got {0:.3e})")]
    OverlappingWindows(f64),

    #[error(
        "mode function is infrared divergent (|eps^-1 f|^2 = {0:.3e}); enable \
         the pointwise-grid override to evaluate it anyway"
    )]
    IrDivergentWithoutOverride(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cutoff sequence must be strictly decreasing, got {0:?}")]
    NonMonotoneCutoffs(Vec<f64>),

    #[error("mode frequency must be nonnegative, got {0}")]
    NegativeFrequency(f64),

    #[error("Fock truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("total dimension {0} exceeds the brute-force cap {1}")]
    DimensionCap(usize, usize),

    #[error("matrix is not unitary (defect {0:.3e})")]
    NonUnitaryInput(f64),

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    ValidationErrors(Vec<String>),

    #[error("i/o error: {0}")]
    IoError(#[from] std::io::Error),

    #[error(
        "oracle mismatch: closed form deviates from brute force by \
         {deviation:.3e} (tolerance {tolerance:.1e})"
    )]
    OracleMismatch { deviation: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, DecoError>;
