use thiserror::Error;

/// Crate-wide error type; variants map one-to-one onto the failure modes of
/// the public operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("multiplier is not finite at eta = {eta}")]
    NonFiniteMultiplier { eta: f64 },
    #[error("non-finite samples after {context}")]
    NonFinite { context: String },
    #[error("nonlinearity parameter must be nonzero")]
    ZeroNonlinearity,
    #[error("derivative order {requested} exceeds declared maximum {max}")]
    UnsupportedDerivative { requested: usize, max: usize },
    #[error("operation requires a soliton coefficient")]
    NotASoliton,
    #[error("scaled window narrower than 4 grid cells (lambda^-d = {width:.3e}, h = {h:.3e})")]
    UnderResolvedWindow { width: f64, h: f64 },
    #[error("time step {dt:.3e} exceeds stability guard {guard:.3e}")]
    StabilityViolation { dt: f64, guard: f64 },
    #[error("adaptive step collapsed below {min_step:.3e} at t = {t}")]
    StepUnderflow { t: f64, min_step: f64 },
    #[error("Picard iteration stalled above tolerance (last sup-difference {last_diff:.3e})")]
    NoConvergence { last_diff: f64 },
    #[error("quadrature under-resolved: {0}")]
    UnderResolved(String),
    #[error("analytic data source has no declared support radius")]
    UnknownSupport,
    #[error("data source has no spectral closure")]
    NoSpectralClosure,
    #[error("(x, xi) grid too coarse for inversion: {0}")]
    GridTooCoarse(String),
    #[error("decay sweep needs at least 6 samples, got {0}")]
    SweepTooShort(usize),
    #[error("calibration gap {gap:.3} below required 2.0")]
    CalibrationGapTooSmall { gap: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
