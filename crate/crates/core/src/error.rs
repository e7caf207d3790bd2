use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("radius {radius} lies outside the grid range [0, {r_max}]")]
    OutOfRange { radius: f64, r_max: f64 },

    #[error("field has no (rho, L)-decay: {0}")]
    NoDecay(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-positive input: {0}")]
    NonPositive(String),

    #[error("ring kernel diverges at r = s = {radius} for ell >= n - 1")]
    SingularPoint { radius: f64 },

    #[error("convolution diverges: tail power {power} must exceed {required}")]
    DivergentTail { power: f64, required: f64 },

    #[error("oracle resolution {m} exceeds the configured cap {cap}")]
    TooLarge { m: usize, cap: usize },

    #[error("shooting requires v(0) > 0, got {0}")]
    InvalidInitial(f64),

    #[error("no convergence after {iterations} iterations (last relative update {update_norm:e})")]
    NonConvergence { iterations: usize, update_norm: f64 },

    #[error("iterate lost positivity at iteration {iteration}")]
    NonPositivityDetected { iteration: usize },

    #[error("linear solve failed: zero pivot in row {row}")]
    LinearSolveFailure { row: usize },

    #[error("maximum attained at r = {radius}, not at the origin")]
    MaxNotAtOrigin { radius: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("rescaled grid reaches {available}, deviation needs {needed}")]
    DomainTooSmall { needed: f64, available: f64 },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("kernel cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
