use thiserror::Error;

/// Violations of the oscillator-system invariants. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("need at least 2 oscillators, got {0}")]
    TooFewOscillators(usize),
    #[error("size mismatch: {what} has length {got}, expected {expected}")]
    SizeMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("nonpositive weight d at {0}")]
    NonPositiveWeight(usize),
    #[error("nonzero diagonal at {0}")]
    NonzeroDiagonal(usize),
    #[error("asymmetric at ({0},{1})")]
    Asymmetric(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("invalid integrator config: {0}")]
    Config(String),
    #[error("initial phase vector has length {got}, system has {expected} oscillators")]
    InitialState { got: usize, expected: usize },
    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trailing window holds {got} samples, need at least {need}")]
    WindowTooShort { got: usize, need: usize },
    #[error("invalid classifier config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("need n >= 2, got {0}")]
    TooFewOscillators(usize),
    #[error("frequency vector has length {got}, expected {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error(
        "all natural frequencies are zero: identical-frequency regime, threshold degenerates to 0"
    )]
    ZeroFrequencies,
    #[error("bound requires lambda > omega > 0 (lambda = {lambda}, omega = {omega})")]
    CouplingTooWeak { lambda: f64, omega: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("reduced dimension {0} exceeds the supported maximum of 6")]
    DimensionTooLarge(usize),
    #[error("grid_per_dim must be at least 8, got {0}")]
    GridTooCoarse(usize),
    #[error("point has length {got}, expected {expected}")]
    SizeMismatch { got: usize, expected: usize },
}

/// Top-level error used by the experiment runner and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical aborts map to exit code 2, everything else to 1.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration(e) if !matches!(e, IntegrationError::Config(_) | IntegrationError::InitialState { .. }))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
