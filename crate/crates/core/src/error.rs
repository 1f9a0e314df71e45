use thiserror::Error;

/// Failures of the dense linear-algebra kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("degenerate structure: {0}")]
    Structure(String),
}

pub type LinalgResult<T> = Result<T, LinalgError>;

/// Failures of gain-bound and threshold computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GainError {
    #[error("unbounded gain: {0}")]
    Unbounded(String),
    #[error("empty search interval: {0}")]
    EmptyInterval(String),
    #[error("threshold undefined: {0}")]
    ThresholdUndefined(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type GainResult<T> = Result<T, GainError>;

/// Failures of model validation and observer synthesis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid model: {0}")]
    Model(String),
    #[error("no unknown-input observer exists: {0}")]
    NoUioExists(String),
    #[error("not detectable: {0}")]
    NotDetectable(String),
    #[error("sliding-mode assumption violated: {0}")]
    Assumption(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type SynthResult<T> = Result<T, SynthError>;

/// Failures of model building, scenario validation and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("simulation diverged at t = {t}: {detail}")]
    Divergence { t: f64, detail: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type PlantResult<T> = Result<T, PlantError>;

/// Failures of the runtime monitor.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid monitor configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type MonitorResult<T> = Result<T, MonitorError>;

/// Certificate parsing and annotation failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("ellipsoid `{0}` is not positive definite")]
    NotPositiveDefinite(String),
    #[error("invalid annotation: {0}")]
    Annotation(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type CertResult<T> = Result<T, CertError>;

/// Any failure of the end-to-end pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Gain(#[from] GainError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type PipelineResult<T> = Result<T, Error>;
