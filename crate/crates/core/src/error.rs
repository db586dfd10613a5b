use thiserror::Error;

/// Errors raised anywhere in the training, accounting and attack pipeline.
///
/// Every variant carries a stable kebab-case code (see [`Error::code`]) that
/// is also the prefix of its `Display` output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-gradient: gradient set has no elements")]
    EmptyGradient,
    #[error("shape-mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch-too-small: batch of {batch} cannot feed {workers} workers")]
    BatchTooSmall { batch: usize, workers: usize },
    #[error("degenerate-calibration: every layer has zero first-iteration norm")]
    DegenerateCalibration,
    #[error("scale-coverage: no scale factor for layer `{0}`")]
    ScaleCoverage(String),
    #[error("worker-count: expected {expected} worker gradients, got {got}")]
    WorkerCount { expected: usize, got: usize },
    #[error("empty-batch: at least one example is required")]
    EmptyBatch,
    #[error("infinite-privacy-loss: noise multiplier is zero")]
    InfinitePrivacyLoss,
    #[error("invalid-delta: {0} is outside (0, 1)")]
    InvalidDelta(f64),
    #[error("bad-dataset-spec: {0}")]
    BadDatasetSpec(String),
    #[error("bad-input: {0}")]
    BadInput(String),
    #[error("degenerate-attack-data: attack training needs both member and non-member records")]
    DegenerateAttackData,
    #[error("degenerate-eval: AUC needs both member and non-member scores")]
    DegenerateEval,
    #[error("bad-config: {}", .0.join("; "))]
    BadConfig(Vec<String>),
    #[error("no-target: {0}")]
    NoTarget(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyGradient => "empty-gradient",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::BatchTooSmall { .. } => "batch-too-small",
            Error::DegenerateCalibration => "degenerate-calibration",
            Error::ScaleCoverage(_) => "scale-coverage",
            Error::WorkerCount { .. } => "worker-count",
            Error::EmptyBatch => "empty-batch",
            Error::InfinitePrivacyLoss => "infinite-privacy-loss",
            Error::InvalidDelta(_) => "invalid-delta",
            Error::BadDatasetSpec(_) => "bad-dataset-spec",
            Error::BadInput(_) => "bad-input",
            Error::DegenerateAttackData => "degenerate-attack-data",
            Error::DegenerateEval => "degenerate-eval",
            Error::BadConfig(_) => "bad-config",
            Error::NoTarget(_) => "no-target",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::BadConfig(_) | Error::BadDatasetSpec(_) | Error::InvalidDelta(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
