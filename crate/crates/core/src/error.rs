use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record has no raw_outputs, p_yes, or (ll_yes, ll_no)")]
    MissingAllChannels,
    #[error("raw_outputs is present but empty")]
    EmptyRawOutputs,
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("log-likelihood pair is not finite: ll_yes={ll_yes}, ll_no={ll_no}")]
    NonFiniteLikelihood { ll_yes: f64, ll_no: f64 },
    #[error("records for one pool carry different item ids: {expected:?} vs {found:?}")]
    MixedItemIds { expected: String, found: String },
    #[error("record {model_id:?} for item {item_id:?} cannot be resolved to a distribution")]
    UnresolvableRecord { item_id: String, model_id: String },
    #[error("duplicate source id {0:?} in pool")]
    DuplicateSource(String),
    #[error("pool is empty")]
    EmptyPool,
    #[error("list of sampled outputs is empty")]
    EmptyList,
    #[error("resample size floor({fraction} * {k}) is zero")]
    DegenerateResampleSize { fraction: f64, k: usize },
    #[error("labeled score set is empty")]
    EmptyScores,
    #[error("items without labels: {0:?}")]
    MissingLabels(Vec<String>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, emitted in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingAllChannels => "missing-all-channels",
            Error::EmptyRawOutputs => "empty-raw-outputs",
            Error::ProbabilityOutOfRange(_) => "p-out-of-range",
            Error::NonFiniteLikelihood { .. } => "non-finite-input",
            Error::MixedItemIds { .. } => "mixed-item-ids",
            Error::UnresolvableRecord { .. } => "unresolvable-record",
            Error::DuplicateSource(_) => "duplicate-source",
            Error::EmptyPool => "empty-pool",
            Error::EmptyList => "empty-list",
            Error::DegenerateResampleSize { .. } => "degenerate-resample-size",
            Error::EmptyScores => "empty-scores",
            Error::MissingLabels(_) => "label-mismatch",
            Error::InvalidConfig(_) => "invalid-config",
            Error::EmptyGrid => "empty-grid",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
