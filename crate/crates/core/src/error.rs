use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trait score {value} for {name} is outside [1, 5]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("trait score for {name} is not finite")]
    NonFinite { name: &'static str },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate user id {0}")]
    DuplicateUser(String),
    #[error("invalid category: {0}")]
    InvalidCategory(String),
    #[error("transport error resolving {like_id}: {reason}")]
    Transport { like_id: String, reason: String },

    #[error("dataset is empty")]
    EmptyDataset,
    #[error("user has no likes to normalize")]
    ZeroTotal,
    #[error("category {0} is not part of the feature space")]
    UnknownCategory(String),

    #[error("need at least {needed} rows, have {have}")]
    TooFewRows { needed: usize, have: usize },
    #[error("requested {requested} training rows but only {available} remain after the test split")]
    InsufficientRows { requested: usize, available: usize },
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("k = {k} exceeds the {rows} stored rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt model document: {0}")]
    CorruptDocument(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("model feature space does not match the evaluation data")]
    FeatureSpaceMismatch,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            e @ (Error::MalformedRow { .. } | Error::AtLine { .. }) => e,
            e => Error::AtLine { line, source: Box::new(e) },
        }
    }
}
