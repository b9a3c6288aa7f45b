use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown rater: {0}")]
    UnknownRater(String),

    #[error("unknown label {label:?} on item {item:?}")]
    UnknownLabel { label: String, item: String },

    #[error("duplicate judgement for item {item:?} by rater {rater:?}")]
    DuplicateCell { item: String, rater: String },

    #[error("duplicate item_id {0:?}")]
    DuplicateItem(String),

    #[error("{path}:{line}: {msg}")]
    Malformed {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("invalid label space: {0}")]
    InvalidSpace(String),

    #[error("label spaces differ")]
    SpaceMismatch,

    #[error("invalid group {name:?}: {msg}")]
    InvalidGroup { name: String, msg: String },

    #[error("groups {a:?} and {b:?} are not disjoint")]
    GroupsNotDisjoint { a: String, b: String },

    #[error("no common items")]
    NoCommonItems,

    #[error("no usable items")]
    NoUsableItems,

    #[error("degenerate marginals")]
    DegenerateMarginals,

    #[error("all pairs degenerate")]
    AllPairsDegenerate,

    #[error("no variation")]
    NoVariation,

    #[error("group {0:?} needs >= 2 raters")]
    GroupTooSmall(String),

    #[error("leave-one-out needs >= 2 raters")]
    LeaveOneOutTooSmall,

    #[error("within-group reliability undefined for singleton group {0:?}")]
    WithinReliabilityUndefined(String),

    #[error("normalization undefined: within-group kappa for {group:?} is {value}")]
    NormalizationUndefined { group: String, value: f64 },

    #[error("tau undefined")]
    TauUndefined,

    #[error("F1 undefined")]
    F1Undefined,

    #[error("item sets differ")]
    ItemSetMismatch,

    #[error("label space is not binary")]
    NonBinarySpace,

    #[error("label space has no positive category")]
    NoPositiveClass,

    #[error("invalid degradation schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid model output: {0:?}")]
    InvalidModelOutput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("environment variable {0} is not set")]
    MissingApiKey(String),

    #[error("request failed: {0}")]
    Http(String),

    #[error("unexpected response shape: {0}")]
    ResponseShape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
