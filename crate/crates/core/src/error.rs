use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("point {0} is outside the model")]
    PointOutOfRange(usize),
    #[error("negative power requested on a non-invertible map")]
    NegativePowerOnNoninvertible,
    #[error("model is not finite-exact")]
    NotFiniteExact,
    #[error("empty set where a nonempty one is required")]
    EmptySet,
    #[error("open set contains no sample points")]
    EmptyOpenSet,
    #[error("hyperspace of size {count} exceeds budget {budget}")]
    CardinalityBudget { count: u128, budget: usize },
    #[error(
        "sequence window exceeded: offset {offset} needs reach {needed}, bank reach is {reach}"
    )]
    HorizonExceeded {
        offset: i64,
        needed: i64,
        reach: i64,
    },
    #[error("word uses symbol outside the alphabet: {0}")]
    BadSymbol(String),
    #[error("shift specification is empty or inconsistent: {0}")]
    BadShift(String),
    #[error("no edge-graph presentation available: {0}")]
    NoEdgeGraph(String),
    #[error("sliding block rule undefined on window `{0}`")]
    RuleUndefined(String),
    #[error("word length must be odd and equal: {0}")]
    BadWindow(String),
    #[error("composition table is not closed: entry ({0},{1}) = {2}")]
    TableNotClosed(usize, usize, usize),
    #[error("associativity fails at ({0},{1},{2})")]
    AssociativityViolation(usize, usize, usize),
    #[error("no idempotent pairing found between the two ideals")]
    NoPairingFound,
    #[error("group check and idempotent check disagree")]
    DistalDisagreement,
    #[error("semigroup has no generator")]
    NoGenerator,
    #[error("preimages are unavailable for this model")]
    PreimagesUnavailable,
    #[error("operation needs a shift window model")]
    NotAShiftModel,
    #[error("element budget {0} exhausted")]
    ElementBudget(usize),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
