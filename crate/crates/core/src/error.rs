use thiserror::Error;

/// Errors raised by the planning primitives, solvers and the manager.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("configuration must have at least one coordinate")]
    EmptyConfiguration,

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("joint bounds invalid at index {index}: lower {lower} > upper {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },

    #[error("metric weight at index {index} must be finite and positive, got {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("interpolation parameter {0} outside [0, 1]")]
    InterpolationOutOfRange(f64),

    #[error("sampler rejected {0} consecutive draws; sampling region is empty")]
    SamplerExhausted(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("start configuration is in collision")]
    StartInCollision,

    #[error("tree root is in collision")]
    RootInCollision,

    #[error("trace: {0}")]
    Trace(String),

    #[error("no initial path found from start to goal")]
    NoInitialPath,

    #[error("initial path is obstructed")]
    InitialPathObstructed,

    #[error("initial path does not start at the problem start")]
    InitialPathMismatch,

    #[error("cannot stop within remaining length {length} from speed {speed}")]
    InfeasibleStop { length: f64, speed: f64 },

    #[error("robot left the replanned path (distance {0})")]
    OffPath(f64),

    #[error("unknown replanner `{name}`; known replanners: {known}")]
    UnknownReplanner { name: String, known: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
