use thiserror::Error;

/// Errors produced by the NFG library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NfgError {
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("value {value} out of range for alphabet of size {size}")]
    OutOfRange { value: usize, size: usize },

    #[error("alphabet mismatch on `{label}`: {left} vs {right}")]
    AlphabetMismatch { label: String, left: usize, right: usize },

    #[error("label `{0}` appears in three or more factors")]
    LabelOverused(String),

    #[error("table of {got} values does not match domain size {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("{0}")]
    InvalidIndicator(String),

    #[error("axis `{axis}` of vertex `{vertex}` is bound by {count} edges")]
    UnboundAxis { vertex: String, axis: String, count: usize },

    #[error("invalid edge `{edge}`: {reason}")]
    InvalidEdge { edge: String, reason: String },

    #[error("vertices `{0}` and `{1}` are not adjacent")]
    NotAdjacent(String, String),

    #[error("vertex sets overlap at `{0}`")]
    OverlappingSets(String),

    #[error("transformer pair does not contract to the equality indicator (error {0:.3e})")]
    NotInversePair(f64),

    #[error("state space of {states} exceeds the cap of {cap}")]
    TooLarge { states: u128, cap: u128 },

    #[error("graph contains a cycle through {0:?}")]
    Cycle(Vec<String>),

    #[error("graph is not connected")]
    Disconnected,

    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),

    #[error("model precondition violated: {0}")]
    Precondition(String),

    #[error("sampler exceeded {0} consecutive rejections")]
    TooManyRejections(u64),

    #[error("exterior function is not proportional to a 0/1 indicator")]
    NotAnIndicator,

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("total mass {0:.3e} too small to normalize")]
    ZeroMass(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = NfgError> = std::result::Result<T, E>;
