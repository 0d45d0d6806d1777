use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: usize, dst: usize },
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),
    #[error("undirected edge ({src}, {dst}) has no matching reverse edge of equal weight")]
    AsymmetricEdge { src: usize, dst: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("unknown shift operator variant `{0}`")]
    UnknownVariant(String),
    #[error("unknown activation kind `{0}`")]
    UnknownActivation(String),
    #[error("shift operator has no nonzero entries")]
    ZeroOperator,
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("empty neighborhood at node {node}, hop {hop}")]
    EmptyNeighborhood { node: usize, hop: usize },
    #[error("filter needs at least one tap")]
    EmptyTaps,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("median/max tie within {margin:e} at node {node}, hop {hop} (layer {layer}, feature {feature})")]
    Tie {
        layer: usize,
        feature: usize,
        hop: usize,
        node: usize,
        margin: f64,
    },
    #[error("ReLU input within {margin:e} of zero at node {node} (layer {layer}, feature {feature})")]
    ReluKink {
        layer: usize,
        feature: usize,
        node: usize,
        margin: f64,
    },
    #[error("no connected graph after {0} attempts")]
    RetriesExhausted(usize),
    #[error("empty dataset split: {0}")]
    EmptySplit(&'static str),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
