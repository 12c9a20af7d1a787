use thiserror::Error;

use crate::instance::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("node {node} out of range for a graph with {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },

    #[error("graph must have at least one node")]
    EmptyGraph,

    #[error("unknown layout '{0}'")]
    UnknownLayout(String),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("truncated sampling for {what} gave up after {attempts} draws")]
    SamplingExhausted { what: &'static str, attempts: usize },

    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("cost table has no entry for movement {from} -> {to}")]
    MissingCost { from: usize, to: usize },

    #[error("flow decode failed: {0}")]
    FlowDecode(String),

    #[error("oracle state-space guard exceeded: {0}")]
    OracleGuard(String),

    #[error("no schedule within the depth cap of {cap}")]
    InfeasibleUpToCap { cap: usize },

    #[error("timed out after {elapsed_ms} ms while trying depth {depth}")]
    TimedOut { depth: usize, elapsed_ms: u128 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
