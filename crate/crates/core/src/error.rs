use alloc::string::String;

use crate::graph::NodeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("quantizer needs at least 2 bits and at most 32, got {0}")]
    InvalidBits(u32),
    #[error("quantizer step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("quantizer midpoint must be finite, got {0}")]
    InvalidMidpoint(f64),
    #[error("cannot quantize non-finite value {0}")]
    NonFinite(f64),
    #[error("value {value} is not on the quantizer grid")]
    OffGrid { value: f64 },
    #[error("level {level} is not representable in {bits} bits")]
    LevelOutOfRange { level: i64, bits: u32 },
    #[error("byte stream too short: need {needed} bits, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("invalid flag code {0:#04b}")]
    InvalidFlag(u8),

    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {node} out of range for a graph of {n} nodes")]
    UnknownNode { node: NodeId, n: usize },
    #[error("self-loop on node {0} is implicit and cannot be stored")]
    SelfLoop(NodeId),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("edge probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("out-degree {0} does not fit the 16-bit wire field")]
    DegreeOverflow(usize),
    #[error("agent {agent}: no message from in-neighbor {sender}")]
    MissingMessage { agent: NodeId, sender: NodeId },
    #[error("agent {agent}: more than one message from {sender}")]
    DuplicateMessage { agent: NodeId, sender: NodeId },
    #[error("agent {agent}: message from {sender}, which is not an in-neighbor")]
    UnexpectedSender { agent: NodeId, sender: NodeId },
    #[error("invalid protocol parameter: {0}")]
    InvalidParams(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("round {round}: agent {agent} holds a grid that differs from agent 0")]
    GridDesync { round: usize, agent: NodeId },
    #[error("round {round}: agent {agent} has degenerate grid step {step}")]
    DegenerateGrid { round: usize, agent: NodeId, step: f64 },
    #[error("round {round}: total mass drifted by {drift:e} (bound {bound:e})")]
    MassViolation { round: usize, drift: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigenvalue iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
}
