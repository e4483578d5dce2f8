use thiserror::Error;

use crate::graph::TimedNode;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node {0} is not part of the graph")]
    UnknownNode(TimedNode),

    #[error("node {0} is listed more than once")]
    DuplicateNode(TimedNode),

    #[error("self-loop on node {0}")]
    SelfLoop(TimedNode),

    #[error("directed edges form a cycle through {0}")]
    DirectedCycle(TimedNode),

    #[error("operation requires a graph without bi-directed edges ({0})")]
    BidirectedPresent(&'static str),

    #[error("node sets must be pairwise disjoint; {0} appears in more than one set")]
    OverlappingSets(TimedNode),

    #[error("path enumeration exceeded the limit of {0} simple paths")]
    PathLimitExceeded(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("process is not stable: spectral radius {radius:.12} (must be below {bound})")]
    Unstable { radius: f64, bound: f64 },

    #[error("instantaneous effects are cyclic")]
    CyclicInstantaneous,

    #[error("invalid time range [{t_min}, {t_max}]")]
    InvalidRange { t_min: i64, t_max: i64 },

    #[error("innovation node {0} requested; covariances are defined over endogenous nodes")]
    InnovationNode(TimedNode),

    #[error("under-identified: rank {rank} of Cov(X, I | B) is below |X| = {needed}")]
    UnderIdentified { rank: usize, needed: usize },

    #[error("singular estimation system (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("simulation diverged at step {step}; re-check stability")]
    Diverged { step: usize },

    #[error("rejection sampling gave up after {0} draws; use a smaller coefficient scale")]
    SamplerExhausted(usize),

    #[error("invalid data: {0}")]
    Data(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
