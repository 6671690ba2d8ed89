use thiserror::Error;

use crate::metric::MetricViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is singular (pivot {pivot} vanishes)")]
    SingularMatrix { pivot: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot combine a {left} value with a {right} value")]
    BackendMismatch {
        left: &'static str,
        right: &'static str,
    },

    #[error("cannot parse scalar literal {literal:?}: {reason}")]
    Parse { literal: String, reason: String },

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),

    #[error("need at least {min} vertices, found {found}")]
    TooSmall { min: usize, found: usize },

    #[error("invalid metric: {}", render_violations(.0))]
    InvalidMetric(Vec<MetricViolation>),

    #[error("self loop at {0:?}")]
    SelfLoop(String),

    #[error("negative edge weight between {u:?} and {v:?}")]
    NegativeWeight { u: String, v: String },

    #[error("duplicate edge between {u:?} and {v:?}")]
    DuplicateEdge { u: String, v: String },

    #[error("weight matrix is not a graph: {0}")]
    InvalidWeights(String),

    #[error("vertex {0:?} is isolated")]
    IsolatedVertex(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("removing {0:?} disconnects the remaining graph")]
    Disconnects(String),

    #[error("source and sink coincide at {0:?}")]
    SameVertex(String),

    #[error("no value given for vertex {0:?}")]
    MissingValue(String),

    #[error("recovered weights are asymmetric (max deviation {0:e})")]
    AsymmetricSolution(f64),

    #[error("unknown family {0:?}")]
    UnknownFamily(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("restriction to the first {size} vertices is not an effective resistance: {detail}")]
    NotAResistanceMetric { size: usize, detail: String },

    #[error("restriction of size {size} disagrees with the larger restriction of size {larger}")]
    InconsistentExhaustion { size: usize, larger: usize },

    #[error("need at least {needed} trace points, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("return probability equals one; the sink is unreachable")]
    PEqualsOne,

    #[error("condition (C) does not hold at vertex {0:?}")]
    ConditionCFails(String),

    #[error(
        "recurrence of the limit graph was not asserted; transient limits (e.g. the two-sided \
         line with doubling weights, or the graph with arms B and T on a doubling ray) admit no \
         random-walk representation of the resistance"
    )]
    RecurrenceNotAsserted,

    #[error("{0}")]
    Io(String),
}

fn render_violations(v: &[MetricViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
