//! Horizon-limited reach, the bounded risk-weighted estimator, and the
//! capability-graph proxy.

mod automaton;
mod encoding;
mod engine;
mod proxy;
mod risk;

use thiserror::Error;

pub use automaton::{ActionSpec, Automaton, Branch, Node};
pub use encoding::{Alphabet, Normalization, Symbol, TraceEncoding};
pub use engine::{
    calibrate_memory, enumerate_reach, risk_weighted_reach, risk_weighted_reach_with_memory, Calibration,
    ReachBudget, TraceSet,
};
pub use proxy::{delta_expand, expansion_flag, proxy_reach_measure, CapVertex, CapabilityGraph};
pub use risk::RiskModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReachError {
    #[error("unknown automaton node {0:?}")]
    UnknownNode(String),
    #[error("no action {act:?} at node {node:?}")]
    UnknownAction { node: String, act: String },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("risk model: {0}")]
    Risk(String),
    #[error("trace encoding: {0}")]
    Encoding(String),
    #[error("capability graph: {0}")]
    Graph(String),
    #[error("trace sets over different alphabets ({left:?} vs {right:?}); declare a normalization")]
    AlphabetMismatch { left: Alphabet, right: Alphabet },
    #[error("resource budget exceeded: more than {limit} {what}")]
    BudgetExceeded { what: &'static str, limit: u64 },
}
