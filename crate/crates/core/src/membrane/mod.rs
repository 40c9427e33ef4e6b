//! The mediation surface: policies, adjudication and the serialized
//! executor.

mod executor;
mod policy;
mod runlog;

pub use executor::{
    run, Executor, QueuedAct, RunError, RunOptions, RunOutcome, TransitionResult, DEFERRED_ANCHOR_ACT, IDLE_ACT,
};
pub use policy::{adjudicate, ContextAbstraction, Decision, Policy, PolicyRegistry, Rule};
pub use runlog::{RunHeader, RunLog, RunLogError, RunRecord, RUNLOG_SCHEMA};
