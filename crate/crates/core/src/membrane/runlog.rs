//! Append-only run log: a header line followed by one JSON record per
//! transition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::policy::Decision;
use crate::scenario::{InjectionKind, PropAAssumptions};
use crate::state::ExtTask;
use crate::tags::TagSet;

pub const RUNLOG_SCHEMA: &str = "boundary-runlog/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema: String,
    pub scenario: String,
    pub seed: u64,
    pub horizon: usize,
    pub injection: Option<InjectionKind>,
    pub sc6_faithful: bool,
    pub prop_a: Option<PropAAssumptions>,
}

impl RunHeader {
    pub fn non_compliant(&self) -> bool {
        self.injection.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub step: u64,
    pub act: String,
    pub node_from: String,
    pub node_to: String,
    pub channel: Option<String>,
    /// The transition went through the membrane.
    pub mediated: bool,
    pub decision: Option<Decision>,
    /// Tags of the proposed transition.
    pub tags: TagSet,
    /// The proposed effect became visible in this record.
    pub applied: bool,
    pub commit_pi: bool,
    pub commit_ext: bool,
    pub stimulated: bool,
    /// Exogenous realizations delivered at the start of this step.
    pub exogenous: Vec<String>,
    /// Hook events fired at this step.
    pub hooks: Vec<String>,
    /// External tasks inserted at this step.
    pub inserted: Vec<ExtTask>,
    pub t_ext_len: u64,
    /// Witness bound to this transition, if any.
    pub witness_seq: Option<u64>,
    /// Witness sequence numbers appended to the ledger in this record.
    pub anchored: Vec<u64>,
    pub policy_version: String,
    pub state_before: String,
    pub state_after: String,
}

impl RunRecord {
    pub fn ext_delta(&self) -> bool {
        self.commit_pi || self.stimulated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub header: RunHeader,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("run log line {line}: {message}")]
pub struct RunLogError {
    pub line: usize,
    pub message: String,
}

impl RunLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<RunLog, RunLogError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(RunLogError { line: 1, message: "empty run log".into() })?;
        let header: RunHeader =
            serde_json::from_str(first).map_err(|e| RunLogError { line: 1, message: e.to_string() })?;
        if header.schema != RUNLOG_SCHEMA {
            return Err(RunLogError { line: 1, message: format!("unsupported schema {:?}", header.schema) });
        }
        let records = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| RunLogError { line: i + 1, message: e.to_string() }))
            .collect::<Result<_, _>>()?;
        Ok(RunLog { header, records })
    }
}
