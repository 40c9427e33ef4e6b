//! Versioned JSON reports.

use serde::{Deserialize, Serialize};

use crate::analysis::{audit_governability, check_prop_a, AuditReport, PropAReport};
use crate::ledger::Incident;
use crate::membrane::{run, Decision, QueuedAct, RunError, RunOptions, RunOutcome};
use crate::scenario::{InjectionKind, Scenario};
use crate::tags::TagSet;

pub const REPORT_SCHEMA: &str = "boundary-report/1";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    kind: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with the schema header; always newline-terminated.
pub fn render<T: Serialize>(kind: &str, body: &T) -> String {
    serde_json::to_string_pretty(&Envelope { schema: REPORT_SCHEMA, kind, body }).expect("report serializes") + "\n"
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: u64,
    pub act: String,
    pub decision: Option<Decision>,
    pub tags: TagSet,
    pub commit_pi: bool,
    pub commit_ext: bool,
    pub witness_seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub horizon: usize,
    pub injection: Option<InjectionKind>,
    pub injected_step: Option<u64>,
    pub steps: Vec<StepSummary>,
    pub audit: AuditReport,
    pub prop_a: Option<PropAReport>,
    pub quarantine: Vec<QueuedAct>,
    pub incidents: Vec<Incident>,
    pub system_class_findings: Vec<String>,
    pub ledger_records: u64,
    pub ledger_head: String,
    pub final_state: String,
}

impl RunReport {
    pub fn new(outcome: &RunOutcome, audit: AuditReport, prop_a: Option<PropAReport>, class_findings: Vec<String>) -> Self {
        let h = &outcome.log.header;
        RunReport {
            scenario: h.scenario.clone(),
            seed: h.seed,
            horizon: h.horizon,
            injection: h.injection,
            injected_step: outcome.injected_step,
            steps: outcome
                .log
                .records
                .iter()
                .map(|r| StepSummary {
                    step: r.step,
                    act: r.act.clone(),
                    decision: r.decision,
                    tags: r.tags.clone(),
                    commit_pi: r.commit_pi,
                    commit_ext: r.commit_ext,
                    witness_seq: r.witness_seq,
                })
                .collect(),
            audit,
            prop_a,
            quarantine: outcome.quarantine.clone(),
            incidents: outcome.incidents.clone(),
            system_class_findings: class_findings,
            ledger_records: outcome.ledger.len() as u64,
            ledger_head: hex::encode(outcome.ledger.head()),
            final_state: outcome.final_state.digest(),
        }
    }

    /// Law violations or external-task causation breaches were detected.
    pub fn has_violations(&self) -> bool {
        self.audit.has_violations() || self.prop_a.as_ref().is_some_and(|p| p.applicable && !p.pass)
    }
}

/// Runs a scenario, then audits the log and ledger it produced.
pub fn run_and_report(scenario: &Scenario, opts: RunOptions) -> Result<(RunOutcome, RunReport), RunError> {
    let env = scenario.validate()?;
    let outcome = run(scenario, opts)?;
    let audit = audit_governability(&outcome.log, outcome.ledger.records(), &env.policies)?;
    let prop_a = outcome.log.header.prop_a.map(|_| check_prop_a(&outcome.log));
    let report = RunReport::new(&outcome, audit, prop_a, scenario.system_class_findings());
    Ok((outcome, report))
}
