//! The serialized executor. Every boundary-relevant act goes through
//! Decide, Anchor and Effect; the staged state, the ledger append and the
//! run-log record are published together at one commit point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::policy::{ContextAbstraction, Decision};
use super::runlog::{RunHeader, RunLog, RunRecord, RUNLOG_SCHEMA};
use crate::ledger::{AnchorAuthority, Incident, Ledger, LedgerError};
use crate::profile::{AdmissibilityProfile, PolicyUpdate};
use crate::rational::Rational;
use crate::reach::{enumerate_reach, ActionSpec, Branch, ReachBudget, ReachError};
use crate::scenario::{InjectionKind, RunStrategy, Scenario, ScenarioEnv, ScenarioError};
use crate::state::{commit_ext, commit_pi, ActionId, BoundaryMessage, ExtTask, InstitutionState, Provenance, StateError};
use crate::tags::{tag_set, PolicyStep, TagError, TagSet};

/// Act id recorded for a step where no action is admissible.
pub const IDLE_ACT: &str = "idle";
/// Act id of the record that anchors a deferred witness.
pub const DEFERRED_ANCHOR_ACT: &str = "anchor-deferred";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides the scenario horizon.
    pub horizon: Option<usize>,
    pub budget: ReachBudget,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: 0, horizon: None, budget: ReachBudget::default() }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("step {step}: {source}")]
    State { step: u64, source: StateError },
    #[error("step {step}: tag computation failed: {source}")]
    Tag { step: u64, source: TagError },
    #[error("step {step}: action {act:?} is not admissible at node {node:?}")]
    NotAdmissible { step: u64, node: String, act: String },
    #[error("step {step}: profile {profile:?} has a fixed policy and cannot be switched")]
    FixedPolicy { step: u64, profile: String },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Audit(#[from] crate::analysis::AuditError),
}

impl RunError {
    pub fn is_budget(&self) -> bool {
        matches!(self, RunError::Tag { source: TagError::Reach(ReachError::BudgetExceeded { .. }), .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionResult {
    /// `None` for internal transitions that never reached the membrane.
    pub decision: Option<Decision>,
    pub tag_set: TagSet,
    pub witness_seq: Option<u64>,
    pub state_after: InstitutionState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuedAct {
    pub step: u64,
    pub act: String,
    pub witness_seq: u64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub log: RunLog,
    pub ledger: Ledger,
    pub final_state: InstitutionState,
    pub quarantine: Vec<QueuedAct>,
    pub incidents: Vec<Incident>,
    pub injected_step: Option<u64>,
}

struct Deferred {
    act: ActionId,
    decision: Decision,
    version: String,
    ctx: ContextAbstraction,
    tags: TagSet,
}

pub struct Executor<'a> {
    scenario: &'a Scenario,
    env: ScenarioEnv,
    budget: ReachBudget,
    seed: u64,
    horizon: usize,
    state: InstitutionState,
    node: String,
    ledger: Ledger,
    authority: AnchorAuthority,
    rng: ChaCha8Rng,
    records: Vec<RunRecord>,
    quarantine: Vec<QueuedAct>,
    incidents: Vec<Incident>,
    injected_step: Option<u64>,
    schedule_pos: usize,
}

impl<'a> Executor<'a> {
    pub fn new(scenario: &'a Scenario, opts: RunOptions) -> Result<Self, RunError> {
        let env = scenario.validate()?;
        let (ledger, authority) = Ledger::new();
        Ok(Executor {
            scenario,
            env,
            budget: opts.budget,
            seed: opts.seed,
            horizon: opts.horizon.unwrap_or(scenario.run.horizon),
            state: scenario.initial_state(),
            node: scenario.automaton.initial.clone(),
            ledger,
            authority,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            records: Vec::new(),
            quarantine: Vec::new(),
            incidents: Vec::new(),
            injected_step: None,
            schedule_pos: 0,
        })
    }

    pub fn state(&self) -> &InstitutionState {
        &self.state
    }

    pub fn node(&self) -> &str {
        &self.node
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn quarantine(&self) -> &[QueuedAct] {
        &self.quarantine
    }

    pub fn env(&self) -> &ScenarioEnv {
        &self.env
    }

    fn injection(&self) -> Option<InjectionKind> {
        self.scenario.injection.map(|i| i.kind)
    }

    fn profile(&self) -> &'a AdmissibilityProfile {
        self.scenario.profile(&self.state.adm).expect("active profile is declared")
    }

    pub fn admissible(&self) -> Vec<&'a ActionSpec> {
        let version = &self.profile().policy_version;
        self.scenario.automaton.nodes[&self.node].actions.iter().filter(|a| a.admits(version)).collect()
    }

    pub fn done(&self) -> bool {
        self.state.step >= self.horizon as u64
            || (self.scenario.run.strategy == RunStrategy::Schedule
                && self.schedule_pos >= self.scenario.run.schedule.len())
    }

    /// Runs one step under the scenario's strategy. `None` when the run is over.
    pub fn step(&mut self) -> Result<Option<TransitionResult>, RunError> {
        if self.done() {
            return Ok(None);
        }
        let candidates = self.admissible();
        let chosen = match self.scenario.run.strategy {
            RunStrategy::First => candidates.first().map(|a| a.id.clone()),
            RunStrategy::Random if candidates.is_empty() => None,
            RunStrategy::Random => Some(candidates[self.rng.gen_range(0..candidates.len())].id.clone()),
            RunStrategy::Schedule => {
                self.schedule_pos += 1;
                Some(self.scenario.run.schedule[self.schedule_pos - 1].clone())
            }
        };
        match chosen {
            Some(act) => self.execute_mediated(&act).map(Some),
            None => Ok(Some(self.idle())),
        }
    }

    pub fn run_to_end(mut self) -> Result<RunOutcome, RunError> {
        while self.step()?.is_some() {}
        Ok(self.finish())
    }

    fn sample_branch(&mut self, branches: &[Branch]) -> String {
        let u = Rational::from_fraction_of_pow2(self.rng.gen::<u64>() >> 11, 53);
        let mut cum = Rational::zero();
        for b in branches {
            cum += &b.p;
            if u < cum {
                return b.to.clone();
            }
        }
        branches.iter().rev().find(|b| b.p.is_positive()).expect("probabilities sum to one").to.clone()
    }

    /// Delivers this step's exogenous realizations. Each fires a hook.
    fn deliver_exogenous(&self, s: &mut InstitutionState, rec: &mut RunRecord) {
        let t = s.step;
        for e in self.scenario.exogenous.iter().filter(|e| e.step == t) {
            rec.exogenous.push(e.id.clone());
            if let Some(body) = &e.inbox {
                s.boundary.inbox.push(BoundaryMessage { step: t, body: body.clone() });
            }
            s.boundary.world_obs.extend(e.world_obs.iter().map(|(k, v)| (k.clone(), v.clone())));
            rec.hooks.push(e.id.clone());
            if e.task {
                let task = ExtTask {
                    id: format!("{}@{t}", e.id),
                    provenance: Provenance::Exogenous,
                    step: t,
                    trigger: e.id.clone(),
                };
                s.tasks.t_ext.push(task.clone());
                rec.inserted.push(task);
            }
        }
    }

    fn blank_record(&self, act: &str) -> RunRecord {
        RunRecord {
            step: self.state.step,
            act: act.to_string(),
            node_from: self.node.clone(),
            node_to: self.node.clone(),
            channel: None,
            mediated: false,
            decision: None,
            tags: TagSet::new(),
            applied: false,
            commit_pi: false,
            commit_ext: false,
            stimulated: false,
            exogenous: Vec::new(),
            hooks: Vec::new(),
            inserted: Vec::new(),
            t_ext_len: 0,
            witness_seq: None,
            anchored: Vec::new(),
            policy_version: self.profile().policy_version.clone(),
            state_before: self.state.digest(),
            state_after: String::new(),
        }
    }

    /// Publishes the new state and its record together.
    fn commit(&mut self, mut s: InstitutionState, mut rec: RunRecord) -> InstitutionState {
        s.step = self.state.step + 1;
        s.ledger_len = self.ledger.len() as u64;
        s.ledger_head = hex::encode(self.ledger.head());
        rec.t_ext_len = s.tasks.t_ext.len() as u64;
        rec.state_after = s.digest();
        self.state = s.clone();
        self.records.push(rec);
        s
    }

    fn idle(&mut self) -> TransitionResult {
        let mut rec = self.blank_record(IDLE_ACT);
        let mut s = self.state.clone();
        self.deliver_exogenous(&mut s, &mut rec);
        let state_after = self.commit(s, rec);
        TransitionResult { decision: None, tag_set: TagSet::new(), witness_seq: None, state_after }
    }

    fn context(&self, a: &ActionSpec, s: &InstitutionState, version: &str) -> ContextAbstraction {
        let (canonical, risk_class) = match &a.channel {
            Some(ch) => (
                self.env.encoding.registry().parent(ch).ok(),
                self.env.encoding.label(ch).ok().map(str::to_string),
            ),
            None => (None, None),
        };
        ContextAbstraction {
            channel: a.channel.clone(),
            canonical,
            risk_class,
            payload: a.payload().to_string(),
            caps: s.region(&self.scenario.regions.caps).keys().map(|k| k.to_string()).collect(),
            budget: s.budget,
            policy_version: version.to_string(),
        }
    }

    /// Executes `act` at the current node as one transition. Internal acts
    /// with no tags skip the membrane; everything else is decided, anchored
    /// and only then applied.
    pub fn execute_mediated(&mut self, act_id: &str) -> Result<TransitionResult, RunError> {
        let t = self.state.step;
        let spec = self
            .admissible()
            .into_iter()
            .find(|a| a.id == act_id)
            .ok_or_else(|| RunError::NotAdmissible { step: t, node: self.node.clone(), act: act_id.to_string() })?;
        let act = ActionId::new(act_id);
        let profile = self.profile();
        let version = profile.policy_version.clone();

        let mut rec = self.blank_record(act_id);
        rec.channel = spec.channel.clone();
        let mut s_pre = self.state.clone();
        self.deliver_exogenous(&mut s_pre, &mut rec);

        // Stage the effect without publishing it.
        let mut staged = spec
            .delta
            .apply(&s_pre, self.scenario.flags.self_delegation)
            .map_err(|source| RunError::State { step: t, source })?;
        let mut staged_tasks = Vec::new();
        if let Some(provenance) = spec.insert_task {
            let task = ExtTask { id: format!("{act_id}@{t}"), provenance, step: t, trigger: act_id.to_string() };
            staged.tasks.t_ext.push(task.clone());
            staged_tasks.push(task);
        }
        let node_to = self.sample_branch(&spec.branches);

        let reach = match &spec.switch_profile {
            Some(next) => {
                if profile.u_policy == PolicyUpdate::Fixed {
                    return Err(RunError::FixedPolicy { step: t, profile: profile.id.clone() });
                }
                let next_profile = self.scenario.profile(next).expect("validated profile");
                staged.adm = next.clone();
                let reach_err = |e: ReachError| RunError::Tag { step: t, source: e.into() };
                let automaton = &self.scenario.automaton;
                let before = enumerate_reach(automaton, &self.env.encoding, &self.node, profile, self.budget)
                    .map_err(reach_err)?;
                let after = enumerate_reach(automaton, &self.env.encoding, &node_to, next_profile, self.budget)
                    .map_err(reach_err)?;
                Some((before, after))
            }
            None => None,
        };
        let policy_step = reach.as_ref().map(|(b, a)| PolicyStep { reach_before: b, reach_after: a });
        let tags = tag_set(&act, &s_pre, &staged, &self.scenario.regions, policy_step)
            .map_err(|source| RunError::Tag { step: t, source })?;
        rec.tags = tags.clone();

        let needs_membrane = spec.channel.is_some() || spec.switch_profile.is_some() || !tags.is_empty();
        let bypass = needs_membrane
            && !tags.is_empty()
            && self.injection() == Some(InjectionKind::Bypass)
            && self.injected_step.is_none();
        if bypass {
            self.injected_step = Some(t);
        }

        let mut deferred = None;
        let (decision, witness_seq, applied) = if !needs_membrane || bypass {
            (None, None, true)
        } else {
            let ctx = self.context(spec, &s_pre, &version);
            let decision = self.env.policies.adjudicate(&ctx).unwrap_or_else(|| {
                self.incidents.push(Incident {
                    act: act_id.to_string(),
                    reason: format!("unknown policy version {version:?}; failed closed"),
                });
                Decision::Reject
            });
            let seq = self.ledger.len() as u64;
            let split = decision == Decision::Allow
                && !tags.is_empty()
                && self.injection() == Some(InjectionKind::SplitPhase)
                && self.injected_step.is_none();
            if split {
                self.injected_step = Some(t);
                deferred = Some(Deferred { act: act.clone(), decision, version: version.clone(), ctx, tags: tags.clone() });
            } else {
                self.ledger.anchor(&self.authority, &act, decision, &version, ctx, tags.clone())?;
                rec.anchored.push(seq);
            }
            if decision == Decision::Quarantine {
                self.quarantine.push(QueuedAct { step: t, act: act_id.to_string(), witness_seq: seq });
            }
            (Some(decision), Some(seq), decision == Decision::Allow)
        };

        let s_after = if applied {
            rec.node_to = node_to.clone();
            rec.inserted.extend(staged_tasks);
            staged
        } else {
            s_pre.clone()
        };
        rec.mediated = decision.is_some();
        rec.decision = decision;
        rec.witness_seq = witness_seq;
        rec.applied = applied;
        rec.commit_pi = commit_pi(&act, &s_pre, &s_after).map_err(|source| RunError::State { step: t, source })?;
        rec.commit_ext = commit_ext(&act, &s_pre, &s_after).map_err(|source| RunError::State { step: t, source })?;
        rec.stimulated = spec.stimulated && applied;
        if applied {
            self.node = node_to;
        }
        let state_after = self.commit(s_after, rec);

        if let Some(d) = deferred {
            self.anchor_deferred(d)?;
        }
        Ok(TransitionResult { decision, tag_set: tags, witness_seq, state_after })
    }

    fn anchor_deferred(&mut self, d: Deferred) -> Result<(), RunError> {
        let mut rec = self.blank_record(DEFERRED_ANCHOR_ACT);
        let seq = self.ledger.len() as u64;
        self.ledger.anchor(&self.authority, &d.act, d.decision, &d.version, d.ctx, d.tags)?;
        rec.anchored.push(seq);
        let mut s = self.state.clone();
        self.deliver_exogenous(&mut s, &mut rec);
        self.commit(s, rec);
        Ok(())
    }

    pub fn finish(mut self) -> RunOutcome {
        if self.injection() == Some(InjectionKind::LedgerTamper) {
            if let Some(r) = self.records.iter().find(|r| r.witness_seq.is_some()) {
                let seq = r.witness_seq.expect("checked");
                if self.ledger.tamper_act_byte(&self.authority, seq) {
                    self.injected_step = Some(r.step);
                }
            }
        }
        let mut incidents = self.ledger.incidents().to_vec();
        incidents.extend(self.incidents);
        let flags = &self.scenario.flags;
        RunOutcome {
            log: RunLog {
                header: RunHeader {
                    schema: RUNLOG_SCHEMA.to_string(),
                    scenario: self.scenario.name.clone(),
                    seed: self.seed,
                    horizon: self.horizon,
                    injection: self.scenario.injection.map(|i| i.kind),
                    sc6_faithful: flags.sc6_faithful,
                    prop_a: flags.prop_a,
                },
                records: self.records,
            },
            ledger: self.ledger,
            final_state: self.state,
            quarantine: self.quarantine,
            incidents,
            injected_step: self.injected_step,
        }
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario, opts: RunOptions) -> Result<RunOutcome, RunError> {
    Executor::new(scenario, opts)?.run_to_end()
}
