//! Institution state, external projection, and the commit/equality predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// A value stored in the internal or external key/value regions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

pub type Store = BTreeMap<String, Value>;

/// Label of a modeled transition. Every transition carries one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub String);

impl ActionId {
    pub fn new(s: impl Into<String>) -> Self {
        ActionId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("transition has no action label")]
    Unlabeled,
    #[error("budget underflow: have {have}, delta {delta}")]
    BudgetUnderflow { have: u64, delta: i64 },
    #[error("topology vertex {0:?} is not in the active population")]
    VertexOutsidePopulation(String),
    #[error("topology edge {0:?} -> {1:?} references a non-vertex")]
    DanglingEdge(String, String),
    #[error("self-loop on {0:?} without declared self-delegation")]
    SelfLoop(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryMessage {
    pub step: u64,
    pub body: String,
}

/// The boundary-observable slice of the state: inbox, outbox, commit ledger
/// and world observations.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalProjection {
    pub inbox: Vec<BoundaryMessage>,
    pub outbox: Vec<BoundaryMessage>,
    pub commit_ledger: Vec<BoundaryMessage>,
    pub world_obs: Store,
}

/// Runtime population `N`, vertex set `V ⊆ N` and directed edges `E ⊆ V×V`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyGraph {
    pub population: BTreeSet<String>,
    pub vertices: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl TopologyGraph {
    pub fn validate(&self, allow_self_loops: bool) -> Result<(), StateError> {
        if let Some(v) = self.vertices.iter().find(|v| !self.population.contains(*v)) {
            return Err(StateError::VertexOutsidePopulation(v.clone()));
        }
        for (a, b) in &self.edges {
            if !self.vertices.contains(a) || !self.vertices.contains(b) {
                return Err(StateError::DanglingEdge(a.clone(), b.clone()));
            }
            if a == b && !allow_self_loops {
                return Err(StateError::SelfLoop(a.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Exogenous,
    Stimulated,
    Endogenous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtTask {
    pub id: String,
    pub provenance: Provenance,
    pub step: u64,
    /// Action id or exogenous event id that caused the insertion.
    pub trigger: String,
}

/// Internal task ids and the append-only list of externally accountable tasks.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskLayers {
    pub t_int: BTreeSet<String>,
    pub t_ext: Vec<ExtTask>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstitutionState {
    pub s_int: Store,
    pub s_ext: Store,
    pub ledger_len: u64,
    /// Hex digest of the newest anchored witness; all zeros before the first.
    pub ledger_head: String,
    pub budget: u64,
    pub topology: TopologyGraph,
    /// Active admissibility profile id.
    pub adm: String,
    pub step: u64,
    pub boundary: ExternalProjection,
    pub tasks: TaskLayers,
}

impl InstitutionState {
    pub fn empty(profile: impl Into<String>) -> Self {
        InstitutionState {
            s_int: Store::new(),
            s_ext: Store::new(),
            ledger_len: 0,
            ledger_head: hex::encode([0u8; 32]),
            budget: 0,
            topology: TopologyGraph::default(),
            adm: profile.into(),
            step: 0,
            boundary: ExternalProjection::default(),
            tasks: TaskLayers::default(),
        }
    }

    /// Keys of `s_int` under `prefix`, with their values.
    pub fn region(&self, prefix: &str) -> BTreeMap<&str, &Value> {
        self.s_int
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, v)| (k.as_str(), v))
            .collect()
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

pub fn project_ext(state: &InstitutionState) -> ExternalProjection {
    state.boundary.clone()
}

/// Projected commit: the external projection changed across the transition.
pub fn commit_pi(
    act: &ActionId,
    s: &InstitutionState,
    s2: &InstitutionState,
) -> Result<bool, StateError> {
    if act.0.is_empty() {
        return Err(StateError::Unlabeled);
    }
    Ok(project_ext(s) != project_ext(s2))
}

/// Ontological first-order commit: `s_ext` changed across the transition.
pub fn commit_ext(
    act: &ActionId,
    s: &InstitutionState,
    s2: &InstitutionState,
) -> Result<bool, StateError> {
    if act.0.is_empty() {
        return Err(StateError::Unlabeled);
    }
    Ok(s.s_ext != s2.s_ext)
}

/// Equality on internal, external, budget and topology components. Ledger
/// growth, the active profile and the step counter are not compared.
pub fn core_eq(s: &InstitutionState, s2: &InstitutionState) -> bool {
    s.s_int == s2.s_int && s.s_ext == s2.s_ext && s.budget == s2.budget && s.topology == s2.topology
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentFlags {
    pub policy_control: bool,
    pub stop_control: bool,
    pub witness_coverage: bool,
    pub membrane_mediated_access: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Placement {
    Inside,
    BoundaryCoupled,
    External,
}

pub fn classify_component(flags: ComponentFlags) -> Placement {
    let inside = flags.policy_control && flags.stop_control && flags.witness_coverage;
    if inside {
        Placement::Inside
    } else if flags.membrane_mediated_access {
        Placement::BoundaryCoupled
    } else {
        Placement::External
    }
}

/// Declarative change to the core components of an institution state.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateDelta {
    pub set_int: Store,
    pub remove_int: BTreeSet<String>,
    pub set_ext: Store,
    pub remove_ext: BTreeSet<String>,
    pub budget: i64,
    pub add_population: BTreeSet<String>,
    pub add_vertices: BTreeSet<String>,
    pub remove_vertices: BTreeSet<String>,
    pub add_edges: BTreeSet<(String, String)>,
    pub remove_edges: BTreeSet<(String, String)>,
    pub outbox: Vec<String>,
    pub commit: Vec<String>,
    pub world_obs: Store,
}

impl StateDelta {
    pub fn is_empty(&self) -> bool {
        *self == StateDelta::default()
    }

    /// Applies the delta, stamping appended boundary messages with the
    /// current step. Does not advance `step`.
    pub fn apply(
        &self,
        s: &InstitutionState,
        allow_self_loops: bool,
    ) -> Result<InstitutionState, StateError> {
        let mut out = s.clone();
        for k in &self.remove_int {
            out.s_int.remove(k);
        }
        out.s_int.extend(self.set_int.iter().map(|(k, v)| (k.clone(), v.clone())));
        for k in &self.remove_ext {
            out.s_ext.remove(k);
        }
        out.s_ext.extend(self.set_ext.iter().map(|(k, v)| (k.clone(), v.clone())));

        let budget = i128::from(s.budget) + i128::from(self.budget);
        out.budget = u64::try_from(budget).map_err(|_| StateError::BudgetUnderflow {
            have: s.budget,
            delta: self.budget,
        })?;

        let topo = &mut out.topology;
        topo.population.extend(self.add_population.iter().cloned());
        for v in &self.remove_vertices {
            topo.vertices.remove(v);
            topo.edges.retain(|(a, b)| a != v && b != v);
        }
        topo.vertices.extend(self.add_vertices.iter().cloned());
        for e in &self.remove_edges {
            topo.edges.remove(e);
        }
        topo.edges.extend(self.add_edges.iter().cloned());
        topo.validate(allow_self_loops)?;

        let stamp = |body: &String| BoundaryMessage { step: s.step, body: body.clone() };
        out.boundary.outbox.extend(self.outbox.iter().map(stamp));
        out.boundary.commit_ledger.extend(self.commit.iter().map(stamp));
        out.boundary
            .world_obs
            .extend(self.world_obs.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(out)
    }
}
