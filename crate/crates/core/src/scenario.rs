//! Scenario files: every declared profile, policy and automaton for one run.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelDecl, ChannelRegistry};
use crate::membrane::{Policy, PolicyRegistry};
use crate::profile::{AdmissibilityProfile, ApproximationProfile, PolicyUpdate};
use crate::reach::{Automaton, CapabilityGraph, Normalization, RiskModel, TraceEncoding};
use crate::state::{InstitutionState, Store, TopologyGraph};
use crate::tags::StructuralRegions;

pub const SCENARIO_SCHEMA: &str = "boundary-scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InjectionKind {
    Bypass,
    SplitPhase,
    LedgerTamper,
}

impl InjectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InjectionKind::Bypass => "BYPASS",
            InjectionKind::SplitPhase => "SPLIT_PHASE",
            InjectionKind::LedgerTamper => "LEDGER_TAMPER",
        }
    }
}

impl std::str::FromStr for InjectionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "BYPASS" => Ok(InjectionKind::Bypass),
            "SPLIT_PHASE" => Ok(InjectionKind::SplitPhase),
            "LEDGER_TAMPER" => Ok(InjectionKind::LedgerTamper),
            _ => Err(format!("unknown injection kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub kind: InjectionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStrategy {
    /// First admissible action in declaration order.
    #[default]
    First,
    /// Uniform over admissible actions, from the seeded generator.
    Random,
    /// Follow `run.schedule`; the run ends when the schedule does.
    Schedule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: usize,
    pub strategy: RunStrategy,
    pub schedule: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { horizon: 20, strategy: RunStrategy::First, schedule: Vec::new() }
    }
}

/// An exogenous realization delivered at the start of `step`. Each one fires
/// a hook; `task` controls whether the hook inserts an external task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogenousEvent {
    pub step: u64,
    pub id: String,
    #[serde(default)]
    pub inbox: Option<String>,
    #[serde(default)]
    pub world_obs: Store,
    #[serde(default = "yes")]
    pub task: bool,
}

fn yes() -> bool {
    true
}

/// Declared external-task causation assumptions. Endogenous insertion is always
/// disallowed once declared; the exogenous flow may additionally be frozen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropAAssumptions {
    pub exogenous_frozen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemClass {
    pub ocp: bool,
    pub core: bool,
    pub autonomous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFlags {
    /// Declares that the external projection reflects every `s_ext` change.
    pub sc6_faithful: bool,
    pub prop_a: Option<PropAAssumptions>,
    /// Permits topology self-loops (self-delegation).
    pub self_delegation: bool,
    pub system_class: SystemClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub s_int: Store,
    pub s_ext: Store,
    pub budget: u64,
    pub topology: TopologyGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub channels: Vec<ChannelDecl>,
    pub risk: RiskModel,
    #[serde(default)]
    pub normalization: Option<Normalization>,
    pub regions: StructuralRegions,
    pub policies: Vec<Policy>,
    pub profiles: Vec<AdmissibilityProfile>,
    pub initial_profile: String,
    pub approximation: ApproximationProfile,
    pub automaton: Automaton,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub flags: ScenarioFlags,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub exogenous: Vec<ExogenousEvent>,
    #[serde(default)]
    pub capability_graph: Option<CapabilityGraph>,
    #[serde(default)]
    pub injection: Option<Injection>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

fn invalid(path: impl Into<String>, reason: impl ToString) -> ScenarioError {
    ScenarioError::Invalid { path: path.into(), reason: reason.to_string() }
}

/// Validated runtime view of a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioEnv {
    pub encoding: TraceEncoding,
    pub policies: PolicyRegistry,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::Parse { path, message: e.into_inner().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Scenario::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    pub fn profile(&self, id: &str) -> Option<&AdmissibilityProfile> {
        self.profiles.iter().find(|p| p.id == id)
    }

    pub fn initial_state(&self) -> InstitutionState {
        let mut s = InstitutionState::empty(self.initial_profile.clone());
        s.s_int = self.initial_state.s_int.clone();
        s.s_ext = self.initial_state.s_ext.clone();
        s.budget = self.initial_state.budget;
        s.topology = self.initial_state.topology.clone();
        s
    }

    /// Checks every load-time invariant; errors name the offending field.
    pub fn validate(&self) -> Result<ScenarioEnv, ScenarioError> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(invalid("schema", format!("expected {SCENARIO_SCHEMA:?}, found {:?}", self.schema)));
        }
        let registry = ChannelRegistry::new(&self.channels).map_err(|e| invalid("channels", e))?;
        self.risk.validate().map_err(|e| invalid("risk", e))?;
        for (node, n) in &self.automaton.nodes {
            for (i, a) in n.actions.iter().enumerate() {
                if let Some(ch) = &a.channel {
                    if !self.risk.labeling.contains_key(ch) {
                        let path = format!("automaton.nodes.{node}.actions[{i}].channel");
                        return Err(invalid(path, format!("channel {ch:?} has no risk label")));
                    }
                }
            }
        }
        let encoding =
            TraceEncoding::new(registry.clone(), &self.risk, self.normalization.clone()).map_err(|e| invalid("normalization", e))?;

        if self.regions.caps.is_empty() || self.regions.tools.is_empty() {
            return Err(invalid("regions", "caps and tools prefixes must be non-empty"));
        }

        let mut versions = BTreeSet::new();
        for (i, p) in self.policies.iter().enumerate() {
            if !versions.insert(p.version.clone()) {
                return Err(invalid(format!("policies[{i}].version"), format!("duplicate version {:?}", p.version)));
            }
            for (j, r) in p.rules.iter().enumerate() {
                let path = format!("policies[{i}].rules[{j}]");
                let pat = r.channel.as_str();
                if pat != "*" && pat != "internal" && !registry.contains(pat) && pat.parse::<crate::channel::CanonicalChannel>().is_err() {
                    return Err(invalid(format!("{path}.channel"), format!("unknown channel pattern {pat:?}")));
                }
                if let Some(c) = &r.max_class {
                    if self.risk.rank(c).is_none() {
                        return Err(invalid(format!("{path}.max_class"), format!("undeclared class {c:?}")));
                    }
                }
            }
        }

        let mut ids = BTreeSet::new();
        for (i, p) in self.profiles.iter().enumerate() {
            let path = format!("profiles[{i}]");
            p.validate().map_err(|e| invalid(&path, e))?;
            if !ids.insert(p.id.as_str()) {
                return Err(invalid(format!("{path}.id"), format!("duplicate profile {:?}", p.id)));
            }
            if !versions.contains(&p.policy_version) {
                return Err(invalid(format!("{path}.policy_version"), format!("no policy {:?}", p.policy_version)));
            }
        }
        if self.profile(&self.initial_profile).is_none() {
            return Err(invalid("initial_profile", format!("no profile {:?}", self.initial_profile)));
        }
        self.approximation.validate().map_err(|e| invalid("approximation", e))?;

        self.automaton.validate(&registry, &versions).map_err(|e| match e {
            crate::reach::ReachError::Invalid { path, reason } => invalid(format!("automaton.{path}"), reason),
            other => invalid("automaton", other),
        })?;
        for (node, n) in &self.automaton.nodes {
            for (i, a) in n.actions.iter().enumerate() {
                if let Some(p) = &a.switch_profile {
                    if self.profile(p).is_none() {
                        return Err(invalid(format!("automaton.nodes.{node}.actions[{i}].switch_profile"), format!("no profile {p:?}")));
                    }
                }
            }
        }

        self.initial_state
            .topology
            .validate(self.flags.self_delegation)
            .map_err(|e| invalid("initial_state.topology", e))?;

        if self.run.horizon == 0 {
            return Err(invalid("run.horizon", "must be at least 1"));
        }
        for (i, e) in self.exogenous.iter().enumerate() {
            if e.id.is_empty() {
                return Err(invalid(format!("exogenous[{i}].id"), "must be non-empty"));
            }
        }
        if let Some(g) = &self.capability_graph {
            g.validate(&self.risk).map_err(|e| invalid("capability_graph", e))?;
        }

        let policies = PolicyRegistry::new(self.policies.iter().cloned(), self.risk.clone());
        Ok(ScenarioEnv { encoding, policies })
    }

    /// Returns the variant with `kind` injected; the variant is non-compliant.
    pub fn inject(&self, kind: InjectionKind) -> Scenario {
        let mut out = self.clone();
        out.name = format!("{}+{}", self.name, kind.as_str().to_ascii_lowercase());
        out.injection = Some(Injection { kind });
        out
    }

    pub fn is_compliant(&self) -> bool {
        self.injection.is_none()
    }

    /// Structural consistency of the declared system-class flags. Returns
    /// human-readable findings; empty when consistent.
    pub fn system_class_findings(&self) -> Vec<String> {
        let c = self.flags.system_class;
        let actions: Vec<_> = self.automaton.nodes.values().flat_map(|n| &n.actions).collect();
        let mut out = Vec::new();
        if c.core && !c.ocp {
            out.push("core declared without ocp".to_string());
        }
        if c.autonomous && !c.core {
            out.push("autonomous declared without core".to_string());
        }
        if c.ocp && !actions.iter().any(|a| a.channel.is_some() || !a.delta.set_ext.is_empty() || !a.delta.remove_ext.is_empty()) {
            out.push("ocp declared but no action can produce an external effect".to_string());
        }
        if c.ocp && self.run.horizon < 2 {
            out.push("ocp declared but the run cannot iterate".to_string());
        }
        if c.core && self.policies.is_empty() {
            out.push("core declared without a policy-mediated boundary".to_string());
        }
        if c.autonomous {
            let (caps, tools) = (&self.regions.caps, &self.regions.tools);
            let structural = |k: &String| k.starts_with(caps.as_str()) || k.starts_with(tools.as_str());
            let amplifier = actions.iter().any(|a| {
                let d = &a.delta;
                a.switch_profile.is_some()
                    || a.insert_task.is_some()
                    || !d.add_vertices.is_empty()
                    || !d.add_edges.is_empty()
                    || !d.add_population.is_empty()
                    || d.set_int.keys().any(structural)
            });
            if !amplifier {
                out.push("autonomous declared but no action is an autonomy amplifier".to_string());
            }
        }
        out
    }

    /// Profiles whose policy can never be left, for FIXED-update checks.
    pub fn fixed_profiles(&self) -> BTreeSet<&str> {
        self.profiles.iter().filter(|p| p.u_policy == PolicyUpdate::Fixed).map(|p| p.id.as_str()).collect()
    }
}
