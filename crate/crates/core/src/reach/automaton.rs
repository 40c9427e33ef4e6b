use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ReachError;
use crate::channel::ChannelRegistry;
use crate::rational::Rational;
use crate::state::{Provenance, StateDelta};

/// Environment branch taken after an action: successor node with exact
/// probability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub p: Rational,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub id: String,
    /// Channel emitted by the action; `None` for internal actions.
    #[serde(default)]
    pub channel: Option<String>,
    /// Event payload presented to the membrane. Defaults to the action id.
    #[serde(default)]
    pub payload: Option<String>,
    /// Policy versions under which the action is admissible; `None` admits it
    /// under every version.
    #[serde(default)]
    pub admissible: Option<BTreeSet<String>>,
    #[serde(default)]
    pub delta: StateDelta,
    pub branches: Vec<Branch>,
    /// Explicitly authorized boundary self-stimulation.
    #[serde(default)]
    pub stimulated: bool,
    #[serde(default)]
    pub insert_task: Option<Provenance>,
    /// Marks a policy transition: switches the active admissibility profile.
    #[serde(default)]
    pub switch_profile: Option<String>,
}

impl ActionSpec {
    pub fn admits(&self, policy_version: &str) -> bool {
        self.admissible.as_ref().map_or(true, |set| set.contains(policy_version))
    }

    pub fn payload(&self) -> &str {
        self.payload.as_deref().unwrap_or(&self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Node {
    pub actions: Vec<ActionSpec>,
}

/// Finite labeled transition system driving both reach analysis and runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Automaton {
    pub initial: String,
    pub nodes: BTreeMap<String, Node>,
}

impl Automaton {
    pub fn node(&self, id: &str) -> Result<&Node, ReachError> {
        self.nodes.get(id).ok_or_else(|| ReachError::UnknownNode(id.to_string()))
    }

    pub fn action(&self, node: &str, act: &str) -> Result<&ActionSpec, ReachError> {
        self.node(node)?
            .actions
            .iter()
            .find(|a| a.id == act)
            .ok_or_else(|| ReachError::UnknownAction { node: node.to_string(), act: act.to_string() })
    }

    pub fn admissible<'a>(
        &'a self,
        node: &str,
        policy_version: &'a str,
    ) -> Result<impl Iterator<Item = &'a ActionSpec> + 'a, ReachError> {
        Ok(self.node(node)?.actions.iter().filter(move |a| a.admits(policy_version)))
    }

    /// Structural checks; `path` in the returned error is relative to the
    /// automaton (`nodes.n0.actions[1].branches`).
    pub fn validate(
        &self,
        channels: &ChannelRegistry,
        versions: &BTreeSet<String>,
    ) -> Result<(), ReachError> {
        let invalid = |path: String, reason: String| ReachError::Invalid { path, reason };
        if !self.nodes.contains_key(&self.initial) {
            return Err(invalid("initial".into(), format!("unknown node {:?}", self.initial)));
        }
        for (nid, node) in &self.nodes {
            let mut seen = BTreeSet::new();
            for (i, a) in node.actions.iter().enumerate() {
                let path = format!("nodes.{nid}.actions[{i}]");
                if a.id.is_empty() {
                    return Err(invalid(format!("{path}.id"), "empty action label".into()));
                }
                if !seen.insert(a.id.as_str()) {
                    return Err(invalid(format!("{path}.id"), format!("duplicate action {:?}", a.id)));
                }
                if let Some(ch) = &a.channel {
                    if !channels.contains(ch) {
                        return Err(invalid(format!("{path}.channel"), format!("undeclared channel {ch:?}")));
                    }
                }
                if let Some(adm) = &a.admissible {
                    if let Some(v) = adm.iter().find(|v| !versions.contains(*v)) {
                        return Err(invalid(
                            format!("{path}.admissible"),
                            format!("unregistered policy version {v:?}"),
                        ));
                    }
                }
                if a.branches.is_empty() {
                    return Err(invalid(format!("{path}.branches"), "no environment branches".into()));
                }
                let mut total = Rational::zero();
                for (j, b) in a.branches.iter().enumerate() {
                    if b.p.is_negative() {
                        return Err(invalid(format!("{path}.branches[{j}].p"), "negative probability".into()));
                    }
                    if !self.nodes.contains_key(&b.to) {
                        return Err(invalid(format!("{path}.branches[{j}].to"), format!("unknown node {:?}", b.to)));
                    }
                    total += &b.p;
                }
                if total != Rational::one() {
                    return Err(invalid(
                        format!("{path}.branches"),
                        format!("probabilities sum to {total}, expected exactly 1"),
                    ));
                }
            }
        }
        Ok(())
    }
}
