//! Effect tags: FIRST, SECOND_T and SECOND_P.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reach::{ReachError, TraceSet};
use crate::state::{commit_ext, core_eq, ActionId, InstitutionState, StateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "FIRST")]
    First,
    #[serde(rename = "SECOND_T")]
    SecondT,
    #[serde(rename = "SECOND_P")]
    SecondP,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::First => "FIRST",
            Tag::SecondT => "SECOND_T",
            Tag::SecondP => "SECOND_P",
        }
    }

    /// Stable one-byte code used in witness hashing.
    pub fn code(self) -> u8 {
        match self {
            Tag::First => 1,
            Tag::SecondT => 2,
            Tag::SecondP => 4,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tags carried by one transition. Non-empty exactly when the transition is
/// an external effect.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSet(BTreeSet<Tag>);

impl TagSet {
    pub fn new() -> Self {
        TagSet::default()
    }

    pub fn from_tags(tags: impl IntoIterator<Item = Tag>) -> Self {
        TagSet(tags.into_iter().collect())
    }

    pub fn insert(&mut self, tag: Tag) {
        self.0.insert(tag);
    }

    pub fn contains(&self, tag: Tag) -> bool {
        self.0.contains(&tag)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Tag> + '_ {
        self.0.iter().copied()
    }

    pub fn bits(&self) -> u8 {
        self.0.iter().fold(0, |acc, t| acc | t.code())
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        if bits & !7 != 0 {
            return None;
        }
        Some(TagSet::from_tags(
            [Tag::First, Tag::SecondT, Tag::SecondP].into_iter().filter(|t| bits & t.code() != 0),
        ))
    }
}

impl fmt::Display for TagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self.0.iter().map(|t| t.as_str()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Scenario-declared key prefixes inside `s_int` that hold the capability
/// assignment and the tool/connector surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralRegions {
    pub caps: String,
    pub tools: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Reach(#[from] ReachError),
}

/// Over-approximate structural expansion: any change to caps, tools, topology
/// vertices or edges.
pub fn structural_expand(regions: &StructuralRegions, s: &InstitutionState, s2: &InstitutionState) -> bool {
    s.region(&regions.caps) != s2.region(&regions.caps)
        || s.region(&regions.tools) != s2.region(&regions.tools)
        || s.topology.vertices != s2.topology.vertices
        || s.topology.edges != s2.topology.edges
}

/// Core state unchanged and horizon-limited reach strictly grows.
pub fn policy_expand(
    s: &InstitutionState,
    s2: &InstitutionState,
    reach_before: &TraceSet,
    reach_after: &TraceSet,
) -> Result<bool, TagError> {
    let grows = reach_after.is_strict_superset_of(reach_before)?;
    Ok(core_eq(s, s2) && grows)
}

/// Reach sets before and after a witnessed policy transition.
#[derive(Debug, Clone, Copy)]
pub struct PolicyStep<'a> {
    pub reach_before: &'a TraceSet,
    pub reach_after: &'a TraceSet,
}

/// Computes the tag set of one transition. `policy_step` is `None` when no
/// policy transition happened at this step; SECOND_P is then false.
pub fn tag_set(
    act: &ActionId,
    s: &InstitutionState,
    s2: &InstitutionState,
    regions: &StructuralRegions,
    policy_step: Option<PolicyStep<'_>>,
) -> Result<TagSet, TagError> {
    let mut tags = TagSet::new();
    if commit_ext(act, s, s2)? {
        tags.insert(Tag::First);
    }
    if structural_expand(regions, s, s2) {
        tags.insert(Tag::SecondT);
    }
    if let Some(p) = policy_step {
        if policy_expand(s, s2, p.reach_before, p.reach_after)? {
            tags.insert(Tag::SecondP);
        }
    }
    Ok(tags)
}
