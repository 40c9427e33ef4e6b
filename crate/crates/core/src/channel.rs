//! Boundary channels: the eight canonical classes and scenario refinements.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalChannel {
    Net,
    FsShared,
    Exec,
    Money,
    Deploy,
    Comm,
    Spawn,
    Connect,
}

impl CanonicalChannel {
    pub const ALL: [CanonicalChannel; 8] = [
        CanonicalChannel::Net,
        CanonicalChannel::FsShared,
        CanonicalChannel::Exec,
        CanonicalChannel::Money,
        CanonicalChannel::Deploy,
        CanonicalChannel::Comm,
        CanonicalChannel::Spawn,
        CanonicalChannel::Connect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CanonicalChannel::Net => "net",
            CanonicalChannel::FsShared => "fs_shared",
            CanonicalChannel::Exec => "exec",
            CanonicalChannel::Money => "money",
            CanonicalChannel::Deploy => "deploy",
            CanonicalChannel::Comm => "comm",
            CanonicalChannel::Spawn => "spawn",
            CanonicalChannel::Connect => "connect",
        }
    }
}

impl fmt::Display for CanonicalChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CanonicalChannel {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CanonicalChannel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ChannelError::Unknown(s.to_string()))
    }
}

/// A scenario-declared channel refinement. `parent` is mandatory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDecl {
    pub id: String,
    pub parent: CanonicalChannel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("unknown channel {0:?}")]
    Unknown(String),
    #[error("channel {0:?} shadows a canonical channel")]
    ShadowsCanonical(String),
    #[error("channel {0:?} declared more than once")]
    Duplicate(String),
}

/// Resolves every channel id (canonical or refined) to its canonical parent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChannelRegistry {
    refinements: BTreeMap<String, CanonicalChannel>,
}

impl ChannelRegistry {
    pub fn new(decls: &[ChannelDecl]) -> Result<Self, ChannelError> {
        let mut refinements = BTreeMap::new();
        for decl in decls {
            if decl.id.parse::<CanonicalChannel>().is_ok() {
                return Err(ChannelError::ShadowsCanonical(decl.id.clone()));
            }
            if refinements.insert(decl.id.clone(), decl.parent).is_some() {
                return Err(ChannelError::Duplicate(decl.id.clone()));
            }
        }
        Ok(Self { refinements })
    }

    pub fn parent(&self, id: &str) -> Result<CanonicalChannel, ChannelError> {
        if let Ok(c) = id.parse::<CanonicalChannel>() {
            return Ok(c);
        }
        self.refinements
            .get(id)
            .copied()
            .ok_or_else(|| ChannelError::Unknown(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.parent(id).is_ok()
    }

    /// All known channel ids, canonical first.
    pub fn ids(&self) -> impl Iterator<Item = &str> + '_ {
        CanonicalChannel::ALL
            .iter()
            .map(|c| c.as_str())
            .chain(self.refinements.keys().map(String::as_str))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinements_resolve_to_parent() {
        let reg = ChannelRegistry::new(&[ChannelDecl {
            id: "stripe".into(),
            parent: CanonicalChannel::Money,
        }])
        .unwrap();
        assert_eq!(reg.parent("stripe").unwrap(), CanonicalChannel::Money);
        assert_eq!(reg.parent("exec").unwrap(), CanonicalChannel::Exec);
        assert!(reg.parent("smtp").is_err());
        assert_eq!(reg.ids().count(), 9);
    }

    #[test]
    fn unparented_refinement_fails_to_load() {
        let err = serde_json::from_str::<ChannelDecl>(r#"{"id":"stripe"}"#).unwrap_err();
        assert!(err.to_string().contains("parent"));
    }

    #[test]
    fn shadowing_and_duplicates_rejected() {
        let shadow = ChannelDecl { id: "net".into(), parent: CanonicalChannel::Comm };
        assert_eq!(
            ChannelRegistry::new(&[shadow]),
            Err(ChannelError::ShadowsCanonical("net".into()))
        );
        let d = ChannelDecl { id: "x".into(), parent: CanonicalChannel::Comm };
        assert_eq!(
            ChannelRegistry::new(&[d.clone(), d]),
            Err(ChannelError::Duplicate("x".into()))
        );
    }
}
