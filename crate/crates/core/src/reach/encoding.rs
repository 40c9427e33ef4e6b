//! Mapping of per-policy-version channel events onto trace symbols.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::risk::RiskModel;
use super::ReachError;
use crate::channel::ChannelRegistry;

/// One boundary event `(channel, risk class)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub channel: String,
    pub class: String,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.channel, self.class)
    }
}

/// Which symbol space a trace set lives in. Sets over different alphabets are
/// not comparable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alphabet {
    /// Canonical `C × R_class`, reached through a declared normalization.
    Canonical,
    /// Raw scenario channel ids as seen under one policy version.
    Raw { policy_version: String },
}

/// Declared normalization into the canonical alphabet. Any `(version,
/// channel)` pair without an explicit entry maps to `(canonical parent,
/// ℓ(channel))`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Normalization {
    pub per_version: BTreeMap<String, BTreeMap<String, Symbol>>,
}

#[derive(Debug, Clone)]
pub struct TraceEncoding {
    registry: ChannelRegistry,
    labeling: BTreeMap<String, String>,
    classes: Vec<String>,
    normalization: Option<Normalization>,
}

impl TraceEncoding {
    pub fn new(
        registry: ChannelRegistry,
        risk: &RiskModel,
        normalization: Option<Normalization>,
    ) -> Result<Self, ReachError> {
        if let Some(norm) = &normalization {
            for (version, table) in &norm.per_version {
                for (ch, sym) in table {
                    if !registry.contains(ch) {
                        return Err(ReachError::Encoding(format!(
                            "normalization for {version:?} names unknown channel {ch:?}"
                        )));
                    }
                    if sym.channel.parse::<crate::channel::CanonicalChannel>().is_err() {
                        return Err(ReachError::Encoding(format!(
                            "normalization target {:?} is not a canonical channel",
                            sym.channel
                        )));
                    }
                    if risk.rank(&sym.class).is_none() {
                        return Err(ReachError::Encoding(format!(
                            "normalization target class {:?} is undeclared",
                            sym.class
                        )));
                    }
                }
            }
        }
        Ok(Self {
            registry,
            labeling: risk.labeling.clone(),
            classes: risk.classes.clone(),
            normalization,
        })
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }

    pub fn alphabet(&self, policy_version: &str) -> Alphabet {
        if self.normalization.is_some() {
            Alphabet::Canonical
        } else {
            Alphabet::Raw { policy_version: policy_version.to_string() }
        }
    }

    pub fn registry(&self) -> &ChannelRegistry {
        &self.registry
    }

    /// Risk class `ℓ(channel)` before any normalization override.
    pub fn label(&self, channel: &str) -> Result<&str, ReachError> {
        let class = self
            .labeling
            .get(channel)
            .ok_or_else(|| ReachError::Encoding(format!("channel {channel:?} has no risk label")))?;
        debug_assert!(self.classes.contains(class));
        Ok(class)
    }

    pub fn encode(&self, policy_version: &str, channel: &str) -> Result<Symbol, ReachError> {
        let parent = self
            .registry
            .parent(channel)
            .map_err(|e| ReachError::Encoding(e.to_string()))?;
        match &self.normalization {
            None => Ok(Symbol { channel: channel.to_string(), class: self.label(channel)?.to_string() }),
            Some(norm) => {
                if let Some(sym) = norm.per_version.get(policy_version).and_then(|t| t.get(channel)) {
                    return Ok(sym.clone());
                }
                Ok(Symbol { channel: parent.as_str().to_string(), class: self.label(channel)?.to_string() })
            }
        }
    }
}
