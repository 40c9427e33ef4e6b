//! Membrane policies and the adjudication function.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::CanonicalChannel;
use crate::reach::RiskModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Allow,
    Reject,
    Quarantine,
}

impl Decision {
    pub fn code(self) -> u8 {
        match self {
            Decision::Allow => 1,
            Decision::Reject => 2,
            Decision::Quarantine => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Decision::Allow),
            2 => Some(Decision::Reject),
            3 => Some(Decision::Quarantine),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Allow => "ALLOW",
            Decision::Reject => "REJECT",
            Decision::Quarantine => "QUARANTINE",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declared context abstraction presented to the membrane. Its digest is the
/// `ctx_abs` bound into witnesses; the decision is a function of this value
/// and the policy version alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextAbstraction {
    pub channel: Option<String>,
    pub canonical: Option<CanonicalChannel>,
    pub risk_class: Option<String>,
    pub payload: String,
    /// Capability keys held at request time, sorted.
    pub caps: Vec<String>,
    pub budget: u64,
    pub policy_version: String,
}

fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(bytes);
}

fn put_opt(out: &mut Vec<u8>, s: Option<&str>) {
    match s {
        None => out.push(0),
        Some(s) => {
            out.push(1);
            put_bytes(out, s.as_bytes());
        }
    }
}

impl ContextAbstraction {
    /// Canonical byte serialization: fixed field order, big-endian lengths.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_opt(&mut out, self.channel.as_deref());
        put_opt(&mut out, self.canonical.map(CanonicalChannel::as_str));
        put_opt(&mut out, self.risk_class.as_deref());
        put_bytes(&mut out, self.payload.as_bytes());
        let mut caps = self.caps.clone();
        caps.sort();
        out.extend_from_slice(&(caps.len() as u32).to_be_bytes());
        for c in &caps {
            put_bytes(&mut out, c.as_bytes());
        }
        out.extend_from_slice(&self.budget.to_be_bytes());
        put_bytes(&mut out, self.policy_version.as_bytes());
        out
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes()).into()
    }
}

/// Channel selector for a rule: `*` matches every event including internal
/// ones, `internal` matches events without a channel, anything else matches a
/// channel id or its canonical parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub channel: String,
    #[serde(default)]
    pub max_class: Option<String>,
    /// Decision when the channel matches but the event class exceeds
    /// `max_class`. Without it the rule simply does not match.
    #[serde(default)]
    pub on_exceed: Option<Decision>,
    #[serde(default)]
    pub requires: BTreeSet<String>,
    #[serde(default)]
    pub budget_floor: u64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    pub version: String,
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default = "fail_closed")]
    pub default: Decision,
}

fn fail_closed() -> Decision {
    Decision::Reject
}

impl Rule {
    fn channel_matches(&self, ctx: &ContextAbstraction) -> bool {
        match self.channel.as_str() {
            "*" => true,
            "internal" => ctx.channel.is_none(),
            pat => {
                ctx.channel.as_deref() == Some(pat) || ctx.canonical.map(CanonicalChannel::as_str) == Some(pat)
            }
        }
    }

    fn evaluate(&self, ctx: &ContextAbstraction, ranks: &BTreeMap<String, usize>) -> Option<Decision> {
        if !self.channel_matches(ctx) {
            return None;
        }
        if ctx.budget < self.budget_floor || !self.requires.iter().all(|c| ctx.caps.contains(c)) {
            return None;
        }
        if let (Some(max), Some(class)) = (&self.max_class, &ctx.risk_class) {
            let exceeds = match (ranks.get(class), ranks.get(max)) {
                (Some(c), Some(m)) => c > m,
                // Unranked classes are treated as exceeding any limit.
                _ => true,
            };
            if exceeds {
                return self.on_exceed;
            }
        }
        Some(self.decision)
    }
}

/// First-match rule evaluation; no match yields the policy default.
pub fn adjudicate(ctx: &ContextAbstraction, policy: &Policy, risk: &RiskModel) -> Decision {
    let ranks: BTreeMap<String, usize> =
        risk.classes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    policy.rules.iter().find_map(|r| r.evaluate(ctx, &ranks)).unwrap_or(policy.default)
}

/// Policies by version, with the risk ordering they are evaluated against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRegistry {
    policies: BTreeMap<String, Policy>,
    risk: RiskModel,
}

impl PolicyRegistry {
    pub fn new(policies: impl IntoIterator<Item = Policy>, risk: RiskModel) -> Self {
        PolicyRegistry { policies: policies.into_iter().map(|p| (p.version.clone(), p)).collect(), risk }
    }

    pub fn get(&self, version: &str) -> Option<&Policy> {
        self.policies.get(version)
    }

    pub fn versions(&self) -> impl Iterator<Item = &str> {
        self.policies.keys().map(String::as_str)
    }

    pub fn risk(&self) -> &RiskModel {
        &self.risk
    }

    /// Replaces the rules registered under `version`.
    pub fn rebind(&mut self, version: &str, mut policy: Policy) {
        policy.version = version.to_string();
        self.policies.insert(version.to_string(), policy);
    }

    /// `None` when the version is not registered.
    pub fn adjudicate(&self, ctx: &ContextAbstraction) -> Option<Decision> {
        self.policies.get(&ctx.policy_version).map(|p| adjudicate(ctx, p, &self.risk))
    }
}
