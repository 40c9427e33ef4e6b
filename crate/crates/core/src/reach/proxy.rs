//! Capability-graph surrogate and the normalized expansion diagnostic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::risk::RiskModel;
use super::ReachError;
use crate::profile::ApproximationProfile;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapVertex {
    pub class: String,
    /// Trust attenuation in `[0, 1]`.
    pub chi: Rational,
    /// Remaining validity in `[0, 1]`.
    pub nu: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapabilityGraph {
    pub vertices: BTreeMap<String, CapVertex>,
    pub edges: BTreeSet<(String, String)>,
    pub roots: BTreeSet<String>,
}

impl CapabilityGraph {
    pub fn validate(&self, risk: &RiskModel) -> Result<(), ReachError> {
        let unit = |r: &Rational| !r.is_negative() && *r <= Rational::one();
        for (id, v) in &self.vertices {
            if !unit(&v.chi) || !unit(&v.nu) {
                return Err(ReachError::Graph(format!("vertex {id:?}: chi and nu must lie in [0,1]")));
            }
            if risk.rank(&v.class).is_none() {
                return Err(ReachError::Graph(format!("vertex {id:?}: undeclared class {:?}", v.class)));
            }
        }
        if let Some(r) = self.roots.iter().find(|r| !self.vertices.contains_key(*r)) {
            return Err(ReachError::Graph(format!("root {r:?} is not a vertex")));
        }
        if let Some((a, b)) = self
            .edges
            .iter()
            .find(|(a, b)| !self.vertices.contains_key(a) || !self.vertices.contains_key(b))
        {
            return Err(ReachError::Graph(format!("edge {a:?} -> {b:?} references a missing vertex")));
        }
        Ok(())
    }

    /// Vertices within `h_cap` directed hops of the roots (roots at hop 0).
    pub fn reach(&self, h_cap: usize) -> BTreeSet<&str> {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &self.edges {
            adj.entry(a).or_default().push(b);
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut queue: VecDeque<(&str, usize)> = VecDeque::new();
        for r in &self.roots {
            if seen.insert(r) {
                queue.push_back((r, 0));
            }
        }
        while let Some((v, d)) = queue.pop_front() {
            if d == h_cap {
                continue;
            }
            for &next in adj.get(v).map(Vec::as_slice).unwrap_or_default() {
                if seen.insert(next) {
                    queue.push_back((next, d + 1));
                }
            }
        }
        seen
    }
}

/// `Σ_{v ∈ Reach^cap} w_class(r_v)·χ_v·ν_v`. Diagnostic only.
pub fn proxy_reach_measure(g: &CapabilityGraph, h_cap: usize, risk: &RiskModel) -> Result<Rational, ReachError> {
    g.reach(h_cap)
        .into_iter()
        .map(|id| {
            let v = &g.vertices[id];
            Ok(&(&risk.w_class(&v.class)? * &v.chi) * &v.nu)
        })
        .sum()
}

/// `(μ_after − μ_before) / max(1, μ_before)`, both under the same profile.
pub fn delta_expand(mu_before: &Rational, mu_after: &Rational) -> Rational {
    let denom = mu_before.clone().max(Rational::one());
    &(mu_after - mu_before) / &denom
}

pub fn expansion_flag(delta: &Rational, approx: &ApproximationProfile) -> bool {
    *delta > approx.epsilon_expand_norm
}
