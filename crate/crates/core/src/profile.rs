//! Admissibility and approximation profiles governing every reach claim.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PolicyUpdate {
    Fixed,
    Versioned,
}

/// Bounded-memory strategy class. A strategy is a total table from
/// `(node, last ≤ memory_bound visited nodes)` to an admissible action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyClassSpec {
    pub memory_bound: usize,
    #[serde(default = "default_true")]
    pub deterministic: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilityProfile {
    pub id: String,
    pub policy_version: String,
    pub strategy_class: StrategyClassSpec,
    pub horizon: usize,
    pub u_policy: PolicyUpdate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximationProfile {
    /// Strategy-complexity bound.
    #[serde(rename = "L")]
    pub l: usize,
    pub delta_mu: Rational,
    pub epsilon_expand_norm: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("profile {0:?}: horizon must be at least 1")]
    ZeroHorizon(String),
    #[error("delta_mu must be non-negative, got {0}")]
    NegativeDeltaMu(Rational),
    #[error("epsilon_expand_norm must be positive, got {0}")]
    NonPositiveEpsilon(Rational),
}

impl AdmissibilityProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.horizon == 0 {
            return Err(ProfileError::ZeroHorizon(self.id.clone()));
        }
        Ok(())
    }

    /// Copy of this profile with the memory bound capped at `l`.
    pub fn restricted_to(&self, l: usize) -> AdmissibilityProfile {
        let mut p = self.clone();
        p.strategy_class.memory_bound = p.strategy_class.memory_bound.min(l);
        p
    }
}

impl ApproximationProfile {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.delta_mu.is_negative() {
            return Err(ProfileError::NegativeDeltaMu(self.delta_mu.clone()));
        }
        if !self.epsilon_expand_norm.is_positive() {
            return Err(ProfileError::NonPositiveEpsilon(self.epsilon_expand_norm.clone()));
        }
        Ok(())
    }
}
