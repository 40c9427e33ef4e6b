use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::encoding::Symbol;
use super::ReachError;
use crate::rational::Rational;

/// Risk classes, the channel labeling map, and class weights.
///
/// Step weights are derived from class weights: `w_step((c, r)) = w_class(r)`
/// and `w_step(∅) = 0`, so the two maps agree on every class by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskModel {
    /// Ordered from lowest to highest risk.
    pub classes: Vec<String>,
    /// Channel id → risk class.
    pub labeling: BTreeMap<String, String>,
    pub class_weights: BTreeMap<String, Rational>,
}

impl RiskModel {
    pub fn validate(&self) -> Result<(), ReachError> {
        if self.classes.is_empty() {
            return Err(ReachError::Risk("no risk classes declared".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].contains(c) {
                return Err(ReachError::Risk(format!("risk class {c:?} declared twice")));
            }
        }
        for (ch, class) in &self.labeling {
            if !self.classes.contains(class) {
                return Err(ReachError::Risk(format!(
                    "channel {ch:?} labeled with undeclared class {class:?}"
                )));
            }
        }
        let mut prev: Option<&Rational> = None;
        for c in &self.classes {
            let w = self
                .class_weights
                .get(c)
                .ok_or_else(|| ReachError::Risk(format!("no weight for class {c:?}")))?;
            if w.is_negative() {
                return Err(ReachError::Risk(format!("negative weight for class {c:?}")));
            }
            if prev.is_some_and(|p| w < p) {
                return Err(ReachError::Risk(format!(
                    "weights must be monotone in class order; {c:?} decreases"
                )));
            }
            prev = Some(w);
        }
        if let Some(extra) = self.class_weights.keys().find(|k| !self.classes.contains(k)) {
            return Err(ReachError::Risk(format!("weight for undeclared class {extra:?}")));
        }
        Ok(())
    }

    pub fn rank(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    pub fn label(&self, channel: &str) -> Result<&str, ReachError> {
        self.labeling
            .get(channel)
            .map(String::as_str)
            .ok_or_else(|| ReachError::Risk(format!("channel {channel:?} has no risk label")))
    }

    pub fn w_class(&self, class: &str) -> Result<Rational, ReachError> {
        self.class_weights
            .get(class)
            .cloned()
            .ok_or_else(|| ReachError::Risk(format!("unknown risk class {class:?}")))
    }

    pub fn w_step(&self, event: Option<&Symbol>) -> Result<Rational, ReachError> {
        match event {
            None => Ok(Rational::zero()),
            Some(sym) => self.w_class(&sym.class),
        }
    }
}
