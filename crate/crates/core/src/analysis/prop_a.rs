//! External-task causation: `t_ext` may only grow at steps with a projected
//! commit, an authorized stimulated act, or an exogenous hook.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::membrane::RunLog;
use crate::state::Provenance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionBreach {
    pub step: u64,
    /// Number of the violated assumption, 1 to 6.
    pub assumption: u8,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropAReport {
    /// The log declares the assumption set.
    pub applicable: bool,
    pub growth_steps: Vec<u64>,
    /// Growth steps with no projected commit, stimulated act or hook.
    pub unexplained: Vec<u64>,
    pub breaches: Vec<AssumptionBreach>,
    pub pass: bool,
}

impl PropAReport {
    pub fn breached(&self) -> BTreeSet<u8> {
        self.breaches.iter().map(|b| b.assumption).collect()
    }
}

pub fn check_prop_a(log: &RunLog) -> PropAReport {
    let declared = log.header.prop_a;
    let frozen = declared.is_some_and(|a| a.exogenous_frozen);
    let mut growth_steps = Vec::new();
    let mut unexplained = Vec::new();
    let mut breaches = Vec::new();
    let mut breach = |step: u64, assumption: u8, detail: String| {
        breaches.push(AssumptionBreach { step, assumption, detail });
    };

    let mut prev_len = 0u64;
    let mut prev_commit = false;
    for r in &log.records {
        let hooked: BTreeSet<&str> = r.hooks.iter().map(String::as_str).collect();
        if !r.hooks.is_empty() && r.exogenous.is_empty() && !prev_commit {
            breach(r.step, 2, "hook fired on unchanged projection and exogenous input".into());
        }
        if frozen && !r.exogenous.is_empty() {
            breach(r.step, 3, format!("exogenous realization {:?} on a frozen interval", r.exogenous));
        }

        if r.t_ext_len > prev_len {
            growth_steps.push(r.step);
            if !(r.commit_pi || r.stimulated || !r.hooks.is_empty()) {
                unexplained.push(r.step);
            }
            if r.inserted.is_empty() {
                breach(r.step, 4, "t_ext grew with no attributed insertion".into());
            }
        }
        for task in &r.inserted {
            match task.provenance {
                Provenance::Endogenous => {
                    breach(r.step, 5, format!("endogenous insertion of {:?} by {:?}", task.id, task.trigger));
                }
                Provenance::Stimulated if !r.stimulated => {
                    breach(r.step, 4, format!("{:?} inserted without an authorized stimulated act", task.id));
                }
                Provenance::Stimulated if !r.commit_pi => {
                    breach(r.step, 6, format!("stimulated act {:?} did not change the projection", r.act));
                }
                Provenance::Exogenous if !hooked.contains(task.trigger.as_str()) => {
                    breach(r.step, 4, format!("{:?} claims an exogenous trigger with no hook", task.id));
                }
                _ => {}
            }
        }
        prev_len = r.t_ext_len;
        prev_commit = r.commit_pi;
    }

    let pass = unexplained.is_empty() && breaches.is_empty();
    PropAReport { applicable: declared.is_some(), growth_steps, unexplained, breaches, pass }
}
