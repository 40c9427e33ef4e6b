//! Governability audit over a completed run: non-bypass, atomic anchoring,
//! replay, chain integrity and projection faithfulness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{replay, verify_chain, VerificationReport, WitnessRecord};
use crate::membrane::{PolicyRegistry, RunLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Law {
    /// Witness completeness and binding.
    #[serde(rename = "P-1")]
    P1,
    /// Non-bypass.
    #[serde(rename = "P-1a")]
    P1a,
    /// Anchor before effect.
    #[serde(rename = "P-1b")]
    P1b,
    /// Replay reproduces the decision.
    #[serde(rename = "P-1c")]
    P1c,
    /// Ledger chain integrity.
    #[serde(rename = "SC4")]
    Sc4,
    /// Projection faithfulness: commit_ext implies commit_pi.
    #[serde(rename = "SC6")]
    Sc6,
}

impl Law {
    pub fn as_str(self) -> &'static str {
        match self {
            Law::P1 => "P-1",
            Law::P1a => "P-1a",
            Law::P1b => "P-1b",
            Law::P1c => "P-1c",
            Law::Sc4 => "SC4",
            Law::Sc6 => "SC6",
        }
    }

    /// Whether a finding under this law defeats strong governability.
    pub fn is_governance_law(self) -> bool {
        !matches!(self, Law::Sc6)
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub law: Law,
    pub step: Option<u64>,
    pub seq: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    StronglyGovernable,
    NotGovernable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::StronglyGovernable => "STRONGLY_GOVERNABLE",
            Verdict::NotGovernable => "NOT_GOVERNABLE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
    pub chain: VerificationReport,
    pub records: u64,
    pub witnesses: u64,
    pub replayed: u64,
}

impl AuditReport {
    pub fn laws(&self) -> BTreeSet<Law> {
        self.findings.iter().map(|f| f.law).collect()
    }

    pub fn of(&self, law: Law) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.law == law)
    }

    /// Findings grouped as law → step indices.
    pub fn by_law(&self) -> BTreeMap<Law, Vec<Option<u64>>> {
        let mut out: BTreeMap<Law, Vec<Option<u64>>> = BTreeMap::new();
        for f in &self.findings {
            out.entry(f.law).or_default().push(f.step);
        }
        out
    }

    pub fn has_violations(&self) -> bool {
        self.verdict == Verdict::NotGovernable || !self.findings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("corrupt run log at record {index}: {reason}")]
pub struct AuditError {
    pub index: usize,
    pub reason: String,
}

fn finding(law: Law, step: Option<u64>, seq: Option<u64>, detail: impl Into<String>) -> Finding {
    Finding { law, step, seq, detail: detail.into() }
}

pub fn audit_governability(
    log: &RunLog,
    ledger: &[WitnessRecord],
    policies: &PolicyRegistry,
) -> Result<AuditReport, AuditError> {
    let mut findings = Vec::new();

    // Shape checks first: a log that breaks them is not auditable.
    let mut anchored_at: BTreeMap<u64, usize> = BTreeMap::new();
    let mut last_t_ext = 0u64;
    for (i, r) in log.records.iter().enumerate() {
        if i > 0 && r.step <= log.records[i - 1].step {
            return Err(AuditError { index: i, reason: format!("step {} does not increase", r.step) });
        }
        if r.t_ext_len < last_t_ext {
            return Err(AuditError { index: i, reason: "t_ext length decreased".into() });
        }
        last_t_ext = r.t_ext_len;
        for &seq in &r.anchored {
            if anchored_at.insert(seq, i).is_some() {
                return Err(AuditError { index: i, reason: format!("witness {seq} anchored twice") });
            }
        }
    }

    let chain = verify_chain(ledger);
    let first_bad = chain.first_bad_seq.unwrap_or(u64::MAX);
    let step_of = |seq: u64| anchored_at.get(&seq).map(|&i| log.records[i].step);
    if let Some(bad) = chain.first_bad_seq {
        findings.push(finding(Law::Sc4, step_of(bad), Some(bad), format!("hash chain breaks at seq {bad}")));
    }
    for (&seq, &i) in &anchored_at {
        if seq >= ledger.len() as u64 {
            let step = log.records[i].step;
            findings.push(finding(Law::P1, Some(step), Some(seq), "anchored witness missing from ledger"));
        }
    }

    let mut bound: BTreeMap<u64, u64> = BTreeMap::new();
    for (i, r) in log.records.iter().enumerate() {
        let effectful = !r.tags.is_empty();
        if effectful && !r.mediated {
            findings.push(finding(Law::P1a, Some(r.step), None, format!("{} carries {} outside the membrane", r.act, r.tags)));
            continue;
        }
        if !r.mediated {
            continue;
        }
        let Some(seq) = r.witness_seq else {
            findings.push(finding(Law::P1, Some(r.step), None, format!("mediated {} has no witness", r.act)));
            continue;
        };
        if let Some(prev) = bound.insert(seq, r.step) {
            findings.push(finding(Law::P1, Some(r.step), Some(seq), format!("witness {seq} already bound at step {prev}")));
        }
        match anchored_at.get(&seq) {
            Some(&j) if j <= i => {}
            Some(&j) => findings.push(finding(
                Law::P1b,
                Some(r.step),
                Some(seq),
                format!("effect visible at step {} before its witness is anchored at step {}", r.step, log.records[j].step),
            )),
            None => findings.push(finding(Law::P1b, Some(r.step), Some(seq), format!("witness {seq} never anchored"))),
        }
        if seq < first_bad {
            if let Some(w) = ledger.get(seq as usize) {
                if w.act.as_str() != r.act || Some(w.decision) != r.decision || w.tag_set != r.tags {
                    findings.push(finding(Law::P1, Some(r.step), Some(seq), "witness does not bind this transition"));
                }
            }
        }
    }

    let mut replayed = 0;
    for w in ledger.iter().take_while(|w| w.seq < first_bad) {
        replayed += 1;
        if let Err(e) = replay(w, policies) {
            findings.push(finding(Law::P1c, step_of(w.seq), Some(w.seq), e.to_string()));
        }
    }

    if log.header.sc6_faithful {
        for r in log.records.iter().filter(|r| r.commit_ext && !r.commit_pi) {
            findings.push(finding(Law::Sc6, Some(r.step), None, format!("{} changed s_ext without a projected commit", r.act)));
        }
    }

    findings.sort_by_key(|f| (f.step, f.law));
    let verdict = if findings.iter().any(|f| f.law.is_governance_law()) {
        Verdict::NotGovernable
    } else {
        Verdict::StronglyGovernable
    };
    Ok(AuditReport {
        verdict,
        findings,
        chain,
        records: log.records.len() as u64,
        witnesses: ledger.len() as u64,
        replayed,
    })
}
