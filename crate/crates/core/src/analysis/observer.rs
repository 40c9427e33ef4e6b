//! Finite-bandwidth observer and the pigeonhole collision construction.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObserverError {
    #[error("invalid observer model: {0}")]
    Model(String),
    #[error("machine {machine:?}: {reason}")]
    Machine { machine: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverModel {
    pub sigma_b: Vec<String>,
    pub kappa: u32,
    /// Bandwidth in bits per step.
    #[serde(rename = "R")]
    pub r: Rational,
}

impl ObserverModel {
    pub fn new(sigma_b: Vec<String>, kappa: u32, r: Rational) -> Result<Self, ObserverError> {
        let m = ObserverModel { sigma_b, kappa, r };
        m.validate()?;
        Ok(m)
    }

    /// Enforces `R ≤ κ·log2|Σ_b|`, compared exactly as `2^p ≤ |Σ_b|^(κq)`
    /// for `R = p/q`.
    pub fn validate(&self) -> Result<(), ObserverError> {
        let unique: BTreeSet<_> = self.sigma_b.iter().collect();
        if self.sigma_b.is_empty() || unique.len() != self.sigma_b.len() {
            return Err(ObserverError::Model("sigma_b must be non-empty with distinct symbols".into()));
        }
        if self.kappa == 0 {
            return Err(ObserverError::Model("kappa must be at least 1".into()));
        }
        if self.r.is_negative() {
            return Err(ObserverError::Model("R must be non-negative".into()));
        }
        let big = self.r.as_big();
        let p = big.numer().to_biguint().expect("non-negative");
        let q = big.denom().to_biguint().expect("positive");
        let p: u32 = p.try_into().map_err(|_| ObserverError::Model("R too large".into()))?;
        let exp: u32 = (q * self.kappa)
            .try_into()
            .map_err(|_| ObserverError::Model("R denominator too large".into()))?;
        if BigUint::from(2u32).pow(p) > BigUint::from(self.sigma_b.len()).pow(exp) {
            return Err(ObserverError::Model(format!(
                "R = {} exceeds kappa*log2|sigma_b| = {}*log2({})",
                self.r,
                self.kappa,
                self.sigma_b.len()
            )));
        }
        Ok(())
    }

    /// Number of distinguishable boundary traces by step `t`: `|Σ_b|^(κt)`.
    pub fn trace_bound(&self, t: u32) -> BigUint {
        BigUint::from(self.sigma_b.len()).pow(self.kappa * t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterState {
    /// Exactly `κ` boundary symbols emitted in this state.
    pub emit: Vec<String>,
    pub next: String,
}

/// Deterministic hidden machine; emits once per step, then moves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emitter {
    pub id: String,
    pub initial: String,
    pub states: BTreeMap<String, EmitterState>,
}

pub type BoundaryTrace = Vec<Vec<String>>;

impl Emitter {
    pub fn trace(&self, model: &ObserverModel, t: u32) -> Result<BoundaryTrace, ObserverError> {
        let err = |reason: String| ObserverError::Machine { machine: self.id.clone(), reason };
        let mut state = &self.initial;
        let mut out = Vec::with_capacity(t as usize);
        for _ in 0..t {
            let s = self.states.get(state).ok_or_else(|| err(format!("unknown state {state:?}")))?;
            if s.emit.len() != model.kappa as usize {
                return Err(err(format!("state {state:?} emits {} symbols, expected {}", s.emit.len(), model.kappa)));
            }
            if let Some(sym) = s.emit.iter().find(|x| !model.sigma_b.contains(x)) {
                return Err(err(format!("symbol {sym:?} is not in sigma_b")));
            }
            out.push(s.emit.clone());
            state = &s.next;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub first: String,
    pub second: String,
    pub trace: BoundaryTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub t: u32,
    pub machines: usize,
    /// `|Σ_b|^(κt)`, decimal.
    pub trace_bound: String,
    /// `R·t`, the base-2 logarithm of the bandwidth bound.
    pub bandwidth_log2: Rational,
    /// More machines than distinguishable traces.
    pub guaranteed: bool,
    pub collision: Option<Collision>,
}

/// Emits every machine's length-`t` trace and returns the first pair (in
/// machine order) with identical traces.
pub fn find_observer_collision(
    model: &ObserverModel,
    t: u32,
    machines: &[Emitter],
) -> Result<CollisionReport, ObserverError> {
    model.validate()?;
    let bound = model.trace_bound(t);
    let mut seen: BTreeMap<BoundaryTrace, usize> = BTreeMap::new();
    let mut collision = None;
    for (i, m) in machines.iter().enumerate() {
        let trace = m.trace(model, t)?;
        if let Some(&j) = seen.get(&trace) {
            collision = Some(Collision { first: machines[j].id.clone(), second: m.id.clone(), trace });
            break;
        }
        seen.insert(trace, i);
    }
    let guaranteed = BigUint::from(machines.len()) > bound;
    debug_assert!(!guaranteed || collision.is_some());
    Ok(CollisionReport {
        t,
        machines: machines.len(),
        trace_bound: bound.to_string(),
        bandwidth_log2: &model.r * &Rational::from_integer(i64::from(t)),
        guaranteed,
        collision,
    })
}
