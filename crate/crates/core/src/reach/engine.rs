//! Exhaustive horizon-limited reach and the bounded risk-weighted estimator.
//!
//! Strategies are deterministic tables keyed by `(node, window)` where the
//! window holds the last `min(m, t)` visited nodes. Rather than materializing
//! every total table, both searches assign table entries lazily the first
//! time a context is encountered and backtrack over the alternatives. Any
//! consistent partial assignment extends to a total table, so the result is
//! identical to enumerating the full class.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::automaton::Automaton;
use super::encoding::{Alphabet, Symbol, TraceEncoding};
use super::risk::RiskModel;
use super::ReachError;
use crate::profile::{AdmissibilityProfile, ApproximationProfile};
use crate::rational::Rational;

/// Hard limits on exploration. Exceeding either is an error, never a
/// truncated result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachBudget {
    pub max_nodes: u64,
    pub max_strategies: u64,
}

impl Default for ReachBudget {
    fn default() -> Self {
        ReachBudget { max_nodes: 5_000_000, max_strategies: 1_000_000 }
    }
}

/// Prefix-closed set of boundary traces, always containing the empty trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSet {
    pub alphabet: Alphabet,
    pub traces: BTreeSet<Vec<Symbol>>,
}

impl TraceSet {
    pub fn empty_trace_only(alphabet: Alphabet) -> Self {
        TraceSet { alphabet, traces: BTreeSet::from([Vec::new()]) }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn contains(&self, trace: &[Symbol]) -> bool {
        self.traces.contains(trace)
    }

    pub fn is_prefix_closed(&self) -> bool {
        self.traces.contains(&Vec::new())
            && self
                .traces
                .iter()
                .all(|t| t.is_empty() || self.traces.contains(&t[..t.len() - 1]))
    }

    fn check_comparable(&self, other: &TraceSet) -> Result<(), ReachError> {
        if self.alphabet != other.alphabet {
            return Err(ReachError::AlphabetMismatch {
                left: self.alphabet.clone(),
                right: other.alphabet.clone(),
            });
        }
        Ok(())
    }

    pub fn is_superset_of(&self, other: &TraceSet) -> Result<bool, ReachError> {
        self.check_comparable(other)?;
        Ok(self.traces.is_superset(&other.traces))
    }

    pub fn is_strict_superset_of(&self, other: &TraceSet) -> Result<bool, ReachError> {
        Ok(self.is_superset_of(other)? && self.traces.len() > other.traces.len())
    }

    /// Traces rendered as `"a:HIGH b:LOW"`, in set order.
    pub fn render(&self) -> Vec<String> {
        self.traces
            .iter()
            .map(|t| t.iter().map(Symbol::to_string).collect::<Vec<_>>().join(" "))
            .collect()
    }
}

struct CompiledAction {
    symbol: Option<Symbol>,
    weight: Rational,
    branches: Vec<(Rational, usize)>,
}

/// Automaton restricted to one policy version, with nodes indexed.
struct Compiled {
    actions: Vec<Vec<CompiledAction>>,
}

impl Compiled {
    fn new<'a>(
        automaton: &'a Automaton,
        encoding: &TraceEncoding,
        risk: Option<&RiskModel>,
        policy_version: &str,
    ) -> Result<(Self, Vec<&'a str>), ReachError> {
        let ids: Vec<&str> = automaton.nodes.keys().map(String::as_str).collect();
        let index = |id: &str| {
            ids.binary_search(&id).map_err(|_| ReachError::UnknownNode(id.to_string()))
        };
        let mut actions = Vec::with_capacity(ids.len());
        for id in &ids {
            let mut per_node = Vec::new();
            for a in automaton.admissible(id, policy_version)? {
                let symbol = match &a.channel {
                    Some(ch) => Some(encoding.encode(policy_version, ch)?),
                    None => None,
                };
                let weight = match risk {
                    Some(r) => r.w_step(symbol.as_ref())?,
                    None => Rational::zero(),
                };
                let branches = a
                    .branches
                    .iter()
                    .filter(|b| b.p.is_positive())
                    .map(|b| Ok((b.p.clone(), index(&b.to)?)))
                    .collect::<Result<Vec<_>, ReachError>>()?;
                per_node.push(CompiledAction { symbol, weight, branches });
            }
            actions.push(per_node);
        }
        Ok((Compiled { actions }, ids))
    }
}

type Context = (usize, Vec<usize>);

fn advance(window: &[usize], node: usize, memory: usize) -> Vec<usize> {
    if memory == 0 {
        return Vec::new();
    }
    let mut w = window.to_vec();
    w.push(node);
    if w.len() > memory {
        w.remove(0);
    }
    w
}

struct Counter {
    nodes: u64,
    strategies: u64,
    budget: ReachBudget,
}

impl Counter {
    fn new(budget: ReachBudget) -> Self {
        Counter { nodes: 0, strategies: 0, budget }
    }

    fn tick(&mut self) -> Result<(), ReachError> {
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(ReachError::BudgetExceeded {
                what: "search nodes",
                limit: self.budget.max_nodes,
            });
        }
        Ok(())
    }

    fn strategy(&mut self) -> Result<(), ReachError> {
        self.strategies += 1;
        if self.strategies > self.budget.max_strategies {
            return Err(ReachError::BudgetExceeded {
                what: "strategies",
                limit: self.budget.max_strategies,
            });
        }
        Ok(())
    }
}

struct ReachWalk<'a> {
    compiled: &'a Compiled,
    horizon: usize,
    memory: usize,
    deterministic: bool,
    table: HashMap<Context, usize>,
    out: BTreeSet<Vec<Symbol>>,
    counter: Counter,
}

impl ReachWalk<'_> {
    fn walk(&mut self, t: usize, node: usize, window: Vec<usize>, trace: &mut Vec<Symbol>) -> Result<(), ReachError> {
        self.counter.tick()?;
        if !self.out.contains(trace.as_slice()) {
            self.out.insert(trace.clone());
        }
        let acts = &self.compiled.actions[node];
        if t == self.horizon || acts.is_empty() {
            return Ok(());
        }
        let ctx: Context = (node, window);
        let forced = if self.deterministic { self.table.get(&ctx).copied() } else { None };
        let choices: Vec<usize> = match forced {
            Some(a) => vec![a],
            None => (0..acts.len()).collect(),
        };
        for a in choices {
            let fresh = self.deterministic && forced.is_none();
            if fresh {
                self.table.insert(ctx.clone(), a);
            }
            let action = &self.compiled.actions[node][a];
            let pushed = action.symbol.clone().map(|s| trace.push(s)).is_some();
            let next_window = advance(&ctx.1, node, self.memory);
            for (_, to) in &action.branches {
                self.walk(t + 1, *to, next_window.clone(), trace)?;
            }
            if pushed {
                trace.pop();
            }
            if fresh {
                self.table.remove(&ctx);
            }
        }
        Ok(())
    }
}

/// `{ τ : |τ| ≤ H, ∃ strategy in the class with Pr(τ) > 0 }`.
///
/// Steps without a channel event advance time but add no symbol. A node with
/// no admissible action idles for the rest of the horizon.
pub fn enumerate_reach(
    automaton: &Automaton,
    encoding: &TraceEncoding,
    start: &str,
    profile: &AdmissibilityProfile,
    budget: ReachBudget,
) -> Result<TraceSet, ReachError> {
    let (compiled, ids) = Compiled::new(automaton, encoding, None, &profile.policy_version)?;
    let start = ids.binary_search(&start).map_err(|_| ReachError::UnknownNode(start.to_string()))?;
    let mut walk = ReachWalk {
        compiled: &compiled,
        horizon: profile.horizon,
        memory: profile.strategy_class.memory_bound,
        deterministic: profile.strategy_class.deterministic,
        table: HashMap::new(),
        out: BTreeSet::new(),
        counter: Counter::new(budget),
    };
    walk.walk(0, start, Vec::new(), &mut Vec::new())?;
    Ok(TraceSet { alphabet: encoding.alphabet(&profile.policy_version), traces: walk.out })
}

#[derive(Clone)]
struct Pending {
    t: usize,
    node: usize,
    window: Vec<usize>,
    prob: Rational,
}

struct Estimator<'a> {
    compiled: &'a Compiled,
    horizon: usize,
    memory: usize,
    counter: Counter,
}

impl Estimator<'_> {
    /// Maximum, over all extensions of `table`, of `acc` plus the expected
    /// weight still to be collected from `frontier`.
    fn search(
        &mut self,
        mut frontier: Vec<Pending>,
        mut acc: Rational,
        table: &mut HashMap<Context, usize>,
    ) -> Result<Rational, ReachError> {
        while let Some(item) = frontier.pop() {
            self.counter.tick()?;
            let acts = &self.compiled.actions[item.node];
            if item.t == self.horizon || acts.is_empty() {
                continue;
            }
            let ctx: Context = (item.node, item.window.clone());
            match table.get(&ctx).copied() {
                Some(a) => {
                    let action = &acts[a];
                    acc += &(&item.prob * &action.weight);
                    let window = advance(&item.window, item.node, self.memory);
                    for (p, to) in &action.branches {
                        frontier.push(Pending {
                            t: item.t + 1,
                            node: *to,
                            window: window.clone(),
                            prob: &item.prob * p,
                        });
                    }
                }
                None => {
                    let mut best: Option<Rational> = None;
                    for a in 0..acts.len() {
                        table.insert(ctx.clone(), a);
                        let mut f = frontier.clone();
                        f.push(item.clone());
                        let v = self.search(f, acc.clone(), table)?;
                        table.remove(&ctx);
                        best = Some(match best {
                            Some(b) => b.max(v),
                            None => v,
                        });
                    }
                    return Ok(best.expect("at least one admissible action"));
                }
            }
        }
        self.counter.strategy()?;
        Ok(acc)
    }
}

/// Bounded estimator `μ̂`: the maximum over strategies with memory at most
/// `min(profile bound, approx.L)` of `E[Σ_{t=1..H} w_step(e_t)]`, computed
/// exactly.
///
/// The maximum is always taken over deterministic tables, whatever the
/// profile's determinism flag says.
pub fn risk_weighted_reach(
    automaton: &Automaton,
    encoding: &TraceEncoding,
    risk: &RiskModel,
    start: &str,
    profile: &AdmissibilityProfile,
    approx: &ApproximationProfile,
    budget: ReachBudget,
) -> Result<Rational, ReachError> {
    risk_weighted_reach_with_memory(automaton, encoding, risk, start, profile, approx.l, budget)
}

pub fn risk_weighted_reach_with_memory(
    automaton: &Automaton,
    encoding: &TraceEncoding,
    risk: &RiskModel,
    start: &str,
    profile: &AdmissibilityProfile,
    l: usize,
    budget: ReachBudget,
) -> Result<Rational, ReachError> {
    let (compiled, ids) = Compiled::new(automaton, encoding, Some(risk), &profile.policy_version)?;
    let start = ids.binary_search(&start).map_err(|_| ReachError::UnknownNode(start.to_string()))?;
    let mut est = Estimator {
        compiled: &compiled,
        horizon: profile.horizon,
        memory: profile.restricted_to(l).strategy_class.memory_bound,
        counter: Counter::new(budget),
    };
    let root = Pending { t: 0, node: start, window: Vec::new(), prob: Rational::one() };
    est.search(vec![root], Rational::zero(), &mut HashMap::new())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    /// Chosen complexity bound.
    pub l: usize,
    /// `μ̂(0), μ̂(1), …` up to and including `μ̂(l + 1)` (or `μ̂(max_l)`).
    pub estimates: Vec<Rational>,
    pub converged: bool,
}

/// Raises `L` from zero until `μ̂(L+1) − μ̂(L) ≤ δ_μ` or `max_l` is reached.
pub fn calibrate_memory(
    automaton: &Automaton,
    encoding: &TraceEncoding,
    risk: &RiskModel,
    start: &str,
    profile: &AdmissibilityProfile,
    delta_mu: &Rational,
    max_l: usize,
    budget: ReachBudget,
) -> Result<Calibration, ReachError> {
    let eval = |l| risk_weighted_reach_with_memory(automaton, encoding, risk, start, profile, l, budget);
    let mut estimates = vec![eval(0)?];
    for l in 0..max_l {
        let next = eval(l + 1)?;
        let gain = &next - &estimates[l];
        estimates.push(next);
        if gain <= *delta_mu {
            return Ok(Calibration { l, estimates, converged: true });
        }
    }
    Ok(Calibration { l: max_l, estimates, converged: false })
}
