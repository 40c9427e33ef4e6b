//! Shared fixtures, random scenario generators and independent oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use boundary_core::ledger::WitnessRecord;
use boundary_core::rational::Rational;
use boundary_core::reach::{Automaton, CapabilityGraph, RiskModel, Symbol};
use boundary_core::scenario::Scenario;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> Scenario {
    let s = Scenario::load(&fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    s.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    s
}

pub const SCENARIO_FIXTURES: [&str; 3] = ["connector_install.json", "cross_version.json", "endogenous_insertion.json"];

const CHANNELS: [&str; 5] = ["net", "money", "deploy", "comm", "exec"];
const CLASSES: [&str; 3] = ["LOW", "MEDIUM", "HIGH"];

fn risk_json(rng: &mut ChaCha8Rng) -> Value {
    let labeling: BTreeMap<&str, &str> = CHANNELS.iter().map(|c| (*c, *CLASSES.choose(rng).unwrap())).collect();
    let mid = rng.gen_range(0..=3);
    let high = mid + rng.gen_range(0..=3);
    json!({
        "classes": CLASSES,
        "labeling": labeling,
        "class_weights": { "LOW": "0", "MEDIUM": mid.to_string(), "HIGH": high.to_string() },
    })
}

fn branches_json(rng: &mut ChaCha8Rng, nodes: &[String]) -> Value {
    let to = |rng: &mut ChaCha8Rng| nodes.choose(rng).unwrap().clone();
    match rng.gen_range(0..3) {
        0 => json!([{ "p": "1", "to": to(rng) }]),
        1 => {
            let num = rng.gen_range(1..4);
            json!([{ "p": format!("{num}/4"), "to": to(rng) }, { "p": format!("{}/4", 4 - num), "to": to(rng) }])
        }
        _ => json!([
            { "p": "1/3", "to": to(rng) },
            { "p": "1/2", "to": to(rng) },
            { "p": "1/6", "to": to(rng) }
        ]),
    }
}

/// Knobs for [`random_scenario`].
#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub max_nodes: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    /// Declare the external-task causation assumptions and respect them.
    pub prop_a: bool,
    pub frozen: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { max_nodes: 5, max_actions: 4, max_horizon: 20, prop_a: false, frozen: false }
    }
}

fn action_json(rng: &mut ChaCha8Rng, id: String, nodes: &[String], opts: &GenOptions) -> Value {
    let mut a = serde_json::Map::new();
    let channel = rng.gen_bool(0.6).then(|| *CHANNELS.choose(rng).unwrap());
    a.insert("id".into(), json!(id));
    if let Some(c) = channel {
        a.insert("channel".into(), json!(c));
    }
    if rng.gen_bool(0.25) {
        let subset: Vec<&str> = ["v1", "v2"].into_iter().filter(|_| rng.gen_bool(0.6)).collect();
        a.insert("admissible".into(), json!(subset));
    }

    let mut d = serde_json::Map::new();
    if rng.gen_bool(0.4) {
        let key = format!("k{}", rng.gen_range(0..3));
        d.insert("set_int".into(), json!({ key: rng.gen_range(0..4) }));
    }
    if rng.gen_bool(0.15) {
        d.insert("set_int".into(), json!({ format!("caps/c{}", rng.gen_range(0..2)): "granted" }));
    }
    if rng.gen_bool(0.1) {
        d.insert("set_int".into(), json!({ format!("tools/t{}", rng.gen_range(0..2)): "on" }));
    }
    if rng.gen_bool(0.3) {
        // Every s_ext change also appends to the commit ledger, keeping the
        // external projection faithful.
        let v = rng.gen_range(0..4);
        d.insert("set_ext".into(), json!({ format!("x{}", rng.gen_range(0..2)): v }));
        d.insert("commit".into(), json!([format!("{id}={v}")]));
    }
    if rng.gen_bool(0.1) {
        d.insert("add_vertices".into(), json!([format!("u{}", rng.gen_range(2..4))]));
    }
    if rng.gen_bool(0.1) {
        let e = if rng.gen_bool(0.5) { ["u0", "u1"] } else { ["u1", "u0"] };
        d.insert("add_edges".into(), json!([e]));
    }
    if rng.gen_bool(0.3) {
        d.insert("outbox".into(), json!([format!("{id} out")]));
    }
    if rng.gen_bool(0.2) {
        d.insert("budget".into(), json!(rng.gen_range(-3..=2)));
    }
    if rng.gen_bool(0.1) {
        d.insert("world_obs".into(), json!({ "seen": id.clone() }));
    }

    if rng.gen_bool(0.15) {
        a.insert("stimulated".into(), json!(true));
        a.insert("insert_task".into(), json!("STIMULATED"));
        d.insert("outbox".into(), json!([format!("{id} stimulated")]));
    } else if !opts.prop_a && rng.gen_bool(0.1) {
        let p = ["ENDOGENOUS", "EXOGENOUS", "STIMULATED"].choose(rng).unwrap();
        a.insert("insert_task".into(), json!(p));
    }
    if rng.gen_bool(0.1) {
        let target = ["p1", "p2"].choose(rng).unwrap();
        a.insert("switch_profile".into(), json!(target));
        if rng.gen_bool(0.6) {
            // A pure policy transition: only the profile changes.
            d.clear();
            a.remove("stimulated");
            a.remove("insert_task");
        }
    }
    a.insert("delta".into(), Value::Object(d));
    a.insert("branches".into(), branches_json(rng, nodes));
    Value::Object(a)
}

fn policy_json(rng: &mut ChaCha8Rng, version: &str) -> Value {
    let decisions = ["ALLOW", "ALLOW", "REJECT", "QUARANTINE"];
    let mut rules = Vec::new();
    for c in CHANNELS {
        if rng.gen_bool(0.6) {
            let mut r = json!({ "channel": c, "decision": decisions.choose(rng).unwrap() });
            if rng.gen_bool(0.3) {
                r["max_class"] = json!(CLASSES.choose(rng).unwrap());
            }
            if rng.gen_bool(0.2) {
                r["requires"] = json!(["caps/c0"]);
            }
            rules.push(r);
        }
    }
    rules.push(json!({ "channel": "internal", "decision": decisions.choose(rng).unwrap() }));
    let default = ["ALLOW", "REJECT"].choose(rng).unwrap();
    json!({ "version": version, "rules": rules, "default": default })
}

/// A compliant scenario: SC6-faithful, no budget underflow, dangling-free
/// topology edits and, with `prop_a`, no forbidden task insertions.
pub fn random_scenario(seed: u64, opts: GenOptions) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=opts.max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut automaton = serde_json::Map::new();
    for id in &nodes {
        let k = rng.gen_range(usize::from(id == "n0")..=opts.max_actions);
        let actions: Vec<Value> =
            (0..k).map(|j| action_json(&mut rng, format!("{id}a{j}"), &nodes, &opts)).collect();
        automaton.insert(id.clone(), json!({ "actions": actions }));
    }
    let horizon = rng.gen_range(1..=opts.max_horizon);
    let mut exogenous = Vec::new();
    if !opts.frozen {
        for i in 0..rng.gen_range(0..4) {
            let mut e = json!({ "step": rng.gen_range(0..horizon as u64), "id": format!("ev{i}") });
            if rng.gen_bool(0.5) {
                e["inbox"] = json!(format!("msg {i}"));
            }
            if rng.gen_bool(0.3) {
                e["task"] = json!(false);
            }
            exogenous.push(e);
        }
    }
    let profile = |rng: &mut ChaCha8Rng, id: &str, version: &str| {
        json!({
            "id": id,
            "policy_version": version,
            "strategy_class": { "memory_bound": rng.gen_range(0..=1) },
            "horizon": rng.gen_range(1..=3),
            "u_policy": "VERSIONED",
        })
    };
    let mut flags = json!({ "sc6_faithful": true });
    if opts.prop_a {
        flags["prop_a"] = json!({ "exogenous_frozen": opts.frozen });
    }
    let v = json!({
        "schema": "boundary-scenario/1",
        "name": format!("random-{seed}"),
        "risk": risk_json(&mut rng),
        "normalization": {},
        "regions": { "caps": "caps/", "tools": "tools/" },
        "policies": [policy_json(&mut rng, "v1"), policy_json(&mut rng, "v2")],
        "profiles": [profile(&mut rng, "p1", "v1"), profile(&mut rng, "p2", "v2")],
        "initial_profile": "p1",
        "approximation": { "L": 1, "delta_mu": "0", "epsilon_expand_norm": "1/10" },
        "automaton": { "initial": "n0", "nodes": automaton },
        "initial_state": {
            "budget": 1000,
            "topology": { "population": ["u0", "u1", "u2", "u3"], "vertices": ["u0", "u1"] }
        },
        "flags": flags,
        "run": { "horizon": horizon, "strategy": "random" },
        "exogenous": exogenous,
    });
    let s = Scenario::from_json(&v.to_string()).unwrap_or_else(|e| panic!("generated scenario {seed}: {e}"));
    s.validate().unwrap_or_else(|e| panic!("generated scenario {seed}: {e}"));
    s
}

/// A small automaton for reach comparisons, wrapped in a scenario with one
/// raw-alphabet profile.
pub fn random_reach_scenario(seed: u64, max_nodes: usize, max_actions: usize, max_h: usize, max_l: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_4eac);
    let n = rng.gen_range(1..=max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut automaton = serde_json::Map::new();
    for id in &nodes {
        let k = rng.gen_range(1..=max_actions);
        let actions: Vec<Value> = (0..k)
            .map(|j| {
                let mut a = json!({ "id": format!("{id}a{j}"), "branches": branches_json(&mut rng, &nodes) });
                if rng.gen_bool(0.8) {
                    a["channel"] = json!(CHANNELS.choose(&mut rng).unwrap());
                }
                if rng.gen_bool(0.25) {
                    a["admissible"] = json!(["v2"]);
                }
                a
            })
            .collect();
        automaton.insert(id.clone(), json!({ "actions": actions }));
    }
    let profile = |id: &str, version: &str, memory: usize, h: usize, det: bool| {
        json!({
            "id": id,
            "policy_version": version,
            "strategy_class": { "memory_bound": memory, "deterministic": det },
            "horizon": h,
            "u_policy": "VERSIONED",
        })
    };
    let memory = rng.gen_range(0..=max_l);
    let h = rng.gen_range(1..=max_h);
    let det = rng.gen_bool(0.8);
    let v = json!({
        "schema": "boundary-scenario/1",
        "name": format!("reach-{seed}"),
        "risk": risk_json(&mut rng),
        "regions": { "caps": "caps/", "tools": "tools/" },
        "policies": [
            { "version": "v1", "rules": [] },
            { "version": "v2", "rules": [] }
        ],
        "profiles": [profile("p1", "v1", memory, h, det), profile("p2", "v2", memory, h, det)],
        "initial_profile": "p1",
        "approximation": { "L": max_l, "delta_mu": "0", "epsilon_expand_norm": "1" },
        "automaton": { "initial": "n0", "nodes": automaton },
    });
    let s = Scenario::from_json(&v.to_string()).unwrap_or_else(|e| panic!("reach scenario {seed}: {e}"));
    s.validate().unwrap_or_else(|e| panic!("reach scenario {seed}: {e}"));
    s
}

/// One admissible move out of a node: symbol, weight and positive branches.
struct Move {
    symbol: Option<Symbol>,
    weight: Rational,
    branches: Vec<(Rational, String)>,
}

fn moves(automaton: &Automaton, risk: &RiskModel, version: &str) -> BTreeMap<String, Vec<Move>> {
    automaton
        .nodes
        .iter()
        .map(|(id, node)| {
            let ms = node
                .actions
                .iter()
                .filter(|a| a.admissible.as_ref().map_or(true, |s| s.contains(version)))
                .map(|a| {
                    let symbol = a
                        .channel
                        .as_ref()
                        .map(|c| Symbol { channel: c.clone(), class: risk.labeling[c].clone() });
                    let weight = symbol.as_ref().map_or_else(Rational::zero, |s| risk.class_weights[&s.class].clone());
                    let branches =
                        a.branches.iter().filter(|b| b.p.is_positive()).map(|b| (b.p.clone(), b.to.clone())).collect();
                    Move { symbol, weight, branches }
                })
                .collect();
            (id.clone(), ms)
        })
        .collect()
}

/// Strategy context: current node plus the last `memory` nodes visited.
type Ctx = (String, Vec<String>);

fn context(path: &[String], memory: usize) -> Ctx {
    let (node, before) = path.split_last().expect("non-empty path");
    let keep = before.len().min(memory);
    (node.clone(), before[before.len() - keep..].to_vec())
}

/// Reach by brute force over explicit runs. A run is realizable by a
/// deterministic table iff it never picks two different actions in the same
/// context; every prefix of a realizable run is realizable.
pub fn oracle_reach(
    automaton: &Automaton,
    risk: &RiskModel,
    start: &str,
    version: &str,
    horizon: usize,
    memory: usize,
    deterministic: bool,
) -> BTreeSet<Vec<Symbol>> {
    fn go(
        mv: &BTreeMap<String, Vec<Move>>,
        path: &mut Vec<String>,
        choices: &mut Vec<(Ctx, usize)>,
        trace: &mut Vec<Symbol>,
        horizon: usize,
        memory: usize,
        deterministic: bool,
        out: &mut BTreeSet<Vec<Symbol>>,
    ) {
        out.insert(trace.clone());
        if path.len() - 1 == horizon {
            return;
        }
        let ctx = context(path, memory);
        let here = &mv[&ctx.0];
        for (i, m) in here.iter().enumerate() {
            if deterministic && choices.iter().any(|(c, j)| *c == ctx && *j != i) {
                continue;
            }
            choices.push((ctx.clone(), i));
            if let Some(s) = &m.symbol {
                trace.push(s.clone());
            }
            for (_, to) in &m.branches {
                path.push(to.clone());
                go(mv, path, choices, trace, horizon, memory, deterministic, out);
                path.pop();
            }
            if m.symbol.is_some() {
                trace.pop();
            }
            choices.pop();
        }
    }
    let mv = moves(automaton, risk, version);
    let mut out = BTreeSet::new();
    go(&mv, &mut vec![start.to_string()], &mut Vec::new(), &mut Vec::new(), horizon, memory, deterministic, &mut out);
    out
}

/// Expected accumulated weight of one total table.
fn table_value(
    mv: &BTreeMap<String, Vec<Move>>,
    table: &BTreeMap<Ctx, usize>,
    path: &mut Vec<String>,
    prob: &Rational,
    horizon: usize,
    memory: usize,
) -> Rational {
    if path.len() - 1 == horizon {
        return Rational::zero();
    }
    let ctx = context(path, memory);
    if mv[&ctx.0].is_empty() {
        return Rational::zero();
    }
    let m = &mv[&ctx.0][table[&ctx]];
    let mut v = prob * &m.weight;
    for (p, to) in &m.branches {
        path.push(to.clone());
        v += &table_value(mv, table, path, &(prob * p), horizon, memory);
        path.pop();
    }
    v
}

/// Every context that any run can reach before the horizon.
fn reachable_contexts(mv: &BTreeMap<String, Vec<Move>>, start: &str, horizon: usize, memory: usize) -> BTreeSet<Ctx> {
    fn go(mv: &BTreeMap<String, Vec<Move>>, path: &mut Vec<String>, horizon: usize, memory: usize, out: &mut BTreeSet<Ctx>) {
        if path.len() - 1 == horizon {
            return;
        }
        let ctx = context(path, memory);
        if mv[&ctx.0].is_empty() {
            return;
        }
        out.insert(ctx.clone());
        for m in &mv[&ctx.0] {
            for (_, to) in &m.branches {
                path.push(to.clone());
                go(mv, path, horizon, memory, out);
                path.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(mv, &mut vec![start.to_string()], horizon, memory, &mut out);
    out
}

/// Largest table count the μ̂ oracle will enumerate.
pub const ORACLE_TABLE_LIMIT: u64 = 200_000;

/// Maximum expected weight over every total deterministic table on the
/// reachable contexts. `None` when there are more than
/// [`ORACLE_TABLE_LIMIT`] tables.
pub fn oracle_mu_hat(
    automaton: &Automaton,
    risk: &RiskModel,
    start: &str,
    version: &str,
    horizon: usize,
    memory: usize,
) -> Option<Rational> {
    let mv = moves(automaton, risk, version);
    let ctxs: Vec<Ctx> = reachable_contexts(&mv, start, horizon, memory).into_iter().collect();
    let radix: Vec<usize> = ctxs.iter().map(|c| mv[&c.0].len()).collect();
    let total = radix.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r as u64))?;
    if total > ORACLE_TABLE_LIMIT {
        return None;
    }
    let mut best = Rational::zero();
    let mut digits = vec![0usize; ctxs.len()];
    for _ in 0..total {
        let table: BTreeMap<Ctx, usize> = ctxs.iter().cloned().zip(digits.iter().copied()).collect();
        let v = table_value(&mv, &table, &mut vec![start.to_string()], &Rational::one(), horizon, memory);
        if v > best {
            best = v;
        }
        for (d, r) in digits.iter_mut().zip(&radix) {
            *d += 1;
            if *d < *r {
                break;
            }
            *d = 0;
        }
    }
    Some(best)
}

/// Hop-limited reach by repeated relaxation of hop distances.
pub fn oracle_proxy(g: &CapabilityGraph, h_cap: usize, risk: &RiskModel) -> Rational {
    let mut dist: BTreeMap<&str, usize> = g.roots.iter().map(|r| (r.as_str(), 0)).collect();
    loop {
        let mut changed = false;
        for (a, b) in &g.edges {
            if let Some(&da) = dist.get(a.as_str()) {
                let nd = da + 1;
                if nd <= h_cap && dist.get(b.as_str()).map_or(true, |&db| nd < db) {
                    dist.insert(b, nd);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut total = Rational::zero();
    for v in dist.keys() {
        let cv = &g.vertices[*v];
        total += &(&(&risk.class_weights[&cv.class] * &cv.chi) * &cv.nu);
    }
    total
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> CapabilityGraph {
    let mut g = CapabilityGraph::default();
    for i in 0..n {
        let frac = |rng: &mut ChaCha8Rng| Rational::new(rng.gen_range(0..=4), 4);
        g.vertices.insert(
            format!("v{i}"),
            boundary_core::reach::CapVertex { class: CLASSES.choose(rng).unwrap().to_string(), chi: frac(rng), nu: frac(rng) },
        );
    }
    for _ in 0..rng.gen_range(0..=n * 2) {
        let a = format!("v{}", rng.gen_range(0..n));
        let b = format!("v{}", rng.gen_range(0..n));
        g.edges.insert((a, b));
    }
    for i in 0..n {
        if rng.gen_bool(0.3) {
            g.roots.insert(format!("v{i}"));
        }
    }
    g
}

pub fn graph_risk() -> RiskModel {
    RiskModel {
        classes: CLASSES.iter().map(|c| c.to_string()).collect(),
        labeling: BTreeMap::new(),
        class_weights: [("LOW", 0), ("MEDIUM", 1), ("HIGH", 3)]
            .into_iter()
            .map(|(c, w)| (c.to_string(), Rational::from_integer(w)))
            .collect(),
    }
}

/// Integer backlog recursion `B ← max(0, B + a − r)`.
pub fn oracle_backlog(arrivals: &[i64], r_obs: i64) -> Vec<i64> {
    let mut b = 0i64;
    let mut out = vec![0];
    for a in arrivals {
        b = (b + a - r_obs).max(0);
        out.push(b);
    }
    out
}

fn put(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&u32::try_from(s.len()).unwrap().to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_opt(out: &mut Vec<u8>, s: Option<&str>) {
    match s {
        None => out.push(0),
        Some(s) => {
            out.push(1);
            put(out, s);
        }
    }
}

/// Witness digest recomputed from the documented byte layout.
pub fn oracle_witness_hash(w: &WitnessRecord) -> [u8; 32] {
    let c = &w.ctx;
    let mut ctx = Vec::new();
    put_opt(&mut ctx, c.channel.as_deref());
    put_opt(&mut ctx, c.canonical.map(|x| x.as_str()));
    put_opt(&mut ctx, c.risk_class.as_deref());
    put(&mut ctx, &c.payload);
    let mut caps = c.caps.clone();
    caps.sort();
    ctx.extend_from_slice(&(caps.len() as u32).to_be_bytes());
    for k in &caps {
        put(&mut ctx, k);
    }
    ctx.extend_from_slice(&c.budget.to_be_bytes());
    put(&mut ctx, &c.policy_version);

    let decision: u8 = match w.decision.as_str() {
        "ALLOW" => 1,
        "REJECT" => 2,
        _ => 3,
    };
    let tags: u8 = w
        .tag_set
        .iter()
        .map(|t| match t.as_str() {
            "FIRST" => 1,
            "SECOND_T" => 2,
            _ => 4,
        })
        .sum();
    let mut pre = Vec::new();
    pre.extend_from_slice(&w.seq.to_be_bytes());
    put(&mut pre, w.act.as_str());
    pre.push(decision);
    put(&mut pre, &w.policy_version);
    pre.extend_from_slice(&Sha256::digest(&ctx));
    pre.push(tags);
    pre.extend_from_slice(&w.prev_hash);
    Sha256::digest(&pre).into()
}

/// Chain check written from scratch: gapless seq, linked hashes, recomputed
/// digests. Returns the first bad position.
pub fn oracle_first_bad(records: &[WitnessRecord]) -> Option<u64> {
    let mut prev = [0u8; 32];
    for (k, w) in records.iter().enumerate() {
        if w.seq != k as u64 || w.prev_hash != prev || oracle_witness_hash(w) != w.self_hash {
            return Some(k as u64);
        }
        prev = w.self_hash;
    }
    None
}

fn advance_window(window: &[String], node: &str, memory: usize) -> Vec<String> {
    let mut w = window.to_vec();
    w.push(node.to_string());
    let drop = w.len().saturating_sub(memory);
    w.drain(..drop);
    w
}

/// Maximum expected weight computed layer by layer: the probability mass
/// over contexts is pushed forward one step at a time, and an action is
/// fixed for each context the first time that context carries mass.
pub fn oracle_mu_hat_layered(
    automaton: &Automaton,
    risk: &RiskModel,
    start: &str,
    version: &str,
    horizon: usize,
    memory: usize,
) -> Rational {
    fn layer(
        mv: &BTreeMap<String, Vec<Move>>,
        t: usize,
        horizon: usize,
        memory: usize,
        mass: BTreeMap<Ctx, Rational>,
        table: &mut BTreeMap<Ctx, usize>,
    ) -> Rational {
        let live: Vec<&Ctx> = mass.keys().filter(|c| !mv[&c.0].is_empty()).collect();
        if t == horizon || live.is_empty() {
            return Rational::zero();
        }
        let fresh: Vec<Ctx> = live.iter().filter(|c| !table.contains_key(*c)).map(|c| (*c).clone()).collect();
        let radix: Vec<usize> = fresh.iter().map(|c| mv[&c.0].len()).collect();
        let combos: usize = radix.iter().product();
        let mut best: Option<Rational> = None;
        let mut digits = vec![0usize; fresh.len()];
        for _ in 0..combos {
            for (c, d) in fresh.iter().zip(&digits) {
                table.insert(c.clone(), *d);
            }
            let mut gain = Rational::zero();
            let mut next: BTreeMap<Ctx, Rational> = BTreeMap::new();
            for c in &live {
                let p = &mass[*c];
                let m = &mv[&c.0][table[*c]];
                gain += &(p * &m.weight);
                let window = advance_window(&c.1, &c.0, memory);
                for (q, to) in &m.branches {
                    let e = next.entry((to.clone(), window.clone())).or_insert_with(Rational::zero);
                    *e += &(p * q);
                }
            }
            let v = &gain + &layer(mv, t + 1, horizon, memory, next, table);
            best = Some(match best {
                Some(b) if b >= v => b,
                _ => v,
            });
            for (d, r) in digits.iter_mut().zip(&radix) {
                *d += 1;
                if *d < *r {
                    break;
                }
                *d = 0;
            }
        }
        for c in &fresh {
            table.remove(c);
        }
        best.expect("at least one assignment")
    }
    let mv = moves(automaton, risk, version);
    let mass = BTreeMap::from([((start.to_string(), Vec::new()), Rational::one())]);
    layer(&mv, 0, horizon, memory, mass, &mut BTreeMap::new())
}
