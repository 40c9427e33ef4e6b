//! The `boundary` command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    find_observer_collision, simulate_backlog, simulate_scarcity, uniform_arrivals, BacklogConfig, CapacitySeries,
    Emitter, ObserverModel, ScarcityConfig, ScarcityScenario,
};
use crate::ledger::{decode_ledger, replay, verify_bytes, verify_chain, ReplayError, VerificationReport};
use crate::membrane::{RunError, RunOptions};
use crate::rational::Rational;
use crate::reach::{
    calibrate_memory, delta_expand, enumerate_reach, expansion_flag, proxy_reach_measure, risk_weighted_reach,
    CapabilityGraph, ReachBudget, ReachError, RiskModel,
};
use crate::profile::ApproximationProfile;
use crate::report::{render, run_and_report};
use crate::scenario::{InjectionKind, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_REPLAY_UNAVAILABLE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "boundary", version, about = "Mediated boundary-transition runs, audits and analyses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Where to write the JSON report (stdout when omitted, except for `run`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Search-node limit for reach computations.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a scenario through the membrane, then audit it.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        horizon: Option<usize>,
        /// Directory for the run log and ledger files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Verify a ledger's hash chain.
    Verify {
        ledger: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Re-adjudicate every witness under the scenario's policies.
    Replay {
        ledger: PathBuf,
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write a scenario variant with a deliberate violation.
    Inject {
        kind: InjectionKind,
        scenario: PathBuf,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Standalone analyses.
    #[command(subcommand)]
    Analyze(Analysis),
}

#[derive(Subcommand, Debug)]
enum Analysis {
    /// Reach set, bounded estimator and memory calibration for a scenario.
    Reach {
        scenario: PathBuf,
        /// Start node (defaults to the automaton's initial node).
        #[arg(long)]
        node: Option<String>,
        /// Admissibility profile (defaults to the scenario's initial profile).
        #[arg(long)]
        profile: Option<String>,
        /// Largest memory bound tried during calibration.
        #[arg(long, default_value_t = 3)]
        max_l: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Normalized expansion between two capability-graph snapshots.
    Expand {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Absorbing-halt simulation.
    Scarcity {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Review backlog queue.
    Backlog {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Observer collision search.
    Collision {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn input_err(message: impl ToString) -> Failure {
    Failure { code: EXIT_INPUT, message: message.to_string() }
}

fn reach_err(e: ReachError) -> Failure {
    let code = if matches!(e, ReachError::BudgetExceeded { .. }) { EXIT_BUDGET } else { EXIT_INPUT };
    Failure { code, message: e.to_string() }
}

fn run_err(e: RunError) -> Failure {
    Failure { code: if e.is_budget() { EXIT_BUDGET } else { EXIT_INPUT }, message: e.to_string() }
}

fn budget(common: &Common) -> ReachBudget {
    match common.budget {
        Some(n) => ReachBudget { max_nodes: n, max_strategies: n },
        None => ReachBudget::default(),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| input_err(format!("{}: {}: {}", path.display(), e.path(), e.inner())))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let s = Scenario::load(path).map_err(input_err)?;
    s.validate().map_err(input_err)?;
    Ok(s)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| input_err(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

fn emit(common: &Common, kind: &str, body: &impl Serialize) -> Result<(), Failure> {
    let text = render(kind, body);
    match &common.report {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_run(scenario: &Path, seed: u64, horizon: Option<usize>, out_dir: &Path, common: &Common) -> Result<i32, Failure> {
    let s = load_scenario(scenario)?;
    let opts = RunOptions { seed, horizon, budget: budget(common) };
    let (outcome, report) = run_and_report(&s, opts).map_err(run_err)?;
    let base = out_dir.join(stem(scenario));
    let with_ext = |ext: &str| PathBuf::from(format!("{}.{ext}", base.display()));
    write(&with_ext("runlog.jsonl"), outcome.log.to_jsonl())?;
    write(&with_ext("ledger"), outcome.ledger.to_bytes())?;
    write(&with_ext("ledger.jsonl"), outcome.ledger.to_jsonl())?;
    let report_path = common.report.clone().unwrap_or_else(|| with_ext("report.json"));
    write(&report_path, render("run", &report))?;
    eprintln!("{}: {}, {} findings", s.name, report.audit.verdict, report.audit.findings.len());
    for f in &report.audit.findings {
        eprintln!("  {} step={:?} seq={:?}: {}", f.law, f.step, f.seq, f.detail);
    }
    Ok(if report.has_violations() { EXIT_VIOLATION } else { EXIT_OK })
}

fn cmd_verify(ledger: &Path, common: &Common) -> Result<i32, Failure> {
    let bytes = fs::read(ledger).map_err(|e| input_err(format!("cannot read {}: {e}", ledger.display())))?;
    let report = verify_bytes(&bytes);
    emit(common, "verify", &report)?;
    if let Some(seq) = report.first_bad_seq {
        eprintln!("chain broken: first bad seq {seq}");
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ReplayReport {
    chain: VerificationReport,
    replayed: u64,
    matched: u64,
    mismatches: Vec<ReplayError>,
    unavailable: Vec<ReplayError>,
}

impl Serialize for ReplayError {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn cmd_replay(ledger: &Path, scenario: &Path, common: &Common) -> Result<i32, Failure> {
    let bytes = fs::read(ledger).map_err(|e| input_err(format!("cannot read {}: {e}", ledger.display())))?;
    let env = load_scenario(scenario)?.validate().map_err(input_err)?;
    let decoded = decode_ledger(&bytes);
    let mut chain = verify_chain(&decoded.records);
    if chain.ok {
        chain = verify_bytes(&bytes);
    }
    let limit = chain.first_bad_seq.unwrap_or(u64::MAX);
    let mut report = ReplayReport { chain, replayed: 0, matched: 0, mismatches: Vec::new(), unavailable: Vec::new() };
    for w in decoded.records.iter().take_while(|w| w.seq < limit) {
        report.replayed += 1;
        match replay(w, &env.policies) {
            Ok(_) => report.matched += 1,
            Err(e @ ReplayError::Mismatch { .. }) => report.mismatches.push(e),
            Err(e @ ReplayError::Unavailable { .. }) => report.unavailable.push(e),
        }
    }
    emit(common, "replay", &report)?;
    for e in report.mismatches.iter().chain(&report.unavailable) {
        eprintln!("{e}");
    }
    Ok(if !report.mismatches.is_empty() || !report.chain.ok {
        EXIT_VIOLATION
    } else if !report.unavailable.is_empty() {
        EXIT_REPLAY_UNAVAILABLE
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct ReachReport {
    node: String,
    profile: String,
    horizon: usize,
    traces: usize,
    reach: Vec<String>,
    mu_hat: Rational,
    calibration: crate::reach::Calibration,
    proxy: Option<Rational>,
}

fn cmd_reach(scenario: &Path, node: Option<String>, profile: Option<String>, max_l: usize, common: &Common) -> Result<i32, Failure> {
    let s = load_scenario(scenario)?;
    let env = s.validate().map_err(input_err)?;
    let node = node.unwrap_or_else(|| s.automaton.initial.clone());
    let pid = profile.unwrap_or_else(|| s.initial_profile.clone());
    let p = s.profile(&pid).ok_or_else(|| input_err(format!("no profile {pid:?}")))?;
    let b = budget(common);
    let reach = enumerate_reach(&s.automaton, &env.encoding, &node, p, b).map_err(reach_err)?;
    let mu_hat = risk_weighted_reach(&s.automaton, &env.encoding, &s.risk, &node, p, &s.approximation, b).map_err(reach_err)?;
    let calibration = calibrate_memory(&s.automaton, &env.encoding, &s.risk, &node, p, &s.approximation.delta_mu, max_l, b)
        .map_err(reach_err)?;
    let proxy = match &s.capability_graph {
        Some(g) => Some(proxy_reach_measure(g, p.horizon, &s.risk).map_err(reach_err)?),
        None => None,
    };
    let report = ReachReport {
        node,
        profile: pid,
        horizon: p.horizon,
        traces: reach.len(),
        reach: reach.render(),
        mu_hat,
        calibration,
        proxy,
    };
    emit(common, "reach", &report)?;
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpandInput {
    risk: RiskModel,
    approximation: ApproximationProfile,
    h_cap: usize,
    before: CapabilityGraph,
    after: CapabilityGraph,
}

#[derive(Serialize)]
struct ExpandReport {
    h_cap: usize,
    mu_before: Rational,
    mu_after: Rational,
    delta_expand: Rational,
    epsilon_expand_norm: Rational,
    flag: bool,
}

fn cmd_expand(input: &Path, common: &Common) -> Result<i32, Failure> {
    let inp: ExpandInput = read_json(input)?;
    inp.risk.validate().map_err(input_err)?;
    inp.approximation.validate().map_err(input_err)?;
    inp.before.validate(&inp.risk).map_err(|e| input_err(format!("before: {e}")))?;
    inp.after.validate(&inp.risk).map_err(|e| input_err(format!("after: {e}")))?;
    let mu_before = proxy_reach_measure(&inp.before, inp.h_cap, &inp.risk).map_err(reach_err)?;
    let mu_after = proxy_reach_measure(&inp.after, inp.h_cap, &inp.risk).map_err(reach_err)?;
    let delta = delta_expand(&mu_before, &mu_after);
    let report = ExpandReport {
        h_cap: inp.h_cap,
        flag: expansion_flag(&delta, &inp.approximation),
        mu_before,
        mu_after,
        delta_expand: delta,
        epsilon_expand_norm: inp.approximation.epsilon_expand_norm.clone(),
    };
    emit(common, "expand", &report)?;
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScarcityInput {
    config: ScarcityConfig,
    #[serde(default)]
    scenario: ScarcityScenario,
}

fn cmd_scarcity(input: &Path, seed: u64, common: &Common) -> Result<i32, Failure> {
    let inp: ScarcityInput = read_json(input)?;
    let report = simulate_scarcity(&inp.config, &inp.scenario, seed).map_err(input_err)?;
    emit(common, "scarcity", &report)?;
    if let Some(d) = &report.diagnostic {
        eprintln!("{d}");
    }
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ArrivalSource {
    Series(Vec<Rational>),
    Constant(Rational),
    Uniform { lo: u32, hi: u32 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BacklogInput {
    config: BacklogConfig,
    horizon: usize,
    arrivals: ArrivalSource,
    #[serde(default)]
    capacity: Option<CapacitySeries>,
}

fn cmd_backlog(input: &Path, seed: u64, common: &Common) -> Result<i32, Failure> {
    let inp: BacklogInput = read_json(input)?;
    let arrivals = match inp.arrivals {
        ArrivalSource::Series(v) => v,
        ArrivalSource::Constant(a) => vec![a; inp.horizon],
        ArrivalSource::Uniform { lo, hi } if lo <= hi => uniform_arrivals(seed, inp.horizon, lo, hi),
        ArrivalSource::Uniform { .. } => return Err(input_err("uniform arrivals need lo <= hi")),
    };
    let report = simulate_backlog(&inp.config, &arrivals, inp.horizon, inp.capacity.as_ref()).map_err(input_err)?;
    emit(common, "backlog", &report)?;
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CollisionInput {
    model: ObserverModel,
    t: u32,
    machines: Vec<Emitter>,
}

fn cmd_collision(input: &Path, common: &Common) -> Result<i32, Failure> {
    let inp: CollisionInput = read_json(input)?;
    let report = find_observer_collision(&inp.model, inp.t, &inp.machines).map_err(input_err)?;
    emit(common, "collision", &report)?;
    if let Some(c) = &report.collision {
        eprintln!("collision: {} and {}", c.first, c.second);
    }
    Ok(EXIT_OK)
}

fn cmd_inject(kind: InjectionKind, scenario: &Path, output: Option<&Path>) -> Result<i32, Failure> {
    let variant = load_scenario(scenario)?.inject(kind).to_json();
    match output {
        Some(p) => write(p, variant)?,
        None => print!("{variant}"),
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Run { scenario, seed, horizon, out_dir, common } => cmd_run(&scenario, seed, horizon, &out_dir, &common),
        Command::Verify { ledger, common } => cmd_verify(&ledger, &common),
        Command::Replay { ledger, scenario, common } => cmd_replay(&ledger, &scenario, &common),
        Command::Inject { kind, scenario, output } => cmd_inject(kind, &scenario, output.as_deref()),
        Command::Analyze(a) => match a {
            Analysis::Reach { scenario, node, profile, max_l, common } => cmd_reach(&scenario, node, profile, max_l, &common),
            Analysis::Expand { input, common } => cmd_expand(&input, &common),
            Analysis::Scarcity { input, seed, common } => cmd_scarcity(&input, seed, &common),
            Analysis::Backlog { input, seed, common } => cmd_backlog(&input, seed, &common),
            Analysis::Collision { input, common } => cmd_collision(&input, &common),
        },
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
