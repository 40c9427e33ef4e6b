//! Absorbing-halt simulation under exogenous scarcity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScarcityConfig {
    /// Exogenous events per step, at most 1.
    pub lambda_ext: Rational,
    /// Mean internal actions per step.
    pub mu_internal: Rational,
    pub halt_window: u64,
    pub policy_fixed: bool,
    pub horizon: u64,
    /// `μ ≥ ratio·λ` marks the scarcity regime.
    #[serde(default = "default_ratio")]
    pub scarcity_ratio: Rational,
}

fn default_ratio() -> Rational {
    Rational::from_integer(10)
}

/// Continuation behaviour of the simulated system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScarcityScenario {
    pub name: String,
    /// A stimulated act at every step `t` with `(t + 1) % period == 0`.
    pub stimulated_period: Option<u64>,
    /// Projected commits not backed by a stimulated act, same schedule rule.
    pub unstimulated_commit_period: Option<u64>,
    pub halt_absorbing: bool,
    /// The scenario metadata asserts the continuation assumptions.
    pub assumptions_declared: bool,
}

impl Default for ScarcityScenario {
    fn default() -> Self {
        ScarcityScenario {
            name: String::new(),
            stimulated_period: None,
            unstimulated_commit_period: None,
            halt_absorbing: true,
            assumptions_declared: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScarcityError {
    #[error("invalid scarcity config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScarcityStep {
    pub t: u64,
    pub halted: bool,
    pub exogenous: bool,
    pub stimulated: bool,
    pub commit_pi: bool,
    pub ext_delta: bool,
    pub internal: u64,
    pub ext_state: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScarcityReport {
    pub scenario: String,
    pub seed: u64,
    pub halt_window: u64,
    pub horizon: u64,
    pub scarcity_regime: bool,
    pub assumptions_declared: bool,
    pub halt_step: Option<u64>,
    pub survived: bool,
    pub stimulated_steps: u64,
    pub exogenous_events: u64,
    pub internal_activity: u64,
    pub ext_state: u64,
    /// Set when the run survived without any stimulated act.
    pub diagnostic: Option<String>,
    pub trace: Vec<ScarcityStep>,
}

impl ScarcityConfig {
    pub fn validate(&self) -> Result<(), ScarcityError> {
        let err = |m: &str| Err(ScarcityError::Config(m.into()));
        if self.lambda_ext.is_negative() || self.lambda_ext > Rational::one() {
            return err("lambda_ext must lie in [0, 1]");
        }
        if self.mu_internal.is_negative() {
            return err("mu_internal must be non-negative");
        }
        if self.halt_window == 0 {
            return err("halt_window must be positive");
        }
        if self.horizon == 0 {
            return err("horizon must be positive");
        }
        if self.scarcity_ratio.is_negative() {
            return err("scarcity_ratio must be non-negative");
        }
        Ok(())
    }

    pub fn scarcity_regime(&self) -> bool {
        self.mu_internal >= &self.scarcity_ratio * &self.lambda_ext
    }
}

fn on_schedule(period: Option<u64>, t: u64) -> bool {
    period.is_some_and(|p| p > 0 && (t + 1) % p == 0)
}

/// Steps the system until the horizon. At each step `t ≥ W` the system
/// halts for good if none of the previous `W` steps made boundary-visible
/// progress (a projected commit, a stimulated act, or an exogenous event).
pub fn simulate_scarcity(
    cfg: &ScarcityConfig,
    scenario: &ScarcityScenario,
    seed: u64,
) -> Result<ScarcityReport, ScarcityError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = if cfg.mu_internal.is_positive() {
        Some(Poisson::new(cfg.mu_internal.to_f64()).map_err(|e| ScarcityError::Config(e.to_string()))?)
    } else {
        None
    };
    let w = cfg.halt_window;
    let mut last_progress: Option<u64> = None;
    let mut halt_step = None;
    let mut trace = Vec::with_capacity(cfg.horizon as usize);
    let (mut stimulated_steps, mut exogenous_events, mut internal_activity, mut ext_state) = (0, 0, 0, 0);

    for t in 0..cfg.horizon {
        if halt_step.is_none() && scenario.halt_absorbing && t >= w {
            let quiet_since = last_progress.map_or(0, |p| p + 1);
            if t - quiet_since >= w {
                halt_step = Some(t);
            }
        }
        if halt_step.is_some() {
            trace.push(ScarcityStep {
                t,
                halted: true,
                exogenous: false,
                stimulated: false,
                commit_pi: false,
                ext_delta: false,
                internal: 0,
                ext_state,
            });
            continue;
        }
        let u = Rational::from_fraction_of_pow2(rng.gen::<u64>() >> 11, 53);
        let exogenous = u < cfg.lambda_ext;
        let internal = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as u64);
        let stimulated = on_schedule(scenario.stimulated_period, t);
        let commit_pi = stimulated || on_schedule(scenario.unstimulated_commit_period, t);
        let ext_delta = commit_pi || stimulated;
        if ext_delta || exogenous {
            last_progress = Some(t);
        }
        stimulated_steps += u64::from(stimulated);
        exogenous_events += u64::from(exogenous);
        internal_activity += internal;
        ext_state += u64::from(ext_delta);
        trace.push(ScarcityStep { t, halted: false, exogenous, stimulated, commit_pi, ext_delta, internal, ext_state });
    }

    let survived = halt_step.is_none();
    let diagnostic = (survived && stimulated_steps == 0).then(|| {
        "non-halting over the horizon with no stimulated act: at least one continuation assumption (1)-(5) is false"
            .to_string()
    });
    Ok(ScarcityReport {
        scenario: scenario.name.clone(),
        seed,
        halt_window: w,
        horizon: cfg.horizon,
        scarcity_regime: cfg.scarcity_regime(),
        assumptions_declared: scenario.assumptions_declared,
        halt_step,
        survived,
        stimulated_steps,
        exogenous_events,
        internal_activity,
        ext_state,
        diagnostic,
        trace,
    })
}
