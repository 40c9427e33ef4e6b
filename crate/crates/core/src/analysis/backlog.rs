//! Review backlog queue `B_{t+1} = max(0, B_t + A_t − r_obs)` and the
//! oversight-capacity relation `ΔX_risk ≤ k·ΔObsCap`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacklogConfig {
    pub r_obs: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub k: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BacklogError {
    #[error("invalid backlog config: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
}

impl BacklogConfig {
    pub fn validate(&self) -> Result<(), BacklogError> {
        if self.r_obs.is_negative() || self.alpha.is_negative() || self.beta.is_negative() {
            return Err(BacklogError::Config("r_obs, alpha and beta must be non-negative".into()));
        }
        if !self.k.is_positive() {
            return Err(BacklogError::Config("k must be positive".into()));
        }
        Ok(())
    }
}

/// `α·[ΔX]_+ + β·c_high`.
pub fn arrival_load(delta_x: &Rational, c_high: u64, cfg: &BacklogConfig) -> Rational {
    let c = Rational::from_integer(c_high as i64);
    &(&cfg.alpha * &delta_x.positive_part()) + &(&cfg.beta * &c)
}

/// `n` independent integer arrivals uniform on `lo..=hi`.
pub fn uniform_arrivals(seed: u64, n: usize, lo: u32, hi: u32) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Rational::from_integer(i64::from(rng.gen_range(lo..=hi)))).collect()
}

/// Risk series and capacity schedule, each with `horizon + 1` samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySeries {
    pub x_risk: Vec<Rational>,
    pub obs_cap: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityCheck {
    pub pass: bool,
    /// Steps with `ΔX_risk(t) > k·ΔObsCap(t)`.
    pub violations: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BacklogReport {
    /// `B_0, …, B_H`.
    pub trace: Vec<Rational>,
    pub final_backlog: Rational,
    pub mean_arrival: Rational,
    pub r_obs: Rational,
    /// `mean(A) ≤ r_obs`.
    pub stable: bool,
    pub capacity: Option<CapacityCheck>,
}

pub fn simulate_backlog(
    cfg: &BacklogConfig,
    arrivals: &[Rational],
    horizon: usize,
    capacity: Option<&CapacitySeries>,
) -> Result<BacklogReport, BacklogError> {
    cfg.validate()?;
    if horizon == 0 {
        return Err(BacklogError::Input("horizon must be at least 1".into()));
    }
    if arrivals.len() < horizon {
        return Err(BacklogError::Input(format!("{} arrivals supplied for horizon {horizon}", arrivals.len())));
    }
    if let Some(a) = arrivals.iter().find(|a| a.is_negative()) {
        return Err(BacklogError::Input(format!("negative arrival {a}")));
    }
    let arrivals = &arrivals[..horizon];
    let mut trace = Vec::with_capacity(horizon + 1);
    let mut b = Rational::zero();
    trace.push(b.clone());
    for a in arrivals {
        b = (&(&b + a) - &cfg.r_obs).positive_part();
        trace.push(b.clone());
    }
    let total: Rational = arrivals.iter().sum();
    let mean_arrival = &total / &Rational::from_integer(horizon as i64);

    let capacity = match capacity {
        None => None,
        Some(c) => {
            if c.x_risk.len() < horizon + 1 || c.obs_cap.len() < horizon + 1 {
                return Err(BacklogError::Input(format!("capacity series need {} samples", horizon + 1)));
            }
            let violations: Vec<u64> = (0..horizon)
                .filter(|&t| {
                    let dx = &c.x_risk[t + 1] - &c.x_risk[t];
                    let dcap = &c.obs_cap[t + 1] - &c.obs_cap[t];
                    dx > &cfg.k * &dcap
                })
                .map(|t| t as u64)
                .collect();
            Some(CapacityCheck { pass: violations.is_empty(), violations })
        }
    };

    Ok(BacklogReport {
        final_backlog: b,
        stable: mean_arrival <= cfg.r_obs,
        mean_arrival,
        r_obs: cfg.r_obs.clone(),
        trace,
        capacity,
    })
}
