use serde::{Deserialize, Serialize};

use super::buffer::{BufferSource, TrajectoryBuffer};
use crate::approximator::ValueNetwork;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaeConfig {
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for GaeConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
        }
    }
}

impl GaeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config("GAE gamma and lambda must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Generalised advantage estimates from precomputed values.
///
/// `values[t] = V(s_t)` and `next_values[t] = V(s'_t)`. The value after a
/// terminal transition is zero; after a truncation `V(s'_t)` is bootstrapped.
/// The recursion restarts at every episode boundary. Returns
/// `(advantages, returns)` with `returns = advantages + values`.
pub fn gae_from_values(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    terminals: &[bool],
    cfg: GaeConfig,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let bootstrap = if terminals[t] { 0.0 } else { next_values[t] };
        let delta = rewards[t] + cfg.gamma * bootstrap - values[t];
        let carry = if dones[t] { 0.0 } else { next_adv };
        next_adv = delta + cfg.gamma * cfg.lambda * carry;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Writes GAE advantages and returns into `buffer`, evaluating `critic` at
/// every state and successor state.
pub fn compute_gae<S: BufferSource>(
    buffer: &mut TrajectoryBuffer<S>,
    critic: &ValueNetwork,
    cfg: GaeConfig,
) -> Result<()> {
    cfg.validate()?;
    if buffer.is_empty() {
        return Err(Error::contract("cannot estimate advantages on an empty buffer"));
    }
    let ts = buffer.transitions();
    let mut values = Vec::with_capacity(ts.len());
    let mut next_values = Vec::with_capacity(ts.len());
    for t in ts {
        values.push(critic.value(&t.state)?);
        next_values.push(if t.terminal { 0.0 } else { critic.value(&t.next_state)? });
    }
    let rewards: Vec<f64> = ts.iter().map(|t| t.reward).collect();
    let dones: Vec<bool> = ts.iter().map(|t| t.done).collect();
    let terminals: Vec<bool> = ts.iter().map(|t| t.terminal).collect();
    let (adv, ret) = gae_from_values(&rewards, &values, &next_values, &dones, &terminals, cfg);
    if adv.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("advantages"));
    }
    buffer.set_estimates(adv, ret)
}

/// Sample statistics of a buffer's advantages (population standard
/// deviation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn advantage_stats<S: BufferSource>(buffer: &TrajectoryBuffer<S>) -> Result<AdvantageStats> {
    let adv = buffer
        .advantages()
        .ok_or_else(|| Error::contract("advantages have not been computed"))?;
    stats_of(adv).ok_or_else(|| Error::contract("no advantages to summarise"))
}

pub(crate) fn stats_of(xs: &[f64]) -> Option<AdvantageStats> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some(AdvantageStats {
        mean,
        std: var.sqrt(),
        min: xs.iter().cloned().fold(f64::INFINITY, f64::min),
        max: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Standardises `xs` to zero mean and unit variance (only centred when the
/// spread is negligible).
pub fn normalize(xs: &[f64]) -> Vec<f64> {
    match stats_of(xs) {
        None => Vec::new(),
        Some(s) => {
            let scale = if s.std > 1e-8 { 1.0 / s.std } else { 1.0 };
            xs.iter().map(|x| (x - s.mean) * scale).collect()
        }
    }
}
