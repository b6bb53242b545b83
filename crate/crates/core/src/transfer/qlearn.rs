use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{Direction, Optimizer, QNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QTransition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QTransferConfig {
    /// Samples are kept when `y - Q(s, a) > zeta`.
    pub zeta: f64,
    /// Fraction of the self-collected epsilon-greedy buffer mixed into each
    /// update (a prefix of that buffer).
    pub greedy_mix: f64,
    /// Exploration rate used when collecting the self-collected buffer.
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for QTransferConfig {
    fn default() -> Self {
        Self {
            zeta: 0.0,
            greedy_mix: 1.0,
            epsilon: 0.1,
            gamma: 0.99,
        }
    }
}

impl QTransferConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::config("q zeta must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.greedy_mix) || !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("greedy_mix and epsilon must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QUpdateStats {
    pub candidates: usize,
    pub kept: usize,
    /// `1/2 * sum (Q - y)^2` over the kept samples, before the step.
    pub loss: f64,
}

/// `y = r + gamma * max_a' Q(s', a')`, with no bootstrap at terminals.
pub fn q_target(q: &QNetwork, t: &QTransition, gamma: f64) -> Result<f64> {
    if t.terminal {
        return Ok(t.reward);
    }
    let next = q.q_values(&t.next_state)?;
    Ok(t.reward + gamma * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// One filtered regression step. Targets are computed with the current
/// parameters and held fixed; only samples whose target exceeds the current
/// estimate by more than `zeta` contribute to the loss.
pub fn q_transfer_update(
    q: &mut QNetwork,
    optimizer: &mut Optimizer,
    cfg: &QTransferConfig,
    teacher: &[QTransition],
    greedy: &[QTransition],
) -> Result<QUpdateStats> {
    cfg.validate()?;
    let n_greedy = ((cfg.greedy_mix * greedy.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let batch = teacher.iter().chain(&greedy[..n_greedy.min(greedy.len())]);
    let mut grad = vec![0.0; q.params().len()];
    let mut stats = QUpdateStats::default();
    for t in batch {
        stats.candidates += 1;
        if t.action >= q.n_actions() {
            return Err(Error::contract(format!("action {} outside the Q-network's range", t.action)));
        }
        let y = q_target(q, t, cfg.gamma)?;
        let (values, cache) = q.q_values_cached(&t.state)?;
        let diff = values[t.action] - y;
        if -diff > cfg.zeta {
            stats.kept += 1;
            stats.loss += 0.5 * diff * diff;
            let mut d = vec![0.0; q.n_actions()];
            d[t.action] = diff;
            q.backward(&cache, &d, &mut grad)?;
        }
    }
    if stats.kept > 0 {
        optimizer.step(q.params_mut(), &grad, Direction::Descend)?;
    }
    Ok(stats)
}

/// Greedy action with probability `1 - epsilon` (lowest index on ties),
/// otherwise uniform.
pub fn epsilon_greedy_action<R: Rng>(q: &QNetwork, state: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    let values = q.q_values(state)?;
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..values.len()));
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onehot(i: usize, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn exact_targets_are_filtered_out() {
        let q = QNetwork::tabular(2, 2);
        // All-zero Q with zero rewards: every target equals the estimate.
        let ts = vec![QTransition {
            state: onehot(0, 2),
            action: 1,
            reward: 0.0,
            next_state: onehot(1, 2),
            terminal: false,
        }];
        let mut q2 = q.clone();
        let stats = q_transfer_update(&mut q2, &mut Optimizer::sgd(0.5), &QTransferConfig::default(), &ts, &[]).unwrap();
        assert_eq!(stats.kept, 0);
        assert_eq!(q2.params(), q.params());
    }

    #[test]
    fn single_sample_loss() {
        let mut q = QNetwork::tabular(1, 1);
        let ts = vec![QTransition {
            state: onehot(0, 1),
            action: 0,
            reward: 0.3,
            next_state: onehot(0, 1),
            terminal: true,
        }];
        let cfg = QTransferConfig { zeta: 0.0, ..Default::default() };
        let stats = q_transfer_update(&mut q, &mut Optimizer::sgd(1.0), &cfg, &ts, &[]).unwrap();
        assert_eq!(stats.kept, 1);
        assert!((stats.loss - 0.5 * 0.09).abs() < 1e-15);
        assert!((q.q_values(&[1.0]).unwrap()[0] - 0.3).abs() < 1e-15);
    }
}
