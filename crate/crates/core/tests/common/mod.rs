//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use repaint_core::approximator::{Action, PolicyHead, PolicyNetwork};
use repaint_core::rollout::Transition;

pub const FD_STEP: f64 = 1e-5;

/// Central differences of `f` at `x`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + FD_STEP;
            let up = f(&probe);
            probe[i] = x[i] - FD_STEP;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|)` in the Euclidean norm.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    let scale = norm(analytic).max(norm(numeric)).max(1e-12);
    norm(&diff) / scale
}

#[derive(Debug, Clone, Copy)]
pub enum HeadKind {
    Categorical,
    Gaussian,
}

pub const HEADS: [HeadKind; 2] = [HeadKind::Categorical, HeadKind::Gaussian];

/// Small random policy with weights large enough to make it far from
/// uniform.
pub fn random_policy(rng: &mut ChaCha8Rng, head: HeadKind, obs_dim: usize) -> PolicyNetwork {
    let head = match head {
        HeadKind::Categorical => PolicyHead::Categorical { n_actions: 3 },
        HeadKind::Gaussian => PolicyHead::DiagonalGaussian {
            action_dim: 2,
            init_log_std: -0.5,
        },
    };
    let mut net = PolicyNetwork::new(obs_dim, &[6, 5], head, rng.random());
    let noise = Normal::new(0.0, 0.4).unwrap();
    let n = net.n_params();
    let values = net.params_mut().values_mut();
    for v in values.iter_mut() {
        *v += noise.sample(rng);
    }
    if let PolicyHead::DiagonalGaussian { action_dim, .. } = head {
        for v in &mut values[n - action_dim..] {
            *v = rng.random_range(-1.0..0.5);
        }
    }
    net
}

pub fn random_states(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect()
}

/// Transitions whose actions are drawn from `behavior` and whose recorded
/// log-probabilities are `behavior`'s. Samples whose ratio under `actor`
/// lies within `margin` of a clip boundary are dropped, so the clipped
/// objective is differentiable at every kept sample.
pub fn transitions_away_from_kinks(
    rng: &mut ChaCha8Rng,
    actor: &PolicyNetwork,
    behavior: &PolicyNetwork,
    states: &[Vec<f64>],
    clip: f64,
    margin: f64,
) -> Vec<Transition> {
    states
        .iter()
        .filter_map(|s| {
            let dist = behavior.forward(s).unwrap();
            let action = dist.sample(rng);
            let lp_b = dist.log_prob(&action).unwrap();
            let lp = actor.forward(s).unwrap().log_prob(&action).unwrap();
            let ratio = (lp - lp_b).exp();
            if (ratio - (1.0 - clip)).abs() < margin || (ratio - (1.0 + clip)).abs() < margin {
                return None;
            }
            Some(Transition {
                state: s.clone(),
                action,
                next_state: s.clone(),
                reward: 0.0,
                log_prob_behavior: lp_b,
                done: false,
                terminal: false,
            })
        })
        .collect()
}

/// Copy of `net` with its parameters replaced by `values`.
pub fn with_params(net: &PolicyNetwork, values: &[f64]) -> PolicyNetwork {
    let mut out = net.clone();
    out.params_mut().values_mut().copy_from_slice(values);
    out
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let d = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

/// One episode for the GAE oracle: `values[t] = V(s_t)` for `t < len`,
/// `bootstrap` is `V(s_len)` (ignored when `terminal`).
#[derive(Debug, Clone)]
pub struct Episode {
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub bootstrap: f64,
    pub terminal: bool,
}

impl Episode {
    pub fn random(rng: &mut ChaCha8Rng, max_len: usize) -> Self {
        let len = rng.random_range(1..=max_len);
        Self {
            rewards: (0..len).map(|_| rng.random_range(-2.0..2.0)).collect(),
            values: (0..len).map(|_| rng.random_range(-5.0..5.0)).collect(),
            bootstrap: rng.random_range(-5.0..5.0),
            terminal: rng.random_bool(0.5),
        }
    }

    fn next_value(&self, t: usize) -> f64 {
        if t + 1 < self.values.len() {
            self.values[t + 1]
        } else if self.terminal {
            0.0
        } else {
            self.bootstrap
        }
    }

    /// `A_t = sum_k (gamma * lambda)^k delta_{t+k}`, summed explicitly.
    pub fn double_sum_advantages(&self, gamma: f64, lambda: f64) -> Vec<f64> {
        let n = self.rewards.len();
        let delta: Vec<f64> = (0..n)
            .map(|t| self.rewards[t] + gamma * self.next_value(t) - self.values[t])
            .collect();
        (0..n)
            .map(|t| (t..n).map(|j| (gamma * lambda).powi((j - t) as i32) * delta[j]).sum())
            .collect()
    }

    /// Flat arrays in the layout `gae_from_values` expects:
    /// `(rewards, values, next_values, dones, terminals)`.
    pub fn arrays(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>, Vec<bool>) {
        let n = self.rewards.len();
        let next: Vec<f64> = (0..n)
            .map(|t| if t + 1 < n { self.values[t + 1] } else { self.bootstrap })
            .collect();
        let dones: Vec<bool> = (0..n).map(|t| t + 1 == n).collect();
        let terminals: Vec<bool> = (0..n).map(|t| t + 1 == n && self.terminal).collect();
        (self.rewards.clone(), self.values.clone(), next, dones, terminals)
    }
}

/// Brute-force selection oracles.
pub mod select {
    use rand::Rng;

    pub fn threshold(adv: &[f64], zeta: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, a) in adv.iter().enumerate() {
            if *a >= zeta {
                out.push(i);
            }
        }
        out
    }

    pub fn abs_threshold(adv: &[f64], zeta: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, a) in adv.iter().enumerate() {
            if a.abs() > zeta {
                out.push(i);
            }
        }
        out
    }

    /// Smallest count covering `fraction` of the batch; ranks by advantage,
    /// earlier index first among equals.
    pub fn top_fraction(adv: &[f64], fraction: f64) -> Vec<usize> {
        let n = adv.len();
        let mut count = 0;
        while count < n && (count as f64) < fraction * n as f64 - 1e-9 {
            count += 1;
        }
        let mut pairs: Vec<(f64, usize)> = adv.iter().cloned().zip(0..).collect();
        // Selection sort keeps the ordering rule explicit.
        let mut ranked = Vec::with_capacity(n);
        while !pairs.is_empty() {
            let mut best = 0;
            for j in 1..pairs.len() {
                let (a, i) = pairs[j];
                let (b, k) = pairs[best];
                if a > b || (a == b && i < k) {
                    best = j;
                }
            }
            ranked.push(pairs.remove(best).1);
        }
        let mut top: Vec<usize> = ranked.into_iter().take(count).collect();
        top.sort();
        top
    }

    /// Inverse-CDF draws with a linear scan, consuming one uniform per draw.
    pub fn prioritized<R: Rng>(adv: &[f64], exponent: f64, samples: usize, rng: &mut R) -> Vec<usize> {
        if adv.is_empty() {
            return Vec::new();
        }
        let w: Vec<f64> = adv.iter().map(|a| (a.max(0.0) + 1e-6).powf(exponent)).collect();
        let total: f64 = w.iter().sum();
        (0..samples)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for (i, wi) in w.iter().enumerate() {
                    acc += wi;
                    if acc > u {
                        return i;
                    }
                }
                w.len() - 1
            })
            .collect()
    }
}

/// Deterministic 4-state chain: states 0..3, actions left (0) and right (1).
/// Moving right from state 2 reaches the terminal state 3 with reward 1;
/// bumping the left wall pays 0.1; everything else pays 0.
pub mod chain {
    pub const N_STATES: usize = 4;
    pub const N_ACTIONS: usize = 2;
    pub const GOAL: usize = 3;

    pub fn step(s: usize, a: usize) -> (usize, f64, bool) {
        match (s, a) {
            (0, 0) => (0, 0.1, false),
            (s, 0) => (s - 1, 0.0, false),
            (2, 1) => (GOAL, 1.0, true),
            (s, _) => (s + 1, 0.0, false),
        }
    }

    /// Optimal action values by value iteration, to machine precision.
    pub fn value_iteration(gamma: f64) -> [[f64; N_ACTIONS]; N_STATES] {
        let mut q = [[0.0f64; N_ACTIONS]; N_STATES];
        loop {
            let mut next = q;
            let mut change: f64 = 0.0;
            for s in 0..GOAL {
                for a in 0..N_ACTIONS {
                    let (s2, r, done) = step(s, a);
                    let v2 = if done { 0.0 } else { q[s2][0].max(q[s2][1]) };
                    next[s][a] = r + gamma * v2;
                    change = change.max((next[s][a] - q[s][a]).abs());
                }
            }
            q = next;
            if change < 1e-15 {
                return q;
            }
        }
    }

    pub fn onehot(s: usize) -> Vec<f64> {
        let mut v = vec![0.0; N_STATES];
        v[s] = 1.0;
        v
    }
}

pub fn discrete(a: usize) -> Action {
    Action::Discrete(a)
}
