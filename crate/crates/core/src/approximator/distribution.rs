use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Action chosen by a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }
}

/// Shape of an action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous(usize),
}

impl ActionSpace {
    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete(n), Action::Discrete(a)) => a < n,
            (ActionSpace::Continuous(d), Action::Continuous(v)) => {
                v.len() == *d && v.iter().all(|x| x.is_finite())
            }
            _ => false,
        }
    }
}

/// Distribution over actions produced by a policy head.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionDistribution {
    Categorical {
        probs: Vec<f64>,
        log_probs: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        log_std: Vec<f64>,
    },
}

/// Gradient of a scalar with respect to the distribution parameters: logits
/// for a categorical, mean and log-std for a diagonal Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub enum DistGrad {
    Logits(Vec<f64>),
    Gaussian { mean: Vec<f64>, log_std: Vec<f64> },
}

impl DistGrad {
    /// `self += scale * other`; both must come from the same head.
    pub fn add_scaled(&mut self, scale: f64, other: &DistGrad) {
        match (self, other) {
            (DistGrad::Logits(a), DistGrad::Logits(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y)
            }
            (
                DistGrad::Gaussian { mean, log_std },
                DistGrad::Gaussian {
                    mean: om,
                    log_std: os,
                },
            ) => {
                mean.iter_mut().zip(om).for_each(|(x, y)| *x += scale * y);
                log_std.iter_mut().zip(os).for_each(|(x, y)| *x += scale * y);
            }
            _ => panic!("mixed distribution heads in gradient accumulation"),
        }
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        match &mut self {
            DistGrad::Logits(a) => a.iter_mut().for_each(|x| *x *= scale),
            DistGrad::Gaussian { mean, log_std } => {
                mean.iter_mut().for_each(|x| *x *= scale);
                log_std.iter_mut().for_each(|x| *x *= scale);
            }
        }
        self
    }
}

impl ActionDistribution {
    /// Softmax over `logits`, computed in log space.
    pub fn categorical_from_logits(logits: &[f64]) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::contract("categorical distribution needs at least one action"));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        let log_probs: Vec<f64> = logits.iter().map(|l| l - lse).collect();
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        Ok(ActionDistribution::Categorical { probs, log_probs })
    }

    pub fn categorical_from_probs(probs: &[f64]) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p > 0.0) || !p.is_finite()) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::contract("probabilities must be positive and sum to one"));
        }
        Ok(ActionDistribution::Categorical {
            probs: probs.to_vec(),
            log_probs: probs.iter().map(|p| p.ln()).collect(),
        })
    }

    pub fn gaussian(mean: Vec<f64>, log_std: Vec<f64>) -> Result<Self> {
        check_dim("gaussian log-std", mean.len(), log_std.len())?;
        if mean.iter().chain(&log_std).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian parameters"));
        }
        Ok(ActionDistribution::Gaussian { mean, log_std })
    }

    pub fn action_space(&self) -> ActionSpace {
        match self {
            ActionDistribution::Categorical { probs, .. } => ActionSpace::Discrete(probs.len()),
            ActionDistribution::Gaussian { mean, .. } => ActionSpace::Continuous(mean.len()),
        }
    }

    pub fn log_prob(&self, action: &Action) -> Result<f64> {
        match (self, action) {
            (ActionDistribution::Categorical { log_probs, .. }, Action::Discrete(a)) => log_probs
                .get(*a)
                .copied()
                .ok_or_else(|| Error::contract(format!("action {a} outside {} actions", log_probs.len()))),
            (ActionDistribution::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                check_dim("continuous action", mean.len(), x.len())?;
                Ok(mean
                    .iter()
                    .zip(log_std)
                    .zip(x)
                    .map(|((m, ls), a)| {
                        let z = (a - m) * (-ls).exp();
                        -0.5 * z * z - ls - HALF_LN_2PI
                    })
                    .sum())
            }
            _ => Err(Error::contract("action kind does not match distribution")),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            ActionDistribution::Categorical { probs, log_probs } => {
                -probs.iter().zip(log_probs).map(|(p, l)| p * l).sum::<f64>()
            }
            ActionDistribution::Gaussian { log_std, .. } => {
                log_std.iter().map(|ls| ls + HALF_LN_2PI + 0.5).sum()
            }
        }
    }

    /// Cross-entropy `H(target || self) = -E_target[log self]`.
    pub fn cross_entropy_from(&self, target: &ActionDistribution) -> Result<f64> {
        match (self, target) {
            (
                ActionDistribution::Categorical { log_probs, .. },
                ActionDistribution::Categorical { probs: tp, .. },
            ) => {
                check_dim("cross-entropy actions", tp.len(), log_probs.len())?;
                Ok(-tp.iter().zip(log_probs).map(|(p, l)| p * l).sum::<f64>())
            }
            (
                ActionDistribution::Gaussian { mean, log_std },
                ActionDistribution::Gaussian {
                    mean: tm,
                    log_std: tls,
                },
            ) => {
                check_dim("cross-entropy dims", tm.len(), mean.len())?;
                Ok(mean
                    .iter()
                    .zip(log_std)
                    .zip(tm.iter().zip(tls))
                    .map(|((m, ls), (t, tls))| {
                        let var = (2.0 * ls).exp();
                        let tvar = (2.0 * tls).exp();
                        ls + HALF_LN_2PI + (tvar + (t - m) * (t - m)) / (2.0 * var)
                    })
                    .sum())
            }
            _ => Err(Error::contract("cross-entropy between different heads")),
        }
    }

    /// `KL(self || other)`.
    pub fn kl_to(&self, other: &ActionDistribution) -> Result<f64> {
        Ok(other.cross_entropy_from(self)? - self.entropy())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Action {
        match self {
            ActionDistribution::Categorical { probs, .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Action::Discrete(i);
                    }
                }
                // Rounding left `acc` just below one.
                Action::Discrete(probs.iter().rposition(|p| *p > 0.0).unwrap_or(0))
            }
            ActionDistribution::Gaussian { mean, log_std } => Action::Continuous(
                mean.iter()
                    .zip(log_std)
                    .map(|(m, ls)| {
                        let z: f64 = rng.sample(StandardNormal);
                        m + ls.exp() * z
                    })
                    .collect(),
            ),
        }
    }

    /// Most likely action: argmax for a categorical, the mean for a Gaussian.
    pub fn mode(&self) -> Action {
        match self {
            ActionDistribution::Categorical { probs, .. } => {
                let mut best = 0;
                for (i, p) in probs.iter().enumerate() {
                    if *p > probs[best] {
                        best = i;
                    }
                }
                Action::Discrete(best)
            }
            ActionDistribution::Gaussian { mean, .. } => Action::Continuous(mean.clone()),
        }
    }

    pub fn grad_log_prob(&self, action: &Action) -> Result<DistGrad> {
        match (self, action) {
            (ActionDistribution::Categorical { probs, .. }, Action::Discrete(a)) => {
                if *a >= probs.len() {
                    return Err(Error::contract(format!("action {a} outside {} actions", probs.len())));
                }
                let mut g: Vec<f64> = probs.iter().map(|p| -p).collect();
                g[*a] += 1.0;
                Ok(DistGrad::Logits(g))
            }
            (ActionDistribution::Gaussian { mean, log_std }, Action::Continuous(x)) => {
                check_dim("continuous action", mean.len(), x.len())?;
                let mut gm = Vec::with_capacity(mean.len());
                let mut gs = Vec::with_capacity(mean.len());
                for ((m, ls), a) in mean.iter().zip(log_std).zip(x) {
                    let inv_var = (-2.0 * ls).exp();
                    let diff = a - m;
                    gm.push(diff * inv_var);
                    gs.push(diff * diff * inv_var - 1.0);
                }
                Ok(DistGrad::Gaussian { mean: gm, log_std: gs })
            }
            _ => Err(Error::contract("action kind does not match distribution")),
        }
    }

    pub fn grad_entropy(&self) -> DistGrad {
        match self {
            ActionDistribution::Categorical { probs, log_probs } => {
                let h = self.entropy();
                DistGrad::Logits(probs.iter().zip(log_probs).map(|(p, l)| -p * (l + h)).collect())
            }
            ActionDistribution::Gaussian { mean, log_std } => DistGrad::Gaussian {
                mean: vec![0.0; mean.len()],
                log_std: vec![1.0; log_std.len()],
            },
        }
    }

    /// Gradient of `H(target || self)` with respect to this distribution's
    /// parameters.
    pub fn grad_cross_entropy_from(&self, target: &ActionDistribution) -> Result<DistGrad> {
        match (self, target) {
            (
                ActionDistribution::Categorical { probs, .. },
                ActionDistribution::Categorical { probs: tp, .. },
            ) => {
                check_dim("cross-entropy actions", tp.len(), probs.len())?;
                Ok(DistGrad::Logits(probs.iter().zip(tp).map(|(q, t)| q - t).collect()))
            }
            (
                ActionDistribution::Gaussian { mean, log_std },
                ActionDistribution::Gaussian {
                    mean: tm,
                    log_std: tls,
                },
            ) => {
                check_dim("cross-entropy dims", tm.len(), mean.len())?;
                let mut gm = Vec::with_capacity(mean.len());
                let mut gs = Vec::with_capacity(mean.len());
                for ((m, ls), (t, tls)) in mean.iter().zip(log_std).zip(tm.iter().zip(tls)) {
                    let inv_var = (-2.0 * ls).exp();
                    let tvar = (2.0 * tls).exp();
                    gm.push(-(t - m) * inv_var);
                    gs.push(1.0 - (tvar + (t - m) * (t - m)) * inv_var);
                }
                Ok(DistGrad::Gaussian { mean: gm, log_std: gs })
            }
            _ => Err(Error::contract("cross-entropy between different heads")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let d = ActionDistribution::categorical_from_logits(&[0.0; 4]).unwrap();
        let ActionDistribution::Categorical { probs, .. } = &d else { unreachable!() };
        assert!(probs.iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert!((d.entropy() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn softmax_arithmetic() {
        let d = ActionDistribution::categorical_from_logits(&[2f64.ln(), 0.0]).unwrap();
        let ActionDistribution::Categorical { probs, .. } = &d else { unreachable!() };
        assert!((probs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((probs[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_prob_examples() {
        let d = ActionDistribution::categorical_from_probs(&[0.5, 0.5]).unwrap();
        assert_eq!(d.log_prob(&Action::Discrete(0)).unwrap(), 0.5f64.ln());

        let g = ActionDistribution::gaussian(vec![0.0], vec![0.0]).unwrap();
        let lp = g.log_prob(&Action::Continuous(vec![0.0])).unwrap();
        assert!((lp + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);

        let delta = 1e-8;
        let d = ActionDistribution::categorical_from_probs(&[1.0 - delta, delta]).unwrap();
        let lp = d.log_prob(&Action::Discrete(1)).unwrap();
        assert!(((lp - delta.ln()) / delta.ln()).abs() < 1e-6);
    }

    #[test]
    fn out_of_support_action_is_rejected() {
        let d = ActionDistribution::categorical_from_probs(&[0.5, 0.5]).unwrap();
        assert!(d.log_prob(&Action::Discrete(2)).is_err());
        assert!(d.log_prob(&Action::Continuous(vec![0.0])).is_err());
    }

    #[test]
    fn entropy_examples() {
        let g = ActionDistribution::gaussian(vec![0.3], vec![0.0]).unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((g.entropy() - expected).abs() < 1e-14);

        let mut last = f64::INFINITY;
        for delta in [1e-2, 1e-4, 1e-8, 1e-12] {
            let d = ActionDistribution::categorical_from_probs(&[1.0 - delta, delta]).unwrap();
            let h = d.entropy();
            assert!(h >= 0.0 && h < last);
            last = h;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn cross_entropy_of_self_is_entropy() {
        let d = ActionDistribution::categorical_from_logits(&[0.3, -1.2, 2.0]).unwrap();
        assert!((d.cross_entropy_from(&d).unwrap() - d.entropy()).abs() < 1e-12);
        let g = ActionDistribution::gaussian(vec![0.3, 1.0], vec![-0.2, 0.4]).unwrap();
        assert!((g.cross_entropy_from(&g).unwrap() - g.entropy()).abs() < 1e-12);
        assert!(g.kl_to(&g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn normalisation_holds_for_bounded_logits() {
        let logits = [50.0, -50.0, 0.0, 49.9, -12.0];
        let d = ActionDistribution::categorical_from_logits(&logits).unwrap();
        let ActionDistribution::Categorical { probs, .. } = &d else { unreachable!() };
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|p| *p > 0.0));
    }
}
