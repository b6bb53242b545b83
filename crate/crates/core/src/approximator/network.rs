use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{ActionDistribution, ActionSpace, DistGrad};
use super::mlp::{Architecture, Mlp, MlpCache};
use super::params::{Layout, ParamVector};
use crate::error::{check_dim, Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
const POLICY_OUTPUT_GAIN: f64 = 0.01;
const VALUE_OUTPUT_GAIN: f64 = 1.0;

/// Output head of a policy network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PolicyHead {
    Categorical { n_actions: usize },
    /// State-independent learned log-std, clamped to
    /// `[LOG_STD_MIN, LOG_STD_MAX]`.
    DiagonalGaussian { action_dim: usize, init_log_std: f64 },
}

impl PolicyHead {
    pub fn action_space(&self) -> ActionSpace {
        match *self {
            PolicyHead::Categorical { n_actions } => ActionSpace::Discrete(n_actions),
            PolicyHead::DiagonalGaussian { action_dim, .. } => ActionSpace::Continuous(action_dim),
        }
    }

    /// Head matching `space`, with log-std initialised to -0.5 for continuous
    /// actions.
    pub fn for_space(space: ActionSpace) -> Self {
        match space {
            ActionSpace::Discrete(n_actions) => PolicyHead::Categorical { n_actions },
            ActionSpace::Continuous(action_dim) => PolicyHead::DiagonalGaussian {
                action_dim,
                init_log_std: -0.5,
            },
        }
    }

    fn output_width(&self) -> usize {
        match *self {
            PolicyHead::Categorical { n_actions } => n_actions,
            PolicyHead::DiagonalGaussian { action_dim, .. } => action_dim,
        }
    }
}

/// Forward-pass record needed to backpropagate through a policy.
#[derive(Debug, Clone)]
pub struct PolicyCache {
    mlp: MlpCache,
}

/// Stochastic policy `pi(a | s)`: an MLP trunk followed by a categorical or
/// diagonal-Gaussian head.
#[derive(Debug, Clone)]
pub struct PolicyNetwork {
    mlp: Mlp,
    head: PolicyHead,
    log_std_offset: Option<usize>,
    params: ParamVector,
}

impl PolicyNetwork {
    /// Freshly initialised network. Weights are orthogonal with the final
    /// layer scaled by 0.01, so the initial policy is close to uniform.
    pub fn new(observation_dim: usize, hidden: &[usize], head: PolicyHead, seed: u64) -> Self {
        let mut net = Self::zeros(Architecture::new(observation_dim, hidden, head.output_width()), head);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = net.mlp.n_params();
        net.mlp.init_orthogonal(
            &mut net.params.values_mut()[..n],
            &mut rng,
            HIDDEN_GAIN,
            POLICY_OUTPUT_GAIN,
        );
        net
    }

    /// Network with every weight zero (log-std set from the head).
    pub fn zeros(arch: Architecture, head: PolicyHead) -> Self {
        assert_eq!(arch.output, head.output_width(), "head width must match architecture output");
        let mut layout = Layout::new();
        let mlp = Mlp::new(arch, &mut layout);
        let log_std_offset = match head {
            PolicyHead::Categorical { .. } => None,
            PolicyHead::DiagonalGaussian { action_dim, .. } => Some(layout.push("log_std", action_dim, 1)),
        };
        let mut params = ParamVector::zeros(layout);
        if let (Some(off), PolicyHead::DiagonalGaussian { action_dim, init_log_std }) = (log_std_offset, head) {
            params.values_mut()[off..off + action_dim].fill(init_log_std);
        }
        Self {
            mlp,
            head,
            log_std_offset,
            params,
        }
    }

    /// Rebuilds a network from a descriptor and flat values.
    pub fn from_parts(arch: Architecture, head: PolicyHead, values: Vec<f64>) -> Result<Self> {
        if arch.output != head.output_width() {
            return Err(Error::contract("policy head width does not match architecture"));
        }
        let mut net = Self::zeros(arch, head);
        net.params = ParamVector::from_values(net.params.layout().clone(), values)?;
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        self.mlp.architecture()
    }

    pub fn head(&self) -> PolicyHead {
        self.head
    }

    pub fn action_space(&self) -> ActionSpace {
        self.head.action_space()
    }

    pub fn observation_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn distribution_from_output(&self, out: Vec<f64>) -> Result<ActionDistribution> {
        match self.head {
            PolicyHead::Categorical { .. } => ActionDistribution::categorical_from_logits(&out),
            PolicyHead::DiagonalGaussian { action_dim, .. } => {
                let off = self.log_std_offset.expect("gaussian head has log-std");
                let log_std = self.params.as_slice()[off..off + action_dim]
                    .iter()
                    .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
                    .collect();
                ActionDistribution::gaussian(out, log_std)
            }
        }
    }

    pub fn forward(&self, state: &[f64]) -> Result<ActionDistribution> {
        let out = self.mlp.forward(self.params.as_slice(), state)?;
        self.distribution_from_output(out)
    }

    pub fn forward_cached(&self, state: &[f64]) -> Result<(ActionDistribution, PolicyCache)> {
        let (out, mlp) = self.mlp.forward_cached(self.params.as_slice(), state)?;
        Ok((self.distribution_from_output(out)?, PolicyCache { mlp }))
    }

    /// Accumulates into `grad` the parameter gradient of a scalar whose
    /// gradient with respect to the distribution is `d`.
    pub fn backward(&self, cache: &PolicyCache, d: &DistGrad, grad: &mut [f64]) {
        let params = self.params.as_slice();
        match d {
            DistGrad::Logits(g) => self.mlp.backward(params, &cache.mlp, g, grad),
            DistGrad::Gaussian { mean, log_std } => {
                self.mlp.backward(params, &cache.mlp, mean, grad);
                let off = self.log_std_offset.expect("gaussian head has log-std");
                for (i, g) in log_std.iter().enumerate() {
                    let raw = params[off + i];
                    // Zero subgradient where the clamp is active.
                    if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                        grad[off + i] += g;
                    }
                }
            }
        }
    }
}

/// Forward-pass record for [`ValueNetwork::backward`].
#[derive(Debug, Clone)]
pub struct ValueCache {
    mlp: MlpCache,
}

/// State-value critic `V(s)`.
#[derive(Debug, Clone)]
pub struct ValueNetwork {
    mlp: Mlp,
    params: ParamVector,
}

impl ValueNetwork {
    pub fn new(observation_dim: usize, hidden: &[usize], seed: u64) -> Self {
        let mut net = Self::zeros(Architecture::new(observation_dim, hidden, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        net.mlp
            .init_orthogonal(net.params.values_mut(), &mut rng, HIDDEN_GAIN, VALUE_OUTPUT_GAIN);
        net
    }

    pub fn zeros(arch: Architecture) -> Self {
        assert_eq!(arch.output, 1, "value network has a scalar output");
        let mut layout = Layout::new();
        let mlp = Mlp::new(arch, &mut layout);
        Self {
            mlp,
            params: ParamVector::zeros(layout),
        }
    }

    pub fn from_parts(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        if arch.output != 1 {
            return Err(Error::contract("value network has a scalar output"));
        }
        let mut net = Self::zeros(arch);
        net.params = ParamVector::from_values(net.params.layout().clone(), values)?;
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        self.mlp.architecture()
    }

    pub fn observation_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.mlp.forward(self.params.as_slice(), state)?[0])
    }

    pub fn value_cached(&self, state: &[f64]) -> Result<(f64, ValueCache)> {
        let (out, mlp) = self.mlp.forward_cached(self.params.as_slice(), state)?;
        Ok((out[0], ValueCache { mlp }))
    }

    pub fn backward(&self, cache: &ValueCache, d_value: f64, grad: &mut [f64]) {
        self.mlp
            .backward(self.params.as_slice(), &cache.mlp, &[d_value], grad);
    }
}

/// Forward-pass record for [`QNetwork::backward`].
#[derive(Debug, Clone)]
pub struct QCache {
    mlp: MlpCache,
}

/// Action-value network `Q(s, .)` with one output per discrete action.
#[derive(Debug, Clone)]
pub struct QNetwork {
    mlp: Mlp,
    params: ParamVector,
}

impl QNetwork {
    pub fn zeros(arch: Architecture) -> Self {
        let mut layout = Layout::new();
        let mlp = Mlp::new(arch, &mut layout);
        Self {
            mlp,
            params: ParamVector::zeros(layout),
        }
    }

    /// A tabular Q-function over `n_states` one-hot encoded states.
    pub fn tabular(n_states: usize, n_actions: usize) -> Self {
        Self::zeros(Architecture::linear_without_bias(n_states, n_actions))
    }

    pub fn n_actions(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.mlp.forward(self.params.as_slice(), state)
    }

    pub fn q_values_cached(&self, state: &[f64]) -> Result<(Vec<f64>, QCache)> {
        let (out, mlp) = self.mlp.forward_cached(self.params.as_slice(), state)?;
        Ok((out, QCache { mlp }))
    }

    pub fn backward(&self, cache: &QCache, d_q: &[f64], grad: &mut [f64]) -> Result<()> {
        check_dim("q gradient", self.n_actions(), d_q.len())?;
        self.mlp.backward(self.params.as_slice(), &cache.mlp, d_q, grad);
        Ok(())
    }
}
