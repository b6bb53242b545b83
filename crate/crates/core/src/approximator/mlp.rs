use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::params::Layout;
use crate::error::{check_dim, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Layer sizes and activation of a fully connected network. The output
/// layer is always linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "default_bias")]
    pub bias: bool,
}

fn default_bias() -> bool {
    true
}

impl Architecture {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        Self {
            input,
            hidden: hidden.to_vec(),
            output,
            activation: Activation::Tanh,
            bias: true,
        }
    }

    /// A single bias-free linear map, i.e. a table when fed one-hot inputs.
    pub fn linear_without_bias(input: usize, output: usize) -> Self {
        Self {
            input,
            hidden: Vec::new(),
            output,
            activation: Activation::Tanh,
            bias: false,
        }
    }

    fn sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(self.input);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(self.output);
        sizes
    }
}

#[derive(Debug, Clone)]
struct Dense {
    fan_in: usize,
    fan_out: usize,
    weight: usize,
    bias: Option<usize>,
}

/// A fully connected network evaluated over an externally owned flat
/// parameter slice.
#[derive(Debug, Clone)]
pub struct Mlp {
    arch: Architecture,
    layers: Vec<Dense>,
    n_params: usize,
}

/// Activations recorded by a forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// `acts[0]` is the input; `acts[i]` the post-activation output of hidden
    /// layer `i - 1`.
    acts: Vec<Vec<f64>>,
}

impl Mlp {
    /// Builds the network and registers its segments in `layout`.
    pub fn new(arch: Architecture, layout: &mut Layout) -> Self {
        let sizes = arch.sizes();
        let start = layout.total();
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let weight = layout.push(format!("layer{i}.weight"), w[1], w[0]);
                let bias = arch
                    .bias
                    .then(|| layout.push(format!("layer{i}.bias"), w[1], 1));
                Dense {
                    fan_in: w[0],
                    fan_out: w[1],
                    weight,
                    bias,
                }
            })
            .collect();
        let n_params = layout.total() - start;
        Self {
            arch,
            layers,
            n_params,
        }
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input
    }

    pub fn output_dim(&self) -> usize {
        self.arch.output
    }

    fn layer_forward(&self, layer: &Dense, params: &[f64], x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..layer.fan_out {
            let row = &params[layer.weight + o * layer.fan_in..layer.weight + (o + 1) * layer.fan_in];
            let mut acc = layer.bias.map_or(0.0, |b| params[b + o]);
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.push(acc);
        }
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_dim("network input", self.arch.input, x.len())?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            self.layer_forward(layer, params, &cur, &mut next);
            if i != last {
                for v in next.iter_mut() {
                    *v = self.arch.activation.apply(*v);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, params: &[f64], x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        check_dim("network input", self.arch.input, x.len())?;
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        let mut output = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.fan_out);
            self.layer_forward(layer, params, acts.last().unwrap(), &mut out);
            if i != last {
                for v in out.iter_mut() {
                    *v = self.arch.activation.apply(*v);
                }
                acts.push(out);
            } else {
                output = out;
            }
        }
        Ok((output, MlpCache { acts }))
    }

    /// Accumulates `d_output^T * d(output)/d(params)` into `grad`.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, d_output: &[f64], grad: &mut [f64]) {
        let mut delta = d_output.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.acts[i];
            for (o, d) in delta.iter().enumerate() {
                let row = layer.weight + o * layer.fan_in;
                for (g, xi) in grad[row..row + layer.fan_in].iter_mut().zip(input) {
                    *g += d * xi;
                }
                if let Some(b) = layer.bias {
                    grad[b + o] += d;
                }
            }
            if i == 0 {
                break;
            }
            let mut below = vec![0.0; layer.fan_in];
            for (o, d) in delta.iter().enumerate() {
                let row = &params[layer.weight + o * layer.fan_in..layer.weight + (o + 1) * layer.fan_in];
                for (b, w) in below.iter_mut().zip(row) {
                    *b += d * w;
                }
            }
            for (b, y) in below.iter_mut().zip(input) {
                *b *= self.arch.activation.derivative_from_output(*y);
            }
            delta = below;
        }
    }

    /// Orthogonal initialisation: hidden layers use gain `hidden_gain`, the
    /// output layer `output_gain`. Biases start at zero.
    pub fn init_orthogonal<R: Rng + ?Sized>(
        &self,
        params: &mut [f64],
        rng: &mut R,
        hidden_gain: f64,
        output_gain: f64,
    ) {
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let gain = if i == last { output_gain } else { hidden_gain };
            let w = orthogonal_matrix(layer.fan_out, layer.fan_in, rng);
            for (p, v) in params[layer.weight..layer.weight + w.len()].iter_mut().zip(&w) {
                *p = gain * v;
            }
            if let Some(b) = layer.bias {
                params[b..b + layer.fan_out].fill(0.0);
            }
        }
    }
}

/// Row-major `rows x cols` matrix with orthonormal rows or columns
/// (whichever is the smaller set), via Gram-Schmidt on a Gaussian draw.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (long, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    // `short` vectors of length `long`.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows >= cols { basis[c][r] } else { basis[r][c] };
        }
    }
    out
}
