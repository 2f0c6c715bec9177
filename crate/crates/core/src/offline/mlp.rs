//! Fully connected feed-forward network with a linear output unit.
//!
//! Parameters live in one flat vector: for each layer, the weight matrix
//! (row-major, `out × in`) followed by its bias vector.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FitError;
use crate::rng::{seeded, StreamRng};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Relu => "relu",
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Self::Tanh => z.tanh(),
            Self::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    /// Strength of the `½ α ‖W‖²` weight penalty.
    pub l2_alpha: f64,
    /// Adam step size.
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![50],
            activation: Activation::Relu,
            l2_alpha: 0.0001,
            learning_rate: 0.001,
            epochs: 200,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Layer widths from input to the single output.
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub params: Vec<f64>,
}

struct Trace {
    /// Pre-activations per non-input layer.
    z: Vec<Vec<f64>>,
    /// Activations per layer, input included.
    a: Vec<Vec<f64>>,
}

impl Network {
    /// Seeded initialization: weights and biases uniform in
    /// `±sqrt(6 / (fan_in + fan_out))`.
    pub fn init(n_inputs: usize, hidden: &[usize], activation: Activation, rng: &mut StreamRng) -> Self {
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut params = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_out * (fan_in + 1) {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Self { sizes, activation, params }
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Offsets of (weights, biases) for layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += self.sizes[k + 1] * (self.sizes[k] + 1);
        }
        (off, off + self.sizes[l + 1] * self.sizes[l])
    }

    fn forward(&self, row: &[f64]) -> Trace {
        let mut a = vec![row.to_vec()];
        let mut z = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (wo, bo) = self.offsets(l);
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let prev = &a[l];
            let zl: Vec<f64> = (0..nout)
                .map(|o| {
                    let w = &self.params[wo + o * nin..wo + (o + 1) * nin];
                    self.params[bo + o] + w.iter().zip(prev).map(|(wi, xi)| wi * xi).sum::<f64>()
                })
                .collect();
            let al = if l + 1 == self.n_layers() {
                zl.clone()
            } else {
                zl.iter().map(|&v| self.activation.apply(v)).collect()
            };
            z.push(zl);
            a.push(al);
        }
        Trace { z, a }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.forward(row).a.last().unwrap()[0]
    }

    /// Squared norm of the weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        (0..self.n_layers())
            .map(|l| {
                let (wo, bo) = self.offsets(l);
                self.params[wo..bo].iter().map(|w| w * w).sum::<f64>()
            })
            .sum()
    }

    /// `½ Σ (ŷ − y)² + ½ l2 ‖W‖²` over `rows`.
    pub fn objective(&self, x: &Matrix, y: &[f64], rows: &[usize], l2: f64) -> f64 {
        let sse: f64 = rows.iter().map(|&i| (self.predict_row(x.row(i)) - y[i]).powi(2)).sum();
        0.5 * sse + 0.5 * l2 * self.weight_norm_sq()
    }

    /// Gradient of [`Network::objective`] with respect to `params`.
    pub fn gradient(&self, x: &Matrix, y: &[f64], rows: &[usize], l2: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.params.len()];
        for &i in rows {
            self.accumulate_sample_gradient(x.row(i), y[i], &mut g);
        }
        for l in 0..self.n_layers() {
            let (wo, bo) = self.offsets(l);
            for k in wo..bo {
                g[k] += l2 * self.params[k];
            }
        }
        g
    }

    fn accumulate_sample_gradient(&self, row: &[f64], target: f64, g: &mut [f64]) {
        let t = self.forward(row);
        let nl = self.n_layers();
        let mut delta = vec![t.a[nl][0] - target];
        for l in (0..nl).rev() {
            let (wo, bo) = self.offsets(l);
            let nin = self.sizes[l];
            let prev = &t.a[l];
            for (o, d) in delta.iter().enumerate() {
                g[bo + o] += d;
                for (k, p) in prev.iter().enumerate() {
                    g[wo + o * nin + k] += d * p;
                }
            }
            if l == 0 {
                break;
            }
            let next: Vec<f64> = (0..nin)
                .map(|k| {
                    let back: f64 = delta.iter().enumerate().map(|(o, d)| d * self.params[wo + o * nin + k]).sum();
                    back * self.activation.derivative(t.z[l - 1][k], t.a[l][k])
                })
                .collect();
            delta = next;
        }
    }

    /// One plain gradient step on a single sample.
    pub fn sgd_step(&mut self, row: &[f64], target: f64, learning_rate: f64, l2: f64) {
        let mut g = vec![0.0; self.params.len()];
        self.accumulate_sample_gradient(row, target, &mut g);
        for l in 0..self.n_layers() {
            let (wo, bo) = self.offsets(l);
            for k in wo..bo {
                g[k] += l2 * self.params[k];
            }
        }
        for (p, gi) in self.params.iter_mut().zip(&g) {
            *p -= learning_rate * gi;
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * g[k];
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * g[k] * g[k];
            params[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

fn validate(p: &MlpParams) -> Result<(), FitError> {
    if p.hidden_sizes.is_empty() || p.hidden_sizes.contains(&0) {
        return Err(FitError::InvalidParameter("hidden_layer_sizes must be non-empty and positive".into()));
    }
    if !(p.l2_alpha >= 0.0 && p.l2_alpha.is_finite()) {
        return Err(FitError::InvalidParameter("alpha must be >= 0".into()));
    }
    if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
        return Err(FitError::InvalidParameter("learning_rate must be > 0".into()));
    }
    if p.batch_size == 0 {
        return Err(FitError::InvalidParameter("batch_size must be >= 1".into()));
    }
    Ok(())
}

/// Mini-batch Adam on `½ Σ err² + ½ α ‖W‖²`; each batch carries its share
/// `α · B / n` of the penalty. Returns the network and the full objective
/// after every epoch.
pub fn fit_mlp(x: &Matrix, y: &[f64], p: &MlpParams, seed: u64) -> Result<(Network, Vec<f64>), FitError> {
    validate(p)?;
    let n = x.nrows();
    let mut rng = seeded(seed);
    let mut net = Network::init(x.ncols(), &p.hidden_sizes, p.activation, &mut rng);
    let mut adam = Adam::new(net.params.len());
    let mut order: Vec<usize> = (0..n).collect();
    let all: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(p.epochs);
    for epoch in 0..p.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(p.batch_size) {
            let l2 = p.l2_alpha * batch.len() as f64 / n as f64;
            let g = net.gradient(x, y, batch, l2);
            adam.step(&mut net.params, &g, p.learning_rate);
        }
        let loss = net.objective(x, y, &all, p.l2_alpha);
        if !loss.is_finite() {
            return Err(FitError::DivergedLoss { epoch, loss });
        }
        losses.push(loss);
    }
    Ok((net, losses))
}
