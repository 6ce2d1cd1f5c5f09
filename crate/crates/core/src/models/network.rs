//! Dense feed-forward network with ReLU hidden layers and a single logistic
//! output unit, trained on binary cross-entropy with hand-written backprop.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *slot = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Network {
    layers: Vec<Layer>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a logit, computed without overflow.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl Network {
    /// He-initialized network `inputs → hidden… → 1`.
    pub fn new(inputs: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect(),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Network { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Self {
        Network { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter count");
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    fn widest(&self) -> usize {
        self.layers.iter().map(|l| l.outputs.max(l.inputs)).max().unwrap_or(1)
    }

    /// Output logit for one encoded input.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let w = self.widest();
        let mut a = vec![0.0; w];
        let mut b = vec![0.0; w];
        a[..x.len()].copy_from_slice(x);
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            l.affine(&a[..l.inputs], &mut b[..l.outputs]);
            if i < last {
                for v in &mut b[..l.outputs] {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut a, &mut b);
        }
        a[0]
    }

    /// P(label = 1 | x).
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[u8]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| bce_from_logit(self.logit(x), f64::from(y)))
            .sum();
        total / xs.len() as f64
    }

    /// Gradient of [`Network::loss`] in the layout of [`Network::params`].
    pub fn gradient(&self, xs: &[Vec<f64>], ys: &[u8]) -> Vec<f64> {
        let mut grad = vec![0.0; self.param_count()];
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        let offsets = self.offsets();
        for (x, &y) in xs.iter().zip(ys) {
            self.backprop(x, f64::from(y), &mut acts, &offsets, &mut grad);
        }
        let n = xs.len() as f64;
        for g in &mut grad {
            *g /= n;
        }
        grad
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut at = 0;
        for l in &self.layers {
            out.push(at);
            at += l.weights.len() + l.bias.len();
        }
        out
    }

    /// Adds the gradient of one sample's loss into `grad`.
    fn backprop(&self, x: &[f64], y: f64, acts: &mut Vec<Vec<f64>>, offsets: &[usize], grad: &mut [f64]) {
        let last = self.layers.len() - 1;
        acts.clear();
        acts.push(x.to_vec());
        for (i, l) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; l.outputs];
            l.affine(acts.last().unwrap(), &mut out);
            if i < last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        // dL/dlogit for sigmoid + cross-entropy
        let mut delta = vec![sigmoid(acts[last + 1][0]) - y];
        for i in (0..=last).rev() {
            let l = &self.layers[i];
            let input = &acts[i];
            let base = offsets[i];
            for o in 0..l.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * l.inputs..base + (o + 1) * l.inputs];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
                grad[base + l.weights.len() + o] += d;
            }
            if i > 0 {
                let mut next = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                    for (n, w) in next.iter_mut().zip(row) {
                        *n += d * w;
                    }
                }
                // ReLU derivative, read off the stored activation
                for (n, a) in next.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
        }
    }
}

/// Update rule used by [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Optimizer {
    Adam { lr: f64 },
    Sgd { lr: f64 },
}

/// Mini-batch training with a seeded shuffle each epoch.
pub(crate) fn fit(
    net: &mut Network,
    xs: &[Vec<f64>],
    ys: &[u8],
    epochs: usize,
    batch_size: usize,
    opt: Optimizer,
    seed: u64,
) {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let p = net.param_count();
    let mut params = net.params();
    let mut m = vec![0.0; p];
    let mut v = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut acts = Vec::new();
    let offsets = net.offsets();
    let mut step = 0i32;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                net.backprop(&xs[i], f64::from(ys[i]), &mut acts, &offsets, &mut grad);
            }
            let scale = 1.0 / batch.len() as f64;
            step += 1;
            match opt {
                Optimizer::Adam { lr } => {
                    let c1 = 1.0 - BETA1.powi(step);
                    let c2 = 1.0 - BETA2.powi(step);
                    for k in 0..p {
                        let g = grad[k] * scale;
                        m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
                        v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
                        params[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPS);
                    }
                }
                Optimizer::Sgd { lr } => {
                    for k in 0..p {
                        params[k] -= lr * grad[k] * scale;
                    }
                }
            }
            net.set_params(&params);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn parameter_roundtrip() {
        let mut net = Network::new(3, &[4, 2], 1);
        let p = net.params();
        assert_eq!(p.len(), 3 * 4 + 4 + 4 * 2 + 2 + 2 + 1);
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        net.set_params(&shifted);
        assert_eq!(net.params(), shifted);
    }

    #[test]
    fn stable_cross_entropy() {
        assert!((bce_from_logit(0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bce_from_logit(800.0, 1.0).abs() < 1e-300);
        assert!((bce_from_logit(-800.0, 1.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn zero_hidden_layers_is_logistic_regression() {
        let net = Network::from_layers(vec![Layer {
            inputs: 2,
            outputs: 1,
            weights: vec![2.0, -1.0],
            bias: vec![0.5],
        }]);
        let x = [0.3, 0.8];
        let z: f64 = 0.5 + 2.0 * 0.3 - 0.8;
        assert!((net.probability(&x) - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences_on_small_net() {
        let net = Network::new(4, &[5, 3], 7);
        let mut rng = rng::seeded(3);
        let xs: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let ys: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let g = net.gradient(&xs, &ys);
        let base = net.params();
        let h = 1e-6;
        for k in 0..base.len() {
            let mut probe = net.clone();
            let mut p = base.clone();
            p[k] += h;
            probe.set_params(&p);
            let up = probe.loss(&xs, &ys);
            p[k] -= 2.0 * h;
            probe.set_params(&p);
            let down = probe.loss(&xs, &ys);
            let numeric = (up - down) / (2.0 * h);
            assert!((numeric - g[k]).abs() <= 1e-6, "param {k}: {numeric} vs {}", g[k]);
        }
    }
}
