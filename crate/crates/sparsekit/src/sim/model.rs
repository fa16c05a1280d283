//! Linear classifier over mean-pooled token embeddings.
//!
//! Deliberately the smallest model whose per-sample loss separates the
//! planted-hard samples from the easy ones: softmax regression on the mean
//! of whatever tokens survive masking and merging. Forward pass is
//! deterministic; loss is cross-entropy and finite for all finite inputs.

use crate::masking::TokenSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub dim: usize,
    pub n_classes: usize,
    /// Row-major `dim x n_classes` weight matrix.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ToyModel {
    pub fn new(dim: usize, n_classes: usize) -> Self {
        ToyModel {
            dim,
            n_classes,
            weights: vec![0.0; dim * n_classes],
            bias: vec![0.0; n_classes],
        }
    }

    /// Mean of the token embeddings.
    pub fn features(tokens: &TokenSet) -> Vec<f64> {
        let n = tokens.len().max(1) as f64;
        let mut pooled = vec![0.0; tokens.dim];
        for t in &tokens.tokens {
            for (p, x) in pooled.iter_mut().zip(t) {
                *p += x / n;
            }
        }
        pooled
    }

    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (d, &x) in features.iter().enumerate() {
            let row = &self.weights[d * self.n_classes..(d + 1) * self.n_classes];
            for (zc, w) in z.iter_mut().zip(row) {
                *zc += w * x;
            }
        }
        z
    }

    fn log_probs(&self, features: &[f64]) -> Vec<f64> {
        let z = self.logits(features);
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = z.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
        z.into_iter().map(|x| x - log_sum).collect()
    }

    /// Cross-entropy loss for one sample.
    pub fn loss(&self, features: &[f64], label: usize) -> f64 {
        -self.log_probs(features)[label]
    }

    pub fn predict(&self, features: &[f64]) -> usize {
        let z = self.logits(features);
        let mut best = 0;
        for (c, &x) in z.iter().enumerate() {
            if x > z[best] {
                best = c;
            }
        }
        best
    }

    /// One SGD step on a single sample. The gradient is scaled by `factor`
    /// (the pruning rescale weight) before the update. Returns the
    /// pre-update loss.
    pub fn train_step(&mut self, features: &[f64], label: usize, lr: f64, factor: f64) -> f64 {
        let log_p = self.log_probs(features);
        let loss = -log_p[label];
        let step = lr * factor;
        for (c, lp) in log_p.iter().enumerate() {
            let err = lp.exp() - f64::from(u8::from(c == label));
            self.bias[c] -= step * err;
            for (d, &x) in features.iter().enumerate() {
                self.weights[d * self.n_classes + c] -= step * err * x;
            }
        }
        loss
    }
}
