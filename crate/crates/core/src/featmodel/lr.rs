//! Multinomial (softmax) logistic regression with an L2 penalty, trained by
//! full-batch gradient descent with a backtracking line search.
//!
//! Objective over `N` examples, parameters `W` (classes x features) and
//! intercepts `b` (not penalized):
//!
//! ```text
//! L(W, b) = 1/N * sum_i [ logsumexp(W x_i + b) - (W x_i + b)[y_i] ] + l2 / (2N) * ||W||^2
//! ```
//!
//! which is the usual `C`-parameterized objective divided by `C * N` with
//! `l2 = 1 / C`.

use serde::{Deserialize, Serialize};

use super::{FeatError, SparseVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub l2: f64,
    /// Stop once the Euclidean norm of the gradient drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Recorded for provenance. Training starts from zero weights and uses no
    /// randomness, so it does not change the result.
    pub seed: u64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            l2: 1.0,
            tolerance: 1e-6,
            max_iterations: 500,
            seed: 0,
        }
    }
}

/// Trained weights plus the diagnostics of the run that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrWeights {
    pub labels: Vec<String>,
    pub n_features: usize,
    /// Row-major `labels.len() x n_features`.
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub config: LrConfig,
    pub converged: bool,
    pub iterations: usize,
    pub final_loss: f64,
    pub gradient_norm: f64,
}

impl LrWeights {
    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.n_features..(class + 1) * self.n_features]
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.weights[class * self.n_features + feature]
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn logits(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.n_classes())
            .map(|c| {
                let row = self.row(c);
                self.intercepts[c]
                    + x.entries()
                        .iter()
                        .filter(|&&(j, _)| j < self.n_features)
                        .map(|&(j, v)| row[j] * v)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Predicted label and class probabilities (in `labels` order).
    /// Ties go to the earlier class.
    pub fn predict(&self, x: &SparseVector) -> (String, Vec<f64>) {
        let probs = softmax(&self.logits(x));
        let best = argmax(&probs);
        (self.labels[best].clone(), probs)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// The training objective over a fixed dataset. Parameters are a flat vector:
/// the weight matrix row-major, followed by the intercepts.
pub struct Objective<'a> {
    pub x: &'a [SparseVector],
    pub y: &'a [usize],
    pub n_classes: usize,
    pub n_features: usize,
    pub l2: f64,
}

impl Objective<'_> {
    pub fn n_params(&self) -> usize {
        self.n_classes * (self.n_features + 1)
    }

    fn logits(&self, theta: &[f64], x: &SparseVector, out: &mut [f64]) {
        let (w, b) = theta.split_at(self.n_classes * self.n_features);
        for (c, z) in out.iter_mut().enumerate() {
            let row = &w[c * self.n_features..(c + 1) * self.n_features];
            *z = b[c] + x.entries().iter().map(|&(j, v)| row[j] * v).sum::<f64>();
        }
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        self.eval(theta, None)
    }

    pub fn loss_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.n_params()];
        let loss = self.eval(theta, Some(&mut grad));
        (loss, grad)
    }

    fn eval(&self, theta: &[f64], mut grad: Option<&mut Vec<f64>>) -> f64 {
        let n = self.x.len() as f64;
        let nw = self.n_classes * self.n_features;
        let mut z = vec![0.0; self.n_classes];
        let mut loss = 0.0;
        for (x, &y) in self.x.iter().zip(self.y) {
            self.logits(theta, x, &mut z);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
            let lse = max + sum.ln();
            loss += lse - z[y];
            if let Some(g) = grad.as_deref_mut() {
                for c in 0..self.n_classes {
                    let residual = ((z[c] - lse).exp() - if c == y { 1.0 } else { 0.0 }) / n;
                    for &(j, v) in x.entries() {
                        g[c * self.n_features + j] += residual * v;
                    }
                    g[nw + c] += residual;
                }
            }
        }
        let w = &theta[..nw];
        let sq: f64 = w.iter().map(|v| v * v).sum();
        if let Some(g) = grad {
            for (gi, wi) in g[..nw].iter_mut().zip(w) {
                *gi += self.l2 / n * wi;
            }
        }
        loss / n + self.l2 / (2.0 * n) * sq
    }
}

/// Per-iteration record of an accepted step.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Trains the model. `y` holds indices into `labels`.
pub fn train_lr(
    x: &[SparseVector],
    y: &[usize],
    labels: &[String],
    n_features: usize,
    config: &LrConfig,
) -> Result<(LrWeights, TrainTrace), FeatError> {
    if x.len() != y.len() {
        return Err(FeatError::Shape(format!(
            "{} vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(FeatError::EmptyTrainingSet);
    }
    if labels.len() < 2 {
        return Err(FeatError::Shape("need at least two classes".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= labels.len()) {
        return Err(FeatError::Shape(format!("class index {bad} out of range")));
    }
    if let Some(missing) = (0..labels.len()).find(|c| !y.contains(c)) {
        return Err(FeatError::MissingClass(labels[missing].clone()));
    }
    if let Some(v) = x.iter().find(|v| v.dim_bound() > n_features) {
        return Err(FeatError::Shape(format!(
            "vector index {} exceeds feature count {n_features}",
            v.dim_bound() - 1
        )));
    }
    if !(config.l2 >= 0.0 && config.l2.is_finite()) {
        return Err(FeatError::Config(format!(
            "invalid l2 strength {}",
            config.l2
        )));
    }

    let obj = Objective {
        x,
        y,
        n_classes: labels.len(),
        n_features,
        l2: config.l2,
    };
    let mut theta = vec![0.0; obj.n_params()];
    let (mut loss, mut grad) = obj.loss_and_gradient(&theta);
    let mut losses = vec![loss];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    const ARMIJO: f64 = 1e-4;

    while iterations < config.max_iterations {
        let gnorm = norm(&grad);
        if gnorm < config.tolerance {
            converged = true;
            break;
        }
        let g2 = gnorm * gnorm;
        let mut accepted = None;
        while step > 1e-16 {
            let candidate: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let cand_loss = obj.loss(&candidate);
            if cand_loss <= loss - ARMIJO * step * g2 {
                accepted = Some((candidate, cand_loss));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss)) = accepted else {
            break;
        };
        theta = next;
        let (l, g) = obj.loss_and_gradient(&theta);
        debug_assert!(l == next_loss);
        loss = l;
        grad = g;
        losses.push(loss);
        iterations += 1;
        step *= 2.0;
    }
    if !converged && norm(&grad) < config.tolerance {
        converged = true;
    }

    let nw = labels.len() * n_features;
    let weights = LrWeights {
        labels: labels.to_vec(),
        n_features,
        weights: theta[..nw].to_vec(),
        intercepts: theta[nw..].to_vec(),
        config: config.clone(),
        converged,
        iterations,
        final_loss: loss,
        gradient_norm: norm(&grad),
    };
    if weights
        .weights
        .iter()
        .chain(&weights.intercepts)
        .any(|v| !v.is_finite())
    {
        return Err(FeatError::NonFinite);
    }
    Ok((weights, TrainTrace { losses }))
}
