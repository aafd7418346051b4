use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::response::FeatureVector;

/// Label of the noise-only class.
pub const BACKGROUND: &str = "background";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct TrainParams {
    /// Margin penalty `C`; the L2 weight is `1 / (C · n)`.
    pub margin_penalty: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            margin_penalty: 100.0,
            epochs: 100,
            seed: 0,
        }
    }
}

/// One-vs-rest linear model: `score_k(x) = w_k · x + b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LinearModel {
    pub version: u32,
    pub class_labels: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LinearModel {
    pub const VERSION: u32 = 1;

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_labels.len() < 2 {
            return Err(Error::DegenerateLabels);
        }
        let d = self.dim();
        if self.weights.len() != self.class_labels.len()
            || self.biases.len() != self.class_labels.len()
            || self.weights.iter().any(|w| w.len() != d)
        {
            return Err(Error::Shape("inconsistent model dimensions".into()));
        }
        Ok(())
    }

    pub fn decision(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect()
    }

    /// Index of the highest-scoring class; the first wins ties.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        let d = self.decision(x);
        let mut best = 0;
        for (i, &v) in d.iter().enumerate() {
            if v > d[best] {
                best = i;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        &self.class_labels[self.predict_index(x)]
    }

    pub fn background_index(&self) -> Option<usize> {
        self.class_labels.iter().position(|l| l == BACKGROUND)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: LinearModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.version != Self::VERSION {
            return Err(Error::Serde(format!("unsupported model version {}", m.version)));
        }
        m.validate()?;
        Ok(m)
    }
}

/// Trains one binary hinge-loss + L2 model per class by Pegasos-style
/// stochastic subgradient descent. The bias is learned as the weight of a
/// constant input. Sample order per epoch comes from a seeded ChaCha stream,
/// so training is reproducible bit for bit.
pub fn train_classifier<S: AsRef<str>>(x: &[FeatureVector], y: &[S], params: &TrainParams) -> Result<LinearModel> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} samples but {} labels", x.len(), y.len())));
    }
    let d = x[0].len();
    if x.iter().any(|v| v.len() != d) {
        return Err(Error::Shape("feature vectors differ in length".into()));
    }
    if !(params.margin_penalty > 0.0) || params.epochs == 0 {
        return Err(Error::InvalidParameter("margin penalty and epochs must be > 0".into()));
    }
    let mut labels: Vec<String> = y.iter().map(|s| s.as_ref().to_string()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    let n = x.len();
    let lambda = 1.0 / (params.margin_penalty * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut weights = Vec::with_capacity(labels.len());
    let mut biases = Vec::with_capacity(labels.len());
    for (k, label) in labels.iter().enumerate() {
        let targets: Vec<f64> = y.iter().map(|s| if s.as_ref() == label { 1.0 } else { -1.0 }).collect();
        let mut rng = rng::stream(params.seed, k as u64);
        let mut order: Vec<usize> = (0..n).collect();
        // last coordinate is the bias
        let mut w = vec![0.0; d + 1];
        let mut avg = vec![0.0; d + 1];
        let mut t = 0usize;
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng);
            let last = epoch + 1 == params.epochs;
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let xi = &x[i].0;
                let margin = targets[i] * (w[..d].iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + w[d]);
                let shrink = 1.0 - eta * lambda;
                for wj in w.iter_mut() {
                    *wj *= shrink;
                }
                if margin < 1.0 {
                    let step = eta * targets[i];
                    for (wj, v) in w[..d].iter_mut().zip(xi) {
                        *wj += step * v;
                    }
                    w[d] += step;
                }
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > radius {
                    let s = radius / norm;
                    for wj in w.iter_mut() {
                        *wj *= s;
                    }
                }
                if last {
                    for (a, v) in avg.iter_mut().zip(&w) {
                        *a += v;
                    }
                }
            }
        }
        for a in avg.iter_mut() {
            *a /= n as f64;
        }
        biases.push(avg[d]);
        avg.truncate(d);
        weights.push(avg);
    }
    let model = LinearModel {
        version: LinearModel::VERSION,
        class_labels: labels,
        weights,
        biases,
    };
    model.validate()?;
    Ok(model)
}
