use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use super::{LabeledExample, LearnerError};
use crate::agents::CheckpointError;

/// `P(unsafe | x) = sigmoid(w . x + b)`; a state is classified unsafe when
/// that probability exceeds `threshold`, so an undecided model reads safe.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub threshold: f64,
    /// Trained on single-class data; predictions are constant.
    pub degenerate: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Bias used for single-class data: sigmoid(±DEGENERATE_BIAS) ~ 1 - 2e-9.
const DEGENERATE_BIAS: f64 = 20.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy before each epoch and after the last one.
    pub losses: Vec<f64>,
    pub accuracy: f64,
}

impl LogisticModel {
    pub fn zeros(n_features: usize) -> Self {
        Self {
            weights: vec![0.0; n_features],
            bias: 0.0,
            threshold: 0.5,
            degenerate: false,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn logit_sparse(&self, active: &[usize]) -> f64 {
        self.bias + active.iter().map(|&i| self.weights[i]).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnerError> {
        if x.len() != self.weights.len() {
            return Err(LearnerError::FeatureLength {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(sigmoid(
            self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>(),
        ))
    }

    pub fn predict_sparse(&self, active: &[usize]) -> f64 {
        sigmoid(self.logit_sparse(active))
    }

    pub fn classify_unsafe(&self, active: &[usize]) -> bool {
        self.predict_sparse(active) > self.threshold
    }

    pub fn accuracy(&self, data: &[LabeledExample]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data
            .iter()
            .filter(|e| self.classify_unsafe(&e.active) == e.collided)
            .count();
        hits as f64 / data.len() as f64
    }

    /// Mean binary cross-entropy.
    pub fn loss(&self, data: &[LabeledExample]) -> f64 {
        let total: f64 = data
            .iter()
            .map(|e| softplus(self.logit_sparse(&e.active)) - e.label() * self.logit_sparse(&e.active))
            .sum();
        total / data.len().max(1) as f64
    }

    /// Gradient of [`loss`](Self::loss) as `(d/dw, d/db)`.
    pub fn gradient(&self, data: &[LabeledExample]) -> (Vec<f64>, f64) {
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = 0.0;
        let n = data.len().max(1) as f64;
        for e in data {
            let r = (self.predict_sparse(&e.active) - e.label()) / n;
            gb += r;
            for &i in &e.active {
                gw[i] += r;
            }
        }
        (gw, gb)
    }

    pub fn save(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "saferl-logistic v1")?;
        writeln!(w, "threshold {}", self.threshold)?;
        writeln!(w, "bias {}", self.bias)?;
        writeln!(w, "degenerate {}", self.degenerate)?;
        let ws: Vec<String> = self.weights.iter().map(|v| v.to_string()).collect();
        writeln!(w, "weights {} {}", self.weights.len(), ws.join(" "))
    }

    pub fn load(r: &mut dyn BufRead) -> Result<Self, CheckpointError> {
        let bad = |m: &str| CheckpointError::Format(m.to_string());
        let mut lines = r.lines();
        let mut next = |name: &str| -> Result<String, CheckpointError> {
            let line = lines.next().transpose()?.ok_or_else(|| bad(name))?;
            Ok(line)
        };
        let header = next("header")?;
        if header.trim() != "saferl-logistic v1" {
            return Err(CheckpointError::Version(header));
        }
        let field = |line: String, name: &str| -> Result<String, CheckpointError> {
            line.strip_prefix(name)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(name))
        };
        let threshold: f64 = field(next("threshold")?, "threshold")?
            .parse()
            .map_err(|_| bad("threshold"))?;
        let bias: f64 = field(next("bias")?, "bias")?.parse().map_err(|_| bad("bias"))?;
        let degenerate: bool = field(next("degenerate")?, "degenerate")?
            .parse()
            .map_err(|_| bad("degenerate"))?;
        let w = field(next("weights")?, "weights")?;
        let mut parts = w.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("weight count"))?;
        let weights = parts
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("weight value"))?;
        if weights.len() != n {
            return Err(bad("weight count mismatch"));
        }
        Ok(Self {
            weights,
            bias,
            threshold,
            degenerate,
        })
    }
}

/// Full-batch gradient descent on mean cross-entropy, starting from zero.
///
/// Identical feature vectors are merged into weighted patterns first, which
/// leaves the loss and gradient unchanged. Single-class data yields a
/// constant classifier flagged as degenerate.
pub fn train_logistic(
    data: &[LabeledExample],
    n_features: usize,
    step_size: f64,
    epochs: usize,
) -> Result<(LogisticModel, TrainReport), LearnerError> {
    if data.is_empty() {
        return Err(LearnerError::EmptyDataset);
    }
    if let Some(e) = data.iter().flat_map(|e| &e.active).find(|&&i| i >= n_features) {
        return Err(LearnerError::FeatureLength {
            expected: n_features,
            found: e + 1,
        });
    }
    let positives = data.iter().filter(|e| e.collided).count();
    let mut model = LogisticModel::zeros(n_features);
    if positives == 0 || positives == data.len() {
        model.degenerate = true;
        model.bias = if positives == 0 {
            -DEGENERATE_BIAS
        } else {
            DEGENERATE_BIAS
        };
        let loss = model.loss(data);
        return Ok((
            model,
            TrainReport {
                losses: vec![loss],
                accuracy: 1.0,
            },
        ));
    }

    // pattern -> (unsafe count, total count)
    let mut patterns: BTreeMap<&[usize], (f64, f64)> = BTreeMap::new();
    for e in data {
        let c = patterns.entry(e.active.as_slice()).or_default();
        c.0 += e.label();
        c.1 += 1.0;
    }
    let n = data.len() as f64;
    let loss_of = |m: &LogisticModel| -> f64 {
        patterns
            .iter()
            .map(|(x, &(pos, tot))| {
                let z = m.logit_sparse(x);
                tot * softplus(z) - pos * z
            })
            .sum::<f64>()
            / n
    };
    let mut losses = Vec::with_capacity(epochs + 1);
    let mut gw = vec![0.0; n_features];
    for _ in 0..epochs {
        losses.push(loss_of(&model));
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &(pos, tot)) in &patterns {
            let r = (tot * model.predict_sparse(x) - pos) / n;
            gb += r;
            for &i in x.iter() {
                gw[i] += r;
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= step_size * g;
        }
        model.bias -= step_size * gb;
    }
    losses.push(loss_of(&model));
    let accuracy = model.accuracy(data);
    Ok((model, TrainReport { losses, accuracy }))
}
