//! Hashed-feature logistic regression trained with seeded SGD.
//!
//! Weights are kept as `scale * v` during training so the L2 shrink applied
//! at every step costs O(1) instead of touching all `feature_dim` weights.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureConfig, SparseVector, FEATURIZER_VERSION};
use super::{validate_requests, Probability, ScoreRequest, Scorer, ScorerError};
use crate::dataset::{Label, LabeledExample};

const MODEL_FORMAT: &str = "chadpod-baseline/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub features: FeatureConfig,
    /// Stop at the first epoch whose dev accuracy drops below the previous one.
    pub stop_on_decline: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.2,
            epochs: 20,
            l2: 1e-4,
            seed: 0,
            features: FeatureConfig::default(),
            stop_on_decline: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let invalid = |m: String| Err(TrainError::InvalidConfig(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return invalid("learning_rate must be positive".into());
        }
        if self.epochs == 0 {
            return invalid("epochs must be at least 1".into());
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0 && self.learning_rate * self.l2 < 1.0) {
            return invalid("l2 must be non-negative with learning_rate * l2 < 1".into());
        }
        self.features.validate().map_err(TrainError::InvalidConfig)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid model file: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub features: FeatureConfig,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub featurizer_version: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    featurizer_version: String,
    feature_dim: usize,
    ngram_lo: usize,
    ngram_hi: usize,
    boundary_sentences: usize,
    bias: f64,
    /// Nonzero weights as `[index, value]` pairs in index order.
    weights: Vec<(u32, f64)>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn target(label: Label) -> f64 {
    match label {
        Label::Branch => 1.0,
        Label::NoBranch => 0.0,
    }
}

impl BaselineModel {
    pub fn zeros(features: FeatureConfig) -> Self {
        BaselineModel {
            features,
            weights: vec![0.0; features.feature_dim],
            bias: 0.0,
            featurizer_version: FEATURIZER_VERSION.to_string(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// `sigmoid(w . features + b)`.
    pub fn score(&self, req: &ScoreRequest) -> Probability {
        let x = featurize(&req.prefix, &req.postfix, &self.features);
        Probability::new(sigmoid(self.margin(&x))).expect("sigmoid lies in [0, 1]")
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            featurizer_version: self.featurizer_version.clone(),
            feature_dim: self.features.feature_dim,
            ngram_lo: self.features.ngram_lo,
            ngram_hi: self.features.ngram_hi,
            boundary_sentences: self.features.boundary_sentences,
            bias: self.bias,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect(),
        };
        let mut s = serde_json::to_string(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(data: &str) -> Result<Self, ModelFileError> {
        let file: ModelFile = serde_json::from_str(data).map_err(|e| ModelFileError::Invalid(e.to_string()))?;
        let invalid = |m: String| Err(ModelFileError::Invalid(m));
        if file.format != MODEL_FORMAT {
            return invalid(format!("unsupported format `{}`", file.format));
        }
        if file.featurizer_version != FEATURIZER_VERSION {
            return invalid(format!("unsupported featurizer `{}`", file.featurizer_version));
        }
        let features = FeatureConfig {
            feature_dim: file.feature_dim,
            ngram_lo: file.ngram_lo,
            ngram_hi: file.ngram_hi,
            boundary_sentences: file.boundary_sentences,
        };
        features.validate().map_err(ModelFileError::Invalid)?;
        if !file.bias.is_finite() {
            return invalid("bias is not finite".into());
        }
        let mut weights = vec![0.0; features.feature_dim];
        for (i, w) in file.weights {
            if i as usize >= features.feature_dim || !w.is_finite() {
                return invalid(format!("bad weight entry [{i}, {w}]"));
            }
            weights[i as usize] = w;
        }
        Ok(BaselineModel {
            features,
            weights,
            bias: file.bias,
            featurizer_version: file.featurizer_version,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        fs::write(path, self.to_json()).map_err(|source| ModelFileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        let data = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&data)
    }
}

/// Mean log-loss plus `l2 / 2 * |w|^2`, with its gradient in `w` and `b`.
pub fn log_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    data: &[(SparseVector, f64)],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = data.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (x, y) in data {
        let m = x.dot(weights) + bias;
        loss += softplus(m) - y * m;
        let g = sigmoid(m) - y;
        for &(i, v) in &x.entries {
            grad[i as usize] += g * v / n;
        }
        grad_b += g / n;
    }
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (loss / n + 0.5 * l2 * sq, grad, grad_b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_loss: f64,
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch whose checkpoint was returned.
    pub best_epoch: usize,
}

fn accuracy(model: &BaselineModel, data: &[(SparseVector, f64)]) -> f64 {
    let correct = data
        .iter()
        .filter(|(x, y)| (sigmoid(model.margin(x)) >= 0.5) == (*y == 1.0))
        .count();
    correct as f64 / data.len() as f64
}

fn encode(examples: &[LabeledExample], features: &FeatureConfig) -> Vec<(SparseVector, f64)> {
    examples
        .iter()
        .map(|e| (featurize(&e.prefix, &e.postfix, features), target(e.label)))
        .collect()
}

/// Fits logistic regression by SGD on log-loss with L2, shuffling each epoch
/// with a generator seeded from `cfg.seed`. Returns the checkpoint with the
/// best dev accuracy (earliest on ties), or the last epoch when `dev` is empty.
pub fn train_baseline(
    train: &[LabeledExample],
    dev: &[LabeledExample],
    cfg: &TrainConfig,
) -> Result<(BaselineModel, TrainReport), TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    cfg.validate()?;
    let train_data = encode(train, &cfg.features);
    let dev_data = encode(dev, &cfg.features);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let dim = cfg.features.feature_dim;
    let mut v = vec![0.0; dim];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let shrink = 1.0 - cfg.learning_rate * cfg.l2;

    let mut model = BaselineModel::zeros(cfg.features);
    let (initial_loss, _, _) = log_loss_and_gradient(&model.weights, 0.0, &train_data, cfg.l2);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, BaselineModel)> = None;
    let mut order: Vec<usize> = (0..train_data.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, y) = &train_data[i];
            let m = scale * x.dot(&v) + bias;
            let g = sigmoid(m) - y;
            scale *= shrink;
            let step = cfg.learning_rate * g / scale;
            for &(j, xj) in &x.entries {
                v[j as usize] -= step * xj;
            }
            bias -= cfg.learning_rate * g;
            if scale < 1e-6 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        model.weights.iter_mut().zip(&v).for_each(|(w, vi)| *w = scale * vi);
        model.bias = bias;

        let (loss, _, _) = log_loss_and_gradient(&model.weights, bias, &train_data, cfg.l2);
        if !loss.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        let dev_accuracy = (!dev_data.is_empty()).then(|| accuracy(&model, &dev_data));
        log.push(EpochLog {
            epoch,
            train_loss: loss,
            train_accuracy: accuracy(&model, &train_data),
            dev_accuracy,
        });

        let score = dev_accuracy.unwrap_or(f64::NEG_INFINITY);
        let improves = match &best {
            None => true,
            Some((b, _, _)) => score > *b || dev_accuracy.is_none(),
        };
        if improves {
            best = Some((score, epoch, model.clone()));
        }
        if cfg.stop_on_decline && epoch > 1 {
            if let (Some(now), Some(prev)) = (dev_accuracy, log[epoch - 2].dev_accuracy) {
                if now < prev {
                    break;
                }
            }
        }
    }

    let (_, best_epoch, model) = best.expect("at least one epoch runs");
    Ok((
        model,
        TrainReport {
            initial_loss,
            epochs: log,
            best_epoch,
        },
    ))
}

/// A trained model behind the [`Scorer`] interface. With `jobs > 1`
/// requests are featurized and scored on that many threads; output is
/// identical either way.
#[derive(Debug, Clone)]
pub struct BaselineScorer {
    model: BaselineModel,
    label: String,
    jobs: usize,
}

impl BaselineScorer {
    pub fn new(model: BaselineModel, label: impl Into<String>, jobs: usize) -> Self {
        BaselineScorer {
            model,
            label: label.into(),
            jobs: jobs.max(1),
        }
    }

    pub fn model(&self) -> &BaselineModel {
        &self.model
    }
}

impl Scorer for BaselineScorer {
    fn name(&self) -> String {
        format!("baseline:{}", self.label)
    }

    fn score_batch(&mut self, requests: &[ScoreRequest]) -> Result<Vec<Probability>, ScorerError> {
        validate_requests(requests)?;
        if self.jobs == 1 || requests.len() < 2 {
            return Ok(requests.iter().map(|r| self.model.score(r)).collect());
        }
        let chunk = requests.len().div_ceil(self.jobs);
        let model = &self.model;
        let parts: Vec<Vec<Probability>> = std::thread::scope(|s| {
            let handles: Vec<_> = requests
                .chunks(chunk)
                .map(|c| s.spawn(move || c.iter().map(|r| model.score(r)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("scoring thread")).collect()
        });
        Ok(parts.into_iter().flatten().collect())
    }
}
