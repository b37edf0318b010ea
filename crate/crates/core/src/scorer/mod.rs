//! Boundary-probability scorers.
//!
//! A [`Scorer`] maps (prefix, postfix) pairs to the probability that the
//! boundary between them is a branching point. Three implementations ship:
//! the trainable hashed logistic-regression [`baseline`], the
//! [`external`] client for out-of-process scorers speaking the
//! `chadpod-scorer/1` line protocol, and the [`stub`] server used to test it.

pub mod baseline;
pub mod external;
pub mod features;
pub mod protocol;
pub mod stub;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;

pub use baseline::{train_baseline, BaselineModel, BaselineScorer, TrainConfig, TrainReport};
pub use external::{Endpoint, ExternalScorer};
pub use features::{featurize, FeatureConfig, SparseVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub prefix: String,
    pub postfix: String,
}

impl ScoreRequest {
    pub fn new(id: impl Into<String>, prefix: impl Into<String>, postfix: impl Into<String>) -> Self {
        ScoreRequest {
            id: id.into(),
            prefix: prefix.into(),
            postfix: postfix.into(),
        }
    }
}

/// A branching probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Option<Self> {
        (0.0..=1.0).contains(&p).then_some(Probability(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = String;

    fn try_from(p: f64) -> Result<Self, Self::Error> {
        Probability::new(p).ok_or_else(|| format!("probability {p} outside [0, 1]"))
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `branch` iff `p >= threshold`.
pub fn classify(p: Probability, threshold: f64) -> Label {
    if p.get() >= threshold {
        Label::Branch
    } else {
        Label::NoBranch
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScorerError {
    #[error("invalid request `{id}`: {message}")]
    InvalidRequest { id: String, message: String },
    #[error("scorer connection failed: {0}")]
    Connection(String),
    #[error("scorer handshake failed: {0}")]
    Handshake(String),
    #[error("timed out waiting for a response to `{id}`")]
    Timeout { id: String },
    #[error("malformed scorer response{}: {message}", id.as_ref().map(|i| format!(" for `{i}`")).unwrap_or_default())]
    Malformed { id: Option<String>, message: String },
    #[error("scorer returned out-of-range probability {p} for `{id}`")]
    OutOfRange { id: String, p: f64 },
    #[error("scorer reported an error for `{id}`: {message}")]
    Remote { id: String, message: String },
}

impl ScorerError {
    /// Short stable name of the error class.
    pub fn class(&self) -> &'static str {
        match self {
            ScorerError::InvalidRequest { .. } => "invalid_request",
            ScorerError::Connection(_) => "connection",
            ScorerError::Handshake(_) => "handshake",
            ScorerError::Timeout { .. } => "timeout",
            ScorerError::Malformed { .. } => "malformed",
            ScorerError::OutOfRange { .. } => "out_of_range",
            ScorerError::Remote { .. } => "remote",
        }
    }
}

pub trait Scorer {
    /// Human-readable identifier recorded in reports.
    fn name(&self) -> String;

    /// Scores a batch; output is in request order.
    fn score_batch(&mut self, requests: &[ScoreRequest]) -> Result<Vec<Probability>, ScorerError>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn score_batch(&mut self, requests: &[ScoreRequest]) -> Result<Vec<Probability>, ScorerError> {
        (**self).score_batch(requests)
    }
}

/// Rejects empty segments and repeated ids within a batch.
pub fn validate_requests(requests: &[ScoreRequest]) -> Result<(), ScorerError> {
    let mut ids = HashSet::with_capacity(requests.len());
    for r in requests {
        let invalid = |message: &str| ScorerError::InvalidRequest {
            id: r.id.clone(),
            message: message.to_string(),
        };
        if r.prefix.trim().is_empty() || r.postfix.trim().is_empty() {
            return Err(invalid("prefix and postfix must be non-empty"));
        }
        if !ids.insert(r.id.as_str()) {
            return Err(invalid("duplicate request id in batch"));
        }
    }
    Ok(())
}

/// Returns the same probability for every request.
#[derive(Debug, Clone)]
pub struct ConstantScorer(pub Probability);

impl Scorer for ConstantScorer {
    fn name(&self) -> String {
        format!("constant:{}", self.0)
    }

    fn score_batch(&mut self, requests: &[ScoreRequest]) -> Result<Vec<Probability>, ScorerError> {
        validate_requests(requests)?;
        Ok(vec![self.0; requests.len()])
    }
}

/// Adapts a closure over requests into a scorer.
pub struct FnScorer<F> {
    name: String,
    f: F,
}

impl<F> FnScorer<F>
where
    F: FnMut(&ScoreRequest) -> f64,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnScorer { name: name.into(), f }
    }
}

impl<F> Scorer for FnScorer<F>
where
    F: FnMut(&ScoreRequest) -> f64,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn score_batch(&mut self, requests: &[ScoreRequest]) -> Result<Vec<Probability>, ScorerError> {
        validate_requests(requests)?;
        requests
            .iter()
            .map(|r| {
                let p = (self.f)(r);
                Probability::new(p).ok_or(ScorerError::OutOfRange { id: r.id.clone(), p })
            })
            .collect()
    }
}
