//! Confusion matrices, metrics, and threshold search. `branch` is the
//! positive class throughout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Kind, Label, LabeledExample};
use crate::scorer::{classify, Probability, ScoreRequest, Scorer, ScorerError};

pub const DEFAULT_BATCH_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, pred: Label, gold: Label) {
        match (pred, gold) {
            (Label::Branch, Label::Branch) => self.tp += 1,
            (Label::Branch, Label::NoBranch) => self.fp += 1,
            (Label::NoBranch, Label::NoBranch) => self.tn += 1,
            (Label::NoBranch, Label::Branch) => self.fn_ += 1,
        }
    }
}

/// Subterms whose denominator was zero and were set to 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub no_gold_positives: bool,
    pub no_gold_negatives: bool,
    pub f1_undefined: bool,
}

impl MetricFlags {
    pub fn any(&self) -> bool {
        self.no_gold_positives || self.no_gold_negatives || self.f1_undefined
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub flags: MetricFlags,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("predictions ({predictions}) and gold labels ({golds}) differ in length")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("threshold {0} is outside (0, 1)")]
    BadThreshold(f64),
    #[error("scoring failed near example `{first_id}`: {source}")]
    Scorer { first_id: String, source: ScorerError },
    #[error("scorer returned {got} probabilities for {expected} requests")]
    CountMismatch { expected: usize, got: usize },
}

pub fn confusion(predictions: &[Label], golds: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &g) in predictions.iter().zip(golds) {
        m.record(p, g);
    }
    Ok(m)
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(m: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let n = m.total();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let mut flags = MetricFlags::default();
    let tpr = ratio(m.tp, m.tp + m.fn_, &mut flags.no_gold_positives);
    let tnr = ratio(m.tn, m.tn + m.fp, &mut flags.no_gold_negatives);
    let f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn_, &mut flags.f1_undefined);
    Ok(Metrics {
        accuracy: (m.tp + m.tn) as f64 / n as f64,
        balanced_accuracy: 0.5 * (tpr + tnr),
        f1,
        flags,
    })
}

/// Scores examples in batches, preserving order.
pub fn score_examples<S: Scorer + ?Sized>(
    scorer: &mut S,
    examples: &[LabeledExample],
    batch_size: usize,
) -> Result<Vec<Probability>, EvalError> {
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch_size.max(1)) {
        let requests: Vec<ScoreRequest> = chunk
            .iter()
            .map(|e| ScoreRequest::new(e.id.clone(), e.prefix.clone(), e.postfix.clone()))
            .collect();
        let ps = scorer.score_batch(&requests).map_err(|source| EvalError::Scorer {
            first_id: chunk[0].id.clone(),
            source,
        })?;
        if ps.len() != chunk.len() {
            return Err(EvalError::CountMismatch { expected: chunk.len(), got: ps.len() });
        }
        out.extend(ps);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub game: String,
    pub kind: Kind,
    pub gold: Label,
    pub p: f64,
    pub pred: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub examples: usize,
    pub branch: usize,
    pub no_branch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub threshold: f64,
    pub counts: EvalCounts,
    pub matrix: ConfusionMatrix,
    pub metrics: Metrics,
    pub records: Vec<PredictionRecord>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,gold,p,pred\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{}", csv_field(&r.id), r.gold.as_str(), r.p, r.pred.as_str());
        }
        s
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Builds a report from precomputed probabilities.
pub fn evaluate_scores(
    scorer_name: &str,
    examples: &[LabeledExample],
    probabilities: &[Probability],
    threshold: f64,
) -> Result<EvalReport, EvalError> {
    if examples.len() != probabilities.len() {
        return Err(EvalError::LengthMismatch {
            predictions: probabilities.len(),
            golds: examples.len(),
        });
    }
    if examples.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut matrix = ConfusionMatrix::default();
    let records: Vec<PredictionRecord> = examples
        .iter()
        .zip(probabilities)
        .map(|(e, &p)| {
            let pred = classify(p, threshold);
            matrix.record(pred, e.label);
            PredictionRecord {
                id: e.id.clone(),
                game: e.game_id.clone(),
                kind: e.kind,
                gold: e.label,
                p: p.get(),
                pred,
            }
        })
        .collect();
    let branch = examples.iter().filter(|e| e.label == Label::Branch).count();
    Ok(EvalReport {
        scorer: scorer_name.to_string(),
        threshold,
        counts: EvalCounts {
            examples: examples.len(),
            branch,
            no_branch: examples.len() - branch,
        },
        matrix,
        metrics: metrics(&matrix)?,
        records,
    })
}

pub fn evaluate<S: Scorer + ?Sized>(
    scorer: &mut S,
    examples: &[LabeledExample],
    threshold: f64,
    batch_size: usize,
) -> Result<EvalReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::Empty);
    }
    let ps = score_examples(scorer, examples, batch_size)?;
    evaluate_scores(&scorer.name(), examples, &ps, threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub threshold: f64,
    pub matrix: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_threshold: f64,
    pub best_metrics: Metrics,
    pub sweep: Vec<GridPoint>,
}

/// Maximizes accuracy over `grid`; ties go to the lowest threshold.
pub fn grid_search_scores(
    golds: &[Label],
    probabilities: &[Probability],
    grid: &[f64],
) -> Result<GridSearchResult, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(EvalError::BadThreshold(bad));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut sweep = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        let preds: Vec<Label> = probabilities.iter().map(|&p| classify(p, t)).collect();
        let matrix = confusion(&preds, golds)?;
        sweep.push(GridPoint { threshold: t, matrix, metrics: metrics(&matrix)? });
    }
    let mut best = &sweep[0];
    for point in &sweep[1..] {
        if point.metrics.accuracy > best.metrics.accuracy {
            best = point;
        }
    }
    Ok(GridSearchResult {
        best_threshold: best.threshold,
        best_metrics: best.metrics,
        sweep: sweep.clone(),
    })
}

pub fn grid_search_threshold<S: Scorer + ?Sized>(
    scorer: &mut S,
    dev: &[LabeledExample],
    grid: &[f64],
    batch_size: usize,
) -> Result<GridSearchResult, EvalError> {
    if dev.is_empty() {
        return Err(EvalError::Empty);
    }
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let ps = score_examples(scorer, dev, batch_size)?;
    let golds: Vec<Label> = dev.iter().map(|e| e.label).collect();
    grid_search_scores(&golds, &ps, grid)
}

/// `0.05, 0.10, ..., 0.95`.
pub fn default_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}
