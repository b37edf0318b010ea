use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use super::filter::segment_passes;
use super::{BuildConfig, DatasetError, Kind, LabeledExample};
use crate::graph::GameGraph;
use crate::text::split_sentences;

/// A sentence boundary inside one node whose two sides both pass the filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EasyCandidate {
    pub game_id: String,
    pub node_id: String,
    /// 1-based boundary: the prefix holds sentences `1..=boundary`.
    pub boundary: usize,
    pub prefix: String,
    pub postfix: String,
}

impl EasyCandidate {
    fn to_example(&self) -> LabeledExample {
        LabeledExample::new(
            format!("{}/{}@{}", self.game_id, self.node_id, self.boundary),
            &self.game_id,
            &self.prefix,
            &self.postfix,
            Kind::EasyNeg,
        )
    }
}

/// Every eligible (node, boundary) split across a set of graphs, in graph,
/// node and boundary order. Repeated (prefix, postfix) pairs appear once.
#[derive(Debug, Clone, Default)]
pub struct EasyPool {
    candidates: Vec<EasyCandidate>,
}

impl EasyPool {
    pub fn from_graphs(graphs: &[GameGraph], cfg: &BuildConfig) -> Self {
        let mut seen = HashSet::new();
        let mut candidates = Vec::new();
        for graph in graphs {
            for node in graph.nodes() {
                let sentences = split_sentences(&node.text);
                let n = sentences.len();
                if n < 2 * cfg.min_sentences {
                    continue;
                }
                for boundary in cfg.min_sentences..=n - cfg.min_sentences {
                    let prefix = sentences.join_range(0..boundary);
                    let postfix = sentences.join_range(boundary..n);
                    if !segment_passes(&prefix, cfg) || !segment_passes(&postfix, cfg) {
                        continue;
                    }
                    if !seen.insert((prefix.clone(), postfix.clone())) {
                        continue;
                    }
                    candidates.push(EasyCandidate {
                        game_id: graph.game_id().to_string(),
                        node_id: node.id.clone(),
                        boundary,
                        prefix,
                        postfix,
                    });
                }
            }
        }
        EasyPool { candidates }
    }

    pub fn candidates(&self) -> &[EasyCandidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Draws `n` distinct candidates uniformly without replacement. Output keeps
/// pool order.
pub fn make_easy_negatives<R: Rng + ?Sized>(
    pool: &EasyPool,
    n: usize,
    rng: &mut R,
) -> Result<Vec<LabeledExample>, DatasetError> {
    if n > pool.len() {
        return Err(DatasetError::InsufficientEasyPool {
            needed: n,
            available: pool.len(),
        });
    }
    Ok(sample_sorted(rng, pool.len(), n)
        .into_iter()
        .map(|i| pool.candidates[i].to_example())
        .collect())
}

fn sample_sorted<R: Rng + ?Sized>(rng: &mut R, len: usize, amount: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, len, amount).into_vec();
    picked.sort_unstable();
    picked
}

/// Pads the negative class to the size of the positive class.
///
/// Hard negatives contribute `min(|hard|, round(hard_easy_target * |positives|))`
/// items, subsampled when there are more; easy negatives fill the rest.
/// Output order is positives, hard negatives, easy negatives.
pub fn balance_classes<R: Rng + ?Sized>(
    positives: Vec<LabeledExample>,
    hard_negatives: Vec<LabeledExample>,
    easy_pool: &EasyPool,
    cfg: &BuildConfig,
    rng: &mut R,
) -> Result<Vec<LabeledExample>, DatasetError> {
    let n_pos = positives.len();
    let quota = (cfg.hard_easy_target * n_pos as f64).round() as usize;
    let take = hard_negatives.len().min(quota);
    let hard: Vec<LabeledExample> = if take < hard_negatives.len() {
        sample_sorted(rng, hard_negatives.len(), take)
            .into_iter()
            .map(|i| hard_negatives[i].clone())
            .collect()
    } else {
        hard_negatives
    };
    let needed_easy = n_pos - hard.len();
    if needed_easy > easy_pool.len() {
        return Err(DatasetError::CannotBalance {
            positives: n_pos,
            hard: hard.len(),
            needed_easy,
            available_easy: easy_pool.len(),
        });
    }
    let easy = make_easy_negatives(easy_pool, needed_easy, rng)?;
    let mut out = positives;
    out.extend(hard);
    out.extend(easy);
    Ok(out)
}
