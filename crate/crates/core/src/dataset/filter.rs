use std::collections::HashSet;

use super::{BuildConfig, Kind, LabeledExample};
use crate::graph::Triplet;
use crate::text::{char_count, has_unusual_chars, is_dialogue_with, normalize_whitespace, split_sentences};

/// Whether one side of an example is usable: long enough, not dialogue,
/// and free of unusual characters.
pub fn segment_passes(text: &str, cfg: &BuildConfig) -> bool {
    split_sentences(text).len() >= cfg.min_sentences
        && char_count(text) >= cfg.min_chars
        && !is_dialogue_with(text, cfg.dialogue_threshold)
        && !has_unusual_chars(text)
}

/// Drops exact duplicates (after whitespace normalization) and triplets
/// whose prefix or postfix fails [`segment_passes`]. Order is preserved and
/// the first occurrence of a duplicate wins.
pub fn filter_triplets(triplets: &[Triplet], cfg: &BuildConfig) -> Vec<Triplet> {
    let mut seen = HashSet::new();
    triplets
        .iter()
        .filter(|t| {
            let key = (
                normalize_whitespace(&t.prefix),
                normalize_whitespace(&t.action),
                normalize_whitespace(&t.postfix),
            );
            seen.insert(key)
        })
        .filter(|t| segment_passes(&t.prefix, cfg) && segment_passes(&t.postfix, cfg))
        .cloned()
        .collect()
}

/// Splits filtered triplets into positives (source out-degree > 1) and hard
/// negatives (out-degree 1). The action text is not part of either segment.
///
/// Triplets that collapse to an already emitted (prefix, postfix) pair, such
/// as parallel edges with different action texts, are dropped.
pub fn label_examples(triplets: &[Triplet]) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut positives = Vec::new();
    let mut hard = Vec::new();
    let mut seen = HashSet::new();
    for t in triplets {
        let prefix = normalize_whitespace(&t.prefix);
        let postfix = normalize_whitespace(&t.postfix);
        if !seen.insert((prefix.clone(), postfix.clone())) {
            continue;
        }
        let (kind, bucket) = match t.source_out_degree {
            0 => continue,
            1 => (Kind::HardNeg, &mut hard),
            _ => (Kind::Positive, &mut positives),
        };
        let id = format!("{}/{}>{}", t.game_id, t.source_id, t.target_id);
        bucket.push(LabeledExample::new(id, &t.game_id, prefix, postfix, kind));
    }
    (positives, hard)
}
