//! Hashed character n-gram features around a boundary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::text::split_sentences;

pub const FEATURIZER_VERSION: &str = "chargram-hash-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Hashed space size; must be a power of two.
    pub feature_dim: usize,
    pub ngram_lo: usize,
    pub ngram_hi: usize,
    /// Sentences featurized on each side of the boundary.
    pub boundary_sentences: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            feature_dim: 1 << 18,
            ngram_lo: 2,
            ngram_hi: 4,
            boundary_sentences: 3,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !self.feature_dim.is_power_of_two() || self.feature_dim > 1 << 30 {
            return Err(format!("feature_dim {} is not a power of two up to 2^30", self.feature_dim));
        }
        if self.ngram_lo == 0 || self.ngram_lo > self.ngram_hi {
            return Err(format!("invalid n-gram range {}..={}", self.ngram_lo, self.ngram_hi));
        }
        if self.boundary_sentences == 0 {
            return Err("boundary_sentences must be at least 1".into());
        }
        Ok(())
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }

    fn from_map(map: BTreeMap<u32, f64>) -> Self {
        SparseVector {
            entries: map.into_iter().collect(),
        }
    }
}

/// 64-bit FNV-1a, stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn bucket(key: &str, dim: usize) -> u32 {
    (fnv1a(key.as_bytes()) & (dim as u64 - 1)) as u32
}

/// Lowercased text of the boundary-adjacent sentences of one side.
pub fn side_window(text: &str, sentences_per_side: usize, is_prefix: bool) -> String {
    let sentences = split_sentences(text);
    let n = sentences.len();
    let range = if is_prefix {
        n.saturating_sub(sentences_per_side)..n
    } else {
        0..sentences_per_side.min(n)
    };
    sentences.join_range(range).to_lowercase()
}

/// Coarse class of the punctuation that closes the prefix.
pub fn boundary_punctuation(prefix: &str) -> &'static str {
    let trimmed = prefix.trim_end();
    match trimmed.chars().last() {
        Some('"' | '\'' | '\u{201D}' | '\u{2019}') => "quote",
        Some('?') => "question",
        Some('!') => "exclamation",
        Some('\u{2026}') => "ellipsis",
        Some('.') if trimmed.ends_with("..") => "ellipsis",
        Some('.') => "period",
        _ => "other",
    }
}

fn length_feature(sentence: Option<&String>) -> f64 {
    let len = sentence.map_or(0, |s| s.chars().count());
    (len as f64).ln_1p() / 5.0
}

/// Char n-gram counts per side (L2-normalized within the side), plus the
/// lengths of the two boundary sentences and a one-hot punctuation class.
pub fn featurize(prefix: &str, postfix: &str, cfg: &FeatureConfig) -> SparseVector {
    let mut map: BTreeMap<u32, f64> = BTreeMap::new();
    for (side, text, is_prefix) in [("L", prefix, true), ("R", postfix, false)] {
        let window: Vec<char> = side_window(text, cfg.boundary_sentences, is_prefix).chars().collect();
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for n in cfg.ngram_lo..=cfg.ngram_hi {
            for gram in window.windows(n) {
                let key = format!("{side}:{}", gram.iter().collect::<String>());
                *counts.entry(bucket(&key, cfg.feature_dim)).or_default() += 1.0;
            }
        }
        let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (idx, c) in counts {
                *map.entry(idx).or_default() += c / norm;
            }
        }
    }

    let last_prefix = split_sentences(prefix).as_slice().last().cloned();
    let first_postfix = split_sentences(postfix).as_slice().first().cloned();
    let scalars = [
        ("S:prefix_last_len".to_string(), length_feature(last_prefix.as_ref())),
        ("S:postfix_first_len".to_string(), length_feature(first_postfix.as_ref())),
        (format!("P:{}", boundary_punctuation(prefix)), 1.0),
    ];
    for (key, value) in scalars {
        *map.entry(bucket(&key, cfg.feature_dim)).or_default() += value;
    }
    SparseVector::from_map(map)
}
