//! Adapting turning-point annotated synopses into prefix/postfix examples.
//!
//! Positives are taken at every annotated boundary with at least
//! `min_context` sentences on both sides. Negatives are drawn at random
//! unannotated boundaries whose core context (`min_context` sentences each
//! side) overlaps neither the core of any annotated boundary nor the core of
//! another negative.

use std::collections::BTreeSet;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, Kind, LabeledExample};
use crate::text::SentenceSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptConfig {
    pub min_context: usize,
    pub max_context: usize,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            min_context: 3,
            max_context: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurningPointSynopsis {
    pub synopsis_id: String,
    pub sentences: SentenceSeq,
    pub tp_boundaries: BTreeSet<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynopsisRecord {
    synopsis_id: String,
    sentences: Vec<String>,
    tp_boundaries: Vec<usize>,
}

impl TurningPointSynopsis {
    pub fn new(
        synopsis_id: impl Into<String>,
        sentences: Vec<String>,
        tp_boundaries: impl IntoIterator<Item = usize>,
    ) -> Result<Self, DatasetError> {
        let synopsis_id = synopsis_id.into();
        let invalid = |message: String| DatasetError::InvalidSynopsis {
            synopsis_id: synopsis_id.clone(),
            message,
        };
        if let Some(i) = sentences.iter().position(|s| s.trim().is_empty()) {
            return Err(invalid(format!("sentence {} is empty", i + 1)));
        }
        let sentences = SentenceSeq::from_sentences(sentences);
        let tp_boundaries: BTreeSet<usize> = tp_boundaries.into_iter().collect();
        if let Some(&b) = tp_boundaries
            .iter()
            .find(|&&b| b == 0 || b >= sentences.len())
        {
            return Err(invalid(format!(
                "turning point boundary {b} is not between two of its {} sentences",
                sentences.len()
            )));
        }
        Ok(TurningPointSynopsis {
            synopsis_id,
            sentences,
            tp_boundaries,
        })
    }
}

/// Reads JSON-lines `{synopsis_id, sentences, tp_boundaries}` records.
pub fn read_synopses<R: BufRead>(reader: R) -> Result<Vec<TurningPointSynopsis>, super::DatasetIoError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| super::DatasetIoError::Io {
            path: "<synopses>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| super::DatasetIoError::Schema {
            path: "<synopses>".into(),
            line: idx + 1,
            message,
        };
        let rec: SynopsisRecord = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        let syn = TurningPointSynopsis::new(rec.synopsis_id, rec.sentences, rec.tp_boundaries)
            .map_err(|e| schema(e.to_string()))?;
        out.push(syn);
    }
    Ok(out)
}

fn core_span(boundary: usize, min_context: usize, len: usize) -> (usize, usize) {
    (boundary.saturating_sub(min_context), (boundary + min_context).min(len))
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

fn make_example(syn: &TurningPointSynopsis, boundary: usize, cfg: &AdaptConfig, kind: Kind) -> LabeledExample {
    let n = syn.sentences.len();
    let tag = if kind == Kind::Positive { "tp" } else { "rand" };
    LabeledExample::new(
        format!("{}/{}@{}", syn.synopsis_id, tag, boundary),
        &syn.synopsis_id,
        syn.sentences.join_range(boundary.saturating_sub(cfg.max_context)..boundary),
        syn.sentences.join_range(boundary..(boundary + cfg.max_context).min(n)),
        kind,
    )
}

pub fn adapt_turning_points<R: Rng + ?Sized>(
    synopses: &[TurningPointSynopsis],
    cfg: &AdaptConfig,
    rng: &mut R,
) -> Vec<LabeledExample> {
    let mut out = Vec::new();
    for syn in synopses {
        let n = syn.sentences.len();
        let has_context = |b: usize| b >= cfg.min_context && n >= b + cfg.min_context;
        let tp_cores: Vec<_> = syn
            .tp_boundaries
            .iter()
            .map(|&b| core_span(b, cfg.min_context, n))
            .collect();

        let mut candidates: Vec<usize> = (1..n)
            .filter(|&b| has_context(b) && !syn.tp_boundaries.contains(&b))
            .filter(|&b| {
                let core = core_span(b, cfg.min_context, n);
                !tp_cores.iter().any(|&tp| overlaps(core, tp))
            })
            .collect();
        candidates.shuffle(rng);
        let mut negatives: Vec<usize> = Vec::new();
        for b in candidates {
            let core = core_span(b, cfg.min_context, n);
            if negatives
                .iter()
                .all(|&other| !overlaps(core, core_span(other, cfg.min_context, n)))
            {
                negatives.push(b);
            }
        }
        negatives.sort_unstable();

        let mut examples: Vec<(usize, LabeledExample)> = syn
            .tp_boundaries
            .iter()
            .copied()
            .filter(|&b| has_context(b))
            .map(|b| (b, make_example(syn, b, cfg, Kind::Positive)))
            .chain(negatives.into_iter().map(|b| (b, make_example(syn, b, cfg, Kind::EasyNeg))))
            .collect();
        examples.sort_by_key(|(b, _)| *b);
        out.extend(examples.into_iter().map(|(_, e)| e));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::split_sentences;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synopsis(n: usize, tps: &[usize]) -> TurningPointSynopsis {
        let sentences = (1..=n).map(|i| format!("Event {i} happens.")).collect();
        TurningPointSynopsis::new("s", sentences, tps.iter().copied()).unwrap()
    }

    fn positives(out: &[LabeledExample]) -> Vec<&LabeledExample> {
        out.iter().filter(|e| e.kind == Kind::Positive).collect()
    }

    #[test]
    fn tp_too_close_to_start_is_skipped() {
        let out = adapt_turning_points(&[synopsis(10, &[2])], &AdaptConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(positives(&out).is_empty());
    }

    #[test]
    fn tp_context_is_capped() {
        let out = adapt_turning_points(&[synopsis(12, &[5])], &AdaptConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        let pos = positives(&out);
        assert_eq!(pos.len(), 1);
        assert_eq!(split_sentences(&pos[0].prefix).len(), 5);
        assert_eq!(split_sentences(&pos[0].postfix).len(), 7);
        assert!(pos[0].prefix.starts_with("Event 1 "));
        assert!(pos[0].postfix.starts_with("Event 6 "));

        let out = adapt_turning_points(&[synopsis(30, &[15])], &AdaptConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        let pos = positives(&out);
        assert_eq!(split_sentences(&pos[0].prefix).len(), 10);
        assert_eq!(split_sentences(&pos[0].postfix).len(), 10);
        assert!(pos[0].prefix.starts_with("Event 6 "));
    }

    #[test]
    fn negatives_avoid_turning_points_and_each_other() {
        let cfg = AdaptConfig::default();
        for seed in 0..20 {
            let syn = synopsis(35, &[6, 20]);
            let out = adapt_turning_points(std::slice::from_ref(&syn), &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            let negs: Vec<usize> = out
                .iter()
                .filter(|e| e.kind == Kind::EasyNeg)
                .map(|e| e.id.rsplit('@').next().unwrap().parse().unwrap())
                .collect();
            assert!(!negs.is_empty());
            for (i, &a) in negs.iter().enumerate() {
                assert!(a >= 3 && 35 - a >= 3);
                for tp in [6usize, 20] {
                    assert!(a.abs_diff(tp) >= 6, "negative {a} overlaps tp {tp}");
                }
                for &b in &negs[i + 1..] {
                    assert!(a.abs_diff(b) >= 6);
                }
            }
            // boundaries never repeat
            let mut all: Vec<&str> = out.iter().map(|e| e.id.rsplit('@').next().unwrap()).collect();
            let before = all.len();
            all.sort();
            all.dedup();
            assert_eq!(before, all.len());
        }
    }

    #[test]
    fn invalid_boundaries_rejected() {
        let sentences = vec!["A.".to_string(), "B.".to_string()];
        assert!(TurningPointSynopsis::new("x", sentences.clone(), [2]).is_err());
        assert!(TurningPointSynopsis::new("x", sentences.clone(), [0]).is_err());
        assert!(TurningPointSynopsis::new("x", sentences, [1]).is_ok());
        assert!(TurningPointSynopsis::new("x", vec!["A.".into(), " ".into()], []).is_err());
    }

    #[test]
    fn reads_jsonl() {
        let data = "{\"synopsis_id\":\"m1\",\"sentences\":[\"A.\",\"B.\",\"C.\"],\"tp_boundaries\":[1]}\n\n";
        let syn = read_synopses(data.as_bytes()).unwrap();
        assert_eq!(syn.len(), 1);
        assert_eq!(syn[0].sentences.len(), 3);
        assert!(read_synopses("{\"synopsis_id\":\"m1\",\"sentences\":[\"A.\"],\"tp_boundaries\":[4]}".as_bytes()).is_err());
    }
}
