//! Construction of the balanced, game-disjoint decision point dataset.
//!
//! The pipeline is `filter_triplets` → `label_examples` → `balance_classes`
//! (drawing easy negatives from an [`EasyPool`]) → `split_by_game`.
//! [`build_dataset`] runs the whole chain over a set of graphs.

mod build;
mod filter;
mod io;
mod negatives;
mod split;
mod tripod;

pub use build::{build_dataset, BuildOutput, BuildStats};
pub use filter::{filter_triplets, label_examples, segment_passes};
pub use io::{read_dataset, read_examples, write_dataset, write_examples, DatasetIoError};
pub use negatives::{balance_classes, make_easy_negatives, EasyCandidate, EasyPool};
pub use split::split_by_game;
pub use tripod::{adapt_turning_points, read_synopses, AdaptConfig, TurningPointSynopsis};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::text::DEFAULT_DIALOGUE_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub min_sentences: usize,
    pub min_chars: usize,
    /// Target (train, dev, test) fractions by example count.
    pub split_ratios: [f64; 3],
    pub seed: u64,
    /// Fraction of the negative class that should be hard negatives.
    pub hard_easy_target: f64,
    pub dialogue_threshold: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            min_sentences: 4,
            min_chars: 50,
            split_ratios: [0.7, 0.15, 0.15],
            seed: 0,
            hard_easy_target: 0.5,
            dialogue_threshold: DEFAULT_DIALOGUE_THRESHOLD,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |msg: &str| Err(DatasetError::InvalidConfig(msg.to_string()));
        if self.min_sentences < 1 {
            return invalid("min_sentences must be at least 1");
        }
        if self.min_chars < 1 {
            return invalid("min_chars must be at least 1");
        }
        if self.split_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return invalid("split ratios must be positive");
        }
        if (self.split_ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return invalid("split ratios must sum to 1");
        }
        if !(0.0..=1.0).contains(&self.hard_easy_target) {
            return invalid("hard_easy_target must lie in [0, 1]");
        }
        if !(self.dialogue_threshold > 0.0 && self.dialogue_threshold <= 1.0) {
            return invalid("dialogue_threshold must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Branch,
    NoBranch,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Branch => "branch",
            Label::NoBranch => "no_branch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Positive,
    EasyNeg,
    HardNeg,
}

impl Kind {
    pub fn label(self) -> Label {
        match self {
            Kind::Positive => Label::Branch,
            Kind::EasyNeg | Kind::HardNeg => Label::NoBranch,
        }
    }
}

/// One benchmark item. Field order is the on-disk JSONL order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledExample {
    pub id: String,
    #[serde(rename = "game")]
    pub game_id: String,
    pub prefix: String,
    pub postfix: String,
    pub label: Label,
    pub kind: Kind,
}

impl LabeledExample {
    pub fn new(
        id: impl Into<String>,
        game_id: impl Into<String>,
        prefix: impl Into<String>,
        postfix: impl Into<String>,
        kind: Kind,
    ) -> Self {
        LabeledExample {
            id: id.into(),
            game_id: game_id.into(),
            prefix: prefix.into(),
            postfix: postfix.into(),
            label: kind.label(),
            kind,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

pub const SPLIT_NAMES: [&str; 3] = ["train", "dev", "test"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub positive: usize,
    pub easy_neg: usize,
    pub hard_neg: usize,
    pub total: usize,
}

impl SplitCounts {
    pub fn of(examples: &[LabeledExample]) -> Self {
        let mut c = SplitCounts::default();
        for ex in examples {
            match ex.kind {
                Kind::Positive => c.positive += 1,
                Kind::EasyNeg => c.easy_neg += 1,
                Kind::HardNeg => c.hard_neg += 1,
            }
            c.total += 1;
        }
        c
    }

    pub fn negatives(&self) -> usize {
        self.easy_neg + self.hard_neg
    }
}

impl DatasetSplit {
    pub fn parts(&self) -> [&[LabeledExample]; 3] {
        [&self.train, &self.dev, &self.test]
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledExample> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }

    /// Per-split counts keyed by split name, plus `all`.
    pub fn counts(&self) -> BTreeMap<String, SplitCounts> {
        let mut out = BTreeMap::new();
        for (name, part) in SPLIT_NAMES.iter().zip(self.parts()) {
            out.insert(name.to_string(), SplitCounts::of(part));
        }
        let all: Vec<LabeledExample> = self.iter().cloned().collect();
        out.insert("all".to_string(), SplitCounts::of(&all));
        out
    }

    pub fn game_sets(&self) -> [BTreeSet<&str>; 3] {
        self.parts()
            .map(|part| part.iter().map(|e| e.game_id.as_str()).collect())
    }

    /// Table-style count summary: one row per kind, one column per split.
    pub fn summary_table(&self) -> String {
        let counts = self.counts();
        let row = |name: &str, f: &dyn Fn(&SplitCounts) -> usize| {
            let cells: Vec<String> = SPLIT_NAMES
                .iter()
                .map(|s| format!("{:>7}", f(&counts[*s])))
                .collect();
            format!("{:<15}{}\n", name, cells.join(""))
        };
        let mut out = format!("{:<15}{:>7}{:>7}{:>7}\n", "class", "train", "dev", "test");
        out += &row("positives", &|c| c.positive);
        out += &row("negatives", &|c| c.easy_neg);
        out += &row("hard negatives", &|c| c.hard_neg);
        out += &row("total", &|c| c.total);
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid build config: {0}")]
    InvalidConfig(String),
    #[error("need {needed} easy negatives but only {available} eligible (node, boundary) splits exist")]
    InsufficientEasyPool { needed: usize, available: usize },
    #[error("cannot balance {positives} positives: {hard} hard negatives taken, {needed_easy} easy negatives needed, {available_easy} available")]
    CannotBalance {
        positives: usize,
        hard: usize,
        needed_easy: usize,
        available_easy: usize,
    },
    #[error("game-wise split needs at least 3 distinct games, found {0}")]
    TooFewGames(usize),
    #[error("invalid synopsis `{synopsis_id}`: {message}")]
    InvalidSynopsis { synopsis_id: String, message: String },
}
