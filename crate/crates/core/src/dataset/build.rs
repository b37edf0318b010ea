use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    balance_classes, filter_triplets, label_examples, split_by_game, BuildConfig, DatasetError,
    DatasetSplit, EasyPool,
};
use crate::graph::{extract_triplets, GameGraph};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub games: usize,
    pub triplets: usize,
    pub filtered_triplets: usize,
    pub positives: usize,
    pub hard_available: usize,
    pub easy_pool: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub split: DatasetSplit,
    pub stats: BuildStats,
}

/// filter → label → balance → split over all graphs, with one generator
/// seeded from `cfg.seed`.
pub fn build_dataset(graphs: &[GameGraph], cfg: &BuildConfig) -> Result<BuildOutput, DatasetError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let triplets: Vec<_> = graphs.iter().flat_map(extract_triplets).collect();
    let filtered = filter_triplets(&triplets, cfg);
    let (positives, hard) = label_examples(&filtered);
    let pool = EasyPool::from_graphs(graphs, cfg);

    let stats = BuildStats {
        games: graphs.len(),
        triplets: triplets.len(),
        filtered_triplets: filtered.len(),
        positives: positives.len(),
        hard_available: hard.len(),
        easy_pool: pool.len(),
    };
    let balanced = balance_classes(positives, hard, &pool, cfg, &mut rng)?;
    let split = split_by_game(balanced, cfg, &mut rng)?;
    Ok(BuildOutput { split, stats })
}
