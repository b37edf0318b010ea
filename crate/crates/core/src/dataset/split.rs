use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{BuildConfig, DatasetError, DatasetSplit, LabeledExample};

/// Assigns whole games to train/dev/test.
///
/// Games are shuffled by `rng` (from name order) and then stably sorted by
/// example count, largest first, so equal-sized games are ordered by seed.
/// Each game goes to the split with the largest deficit against its target
/// count (`ratio * total - assigned`), earlier splits winning ties. When the
/// games left equal the splits still empty, the game goes to the empty split
/// with the largest deficit so no split ends up empty.
pub fn split_by_game<R: Rng + ?Sized>(
    examples: Vec<LabeledExample>,
    cfg: &BuildConfig,
    rng: &mut R,
) -> Result<DatasetSplit, DatasetError> {
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for ex in &examples {
        *sizes.entry(ex.game_id.as_str()).or_default() += 1;
    }
    if sizes.len() < 3 {
        return Err(DatasetError::TooFewGames(sizes.len()));
    }

    let mut games: Vec<(&str, usize)> = sizes.into_iter().collect();
    games.shuffle(rng);
    games.sort_by_key(|g| std::cmp::Reverse(g.1));

    let total = examples.len() as f64;
    let targets = cfg.split_ratios.map(|r| r * total);
    let mut assigned = [0usize; 3];
    let mut game_count = [0usize; 3];
    let mut assignment: BTreeMap<String, usize> = BTreeMap::new();

    for (remaining, (game, size)) in (1..=games.len()).rev().zip(&games) {
        let empty: Vec<usize> = (0..3).filter(|&s| game_count[s] == 0).collect();
        let eligible: Vec<usize> = if remaining <= empty.len() { empty } else { vec![0, 1, 2] };
        let mut best = eligible[0];
        for &s in &eligible[1..] {
            if targets[s] - assigned[s] as f64 > targets[best] - assigned[best] as f64 {
                best = s;
            }
        }
        assigned[best] += size;
        game_count[best] += 1;
        assignment.insert(game.to_string(), best);
    }

    let mut split = DatasetSplit::default();
    for ex in examples {
        match assignment[&ex.game_id] {
            0 => split.train.push(ex),
            1 => split.dev.push(ex),
            _ => split.test.push(ex),
        }
    }
    Ok(split)
}
