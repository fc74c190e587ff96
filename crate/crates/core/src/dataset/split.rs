//! Seeded train/validation/test partitioning.
//!
//! Records are shuffled with ChaCha8 seeded from `seed`. Target sizes are
//! `floor(frac * n)` per split, with the leftover records handed out one at
//! a time to train, then validation, then test. With `group_by_law`, whole
//! laws are placed largest-first into whichever split is furthest below its
//! target.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ChatRecord, DatasetError};

const FRACTION_TOLERANCE: f64 = 1e-9;

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub group_by_law: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            seed: default_seed(),
            group_by_law: false,
        }
    }
}

impl SplitSpec {
    pub fn fractions(&self) -> [f64; 3] {
        [self.train_frac, self.val_frac, self.test_frac]
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for (name, f) in ["train", "val", "test"].iter().zip(self.fractions()) {
            if !(-FRACTION_TOLERANCE..=1.0 + FRACTION_TOLERANCE).contains(&f) {
                return Err(DatasetError::InvalidSplit(format!(
                    "{name} fraction {f} is outside [0, 1]"
                )));
            }
        }
        let sum: f64 = self.fractions().iter().sum();
        if (sum - 1.0).abs() > FRACTION_TOLERANCE {
            return Err(DatasetError::InvalidSplit(format!(
                "fractions sum to {}, expected 1",
                (sum * 1e9).round() / 1e9
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<ChatRecord>,
    pub val: Vec<ChatRecord>,
    pub test: Vec<ChatRecord>,
}

/// Split sizes for `n` records under the floor-then-remainder rule.
pub fn target_sizes(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    // the epsilon keeps 0.29 * 100 = 28.999... from flooring to 28
    let mut sizes = fractions.map(|f| (f * n as f64 + FRACTION_TOLERANCE).floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut remainder = n.saturating_sub(assigned);
    let mut i = 0;
    while remainder > 0 {
        sizes[i % 3] += 1;
        remainder -= 1;
        i += 1;
    }
    // floors can only overshoot through the epsilon; trim from the back
    let mut excess = sizes.iter().sum::<usize>().saturating_sub(n);
    for s in sizes.iter_mut().rev() {
        let cut = excess.min(*s);
        *s -= cut;
        excess -= cut;
    }
    sizes
}

/// Indices into `records` for (train, val, test).
pub fn split_assignment(
    records: &[ChatRecord],
    spec: &SplitSpec,
) -> Result<[Vec<usize>; 3], DatasetError> {
    spec.validate()?;
    if records.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let targets = target_sizes(records.len(), spec.fractions());

    if !spec.group_by_law {
        let mut parts: [Vec<usize>; 3] = Default::default();
        let mut it = order.into_iter();
        for (part, &size) in parts.iter_mut().zip(&targets) {
            part.extend(it.by_ref().take(size));
        }
        return Ok(parts);
    }

    // groups in first-seen shuffled order, then largest first (stable)
    let mut group_of: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let g = *group_of
            .entry(records[i].law_id.as_str())
            .or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
        groups[g].push(i);
    }
    let mut by_size: Vec<usize> = (0..groups.len()).collect();
    by_size.sort_by(|&a, &b| groups[b].len().cmp(&groups[a].len()));

    let mut filled = [0usize; 3];
    let mut split_of_group = vec![0usize; groups.len()];
    for g in by_size {
        let deficit = |s: usize| targets[s] as i64 - filled[s] as i64;
        let best = (0..3).fold(
            0,
            |best, s| if deficit(s) > deficit(best) { s } else { best },
        );
        split_of_group[g] = best;
        filled[best] += groups[g].len();
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for &i in &order {
        parts[split_of_group[group_of[records[i].law_id.as_str()]]].push(i);
    }
    Ok(parts)
}

pub fn split_dataset(
    records: &[ChatRecord],
    spec: &SplitSpec,
) -> Result<DatasetSplit, DatasetError> {
    let [train, val, test] = split_assignment(records, spec)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| records[i].clone()).collect();
    Ok(DatasetSplit {
        train: pick(train),
        val: pick(val),
        test: pick(test),
    })
}
