//! Word, vocabulary and token-length statistics.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ChatRecord, DatasetError, TokenCounter};

pub const DEFAULT_BUCKET_WIDTH: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub record_count: usize,
    pub total_words: usize,
    pub vocab_size: usize,
    pub token_min: usize,
    pub token_p25: usize,
    pub token_median: usize,
    pub token_p75: usize,
    pub token_p90: usize,
    pub token_max: usize,
    pub token_mean: f64,
    pub bucket_width: usize,
    /// `(bucket_start, count)` for every bucket from the minimum's to the
    /// maximum's, empty buckets included.
    pub histogram: Vec<(usize, usize)>,
}

/// Nearest-rank quantile `num/den` of sorted data: the value at 1-based
/// rank `ceil(num * n / den)` (at least 1).
pub fn nearest_rank(sorted: &[usize], num: usize, den: usize) -> usize {
    assert!(!sorted.is_empty() && den > 0 && num <= den);
    let rank = (num * sorted.len()).div_ceil(den).max(1);
    sorted[rank - 1]
}

pub fn record_tokens(r: &ChatRecord, counter: &dyn TokenCounter) -> usize {
    counter.count(&r.system) + counter.count(&r.user) + counter.count(&r.assistant)
}

pub fn compute_stats(
    records: &[ChatRecord],
    counter: &dyn TokenCounter,
    bucket_width: usize,
) -> Result<DatasetStats, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let bucket_width = bucket_width.max(1);

    // par_iter().map().collect() keeps input order
    let lengths: Vec<usize> = records
        .par_iter()
        .map(|r| record_tokens(r, counter))
        .collect();

    let mut total_words = 0usize;
    let mut vocab: HashSet<&str> = HashSet::new();
    for r in records {
        for field in [&r.system, &r.user, &r.assistant] {
            for w in field.split_whitespace() {
                total_words += 1;
                vocab.insert(w);
            }
        }
    }

    let mut sorted = lengths.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let sum: usize = sorted.iter().sum();

    let first = sorted[0] / bucket_width;
    let last = sorted[n - 1] / bucket_width;
    let mut counts = vec![0usize; last - first + 1];
    for &len in &sorted {
        counts[len / bucket_width - first] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| ((first + i) * bucket_width, c))
        .collect();

    Ok(DatasetStats {
        record_count: n,
        total_words,
        vocab_size: vocab.len(),
        token_min: sorted[0],
        token_p25: nearest_rank(&sorted, 1, 4),
        token_median: nearest_rank(&sorted, 1, 2),
        token_p75: nearest_rank(&sorted, 3, 4),
        token_p90: nearest_rank(&sorted, 9, 10),
        token_max: sorted[n - 1],
        token_mean: sum as f64 / n as f64,
        bucket_width,
        histogram,
    })
}

#[derive(Serialize)]
struct Boxplot {
    min: usize,
    p25: usize,
    median: usize,
    p75: usize,
    p90: usize,
    max: usize,
}

/// Writes `histogram.csv` and `boxplot.json` under `dir` (created if
/// needed).
pub fn emit_plot_data(stats: &DatasetStats, dir: &Path) -> Result<(), DatasetError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;

    let mut csv = String::from("bucket_start,count\n");
    for (start, count) in &stats.histogram {
        writeln!(csv, "{start},{count}").unwrap();
    }
    let hist = dir.join("histogram.csv");
    std::fs::write(&hist, csv).map_err(io(&hist))?;

    let boxplot = Boxplot {
        min: stats.token_min,
        p25: stats.token_p25,
        median: stats.token_median,
        p75: stats.token_p75,
        p90: stats.token_p90,
        max: stats.token_max,
    };
    let path = dir.join("boxplot.json");
    let mut body = serde_json::to_string_pretty(&boxplot).expect("boxplot serializes");
    body.push('\n');
    std::fs::write(&path, body).map_err(io(&path))
}
