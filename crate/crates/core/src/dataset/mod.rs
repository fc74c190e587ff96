//! Chat-format training records: assembly, deduplication, splitting,
//! JSONL serialization and length statistics.

pub mod jsonl;
pub mod split;
pub mod stats;
pub mod tokenize;

use std::collections::HashSet;
use std::path::PathBuf;

use thiserror::Error;

use crate::segment::Article;
use crate::synth::QAPair;

pub use jsonl::{export_jsonl, import_jsonl, read_jsonl_str, record_to_json_line};
pub use split::{split_assignment, split_dataset, target_sizes, DatasetSplit, SplitSpec};
pub use stats::{compute_stats, emit_plot_data, nearest_rank, DatasetStats, DEFAULT_BUCKET_WIDTH};
pub use tokenize::{HfTokenCounter, TokenCounter, WhitespaceCounter};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Json {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("article {article_number} of {law_id} has an empty body")]
    EmptyArticleBody { law_id: String, article_number: u32 },
    #[error("record {0} message is empty")]
    EmptyMessage(&'static str),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("no records")]
    EmptyInput,
    #[error("tokenizer {path}: {message}")]
    Tokenizer { path: PathBuf, message: String },
}

/// One training example: system (instructions + article), user question,
/// assistant answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRecord {
    pub system: String,
    pub user: String,
    pub assistant: String,
    pub law_id: String,
    pub article_number: u32,
}

pub fn assemble_record(
    article: &Article,
    pair: &QAPair,
    preamble: &str,
) -> Result<ChatRecord, DatasetError> {
    if article.body.trim().is_empty() {
        return Err(DatasetError::EmptyArticleBody {
            law_id: article.law_id.clone(),
            article_number: article.article_number,
        });
    }
    if pair.question.trim().is_empty() {
        return Err(DatasetError::EmptyMessage("user"));
    }
    if pair.answer.trim().is_empty() {
        return Err(DatasetError::EmptyMessage("assistant"));
    }
    let system = if preamble.is_empty() {
        article.body.clone()
    } else {
        format!("{preamble}\n\n{}", article.body)
    };
    Ok(ChatRecord {
        system,
        user: pair.question.clone(),
        assistant: pair.answer.clone(),
        law_id: pair.law_id.clone(),
        article_number: pair.article_number,
    })
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Drops records whose (user, assistant) repeats an earlier record after
/// whitespace normalization. Order is preserved.
pub fn dedup_records(records: Vec<ChatRecord>) -> Vec<ChatRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert((normalize_ws(&r.user), normalize_ws(&r.assistant))))
        .collect()
}
