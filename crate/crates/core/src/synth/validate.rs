//! Report-only checks on a generated pair against its source article.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::QAPair;
use crate::cleanse::is_arabic_block;
use crate::numerals::{self, DIGIT_CLASS};
use crate::segment::Article;

pub const ARABIC_CONTENT: &str = "arabic_content";
pub const ARTICLE_CITATION: &str = "article_citation";
pub const NONEMPTY: &str = "nonempty";

/// Minimum share of letters that must be Arabic, per field.
pub const MIN_ARABIC_SHARE: f64 = 0.6;
/// The citation must appear within this many leading characters.
pub const CITATION_WINDOW: usize = 120;

static CITATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"مادة[ \t]*\(?[ \t]*([{DIGIT_CLASS}]+)")).expect("citation regex")
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
}

/// Share of alphabetic characters in the Arabic blocks; `None` when the
/// text has no letters.
pub fn arabic_share(text: &str) -> Option<f64> {
    let (mut letters, mut arabic) = (0usize, 0usize);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if is_arabic_block(c) {
            arabic += 1;
        }
    }
    (letters > 0).then(|| arabic as f64 / letters as f64)
}

/// Article numbers cited as `مادة N` / `المادة (N)` / `للمادة N` in `text`.
pub fn cited_articles(text: &str) -> Vec<u64> {
    CITATION
        .captures_iter(text)
        .filter_map(|c| numerals::parse_digits(&c[1]))
        .collect()
}

pub fn validate_qa(pair: &QAPair, article: &Article) -> ValidationReport {
    let mut checks = BTreeMap::new();

    let arabic_ok = |s: &str| arabic_share(s).is_some_and(|share| share >= MIN_ARABIC_SHARE);
    checks.insert(
        ARABIC_CONTENT.to_string(),
        arabic_ok(&pair.question) && arabic_ok(&pair.answer),
    );

    let head: String = pair.answer.chars().take(CITATION_WINDOW).collect();
    let cites = cited_articles(&head)
        .into_iter()
        .any(|n| n == u64::from(article.article_number));
    checks.insert(ARTICLE_CITATION.to_string(), cites);

    checks.insert(
        NONEMPTY.to_string(),
        !pair.question.trim().is_empty() && !pair.answer.trim().is_empty(),
    );

    let passed = checks.values().all(|&ok| ok);
    ValidationReport { checks, passed }
}
