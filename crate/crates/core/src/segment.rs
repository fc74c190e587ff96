//! Article segmentation and the per-law JSON format.
//!
//! A header is a line that starts with `مادة` or `المادة`, optional
//! whitespace and a number (Western or Arabic-Indic digits, optionally in
//! parentheses), followed by an optional `:`/`-`/`.` separator. Any text on
//! the header line after the match belongs to the article body. Text before
//! the first header is kept as article 0.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::numerals::{self, DIGIT_CLASS};

/// Article number reserved for text preceding the first header.
pub const PREAMBLE: u32 = 0;

static HEADER: LazyLock<Regex> = LazyLock::new(|| {
    let d = DIGIT_CLASS;
    Regex::new(&format!(
        r"^(?:ال)?مادة[ \t]*(?:\([ \t]*([{d}]+)[ \t]*\)|([{d}]+))(?:[ \t]*[:\-–—.])?"
    ))
    .expect("header regex")
});

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub law_id: String,
    pub article_number: u32,
    /// The matched header text, empty for the preamble.
    pub heading_text: String,
    pub body: String,
}

impl Article {
    pub fn is_preamble(&self) -> bool {
        self.article_number == PREAMBLE && self.heading_text.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawJson {
    pub law_title: String,
    pub law_id: String,
    pub articles: Vec<Article>,
}

/// Segmentation output: the structured law, the byte range each article
/// occupies in the input, and diagnostics.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub law: LawJson,
    pub spans: Vec<Range<usize>>,
    pub warnings: Vec<String>,
}

/// Header match on a single (already trimmed) line: number and the byte
/// length of the header text.
fn match_header(line: &str) -> Option<(u32, usize)> {
    let caps = HEADER.captures(line)?;
    let digits = caps.get(1).or_else(|| caps.get(2))?.as_str();
    let number = u32::try_from(numerals::parse_digits(digits)?).ok()?;
    Some((number, caps.get(0)?.end()))
}

/// True when `line` (trimmed) opens a new article.
pub fn is_article_header(line: &str) -> bool {
    match_header(line).is_some()
}

struct HeaderHit {
    line_start: usize,
    heading: Range<usize>,
    number: u32,
}

fn scan_headers(text: &str) -> Vec<HeaderHit> {
    let mut hits = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let content = line.trim_end_matches('\n');
        let lead = content.len() - content.trim_start().len();
        if let Some((number, len)) = match_header(&content[lead..]) {
            let start = offset + lead;
            hits.push(HeaderHit {
                line_start: offset,
                heading: start..start + len,
                number,
            });
        }
        offset += line.len();
    }
    hits
}

/// Splits cleaned law text into articles.
pub fn segment_articles(law_id: &str, law_title: &str, text: &str) -> Segmentation {
    let headers = scan_headers(text);
    let mut articles = Vec::new();
    let mut spans = Vec::new();
    let mut warnings = Vec::new();

    let preamble_end = headers.first().map_or(text.len(), |h| h.line_start);
    let preamble = text[..preamble_end].trim();
    if !preamble.is_empty() || headers.is_empty() {
        articles.push(Article {
            law_id: law_id.to_string(),
            article_number: PREAMBLE,
            heading_text: String::new(),
            body: preamble.to_string(),
        });
        spans.push(0..preamble_end);
    }
    if headers.is_empty() {
        warnings.push(format!(
            "{law_id}: no article headers found; text kept as preamble"
        ));
    }

    for (i, h) in headers.iter().enumerate() {
        let end = headers.get(i + 1).map_or(text.len(), |n| n.line_start);
        let body = text[h.heading.end..end].trim();
        if body.is_empty() {
            warnings.push(format!("{law_id}: article {} has an empty body", h.number));
        }
        articles.push(Article {
            law_id: law_id.to_string(),
            article_number: h.number,
            heading_text: text[h.heading.clone()].to_string(),
            body: body.to_string(),
        });
        // a whitespace-only preamble is folded into the first article's span
        let start = if spans.is_empty() { 0 } else { h.line_start };
        spans.push(start..end);
    }

    for w in &warnings {
        log::warn!("{w}");
    }
    Segmentation {
        law: LawJson {
            law_title: law_title.to_string(),
            law_id: law_id.to_string(),
            articles,
        },
        spans,
        warnings,
    }
}

#[derive(Debug, Error)]
pub enum LawJsonError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{path}: schema violation at `{field}`: {message}")]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },
}

#[derive(Serialize)]
struct ArticleRecord<'a> {
    number: u32,
    heading: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct LawRecord<'a> {
    law_title: &'a str,
    law_id: &'a str,
    articles: Vec<ArticleRecord<'a>>,
}

impl LawJson {
    /// Pretty-printed JSON in the on-disk schema.
    pub fn to_json(&self) -> String {
        let record = LawRecord {
            law_title: &self.law_title,
            law_id: &self.law_id,
            articles: self
                .articles
                .iter()
                .map(|a| ArticleRecord {
                    number: a.article_number,
                    heading: &a.heading_text,
                    text: &a.body,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&record).expect("law json serializes");
        s.push('\n');
        s
    }

    /// Parses and validates the on-disk schema. `origin` is used in errors.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, LawJsonError> {
        let value: Value = serde_json::from_str(text).map_err(|e| LawJsonError::Malformed {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let schema = |field: String, message: &str| LawJsonError::Schema {
            path: origin.to_path_buf(),
            field,
            message: message.to_string(),
        };
        let obj = value
            .as_object()
            .ok_or_else(|| schema("$".into(), "expected an object"))?;
        let string_field = |key: &str| -> Result<String, LawJsonError> {
            match obj.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(_) => Err(schema(key.into(), "expected a string")),
                None => Err(schema(key.into(), "missing")),
            }
        };
        let law_title = string_field("law_title")?;
        let law_id = string_field("law_id")?;
        let items = match obj.get("articles") {
            Some(Value::Array(items)) => items,
            Some(_) => return Err(schema("articles".into(), "expected an array")),
            None => return Err(schema("articles".into(), "missing")),
        };

        let mut articles = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let at = |k: &str| format!("articles[{i}].{k}");
            let item = item
                .as_object()
                .ok_or_else(|| schema(format!("articles[{i}]"), "expected an object"))?;
            let number = match item.get("number") {
                Some(Value::Number(n)) => match n.as_u64() {
                    Some(n) => {
                        u32::try_from(n).map_err(|_| schema(at("number"), "out of range"))?
                    }
                    None => return Err(schema(at("number"), "must be a non-negative integer")),
                },
                Some(_) => return Err(schema(at("number"), "expected an integer")),
                None => return Err(schema(at("number"), "missing")),
            };
            let text_of = |k: &str| -> Result<String, LawJsonError> {
                match item.get(k) {
                    Some(Value::String(s)) => Ok(s.clone()),
                    Some(_) => Err(schema(at(k), "expected a string")),
                    None => Err(schema(at(k), "missing")),
                }
            };
            articles.push(Article {
                law_id: law_id.clone(),
                article_number: number,
                heading_text: text_of("heading")?,
                body: text_of("text")?,
            });
        }
        Ok(LawJson {
            law_title,
            law_id,
            articles,
        })
    }
}

pub fn write_law_json(law: &LawJson, path: &Path) -> Result<(), LawJsonError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| LawJsonError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, law.to_json()).map_err(|source| LawJsonError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_law_json(path: &Path) -> Result<LawJson, LawJsonError> {
    let text = std::fs::read_to_string(path).map_err(|source| LawJsonError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    LawJson::from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbers_and_bodies(seg: &Segmentation) -> Vec<(u32, &str)> {
        seg.law
            .articles
            .iter()
            .map(|a| (a.article_number, a.body.as_str()))
            .collect()
    }

    #[test]
    fn two_parenthesized_headers() {
        let seg = segment_articles("l", "t", "مادة (1)\nأ\nمادة (2)\nب");
        assert_eq!(numbers_and_bodies(&seg), [(1, "أ"), (2, "ب")]);
        assert_eq!(seg.law.articles[0].heading_text, "مادة (1)");
        assert!(seg.warnings.is_empty());
    }

    #[test]
    fn preamble_becomes_article_zero() {
        let seg = segment_articles("l", "t", "تمهيد\nمادة (1)\nنص");
        assert_eq!(numbers_and_bodies(&seg), [(0, "تمهيد"), (1, "نص")]);
        assert!(seg.law.articles[0].is_preamble());
    }

    #[test]
    fn arabic_indic_number_with_definite_article() {
        let seg = segment_articles("l", "t", "المادة ٣\nنص");
        assert_eq!(numbers_and_bodies(&seg), [(3, "نص")]);
        assert_eq!(seg.law.articles[0].heading_text, "المادة ٣");
    }

    #[test]
    fn headerless_text_is_one_preamble() {
        let seg = segment_articles("l", "t", "نص بلا مواد");
        assert_eq!(numbers_and_bodies(&seg), [(0, "نص بلا مواد")]);
        assert_eq!(seg.warnings.len(), 1);
    }

    #[test]
    fn in_body_citation_is_not_a_header() {
        let seg = segment_articles("l", "t", "مادة 1\nيطبق الحكم وفقاً للمادة 5\nمادة 2\nنص");
        assert_eq!(
            numbers_and_bodies(&seg),
            [(1, "يطبق الحكم وفقاً للمادة 5"), (2, "نص")]
        );
    }

    #[test]
    fn text_on_header_line_goes_to_body() {
        let seg = segment_articles("l", "t", "مادة (1): يسمى هذا القانون.\nمادة ٢ - يعمل به.");
        assert_eq!(
            numbers_and_bodies(&seg),
            [(1, "يسمى هذا القانون."), (2, "يعمل به.")]
        );
        assert_eq!(seg.law.articles[0].heading_text, "مادة (1):");
        assert_eq!(seg.law.articles[1].heading_text, "مادة ٢ -");
    }

    #[test]
    fn duplicate_numbers_are_kept_in_order() {
        let seg = segment_articles("l", "t", "مادة (11)\nأ\nمادة (11)\nب");
        assert_eq!(numbers_and_bodies(&seg), [(11, "أ"), (11, "ب")]);
    }

    #[test]
    fn empty_body_warns() {
        let seg = segment_articles("l", "t", "مادة (1)\nمادة (2)\nنص");
        assert_eq!(numbers_and_bodies(&seg), [(1, ""), (2, "نص")]);
        assert_eq!(seg.warnings.len(), 1);
    }

    #[test]
    fn spans_are_disjoint_and_ordered() {
        let text = "تمهيد\nمادة (1)\nأ\nمادة (2)\nب";
        let seg = segment_articles("l", "t", text);
        assert_eq!(seg.spans.first().unwrap().start, 0);
        assert_eq!(seg.spans.last().unwrap().end, text.len());
        for w in seg.spans.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn json_round_trip() {
        let law = segment_articles("a/b", "قانون \"العمل\"", "تمهيد\nمادة (1)\nسطر\nسطر ثان").law;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("laws/a/b.json");
        write_law_json(&law, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(!bytes.starts_with(&[0xEF, 0xBB, 0xBF]));
        assert_eq!(read_law_json(&path).unwrap(), law);
    }

    #[test]
    fn missing_articles_is_named() {
        let err = LawJson::from_json(r#"{"law_title":"t","law_id":"i"}"#, Path::new("x.json"))
            .unwrap_err();
        match err {
            LawJsonError::Schema { field, .. } => assert_eq!(field, "articles"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_number_is_rejected() {
        let text =
            r#"{"law_title":"t","law_id":"i","articles":[{"number":-1,"heading":"","text":"x"}]}"#;
        let err = LawJson::from_json(text, Path::new("x.json")).unwrap_err();
        match err {
            LawJsonError::Schema { field, .. } => assert_eq!(field, "articles[0].number"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_rejected() {
        assert!(matches!(
            LawJson::from_json("{", Path::new("x.json")),
            Err(LawJsonError::Malformed { .. })
        ));
    }
}
