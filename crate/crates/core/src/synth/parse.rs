//! Extracting question/answer dictionaries from free-form model output.
//!
//! Code fences are dropped, then every balanced top-level `{...}` or `[...]`
//! is parsed as JSON (falling back to JSON5 for unquoted keys, single quotes
//! and trailing commas). Objects carrying a `question` or `answer` key are
//! pair candidates; arrays contribute their object elements; a wrapper
//! object without those keys contributes the objects in its array values.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

const SNIPPET_CHARS: usize = 120;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaFields {
    pub question: String,
    pub answer: String,
}

/// Why a candidate was rejected. `index` counts candidates in order of
/// appearance, accepted or not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDiagnostic {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedOutput {
    pub pairs: Vec<QaFields>,
    pub rejected: Vec<PairDiagnostic>,
    /// Valid pairs beyond `expected_n` that were dropped.
    pub surplus: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no question/answer pairs found in output: {snippet:?}")]
    NoPairs {
        snippet: String,
        rejected: Vec<PairDiagnostic>,
    },
}

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"```[A-Za-z0-9_+\-]*").unwrap());

pub fn strip_code_fences(raw: &str) -> String {
    FENCE.replace_all(raw, "\n").into_owned()
}

/// Returns up to `expected_n` pairs in order of appearance.
pub fn parse_llm_output(raw: &str, expected_n: usize) -> Result<ParsedOutput, ParseError> {
    let text = strip_code_fences(raw);
    let mut candidates = Vec::new();
    for segment in top_level_segments(&text) {
        match segment {
            Segment::Value(value) => collect_candidates(value, &mut candidates, true),
            Segment::Broken(reason) => candidates.push(Err(reason)),
        }
    }

    let mut out = ParsedOutput::default();
    for (index, candidate) in candidates.into_iter().enumerate() {
        match candidate.and_then(|obj| pair_from_object(&obj)) {
            Ok(pair) if out.pairs.len() < expected_n => out.pairs.push(pair),
            Ok(_) => out.surplus += 1,
            Err(reason) => out.rejected.push(PairDiagnostic { index, reason }),
        }
    }

    if out.pairs.is_empty() {
        return Err(ParseError::NoPairs {
            snippet: snippet(raw),
            rejected: out.rejected,
        });
    }
    Ok(out)
}

fn snippet(raw: &str) -> String {
    let trimmed = raw.trim();
    let mut s: String = trimmed.chars().take(SNIPPET_CHARS).collect();
    if trimmed.chars().count() > SNIPPET_CHARS {
        s.push('…');
    }
    s
}

type Candidate = Result<Map<String, Value>, String>;

fn collect_candidates(value: Value, out: &mut Vec<Candidate>, top: bool) {
    match value {
        Value::Object(obj) => {
            if obj.contains_key("question") || obj.contains_key("answer") {
                out.push(Ok(obj));
            } else if top {
                for v in obj.into_values() {
                    if v.is_array() {
                        collect_candidates(v, out, false);
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                if item.is_object() {
                    collect_candidates(item, out, top);
                }
            }
        }
        _ => {}
    }
}

fn pair_from_object(obj: &Map<String, Value>) -> Result<QaFields, String> {
    let field = |name: &str| -> Result<String, String> {
        match obj.get(name) {
            None => Err(format!("missing field `{name}`")),
            Some(Value::String(s)) if s.trim().is_empty() => {
                Err(format!("field `{name}` is empty"))
            }
            Some(Value::String(s)) => Ok(s.trim().to_string()),
            Some(_) => Err(format!("field `{name}` is not a string")),
        }
    };
    let question = field("question");
    let answer = field("answer");
    match (question, answer) {
        (Ok(question), Ok(answer)) => Ok(QaFields { question, answer }),
        (Err(a), Err(b)) => Err(format!("{a}; {b}")),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// End (exclusive, in bytes) of the balanced value opening at `start`.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let mut stack = Vec::new();
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' | '[' => stack.push(c),
            '}' | ']' => {
                let open = stack.pop()?;
                if (open == '{') != (c == '}') {
                    return None;
                }
                if stack.is_empty() {
                    return Some(start + i + c.len_utf8());
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_value(segment: &str) -> Option<Value> {
    serde_json::from_str(segment)
        .ok()
        .or_else(|| json5::from_str::<Value>(segment).ok())
}

enum Segment {
    Value(Value),
    Broken(String),
}

fn top_level_segments(text: &str) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut pos = 0;
    let mut last_end = 0;
    let mut unterminated: Option<usize> = None;
    while pos < text.len() {
        let Some(rel) = text[pos..].find(['{', '[']) else {
            break;
        };
        let start = pos + rel;
        let open = text[start..].chars().next().unwrap();
        match balanced_end(text, start) {
            Some(end) => {
                let segment = &text[start..end];
                if let Some(v) = parse_value(segment) {
                    segments.push(Segment::Value(v));
                    pos = end;
                    last_end = end;
                    continue;
                }
                // a broken innermost object is reported; anything larger is
                // searched for salvageable objects instead
                if open == '{' && !segment[1..].contains('{') {
                    segments.push(Segment::Broken(format!(
                        "not valid JSON: {}",
                        snippet(segment)
                    )));
                    pos = end;
                    last_end = end;
                    continue;
                }
            }
            None if open == '{' && unterminated.is_none_or(|u| u < last_end) => {
                unterminated = Some(start);
            }
            None => {}
        }
        pos = start + open.len_utf8();
    }
    // an object cut off at the end of the output, with nothing parsed after
    // it, is most likely a truncated pair
    if let Some(u) = unterminated.filter(|&u| u >= last_end) {
        segments.push(Segment::Broken(format!(
            "unterminated JSON object: {}",
            snippet(&text[u..])
        )));
    }
    segments
}
