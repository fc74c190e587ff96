//! Deterministic, idempotent text cleaning for raw law files.
//!
//! One pass applies, in order:
//!
//! 1. `strip_invisible` – drop control characters (except `\n` and `\t`),
//!    format characters (zero-width marks, bidi controls, BOM); CR/CRLF and
//!    Unicode line/paragraph separators become `\n`.
//! 2. `join_broken_lines` – join a line that does not end in sentence-final
//!    punctuation with a following line that starts with a lowercase or
//!    Arabic letter. Article header lines are never joined.
//! 3. `collapse_repeated_punctuation` – runs of 3+ identical punctuation
//!    characters become one (`-` is left to rule 4).
//! 4. `remove_dash_runs` – runs of 2+ `-` / tatweel (`ـ`) are deleted.
//! 5. `collapse_blank_lines` – 2+ consecutive blank lines become one.
//! 6. `collapse_spaces` – horizontal whitespace runs become one space.
//! 7. `trim` – trim every line and the whole text.
//!
//! [`clean_text`] repeats the pass until the text stops changing, so the
//! output is always a fixed point: cleaning it again is a no-op.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::segment::is_article_header;

pub const STRIP_INVISIBLE: &str = "strip_invisible";
pub const JOIN_BROKEN_LINES: &str = "join_broken_lines";
pub const COLLAPSE_REPEATED_PUNCTUATION: &str = "collapse_repeated_punctuation";
pub const REMOVE_DASH_RUNS: &str = "remove_dash_runs";
pub const COLLAPSE_BLANK_LINES: &str = "collapse_blank_lines";
pub const COLLAPSE_SPACES: &str = "collapse_spaces";
pub const TRIM: &str = "trim";

/// Rule names in application order.
pub const RULES: [&str; 7] = [
    STRIP_INVISIBLE,
    JOIN_BROKEN_LINES,
    COLLAPSE_REPEATED_PUNCTUATION,
    REMOVE_DASH_RUNS,
    COLLAPSE_BLANK_LINES,
    COLLAPSE_SPACES,
    TRIM,
];

const MAX_PASSES: usize = 64;

/// Per-rule switches. All rules are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanOptions {
    pub strip_invisible: bool,
    pub join_broken_lines: bool,
    pub collapse_repeated_punctuation: bool,
    pub remove_dash_runs: bool,
    pub collapse_blank_lines: bool,
    pub collapse_spaces: bool,
    pub trim: bool,
}

impl Default for CleanOptions {
    fn default() -> Self {
        Self {
            strip_invisible: true,
            join_broken_lines: true,
            collapse_repeated_punctuation: true,
            remove_dash_runs: true,
            collapse_blank_lines: true,
            collapse_spaces: true,
            trim: true,
        }
    }
}

impl CleanOptions {
    /// Toggle a rule by name. Returns false for an unknown name.
    pub fn set(&mut self, rule: &str, enabled: bool) -> bool {
        let slot = match rule {
            STRIP_INVISIBLE => &mut self.strip_invisible,
            JOIN_BROKEN_LINES => &mut self.join_broken_lines,
            COLLAPSE_REPEATED_PUNCTUATION => &mut self.collapse_repeated_punctuation,
            REMOVE_DASH_RUNS => &mut self.remove_dash_runs,
            COLLAPSE_BLANK_LINES => &mut self.collapse_blank_lines,
            COLLAPSE_SPACES => &mut self.collapse_spaces,
            TRIM => &mut self.trim,
            _ => return false,
        };
        *slot = enabled;
        true
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    /// Input length minus output length, in characters.
    pub chars_removed: usize,
    pub lines_joined: usize,
    /// Punctuation runs, blank-line runs and whitespace runs collapsed.
    pub runs_collapsed: usize,
    /// Number of applications of each rule.
    pub rule_hits: BTreeMap<String, usize>,
}

impl CleanReport {
    fn hit(&mut self, rule: &str, n: usize) {
        if n > 0 {
            *self.rule_hits.entry(rule.to_string()).or_default() += n;
        }
    }

    /// Sums another report into this one.
    pub fn merge(&mut self, other: &CleanReport) {
        self.chars_removed += other.chars_removed;
        self.lines_joined += other.lines_joined;
        self.runs_collapsed += other.runs_collapsed;
        for (k, v) in &other.rule_hits {
            *self.rule_hits.entry(k.clone()).or_default() += v;
        }
    }
}

/// Cleans `raw` with every rule enabled.
pub fn clean_text(raw: &str) -> (String, CleanReport) {
    clean_text_with(raw, &CleanOptions::default())
}

pub fn clean_text_with(raw: &str, opts: &CleanOptions) -> (String, CleanReport) {
    let mut report = CleanReport::default();
    let mut text = raw.to_string();
    for _ in 0..MAX_PASSES {
        let next = clean_pass(&text, opts, &mut report);
        if next == text {
            break;
        }
        text = next;
    }
    report.chars_removed = raw.chars().count().saturating_sub(text.chars().count());
    (text, report)
}

fn clean_pass(input: &str, opts: &CleanOptions, report: &mut CleanReport) -> String {
    let mut text = input.to_string();
    if opts.strip_invisible {
        let (t, n) = strip_invisible(&text);
        report.hit(STRIP_INVISIBLE, n);
        text = t;
    }
    if opts.join_broken_lines {
        let (t, n) = join_broken_lines(&text);
        report.hit(JOIN_BROKEN_LINES, n);
        report.lines_joined += n;
        text = t;
    }
    if opts.collapse_repeated_punctuation {
        let (t, n) = collapse_repeated_punctuation(&text);
        report.hit(COLLAPSE_REPEATED_PUNCTUATION, n);
        report.runs_collapsed += n;
        text = t;
    }
    if opts.remove_dash_runs {
        let (t, n) = remove_dash_runs(&text);
        report.hit(REMOVE_DASH_RUNS, n);
        text = t;
    }
    if opts.collapse_blank_lines {
        let (t, n) = collapse_blank_lines(&text);
        report.hit(COLLAPSE_BLANK_LINES, n);
        report.runs_collapsed += n;
        text = t;
    }
    if opts.collapse_spaces {
        let (t, n) = collapse_spaces(&text);
        report.hit(COLLAPSE_SPACES, n);
        report.runs_collapsed += n;
        text = t;
    }
    if opts.trim {
        let (t, n) = trim_lines(&text);
        report.hit(TRIM, n);
        text = t;
    }
    text
}

pub(crate) fn is_arabic_block(c: char) -> bool {
    matches!(c,
        '\u{0600}'..='\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08FF}'
        | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}')
}

pub(crate) fn is_arabic_letter(c: char) -> bool {
    is_arabic_block(c) && c.is_alphabetic()
}

fn is_invisible(c: char) -> bool {
    (c.is_control() && c != '\n' && c != '\t') || get_general_category(c) == GeneralCategory::Format
}

fn strip_invisible(text: &str) -> (String, usize) {
    let mut out = String::with_capacity(text.len());
    let mut hits = 0;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\r' => {
                if chars.peek() != Some(&'\n') {
                    out.push('\n');
                }
                hits += 1;
            }
            '\u{2028}' | '\u{2029}' => {
                out.push('\n');
                hits += 1;
            }
            c if is_invisible(c) => hits += 1,
            c => out.push(c),
        }
    }
    (out, hits)
}

const SENTENCE_FINAL: &[char] = &['.', '،', '؛', ':', '؟', '!', '(', ')', '”', '?', ';', ','];

fn starts_continuation(line: &str) -> bool {
    line.trim_start()
        .chars()
        .next()
        .is_some_and(|c| c.is_lowercase() || is_arabic_letter(c))
}

fn join_broken_lines(text: &str) -> (String, usize) {
    let mut lines: Vec<String> = Vec::new();
    let mut joins = 0;
    for line in text.split('\n') {
        if let Some(prev) = lines.last_mut() {
            let prev_trimmed = prev.trim_end();
            let open = prev_trimmed
                .chars()
                .last()
                .is_some_and(|c| !SENTENCE_FINAL.contains(&c));
            if open
                && !is_article_header(prev_trimmed.trim_start())
                && !line.trim().is_empty()
                && starts_continuation(line)
                && !is_article_header(line.trim())
            {
                let keep = prev_trimmed.len();
                prev.truncate(keep);
                prev.push(' ');
                prev.push_str(line.trim_start());
                joins += 1;
                continue;
            }
        }
        lines.push(line.to_string());
    }
    (lines.join("\n"), joins)
}

fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

fn collapse_repeated_punctuation(text: &str) -> (String, usize) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut runs = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut j = i + 1;
        while j < chars.len() && chars[j] == c {
            j += 1;
        }
        let len = j - i;
        if len >= 3 && c != '-' && is_punctuation(c) {
            out.push(c);
            runs += 1;
        } else {
            out.extend(&chars[i..j]);
        }
        i = j;
    }
    (out, runs)
}

fn is_dash(c: char) -> bool {
    c == '-' || c == '\u{0640}'
}

fn remove_dash_runs(text: &str) -> (String, usize) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut runs = 0;
    let mut i = 0;
    while i < chars.len() {
        if !is_dash(chars[i]) {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && is_dash(chars[j]) {
            j += 1;
        }
        if j - i >= 2 {
            runs += 1;
        } else {
            out.push(chars[i]);
        }
        i = j;
    }
    (out, runs)
}

fn collapse_blank_lines(text: &str) -> (String, usize) {
    let mut out: Vec<&str> = Vec::new();
    let mut runs = 0;
    let mut blank_run = 0;
    for line in text.split('\n') {
        if line.trim().is_empty() {
            blank_run += 1;
            if blank_run == 2 {
                runs += 1;
            }
            if blank_run >= 2 {
                continue;
            }
            out.push("");
        } else {
            blank_run = 0;
            out.push(line);
        }
    }
    (out.join("\n"), runs)
}

fn collapse_spaces(text: &str) -> (String, usize) {
    let mut out = String::with_capacity(text.len());
    let mut runs = 0;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\n' && c.is_whitespace() {
            let mut len = 1;
            while chars
                .peek()
                .is_some_and(|&n| n != '\n' && n.is_whitespace())
            {
                chars.next();
                len += 1;
            }
            if len > 1 || c != ' ' {
                runs += 1;
            }
            out.push(' ');
        } else {
            out.push(c);
        }
    }
    (out, runs)
}

fn trim_lines(text: &str) -> (String, usize) {
    let mut hits = 0;
    let lines: Vec<&str> = text
        .split('\n')
        .map(|l| {
            let t = l.trim();
            if t.len() != l.len() {
                hits += 1;
            }
            t
        })
        .collect();
    let joined = lines.join("\n");
    let trimmed = joined.trim();
    if trimmed.len() != joined.len() {
        hits += 1;
    }
    (trimmed.to_string(), hits)
}
