//! Digit handling for mixed Western / Arabic-Indic numerals.
//!
//! Legal texts write numbers either as `0-9`, Arabic-Indic `٠-٩` (U+0660)
//! or extended Arabic-Indic `۰-۹` (U+06F0). Text is never rewritten; these
//! helpers are used only where a number has to be matched or compared.

use std::sync::LazyLock;

use regex::Regex;

/// Value of a decimal digit in any of the three supported scripts.
pub fn digit_value(c: char) -> Option<u32> {
    match c {
        '0'..='9' => Some(c as u32 - '0' as u32),
        '\u{0660}'..='\u{0669}' => Some(c as u32 - 0x0660),
        '\u{06F0}'..='\u{06F9}' => Some(c as u32 - 0x06F0),
        _ => None,
    }
}

pub fn is_digit(c: char) -> bool {
    digit_value(c).is_some()
}

/// Rewrites every supported digit to its ASCII form, leaving other
/// characters untouched.
pub fn normalize_digits(s: &str) -> String {
    s.chars()
        .map(|c| match digit_value(c) {
            Some(d) => char::from_digit(d, 10).unwrap(),
            None => c,
        })
        .collect()
}

/// Parses a run of digits (any supported script). Fails on empty input,
/// non-digits or overflow.
pub fn parse_digits(s: &str) -> Option<u64> {
    if s.is_empty() {
        return None;
    }
    s.chars().try_fold(0u64, |acc, c| {
        let d = digit_value(c)?;
        acc.checked_mul(10)?.checked_add(u64::from(d))
    })
}

/// Regex character class body matching any supported digit.
pub(crate) const DIGIT_CLASS: &str = r"0-9\x{0660}-\x{0669}\x{06F0}-\x{06F9}";

/// Finds the first numeral group in `text` and returns its value.
///
/// A group is a digit run optionally followed by thousands groups
/// (`,` or `٬` then exactly three digits) and a fractional part
/// (`.` or `٫` then digits).
pub fn first_number(text: &str) -> Option<f64> {
    let m = NUMBER.find(text)?;
    let mut plain = String::with_capacity(m.as_str().len());
    for c in m.as_str().chars() {
        match c {
            ',' | '\u{066C}' => {}
            '.' | '\u{066B}' => plain.push('.'),
            _ => plain.push(char::from_digit(digit_value(c)?, 10)?),
        }
    }
    plain.parse().ok()
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    let d = DIGIT_CLASS;
    Regex::new(&format!(
        r"[{d}]+(?:[,\x{{066C}}][{d}]{{3}})*(?:[.\x{{066B}}][{d}]+)?"
    ))
    .expect("number regex")
});
