//! Deterministic response checks.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use super::{Category, Gold, Polarity};
use crate::numerals::{self, first_number};
use crate::synth::validate::cited_articles;

pub const POLARITY: &str = "polarity";
pub const REPETITION: &str = "repetition";
pub const CITATION: &str = "citation";
pub const KEYWORD_COVERAGE: &str = "keyword_coverage";
pub const LIST_FORMAT: &str = "list_format";
pub const NUMERIC_MATCH: &str = "numeric_match";

/// The polarity word must start within this many leading characters.
pub const POLARITY_WINDOW: usize = 10;
/// Shortest sentence (in words) that counts as a repetition.
pub const MIN_REPEATED_WORDS: usize = 5;
pub const MIN_LIST_ITEMS: usize = 2;
pub const NUMERIC_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckResult {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "n-a")]
    NotApplicable,
}

impl CheckResult {
    fn from_bool(ok: bool) -> Self {
        if ok {
            CheckResult::Pass
        } else {
            CheckResult::Fail
        }
    }
}

pub fn checks_for(category: Category) -> &'static [&'static str] {
    match category {
        Category::YesNo => &[POLARITY, REPETITION],
        Category::Narrative | Category::Comparative | Category::Conditional => {
            &[CITATION, KEYWORD_COVERAGE]
        }
        Category::ListBased => &[LIST_FORMAT],
        Category::Calculation => &[NUMERIC_MATCH],
    }
}

pub fn apply_category_checks(
    category: Category,
    response: &str,
    gold: Option<&Gold>,
) -> BTreeMap<String, CheckResult> {
    let empty = Gold::default();
    let gold = gold.unwrap_or(&empty);
    checks_for(category)
        .iter()
        .map(|&name| {
            let result = match name {
                POLARITY => polarity_check(response, gold.polarity),
                REPETITION => CheckResult::from_bool(!has_repeated_sentence(response)),
                CITATION => CheckResult::from_bool(!cited_articles(response).is_empty()),
                KEYWORD_COVERAGE => keyword_check(response, &gold.keywords),
                LIST_FORMAT => CheckResult::from_bool(list_items(response) >= MIN_LIST_ITEMS),
                NUMERIC_MATCH => numeric_check(response, gold.number),
                _ => unreachable!("unknown check {name}"),
            };
            (name.to_string(), result)
        })
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || get_general_category(c) == GeneralCategory::NonspacingMark
}

/// Polarity of the first yes/no word starting in the leading window
/// (Arabic نعم / لا, or English yes / no).
pub fn detect_polarity(response: &str) -> Option<Polarity> {
    let chars: Vec<char> = response.trim_start().chars().collect();
    let mut i = 0;
    while i < chars.len() && i < POLARITY_WINDOW {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && is_word_char(chars[i]) {
            i += 1;
        }
        let word: String = chars[start..i]
            .iter()
            .filter(|&&c| get_general_category(c) != GeneralCategory::NonspacingMark)
            .flat_map(|c| c.to_lowercase())
            .collect();
        match word.as_str() {
            "نعم" | "yes" => return Some(Polarity::Yes),
            "لا" | "no" => return Some(Polarity::No),
            _ => {}
        }
    }
    None
}

fn polarity_check(response: &str, gold: Option<Polarity>) -> CheckResult {
    match gold {
        None => CheckResult::NotApplicable,
        Some(g) => CheckResult::from_bool(detect_polarity(response) == Some(g)),
    }
}

/// True when some sentence of at least five words occurs twice.
pub fn has_repeated_sentence(response: &str) -> bool {
    let mut seen = HashSet::new();
    response
        .split(['.', '!', '?', '؟', '؛', '\n'])
        .map(|s| {
            s.split_whitespace()
                .map(|w| w.trim_matches(|c: char| !is_word_char(c) && !numerals::is_digit(c)))
                .filter(|w| !w.is_empty())
                .collect::<Vec<_>>()
        })
        .filter(|words| words.len() >= MIN_REPEATED_WORDS)
        .any(|words| !seen.insert(words.join(" ")))
}

fn keyword_check(response: &str, keywords: &[String]) -> CheckResult {
    if keywords.is_empty() {
        return CheckResult::NotApplicable;
    }
    let hay = numerals::normalize_digits(response);
    CheckResult::from_bool(
        keywords
            .iter()
            .all(|k| hay.contains(&numerals::normalize_digits(k.trim()))),
    )
}

/// Lines that start like a list item: a digit, `-` or `•`.
pub fn list_items(response: &str) -> usize {
    response
        .lines()
        .filter(|l| {
            l.trim_start()
                .chars()
                .next()
                .is_some_and(|c| numerals::is_digit(c) || c == '-' || c == '•')
        })
        .count()
}

fn numeric_check(response: &str, gold: Option<f64>) -> CheckResult {
    let Some(gold) = gold else {
        return CheckResult::NotApplicable;
    };
    CheckResult::from_bool(first_number(response).is_some_and(|got| {
        if gold == 0.0 {
            got == 0.0
        } else {
            ((got - gold) / gold).abs() <= NUMERIC_TOLERANCE
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold_polarity(p: Polarity) -> Gold {
        Gold {
            polarity: Some(p),
            ..Gold::default()
        }
    }

    #[test]
    fn yes_answer_passes_both_checks() {
        let checks = apply_category_checks(
            Category::YesNo,
            "نعم، وفقاً للمادة 11 يجوز ترقية الموظف إلى الفئة الأولى.",
            Some(&gold_polarity(Polarity::Yes)),
        );
        assert_eq!(checks[POLARITY], CheckResult::Pass);
        assert_eq!(checks[REPETITION], CheckResult::Pass);
    }

    #[test]
    fn no_answer_matches_gold_no() {
        let g = gold_polarity(Polarity::No);
        let r = "لا، استناداً إلى قانون البينات رقم 4 لسنة 2001 لا يجوز ذلك.";
        assert_eq!(
            apply_category_checks(Category::YesNo, r, Some(&g))[POLARITY],
            CheckResult::Pass
        );
        let r = "نعم يجوز";
        assert_eq!(
            apply_category_checks(Category::YesNo, r, Some(&g))[POLARITY],
            CheckResult::Fail
        );
    }

    #[test]
    fn polarity_needs_whole_word_in_window() {
        // لاحقاً starts with لا but is a different word
        assert_eq!(detect_polarity("لاحقاً سيتم"), None);
        assert_eq!(detect_polarity("No, it is not"), Some(Polarity::No));
        assert_eq!(detect_polarity("وفقاً للقانون نعم"), None);
        assert_eq!(detect_polarity("نَعَم"), Some(Polarity::Yes));
    }

    #[test]
    fn repeated_sentence_fails() {
        let r = "لا يجوز للموظف الجمع بين وظيفتين. لا يجوز للموظف الجمع بين وظيفتين.";
        assert!(has_repeated_sentence(r));
        // short sentences may repeat
        assert!(!has_repeated_sentence("نعم. نعم."));
    }

    #[test]
    fn paragraph_list_fails() {
        let para = "الحقوق هي: الإجازة السنوية، والإجازة المرضية، وبدل السفر.";
        assert_eq!(
            apply_category_checks(Category::ListBased, para, None)[LIST_FORMAT],
            CheckResult::Fail
        );
        let list = "الحقوق هي:\n1. الإجازة السنوية\n٢. الإجازة المرضية\n- بدل السفر";
        assert_eq!(
            apply_category_checks(Category::ListBased, list, None)[LIST_FORMAT],
            CheckResult::Pass
        );
    }

    #[test]
    fn numeric_match_within_tolerance() {
        let g = Gold {
            number: Some(60000.0),
            ..Gold::default()
        };
        for (r, want) in [
            ("استحقاقك 60000 شيكل", CheckResult::Pass),
            ("استحقاقك ٦٠٬٠٠٠ شيكل", CheckResult::Pass),
            ("استحقاقك 60,250 شيكل", CheckResult::Pass),
            ("استحقاقك 20000 شيكل", CheckResult::Fail),
            ("لا أعرف", CheckResult::Fail),
        ] {
            assert_eq!(
                apply_category_checks(Category::Calculation, r, Some(&g))[NUMERIC_MATCH],
                want,
                "{r}"
            );
        }
    }

    #[test]
    fn narrative_checks() {
        let g = Gold {
            keywords: vec!["الإجازة".into(), "30".into()],
            ..Gold::default()
        };
        let r = "تنص المادة (٣٠) على الإجازة.";
        let checks = apply_category_checks(Category::Narrative, r, Some(&g));
        assert_eq!(checks[CITATION], CheckResult::Pass);
        assert_eq!(checks[KEYWORD_COVERAGE], CheckResult::Pass);
        let checks = apply_category_checks(Category::Conditional, "بشرط موافقة الوزير", None);
        assert_eq!(checks[CITATION], CheckResult::Fail);
        assert_eq!(checks[KEYWORD_COVERAGE], CheckResult::NotApplicable);
    }

    #[test]
    fn every_category_names_its_checks() {
        for cat in Category::ALL {
            let checks = apply_category_checks(cat, "", None);
            let names: Vec<_> = checks.keys().map(String::as_str).collect();
            let mut want = checks_for(cat).to_vec();
            want.sort();
            assert_eq!(names, want);
        }
    }
}
