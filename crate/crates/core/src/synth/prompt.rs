//! The question/answer generation prompt.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub law_title: String,
    pub article_number: u32,
    pub legal_text: String,
    pub num_questions: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("num_questions must be at least 1, got {0}")]
    NoQuestions(u32),
    #[error("legal text is empty")]
    EmptyText,
}

impl PromptSpec {
    pub fn validate(&self) -> Result<(), PromptError> {
        if self.num_questions < 1 {
            return Err(PromptError::NoQuestions(self.num_questions));
        }
        if self.legal_text.trim().is_empty() {
            return Err(PromptError::EmptyText);
        }
        Ok(())
    }
}

const OUTPUT_FORMAT: &str =
    r#"Output Format: The output must be in the form of a dictionary: {question: "", answer: ""}."#;

pub const INSTRUCTIONS: [&str; 4] = [
    "Both the questions and answers must be in Arabic.",
    "The question should be written as if someone asked it without legal knowledge.",
    "The answer must be written as if provided by a legal advisor.",
    "Each answer must begin with the article number and law provided in the text.",
];

/// Worked example shown to the model after the instructions.
pub const EXAMPLE_LEGAL_TEXT: &str =
    "Law No. (4) of 2005 amending Civil Service Law No. (4) of 1998. \
Amendment to Article (11): Employees in the second category may be promoted to the first category, \
and employees in the first category may be promoted to the upper category upon meeting the \
conditions outlined in the law.";

pub const EXAMPLE_OUTPUT: &str = r#"{ "question": "If I have an employee in the second category, can they be promoted to the first category?", "answer": "Yes, according to Article 2 of Law No. (4) of 2005, which amends Civil Service Law No. (4) of 1998, employees in the second category may be promoted to the first category provided they meet the conditions outlined in the law." }"#;

/// Renders the prompt for one article. Deterministic.
pub fn build_prompt(spec: &PromptSpec) -> Result<String, PromptError> {
    spec.validate()?;
    let mut out = String::new();
    out.push_str(&format!(
        "Task: Write {} question(s) and answer(s) from the following legal text.\n",
        spec.num_questions
    ));
    out.push_str(&format!(
        "Law Title and Article: {} in Article {}.\n",
        spec.law_title, spec.article_number
    ));
    out.push_str(&format!("Legal Text: {}.\n", spec.legal_text));
    out.push_str(OUTPUT_FORMAT);
    out.push('\n');
    out.push_str("Instructions:\n");
    for (i, line) in INSTRUCTIONS.iter().enumerate() {
        out.push_str(&format!("{}. {}\n", i + 1, line));
    }
    out.push_str("Example:\n");
    out.push_str(&format!("Legal text: {EXAMPLE_LEGAL_TEXT}\n"));
    out.push_str(&format!(
        "Generated question and answer: {EXAMPLE_OUTPUT}\n"
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u32) -> PromptSpec {
        PromptSpec {
            law_title: "قانون العمل".into(),
            article_number: 42,
            legal_text: "يستحق العامل مكافأة نهاية الخدمة".into(),
            num_questions: n,
        }
    }

    #[test]
    fn first_line_carries_the_count() {
        let p = build_prompt(&spec(2)).unwrap();
        let first = p.lines().next().unwrap();
        assert!(first.contains('2'), "{first}");
        assert!(p.contains("قانون العمل in Article 42."));
    }

    #[test]
    fn exactly_four_numbered_instructions() {
        let p = build_prompt(&spec(2)).unwrap();
        let block: Vec<&str> = p
            .lines()
            .skip_while(|l| *l != "Instructions:")
            .skip(1)
            .take_while(|l| *l != "Example:")
            .collect();
        assert_eq!(block.len(), 4);
        for (i, line) in block.iter().enumerate() {
            assert!(line.starts_with(&format!("{}. ", i + 1)));
        }
        assert!(block[3].contains("must begin with the article number"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(
            build_prompt(&spec(3)).unwrap(),
            build_prompt(&spec(3)).unwrap()
        );
    }

    #[test]
    fn zero_questions_is_an_error() {
        assert_eq!(build_prompt(&spec(0)), Err(PromptError::NoQuestions(0)));
        let mut s = spec(1);
        s.legal_text = "  ".into();
        assert_eq!(build_prompt(&s), Err(PromptError::EmptyText));
    }
}
