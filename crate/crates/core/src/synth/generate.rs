use serde::{Deserialize, Serialize};

use super::client::{ChatClient, Completion};
use super::parse::{parse_llm_output, PairDiagnostic, ParseError};
use super::prompt::PromptSpec;
use super::validate::{validate_qa, ValidationReport};
use super::QAPair;
use crate::segment::{Article, LawJson};

/// What to do with pairs that fail validation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPolicy {
    #[default]
    DropInvalid,
    KeepInvalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationJob {
    pub law_title: String,
    pub article_index: usize,
    pub article: Article,
    pub num_questions: u32,
}

impl GenerationJob {
    pub fn prompt_spec(&self) -> PromptSpec {
        PromptSpec {
            law_title: self.law_title.clone(),
            article_number: self.article.article_number,
            legal_text: self.article.body.clone(),
            num_questions: self.num_questions,
        }
    }

    /// One job per numbered article with a non-empty body. The preamble is
    /// not an article and gets no questions.
    pub fn for_law(law: &LawJson, num_questions: u32) -> Vec<GenerationJob> {
        law.articles
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_preamble() && !a.body.trim().is_empty())
            .map(|(i, a)| GenerationJob {
                law_title: law.law_title.clone(),
                article_index: i,
                article: a.clone(),
                num_questions,
            })
            .collect()
    }
}

/// A pair with its validation outcome; one line of `qa/pairs.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPair {
    #[serde(flatten)]
    pub pair: QAPair,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone)]
pub struct GenerationResult {
    pub job: GenerationJob,
    pub kept: Vec<GeneratedPair>,
    /// Pairs that failed validation under [`FilterPolicy::DropInvalid`].
    pub dropped: Vec<GeneratedPair>,
    pub rejected: Vec<PairDiagnostic>,
    pub parse_error: Option<String>,
    pub request_error: Option<String>,
    pub retries: u32,
    pub from_cache: bool,
}

/// Generates, parses and validates pairs for every job. Results are in job
/// order; a failed request affects only its own result.
pub async fn generate_pairs(
    client: &ChatClient,
    jobs: &[GenerationJob],
    policy: FilterPolicy,
) -> Vec<GenerationResult> {
    let specs: Vec<PromptSpec> = jobs.iter().map(GenerationJob::prompt_spec).collect();
    let completions = client.request_many(&specs).await;
    jobs.iter()
        .zip(completions)
        .map(|(job, completion)| match completion {
            Ok(c) => process(client, job, c, policy),
            Err(e) => GenerationResult {
                job: job.clone(),
                kept: Vec::new(),
                dropped: Vec::new(),
                rejected: Vec::new(),
                parse_error: None,
                request_error: Some(e.to_string()),
                retries: 0,
                from_cache: false,
            },
        })
        .collect()
}

fn process(
    client: &ChatClient,
    job: &GenerationJob,
    completion: Completion,
    policy: FilterPolicy,
) -> GenerationResult {
    let mut result = GenerationResult {
        job: job.clone(),
        kept: Vec::new(),
        dropped: Vec::new(),
        rejected: Vec::new(),
        parse_error: None,
        request_error: None,
        retries: completion.retries,
        from_cache: completion.from_cache,
    };
    let parsed = match parse_llm_output(&completion.text, job.num_questions as usize) {
        Ok(p) => p,
        Err(e) => {
            let ParseError::NoPairs { rejected, .. } = &e;
            result.rejected = rejected.clone();
            result.parse_error = Some(e.to_string());
            return result;
        }
    };
    result.rejected = parsed.rejected;
    let config = client.config();
    for fields in parsed.pairs {
        let pair = QAPair {
            question: fields.question,
            answer: fields.answer,
            law_id: job.article.law_id.clone(),
            article_number: job.article.article_number,
            article_index: job.article_index,
            provider: config.name.clone(),
            model_name: config.model_name.clone(),
            created_at: completion.created_at,
        };
        let validation = validate_qa(&pair, &job.article);
        let generated = GeneratedPair { pair, validation };
        if generated.validation.passed || policy == FilterPolicy::KeepInvalid {
            result.kept.push(generated);
        } else {
            result.dropped.push(generated);
        }
    }
    result
}
