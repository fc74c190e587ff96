//! Synthetic question/answer generation.
//!
//! [`prompt`] renders the generation prompt, [`client`] talks to a
//! chat-completions endpoint with rate limiting, retries and a response
//! cache, [`parse`] pulls question/answer dictionaries out of model output
//! and [`validate`] checks each pair against its source article.
//! [`generate`] ties the four together for a batch of articles.

pub mod client;
pub mod generate;
pub mod parse;
pub mod prompt;
pub mod validate;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use client::{
    ChatClient, ChatMessage, ClientStats, Completion, ProviderConfig, ResponseCache, SynthError,
};
pub use generate::{generate_pairs, FilterPolicy, GeneratedPair, GenerationJob, GenerationResult};
pub use parse::{parse_llm_output, PairDiagnostic, ParseError, ParsedOutput, QaFields};
pub use prompt::{build_prompt, PromptError, PromptSpec};
pub use validate::{validate_qa, ValidationReport};

/// One generated question/answer with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub answer: String,
    pub law_id: String,
    pub article_number: u32,
    /// Position of the source article within its law. Article numbers may
    /// repeat inside amendment laws; the index does not.
    pub article_index: usize,
    pub provider: String,
    pub model_name: String,
    pub created_at: DateTime<Utc>,
}
