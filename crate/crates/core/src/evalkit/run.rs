use futures::stream::{self, StreamExt};
use tokio::time::Instant;

use super::checks::{apply_category_checks, checks_for, CheckResult};
use super::{EvalCase, EvalOutcome};
use crate::synth::client::{ChatClient, ChatMessage};

/// System message for a case: the preamble, then the context article.
pub fn system_message(preamble: &str, context: Option<&str>) -> Option<String> {
    let parts: Vec<&str> = [Some(preamble), context]
        .into_iter()
        .flatten()
        .filter(|s| !s.trim().is_empty())
        .collect();
    (!parts.is_empty()).then(|| parts.join("\n\n"))
}

async fn run_case(client: &ChatClient, case: &EvalCase, preamble: &str) -> EvalOutcome {
    let mut messages = Vec::with_capacity(2);
    if let Some(system) = system_message(preamble, case.context_article.as_deref()) {
        messages.push(ChatMessage::system(system));
    }
    messages.push(ChatMessage::user(case.question.clone()));

    let started = Instant::now();
    let result = client.complete(&messages).await;
    let latency_ms = started.elapsed().as_millis() as u64;

    match result {
        Ok(completion) => EvalOutcome {
            case_id: case.id.clone(),
            category: case.category,
            checks: apply_category_checks(case.category, &completion.text, case.gold.as_ref()),
            response: completion.text,
            latency_ms,
            error: None,
        },
        Err(e) => {
            log::warn!("eval case {} failed: {e}", case.id);
            EvalOutcome {
                case_id: case.id.clone(),
                category: case.category,
                response: String::new(),
                checks: checks_for(case.category)
                    .iter()
                    .map(|n| (n.to_string(), CheckResult::NotApplicable))
                    .collect(),
                latency_ms,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Asks every case and checks the answers. Outcomes come back in case
/// order; a failed request marks that case's checks n-a and the run goes on.
pub async fn run_eval(client: &ChatClient, cases: &[EvalCase], preamble: &str) -> Vec<EvalOutcome> {
    stream::iter(cases)
        .map(|case| run_case(client, case, preamble))
        .buffered(client.config().max_concurrency)
        .collect()
        .await
}
