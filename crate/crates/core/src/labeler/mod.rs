//! Prompting an LLM for OntoClean labels and reading its answer.

mod client;
mod prompt;
mod response;

pub use client::{
    backend_for, call_llm, max_in_flight, prompt_hash, set_max_in_flight, ApiKey, ChatBackend, Completion,
    FixtureBackend, HttpBackend, LlmConfig, LlmError, API_KEY_ENV, DEFAULT_MAX_IN_FLIGHT, FIXTURE_DEFAULT,
    FIXTURE_SCHEME,
};
pub use prompt::{
    build_prompt, default_definitions, PromptConfig, PromptStrategy, Representation, GUIDANCE_PREFIX, INSTRUCTION,
    OUTPUT_FORMAT,
};
pub use response::{format_labels, parse_labels, EmptyResponse, LabelingResult, ParseWarning};

use thiserror::Error;

use crate::taxonomy::Taxonomy;

#[derive(Debug, Error)]
pub enum LabelerError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("no parseable labels after {attempts} attempt(s)")]
    EmptyResponse { attempts: u32, last: EmptyResponse },
    #[error("invalid prompt configuration: {0}")]
    InvalidPrompt(String),
}

/// Prompt, call, parse; re-asks while fewer than half the classes got labels.
pub fn label_ontology(t: &Taxonomy, pc: &PromptConfig, lc: &LlmConfig) -> Result<LabelingResult, LabelerError> {
    let backend = backend_for(lc)?;
    label_ontology_with(t, pc, backend.as_ref(), lc.max_retries)
}

/// [`label_ontology`] against an explicit backend.
///
/// Makes at most `1 + max_retries` submissions and keeps the one that
/// labelled the most classes (the earliest on ties).
pub fn label_ontology_with(
    t: &Taxonomy,
    pc: &PromptConfig,
    backend: &dyn ChatBackend,
    max_retries: u32,
) -> Result<LabelingResult, LabelerError> {
    pc.validate().map_err(LabelerError::InvalidPrompt)?;
    let prompt = build_prompt(t, pc);
    let mut best: Option<LabelingResult> = None;
    let mut last_empty = None;
    let mut attempts = 0;
    while attempts <= max_retries {
        attempts += 1;
        let completion = backend.complete(&prompt)?;
        match parse_labels(&completion.content, t) {
            Ok(result) => {
                if best
                    .as_ref()
                    .is_none_or(|b| result.labelled_classes() > b.labelled_classes())
                {
                    best = Some(result);
                }
            }
            Err(empty) => last_empty = Some(empty),
        }
        if best.as_ref().is_some_and(|b| 2 * b.labelled_classes() >= t.len()) {
            break;
        }
        tracing::debug!(
            attempt = attempts,
            "labelling covered under half of the classes; asking again"
        );
    }
    match best {
        Some(mut result) => {
            result.attempts = attempts;
            Ok(result)
        }
        None => Err(LabelerError::EmptyResponse {
            attempts,
            last: last_empty.expect("an attempt was made"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{parse_taxonomy, TaxonomyFormat};
    use std::sync::Mutex;

    struct Scripted(Mutex<Vec<Result<String, LlmError>>>);

    impl Scripted {
        fn new(replies: Vec<Result<&str, LlmError>>) -> Self {
            let mut v: Vec<_> = replies.into_iter().map(|r| r.map(str::to_owned)).collect();
            v.reverse();
            Self(Mutex::new(v))
        }
    }

    impl ChatBackend for Scripted {
        fn complete(&self, _prompt: &str) -> Result<Completion, LlmError> {
            let next = self.0.lock().unwrap().pop().expect("script exhausted");
            next.map(|content| Completion { content, attempts: 1 })
        }
    }

    fn tax() -> Taxonomy {
        parse_taxonomy("A\n\tB\n\tC\n\tD", TaxonomyFormat::Indented).unwrap()
    }

    fn cfg() -> PromptConfig {
        PromptConfig::new(PromptStrategy::ZeroShot, Representation::Hierarchical { seed: 0 })
    }

    #[test]
    fn keeps_better_second_attempt() {
        let backend = Scripted::new(vec![Ok("A: I+"), Ok("A: I+\nB: I+\nC: I+\nD: I+")]);
        let r = label_ontology_with(&tax(), &cfg(), &backend, 3).unwrap();
        assert_eq!(r.attempts, 2);
        assert_eq!(r.labelled_classes(), 4);
    }

    #[test]
    fn half_coverage_is_enough() {
        let backend = Scripted::new(vec![Ok("A: I+\nB: I-")]);
        let r = label_ontology_with(&tax(), &cfg(), &backend, 3).unwrap();
        assert_eq!(r.attempts, 1);
    }

    #[test]
    fn best_attempt_survives_later_garbage() {
        let backend = Scripted::new(vec![Ok("A: I+"), Ok("nothing useful"), Ok("B: U+")]);
        let r = label_ontology_with(&tax(), &cfg(), &backend, 2).unwrap();
        assert_eq!(r.attempts, 3);
        assert!(r.labeling.get("A").is_some());
    }

    #[test]
    fn prose_every_time_is_empty_response() {
        let backend = Scripted::new(vec![Ok("sorry"), Ok("still no"), Ok("nope")]);
        let err = label_ontology_with(&tax(), &cfg(), &backend, 2).unwrap_err();
        assert!(matches!(err, LabelerError::EmptyResponse { attempts: 3, .. }));
    }

    #[test]
    fn llm_errors_propagate() {
        let backend = Scripted::new(vec![Err(LlmError::AuthError { status: 401 })]);
        let err = label_ontology_with(&tax(), &cfg(), &backend, 2).unwrap_err();
        assert!(matches!(err, LabelerError::Llm(LlmError::AuthError { status: 401 })));
    }
}
