//! Prompt-driven refactoring detection.
//!
//! The pipeline per case: render the program pair (or its diff) into one of
//! two fixed prompt templates, send it to a [`ChatBackend`], and parse the
//! reply's leading bullet list into catalog kinds. A worker pool runs cases
//! concurrently up to a configured parallelism; outcomes come back in case-id
//! order regardless of completion order.

pub mod backend;
pub mod mock;
pub mod parse;
pub mod prompt;

pub use backend::{BackendConfig, BackendError, BackendReply, ChatBackend, HttpBackend};
pub use mock::MockBackend;
pub use parse::{parse_response, ModelAnswer};
pub use prompt::{build_diff_prompt, build_small_prompt, PromptError, PromptKind};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::catalog::{catalog, render_definitions};
use crate::diffing::diff_programs;
use crate::generate::Corpus;
use crate::syntax::ast::CompilationUnit;
use crate::syntax::printer;

/// The catalog rendered as the definition list both prompt templates embed.
pub fn definitions_text() -> String {
    render_definitions(catalog()).expect("the built-in catalog is never empty")
}

/// Prints a program's units as one source text, one blank line between files.
pub fn render_program_source(units: &[CompilationUnit]) -> String {
    units.iter().map(printer::print).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RunError {
    #[error("failed to build the prompt: {0}")]
    Prompt(#[from] PromptError),
    #[error("backend query failed: {0}")]
    Backend(#[from] BackendError),
}

/// One case's result from a detection run: either the parsed model answer or
/// the error that prevented one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseOutcome {
    pub case_id: String,
    pub result: Result<ModelAnswer, RunError>,
}

fn prompt_for_case(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    kind: PromptKind,
    definitions: &str,
) -> Result<String, PromptError> {
    match kind {
        PromptKind::SmallProgramPair => Ok(build_small_prompt(
            &render_program_source(before),
            &render_program_source(after),
            definitions,
        )),
        PromptKind::CommitDiff => {
            build_diff_prompt(&diff_programs(before, after).render(), definitions)
        }
    }
}

/// Queries the backend once per corpus case, running up to `parallelism`
/// queries at a time, and returns the outcomes sorted by case id.
pub fn run_detection(
    corpus: &Corpus,
    backend: &dyn ChatBackend,
    prompt_kind: PromptKind,
    parallelism: usize,
) -> Vec<CaseOutcome> {
    let definitions = definitions_text();
    let cases = &corpus.cases;
    let workers = parallelism.max(1).min(cases.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CaseOutcome>>> = Mutex::new(vec![None; cases.len()]);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(case) = cases.get(index) else { break };
                let result = prompt_for_case(&case.before, &case.after, prompt_kind, &definitions)
                    .map_err(RunError::from)
                    .and_then(|prompt| backend.query(&prompt).map_err(RunError::from))
                    .map(|reply| {
                        let mut answer = parse_response(&reply.text);
                        answer.latency_ms = reply.latency_ms;
                        answer
                    });
                let outcome = CaseOutcome { case_id: case.id.clone(), result };
                slots.lock().unwrap()[index] = Some(outcome);
            });
        }
    });

    let mut outcomes: Vec<CaseOutcome> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every case index was claimed by a worker"))
        .collect();
    outcomes.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    outcomes
}
