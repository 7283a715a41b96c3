//! Offline stand-in for a chat model. Three modes:
//!
//! * echo: built from a corpus, it recognizes which case a prompt describes
//!   (by the embedded program texts or diff) and answers with that case's
//!   ground-truth kind, so end-to-end runs score perfectly without a network.
//! * fixed: always returns one canned response.
//! * replay: maps exact prompt strings to recorded responses.
//!
//! The mock also counts concurrent `query` calls, which lets tests verify the
//! runner's parallelism bound from the outside.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use crate::diffing::diff_programs;
use crate::generate::Corpus;

use super::backend::{BackendError, BackendReply, ChatBackend};
use super::render_program_source;

struct EchoEntry {
    before: String,
    after: String,
    diff: String,
    answer: String,
}

enum MockMode {
    Echo(Vec<EchoEntry>),
    Fixed(String),
    Replay(BTreeMap<String, String>),
}

pub struct MockBackend {
    mode: MockMode,
    latency: Option<Duration>,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    queries: AtomicUsize,
}

impl MockBackend {
    /// Builds an echo mock that answers every prompt derived from `corpus`
    /// with the originating case's ground-truth kind.
    pub fn echo(corpus: &Corpus) -> MockBackend {
        let entries = corpus
            .cases
            .iter()
            .map(|case| {
                let before = render_program_source(&case.before);
                let after = render_program_source(&case.after);
                let diff = diff_programs(&case.before, &case.after).render();
                let answer = format!(
                    "- {}\nThat is the transformation applied between the two versions.",
                    case.kind.display_name()
                );
                EchoEntry { before, after, diff, answer }
            })
            .collect();
        MockBackend::with_mode(MockMode::Echo(entries))
    }

    /// Always replies with `text`, whatever the prompt.
    pub fn fixed(text: impl Into<String>) -> MockBackend {
        MockBackend::with_mode(MockMode::Fixed(text.into()))
    }

    /// Replies from a prompt-to-response table; unknown prompts fail.
    pub fn replay(responses: BTreeMap<String, String>) -> MockBackend {
        MockBackend::with_mode(MockMode::Replay(responses))
    }

    fn with_mode(mode: MockMode) -> MockBackend {
        MockBackend {
            mode,
            latency: None,
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            queries: AtomicUsize::new(0),
        }
    }

    /// Holds each query open for `latency`, making overlap observable.
    pub fn with_latency(mut self, latency: Duration) -> MockBackend {
        self.latency = Some(latency);
        self
    }

    /// Highest number of queries that were ever in flight at once.
    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn total_queries(&self) -> usize {
        self.queries.load(Ordering::SeqCst)
    }

    fn respond(&self, prompt: &str) -> Result<String, BackendError> {
        match &self.mode {
            MockMode::Fixed(text) => Ok(text.clone()),
            MockMode::Replay(responses) => responses.get(prompt).cloned().ok_or_else(|| {
                BackendError::MalformedResponse {
                    reason: "no recorded response for this prompt".to_string(),
                    body: snippet(prompt),
                }
            }),
            MockMode::Echo(entries) => {
                entries
                    .iter()
                    .find(|entry| {
                        let pair = prompt.contains(entry.before.trim_end_matches('\n'))
                            && prompt.contains(entry.after.trim_end_matches('\n'));
                        pair || prompt.contains(entry.diff.trim_end_matches('\n'))
                    })
                    .map(|entry| entry.answer.clone())
                    .ok_or_else(|| BackendError::MalformedResponse {
                        reason: "prompt does not match any corpus case".to_string(),
                        body: snippet(prompt),
                    })
            }
        }
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}

impl ChatBackend for MockBackend {
    fn query(&self, prompt: &str) -> Result<BackendReply, BackendError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        self.queries.fetch_add(1, Ordering::SeqCst);
        if let Some(latency) = self.latency {
            std::thread::sleep(latency);
        }
        let result = self.respond(prompt);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result.map(|text| BackendReply {
            text,
            latency_ms: self.latency.map_or(0, |d| d.as_millis() as u64),
        })
    }

    fn id(&self) -> String {
        match self.mode {
            MockMode::Echo(_) => "mock-echo".to_string(),
            MockMode::Fixed(_) => "mock-fixed".to_string(),
            MockMode::Replay(_) => "mock-replay".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::catalog::{catalog, render_definitions, RefactoringKind};
    use crate::generate::{build_corpus, GeneratorConfig};
    use crate::llm::parse::parse_response;
    use crate::llm::prompt::{build_diff_prompt, build_small_prompt};

    fn small_corpus() -> Corpus {
        let build = build_corpus(&GeneratorConfig::with_seed(604), 1).unwrap();
        assert!(build.shortfalls.is_empty());
        build.corpus
    }

    #[test]
    fn echo_mock_answers_pair_prompts_with_ground_truth() {
        let corpus = small_corpus();
        let mock = MockBackend::echo(&corpus);
        let defs = render_definitions(catalog()).unwrap();
        for case in &corpus.cases {
            let prompt = build_small_prompt(
                &render_program_source(&case.before),
                &render_program_source(&case.after),
                &defs,
            );
            let reply = mock.query(&prompt).unwrap();
            let answer = parse_response(&reply.text);
            assert!(
                answer.recognized.contains(&case.kind),
                "echo mock missed {:?} for case {}",
                case.kind,
                case.id
            );
            assert!(answer.unrecognized_labels.is_empty());
        }
        assert_eq!(mock.total_queries(), corpus.cases.len());
    }

    #[test]
    fn echo_mock_answers_diff_prompts_with_ground_truth() {
        let corpus = small_corpus();
        let mock = MockBackend::echo(&corpus);
        let defs = render_definitions(catalog()).unwrap();
        for case in &corpus.cases {
            let diff = diff_programs(&case.before, &case.after).render();
            let prompt = build_diff_prompt(&diff, &defs).unwrap();
            let reply = mock.query(&prompt).unwrap();
            let answer = parse_response(&reply.text);
            assert!(answer.recognized.contains(&case.kind));
        }
    }

    #[test]
    fn echo_mock_rejects_unrelated_prompts() {
        let corpus = small_corpus();
        let mock = MockBackend::echo(&corpus);
        let err = mock.query("what refactoring is this?").unwrap_err();
        assert!(matches!(err, BackendError::MalformedResponse { .. }));
    }

    #[test]
    fn fixed_mock_always_returns_the_canned_text() {
        let mock = MockBackend::fixed("- Rename Class");
        assert_eq!(mock.query("anything").unwrap().text, "- Rename Class");
        assert_eq!(mock.query("else").unwrap().text, "- Rename Class");
        assert_eq!(mock.id(), "mock-fixed");
        let answer = parse_response(&mock.query("x").unwrap().text);
        assert_eq!(
            answer.recognized.into_iter().collect::<Vec<_>>(),
            vec![RefactoringKind::RenameClass]
        );
    }

    #[test]
    fn replay_mock_matches_exact_prompts_only() {
        let mut table = BTreeMap::new();
        table.insert("prompt A".to_string(), "- Move Method".to_string());
        let mock = MockBackend::replay(table);
        assert_eq!(mock.query("prompt A").unwrap().text, "- Move Method");
        assert!(mock.query("prompt B").is_err());
    }

    #[test]
    fn latency_is_reported_in_the_reply() {
        let mock = MockBackend::fixed("- Rename Class").with_latency(Duration::from_millis(5));
        let reply = mock.query("p").unwrap();
        assert_eq!(reply.latency_ms, 5);
    }
}
