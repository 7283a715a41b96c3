//! Free-text answer parsing.
//!
//! The prompts instruct models to lead with a bullet list of refactoring
//! labels, so the parser reads bullets from the top of the answer and stops
//! at the first non-bullet block, which by instruction 2 is justification
//! prose. Everything else in the answer is kept verbatim on the result for
//! audit but never interpreted. The parser accepts arbitrary bytes and never
//! fails; garbage in means an empty label set out.

use std::collections::BTreeSet;

use crate::catalog::{match_label, LabelMatch, RefactoringKind};

/// A parsed backend answer.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModelAnswer {
    /// The assistant text exactly as received.
    pub raw_text: String,
    /// Catalog kinds named in the leading bullet list, deduplicated.
    pub recognized: BTreeSet<RefactoringKind>,
    /// Bullet labels that match no catalog entry, in first-seen order.
    pub unrecognized_labels: Vec<String>,
    /// Wall time of the backend call; zero when parsed outside a query.
    pub latency_ms: u64,
}

/// Parse the leading bullet list of `raw` into catalog labels.
///
/// Bullet markers: `-`, `*`, `•`, or a decimal enumeration like `1.`.
/// Emphasis characters are stripped and anything after a `:` is treated as
/// justification. Bullets whose label is empty after stripping are skipped.
pub fn parse_response(raw: &str) -> ModelAnswer {
    let mut recognized = BTreeSet::new();
    let mut unrecognized: Vec<String> = Vec::new();
    for line in raw.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let Some(rest) = strip_bullet_marker(trimmed) else {
            break;
        };
        let label = clean_label(rest);
        if label.is_empty() {
            continue;
        }
        match match_label(&label) {
            Ok(LabelMatch::Recognized(kind)) => {
                recognized.insert(kind);
            }
            Ok(LabelMatch::Unrecognized(text)) => {
                if !unrecognized.contains(&text) {
                    unrecognized.push(text);
                }
            }
            Err(_) => {}
        }
    }
    ModelAnswer {
        raw_text: raw.to_string(),
        recognized,
        unrecognized_labels: unrecognized,
        latency_ms: 0,
    }
}

fn strip_bullet_marker(line: &str) -> Option<&str> {
    for marker in ["-", "*", "•"] {
        if let Some(rest) = line.strip_prefix(marker) {
            return Some(rest);
        }
    }
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        if let Some(rest) = line[digits..].strip_prefix('.') {
            return Some(rest);
        }
    }
    None
}

fn clean_label(text: &str) -> String {
    let stripped: String = text.chars().filter(|c| !matches!(c, '*' | '_' | '`')).collect();
    let label = stripped.split(':').next().unwrap_or("");
    label.trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(answer: &ModelAnswer) -> Vec<RefactoringKind> {
        answer.recognized.iter().copied().collect()
    }

    #[test]
    fn plain_bullet_then_prose() {
        let a = parse_response("- Rename Method\n\nThe method foo was renamed to bar.");
        assert_eq!(kinds(&a), vec![RefactoringKind::RenameMethod]);
        assert!(a.unrecognized_labels.is_empty());
        assert!(a.raw_text.contains("foo was renamed"));
    }

    #[test]
    fn invalid_label_is_preserved_not_guessed() {
        let a = parse_response("- Pull Down Member\n\nThe method was pushed to the subclass.");
        assert!(a.recognized.is_empty());
        assert_eq!(a.unrecognized_labels, vec!["Pull Down Member".to_string()]);
    }

    #[test]
    fn emphasis_and_justification_are_stripped() {
        let a = parse_response("* **Move Method**: relocated m");
        assert_eq!(kinds(&a), vec![RefactoringKind::MoveMethod]);
    }

    #[test]
    fn enumerated_and_unicode_bullets() {
        let a = parse_response("1. Rename Class\n2. `Encapsulate Field`\n• Push Down Field\n");
        assert_eq!(
            kinds(&a),
            vec![
                RefactoringKind::EncapsulateField,
                RefactoringKind::PushDownField,
                RefactoringKind::RenameClass,
            ]
        );
    }

    #[test]
    fn parsing_stops_at_first_non_bullet_block() {
        let a = parse_response("- Rename Method\nJustification paragraph.\n- Move Method\n");
        assert_eq!(kinds(&a), vec![RefactoringKind::RenameMethod]);
    }

    #[test]
    fn duplicates_collapse() {
        let a = parse_response("- Rename Method\n- rename method\n- Made-Up Thing\n- Made-Up Thing\n");
        assert_eq!(kinds(&a), vec![RefactoringKind::RenameMethod]);
        assert_eq!(a.unrecognized_labels, vec!["Made-Up Thing".to_string()]);
    }

    #[test]
    fn prose_only_answers_yield_nothing() {
        let a = parse_response("The transformation renames a method.\n- Rename Method\n");
        assert!(a.recognized.is_empty());
        assert!(a.unrecognized_labels.is_empty());
    }

    #[test]
    fn empty_input_is_fine() {
        let a = parse_response("");
        assert!(a.recognized.is_empty());
        assert!(a.unrecognized_labels.is_empty());
        assert_eq!(a.raw_text, "");
    }

    #[test]
    fn alias_labels_resolve_but_foreign_vocabulary_does_not() {
        let a = parse_response("- Add Parameter\n- Remove Parameter\n- Rename Attribute\n");
        assert_eq!(
            kinds(&a),
            vec![
                RefactoringKind::AddMethodParameter,
                RefactoringKind::RemoveMethodParameter,
            ]
        );
        assert_eq!(a.unrecognized_labels, vec!["Rename Attribute"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        /// Arbitrary text never panics, and whatever is recognized stays
        /// disjoint from the unrecognized labels.
        #[test]
        fn arbitrary_text_never_panics(raw in "\\PC{0,300}") {
            let a = parse_response(&raw);
            for label in &a.unrecognized_labels {
                prop_assert!(matches!(
                    match_label(label),
                    Ok(LabelMatch::Unrecognized(_))
                ));
            }
            prop_assert_eq!(a.raw_text, raw);
        }

        /// A well-formed leading bullet always produces at least one label,
        /// recognized or not.
        #[test]
        fn leading_bullet_is_never_dropped(words in "[A-Za-z][A-Za-z ]{0,40}") {
            let raw = format!("- {words}\n\nprose");
            let a = parse_response(&raw);
            if !words.trim().is_empty() {
                prop_assert!(
                    !a.recognized.is_empty() || !a.unrecognized_labels.is_empty(),
                    "dropped label {:?}", words
                );
            }
        }
    }
}
