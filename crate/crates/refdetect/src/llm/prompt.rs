//! The two chat prompts, frozen byte-for-byte.
//!
//! Golden copies of both rendered templates live under `tests/golden/`; any
//! drift in wording, punctuation, or blank-line placement is a test failure,
//! because scoring runs are only comparable when every backend sees exactly
//! the same instructions.

use thiserror::Error;

/// Which of the two prompt shapes to build for a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PromptKind {
    /// Both full program versions inline.
    SmallProgramPair,
    /// A unified diff instead of the full sources.
    CommitDiff,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("cannot build a diff prompt from an empty diff")]
    EmptyDiff,
}

const PREAMBLE: &str = "You are an expert coding assistant specialized in software refactoring, \
                        with many years of experience analyzing code transformations.";

const TASK: &str = "Your task is to identify which refactoring type(s) have been applied in \
                    transforming the original program into the new version. Use only the \
                    following list of predefined refactorings:";

const INSTRUCTIONS: &str = "**Instructions:**\n\
    1. Begin your response with a bullet-point list of the refactoring type(s) applied.\n\
    2. Then, briefly justify each identified refactoring with reference to the specific code changes.\n\
    3. Only include refactorings from the list above.\n\
    4. Be concise but precise in your explanations.\n\
    Do not generate explanations unrelated to the given transformation.";

/// Prompt over two full program versions. `defs` is the rendered definition
/// block from the catalog. Inputs are embedded with trailing newlines
/// trimmed so the template controls all spacing.
pub fn build_small_prompt(original: &str, refactored: &str, defs: &str) -> String {
    assert!(!original.trim().is_empty(), "original program text must be non-empty");
    assert!(!refactored.trim().is_empty(), "refactored program text must be non-empty");
    format!(
        "{PREAMBLE}\n\n\
         You will be given two versions of a program:\n\n\
         **Original Version:**\n{}\n\n\
         **Transformed Version:**\n{}\n\n\
         {TASK}\n{}\n\n\
         {INSTRUCTIONS}",
        original.trim_end_matches('\n'),
        refactored.trim_end_matches('\n'),
        defs.trim_end_matches('\n'),
    )
}

/// Prompt over a unified diff of the two versions.
pub fn build_diff_prompt(diff_text: &str, defs: &str) -> Result<String, PromptError> {
    if diff_text.trim().is_empty() {
        return Err(PromptError::EmptyDiff);
    }
    Ok(format!(
        "{PREAMBLE}\n\n\
         You will be given the diffs of a commit:\n\n\
         **Diffs:**\n{}\n\n\
         {TASK}\n{}\n\n\
         {INSTRUCTIONS}",
        diff_text.trim_end_matches('\n'),
        defs.trim_end_matches('\n'),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog, render_definitions};

    fn defs() -> String {
        render_definitions(catalog()).unwrap()
    }

    #[test]
    fn small_prompt_contains_the_fixed_landmarks() {
        let p = build_small_prompt("class A {}", "class B {}", &defs());
        assert!(p.starts_with("You are an expert coding assistant"));
        assert!(p.contains("**Original Version:**\nclass A {}"));
        assert!(p.contains("**Transformed Version:**\nclass B {}"));
        assert!(p.contains("Use only the following list of predefined refactorings:"));
        assert!(p.ends_with("Do not generate explanations unrelated to the given transformation."));
    }

    #[test]
    fn small_prompt_embeds_all_nineteen_definitions() {
        let p = build_small_prompt("a", "b", &defs());
        let lines = p.lines().filter(|l| l.starts_with("- ")).count();
        assert_eq!(lines, 19);
        assert!(p.contains("- Rename Method: "));
    }

    #[test]
    fn diff_prompt_swaps_the_input_block() {
        let p = build_diff_prompt("--- a/x.mj\n+++ b/x.mj\n", &defs()).unwrap();
        assert!(p.contains("You will be given the diffs of a commit:"));
        assert!(p.contains("**Diffs:**\n--- a/x.mj\n+++ b/x.mj\n\n"));
        assert!(!p.contains("**Original Version:**"));
        assert!(p.contains("**Instructions:**"));
        assert!(p.ends_with("Do not generate explanations unrelated to the given transformation."));
    }

    #[test]
    fn instruction_block_is_shared_verbatim() {
        let small = build_small_prompt("a", "b", &defs());
        let diff = build_diff_prompt("d", &defs()).unwrap();
        let tail = |s: &str| s.split("**Instructions:**").nth(1).unwrap().to_string();
        assert_eq!(tail(&small), tail(&diff));
    }

    #[test]
    fn empty_diff_is_rejected() {
        assert_eq!(build_diff_prompt("  \n", &defs()), Err(PromptError::EmptyDiff));
    }

    #[test]
    fn prompts_are_deterministic() {
        let a = build_small_prompt("x", "y", &defs());
        let b = build_small_prompt("x", "y", &defs());
        assert_eq!(a, b);
    }
}
