//! Ground-truth corpus generation.
//!
//! A corpus is built kind by kind: synthesize a small valid program, apply
//! one mechanical refactoring to it, then keep the pair only if it survives
//! the validity filter (the transformed program resolves, differs from the
//! original, and an independent audit confirms the mechanic's postcondition).
//! Random streams are split per (kind, attempt), so per-kind work can run
//! concurrently without changing any output.

mod apply;
mod audit;
mod program;

pub use apply::{apply_refactoring, AppliedCase, ApplyOutcome};
pub use audit::{audit_case, AuditFailure};
pub use program::generate_program;

use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{RefactoringKind, GENERATED_KINDS};
use crate::syntax::{resolve, CompilationUnit};

/// Knobs for program synthesis. `target_loc_range` bounds the canonical
/// rendering's line count; drafts may miss it by at most [`LOC_TOLERANCE`]
/// lines before being rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub classes_min: usize,
    pub classes_max: usize,
    pub fields_per_class_max: usize,
    pub methods_per_class_max: usize,
    pub inheritance_probability: f64,
    pub target_loc_range: (usize, usize),
}

pub const LOC_TOLERANCE: usize = 6;

/// Rejected drafts allowed per program before giving up.
pub const MAX_DRAFTS: usize = 100;

/// Attempt budget per requested case.
pub const ATTEMPTS_PER_CASE: usize = 20;

impl Default for GeneratorConfig {
    fn default() -> GeneratorConfig {
        GeneratorConfig {
            seed: 0,
            classes_min: 2,
            classes_max: 3,
            fields_per_class_max: 2,
            methods_per_class_max: 2,
            inheritance_probability: 0.6,
            target_loc_range: (14, 34),
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> GeneratorConfig {
        GeneratorConfig { seed, ..GeneratorConfig::default() }
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let mut problems = Vec::new();
        if self.classes_min == 0 {
            problems.push("classes_min must be at least 1".to_string());
        }
        if self.classes_min > self.classes_max {
            problems.push(format!(
                "classes_min {} exceeds classes_max {}",
                self.classes_min, self.classes_max
            ));
        }
        if !(0.0..=1.0).contains(&self.inheritance_probability) {
            problems.push(format!(
                "inheritance_probability {} is outside [0, 1]",
                self.inheritance_probability
            ));
        }
        let (lo, hi) = self.target_loc_range;
        if lo == 0 || lo > hi {
            problems.push(format!("target_loc_range ({lo}, {hi}) is not a positive range"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(GenerateError::InvalidConfig(problems.join("; ")))
        }
    }

    /// Accepted rendering line counts: the target range widened by the
    /// tolerance on both sides.
    pub fn accepted_loc(&self) -> (usize, usize) {
        let (lo, hi) = self.target_loc_range;
        (lo.saturating_sub(LOC_TOLERANCE), hi + LOC_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("no satisfying program after {0} rejected drafts")]
    GenerationExhausted(usize),
    #[error("{0} is not one of the generated kinds")]
    InvalidKind(RefactoringKind),
}

/// The element a transformation acted on, with enough names and loci to
/// audit the case without replaying the mechanic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "element")]
pub enum Subject {
    Class {
        original: String,
        renamed: String,
    },
    Method {
        class: String,
        original: String,
        renamed: String,
    },
    Field {
        class: String,
        original: String,
        renamed: String,
    },
    Parameter {
        class: String,
        method: String,
        parameter: String,
    },
    Encapsulated {
        class: String,
        field: String,
        getter: String,
        setter: String,
    },
    MovedMethod {
        method: String,
        source: String,
        target: String,
    },
    PulledUp {
        member: String,
        source: String,
        target: String,
    },
    PushedDown {
        member: String,
        source: String,
        targets: Vec<String>,
        abstract_stub: bool,
    },
}

impl Subject {
    pub fn describe(&self) -> String {
        match self {
            Subject::Class { original, renamed } => {
                format!("class {original} renamed to {renamed}")
            }
            Subject::Method { class, original, renamed } => {
                format!("method {class}.{original} renamed to {renamed}")
            }
            Subject::Field { class, original, renamed } => {
                format!("field {class}.{original} renamed to {renamed}")
            }
            Subject::Parameter { class, method, parameter } => {
                format!("parameter {parameter} added to {class}.{method}")
            }
            Subject::Encapsulated { class, field, getter, setter } => {
                format!("field {class}.{field} encapsulated behind {getter}/{setter}")
            }
            Subject::MovedMethod { method, source, target } => {
                format!("method {method} moved from {source} to {target}")
            }
            Subject::PulledUp { member, source, target } => {
                format!("member {member} pulled up from {source} to {target}")
            }
            Subject::PushedDown { member, source, targets, abstract_stub } => {
                let stub = if *abstract_stub { ", abstract declaration retained" } else { "" };
                format!(
                    "member {member} pushed down from {source} to {}{stub}",
                    targets.join(", ")
                )
            }
        }
    }
}

/// One ground-truth benchmark case: a program pair differing by exactly one
/// known refactoring. `hard` marks deliberately ambiguous variants (the
/// retained abstract stub of a push-down).
#[derive(Debug, Clone, PartialEq)]
pub struct TransformationCase {
    pub id: String,
    pub kind: RefactoringKind,
    pub before: Vec<CompilationUnit>,
    pub after: Vec<CompilationUnit>,
    pub subject: Subject,
    pub hard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config: GeneratorConfig,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(config: &GeneratorConfig) -> Provenance {
        Provenance {
            seed: config.seed,
            config: config.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub provenance: Provenance,
    pub cases: Vec<TransformationCase>,
}

impl Corpus {
    pub fn case(&self, id: &str) -> Option<&TransformationCase> {
        self.cases.iter().find(|c| c.id == id)
    }
}

/// Why an applied (or attempted) transformation was not kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SkipReason {
    /// The program offered no eligible element for the kind.
    NoEligibleElement,
    /// The transformed program failed resolution.
    ResolveFailed,
    /// The independent postcondition audit rejected the pair.
    AuditFailed,
    /// The transformation was, byte for byte, a no-op.
    Unchanged,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindStats {
    pub attempts: usize,
    pub produced: usize,
    pub skipped_no_eligible: usize,
    pub skipped_resolve: usize,
    pub skipped_audit: usize,
    pub skipped_unchanged: usize,
}

impl KindStats {
    fn record_skip(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::NoEligibleElement => self.skipped_no_eligible += 1,
            SkipReason::ResolveFailed => self.skipped_resolve += 1,
            SkipReason::AuditFailed => self.skipped_audit += 1,
            SkipReason::Unchanged => self.skipped_unchanged += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GenerationStats {
    pub per_kind: BTreeMap<RefactoringKind, KindStats>,
}

/// A kind that could not reach the requested case count within its attempt
/// budget. The cases that were obtained stay in the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetExhausted {
    pub kind: RefactoringKind,
    pub obtained: usize,
    pub requested: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusBuild {
    pub corpus: Corpus,
    pub stats: GenerationStats,
    pub shortfalls: Vec<BudgetExhausted>,
}

/// Stable case identifier: truncated SHA-256 of seed, kind, and the case's
/// index within its kind.
pub fn case_id(seed: u64, kind: RefactoringKind, index: usize) -> String {
    let digest = Sha256::digest(format!("{seed}:{kind}:{index}").as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

fn attempt_rng(seed: u64, kind: RefactoringKind, attempt: usize) -> ChaCha8Rng {
    let digest = Sha256::digest(format!("{seed}:{kind}:attempt:{attempt}").as_bytes());
    ChaCha8Rng::from_seed(digest.into())
}

/// Build a corpus over all ten generated kinds.
pub fn build_corpus(config: &GeneratorConfig, per_kind: usize) -> Result<CorpusBuild, GenerateError> {
    build_corpus_for(config, per_kind, &GENERATED_KINDS)
}

/// Build a corpus restricted to the given kinds. Kinds run on their own
/// threads; stream splitting keeps the result identical to a sequential run.
pub fn build_corpus_for(
    config: &GeneratorConfig,
    per_kind: usize,
    kinds: &[RefactoringKind],
) -> Result<CorpusBuild, GenerateError> {
    config.validate()?;
    if per_kind == 0 {
        return Err(GenerateError::InvalidConfig("per_kind must be at least 1".to_string()));
    }
    if kinds.is_empty() {
        return Err(GenerateError::InvalidConfig("at least one kind is required".to_string()));
    }
    for kind in kinds {
        if !GENERATED_KINDS.contains(kind) {
            return Err(GenerateError::InvalidKind(*kind));
        }
    }

    let mut per_kind_results: Vec<KindOutcome> = Vec::with_capacity(kinds.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = kinds
            .iter()
            .map(|kind| scope.spawn(move || build_kind(config, per_kind, *kind)))
            .collect();
        for handle in handles {
            per_kind_results.push(handle.join().expect("generation worker panicked"));
        }
    });

    let mut cases = Vec::new();
    let mut stats = GenerationStats::default();
    let mut shortfalls = Vec::new();
    for outcome in per_kind_results {
        let outcome = outcome?;
        stats.per_kind.insert(outcome.kind, outcome.stats);
        if outcome.cases.len() < per_kind {
            shortfalls.push(BudgetExhausted {
                kind: outcome.kind,
                obtained: outcome.cases.len(),
                requested: per_kind,
            });
        }
        cases.extend(outcome.cases);
    }

    Ok(CorpusBuild {
        corpus: Corpus { provenance: Provenance::new(config), cases },
        stats,
        shortfalls,
    })
}

struct KindBuild {
    kind: RefactoringKind,
    cases: Vec<TransformationCase>,
    stats: KindStats,
}

type KindOutcome = Result<KindBuild, GenerateError>;

fn build_kind(config: &GeneratorConfig, per_kind: usize, kind: RefactoringKind) -> KindOutcome {
    let budget = ATTEMPTS_PER_CASE * per_kind;
    let mut cases = Vec::new();
    let mut stats = KindStats::default();
    while cases.len() < per_kind && stats.attempts < budget {
        let mut rng = attempt_rng(config.seed, kind, stats.attempts);
        stats.attempts += 1;
        let before = generate_program(config, &mut rng)?;
        match apply_refactoring(&before, kind, &mut rng)? {
            ApplyOutcome::NotApplicable => stats.record_skip(SkipReason::NoEligibleElement),
            ApplyOutcome::Applied(applied) => {
                match filter_case(&before, &applied) {
                    Some(reason) => stats.record_skip(reason),
                    None => {
                        let id = case_id(config.seed, kind, cases.len());
                        cases.push(TransformationCase {
                            id,
                            kind,
                            before: before.clone(),
                            after: applied.after,
                            subject: applied.subject,
                            hard: applied.hard,
                        });
                    }
                }
            }
        }
    }
    stats.produced = cases.len();
    Ok(KindBuild { kind, cases, stats })
}

/// The validity filter: reject no-ops, unresolvable results, and pairs the
/// independent audit cannot confirm.
fn filter_case(before: &[CompilationUnit], applied: &AppliedCase) -> Option<SkipReason> {
    if applied.after == before {
        return Some(SkipReason::Unchanged);
    }
    if resolve(&applied.after).is_err() {
        return Some(SkipReason::ResolveFailed);
    }
    if audit_case(applied.kind, before, &applied.after, &applied.subject).is_err() {
        return Some(SkipReason::AuditFailed);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        GeneratorConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_reported() {
        let mut bad = GeneratorConfig::default();
        bad.classes_min = 5;
        bad.classes_max = 2;
        bad.inheritance_probability = 1.5;
        let err = bad.validate().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("classes_min"));
        assert!(text.contains("inheritance_probability"));
    }

    #[test]
    fn accepted_loc_widens_by_tolerance() {
        let config = GeneratorConfig::default();
        assert_eq!(config.accepted_loc(), (8, 40));
    }

    #[test]
    fn case_ids_are_stable_and_distinct() {
        let a = case_id(42, RefactoringKind::RenameClass, 0);
        assert_eq!(a, case_id(42, RefactoringKind::RenameClass, 0));
        assert_ne!(a, case_id(42, RefactoringKind::RenameClass, 1));
        assert_ne!(a, case_id(42, RefactoringKind::RenameMethod, 0));
        assert_ne!(a, case_id(43, RefactoringKind::RenameClass, 0));
        assert_eq!(a.len(), 12);
        assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn zero_per_kind_rejected() {
        let err = build_corpus(&GeneratorConfig::default(), 0).unwrap_err();
        assert!(matches!(err, GenerateError::InvalidConfig(_)));
    }

    #[test]
    fn non_generated_kind_rejected() {
        let err = build_corpus_for(
            &GeneratorConfig::default(),
            1,
            &[RefactoringKind::ExtractClass],
        )
        .unwrap_err();
        assert_eq!(err, GenerateError::InvalidKind(RefactoringKind::ExtractClass));
    }

    #[test]
    fn subjects_describe_themselves() {
        let subject = Subject::PushedDown {
            member: "m1".to_string(),
            source: "A".to_string(),
            targets: vec!["B".to_string(), "C".to_string()],
            abstract_stub: true,
        };
        let text = subject.describe();
        assert!(text.contains("m1"));
        assert!(text.contains("B, C"));
        assert!(text.contains("abstract declaration retained"));
    }

    #[test]
    fn subject_json_is_tagged() {
        let subject = Subject::Class { original: "A".to_string(), renamed: "AR07".to_string() };
        let json = serde_json::to_string(&subject).unwrap();
        assert!(json.contains("\"element\":\"Class\""), "{json}");
        let back: Subject = serde_json::from_str(&json).unwrap();
        assert_eq!(back, subject);
    }

    #[test]
    fn build_corpus_fills_every_kind() {
        let config = GeneratorConfig::with_seed(11);
        let build = build_corpus(&config, 3).unwrap();
        assert!(
            build.shortfalls.is_empty(),
            "kinds fell short: {:?}\nstats: {:#?}",
            build.shortfalls,
            build.stats
        );
        assert_eq!(build.corpus.cases.len(), 30);
        for kind in GENERATED_KINDS {
            let count = build.corpus.cases.iter().filter(|c| c.kind == kind).count();
            assert_eq!(count, 3, "{kind} case count");
        }
        // Cases of one kind precede cases of the next; ids are unique.
        let kind_order: Vec<_> = build.corpus.cases.iter().map(|c| c.kind).collect();
        let mut sorted = kind_order.clone();
        sorted.sort_by_key(|k| GENERATED_KINDS.iter().position(|g| g == k).unwrap());
        assert_eq!(kind_order, sorted);
        let ids: std::collections::BTreeSet<_> =
            build.corpus.cases.iter().map(|c| c.id.clone()).collect();
        assert_eq!(ids.len(), 30);
    }

    #[test]
    fn build_corpus_is_deterministic() {
        let config = GeneratorConfig::with_seed(77);
        let a = build_corpus(&config, 2).unwrap();
        let b = build_corpus(&config, 2).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.stats, b.stats);
        let c = build_corpus(&GeneratorConfig::with_seed(78), 2).unwrap();
        assert_ne!(a.corpus.cases, c.corpus.cases);
    }

    #[test]
    fn corpus_cases_resolve_and_differ() {
        let config = GeneratorConfig::with_seed(5);
        let build = build_corpus(&config, 2).unwrap();
        for case in &build.corpus.cases {
            assert_ne!(case.before, case.after, "case {} is an identity edit", case.id);
            crate::syntax::resolve(&case.before).unwrap();
            crate::syntax::resolve(&case.after).unwrap();
        }
    }

    #[test]
    fn flat_hierarchy_config_starves_hierarchy_kinds() {
        let mut config = GeneratorConfig::with_seed(3);
        config.inheritance_probability = 0.0;
        let build = build_corpus_for(
            &config,
            2,
            &[RefactoringKind::PullUpField, RefactoringKind::RenameClass],
        )
        .unwrap();
        let pull_up = build
            .shortfalls
            .iter()
            .find(|s| s.kind == RefactoringKind::PullUpField)
            .expect("pull-up cannot succeed without inheritance");
        assert_eq!(pull_up.obtained, 0);
        assert_eq!(pull_up.requested, 2);
        assert_eq!(
            build.corpus.cases.iter().filter(|c| c.kind == RefactoringKind::RenameClass).count(),
            2
        );
        let stats = &build.stats.per_kind[&RefactoringKind::PullUpField];
        assert_eq!(stats.skipped_no_eligible, stats.attempts);
    }
}
