//! Scoring of detector output against corpus ground truth.
//!
//! Each case is scored pass@1: the detector's first (and only) answer either
//! contains the ground-truth kind or the case counts as missed. Recall is the
//! fraction of cases answered correctly. Precision is label-level: of all
//! labels a detector emitted, the fraction that were the ground truth. In
//! strict mode (the default) labels that match no catalog entry count against
//! the denominator; lenient mode excludes them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::RefactoringKind;
use crate::detect::Detection;
use crate::diffing::{diff_programs, DiffSizeBucket};
use crate::generate::{Provenance, TransformationCase};
use crate::llm::ModelAnswer;

/// One scored case. `correct` is derived: the ground truth was among the
/// predicted kinds. `diff_loc` is the case's churn (added plus removed lines),
/// used for bucketed recall.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub ground_truth: RefactoringKind,
    pub predicted: BTreeSet<RefactoringKind>,
    pub unrecognized: Vec<String>,
    pub correct: bool,
    pub diff_loc: usize,
}

impl CaseResult {
    pub fn new(
        case_id: impl Into<String>,
        ground_truth: RefactoringKind,
        predicted: BTreeSet<RefactoringKind>,
        unrecognized: Vec<String>,
        diff_loc: usize,
    ) -> CaseResult {
        let correct = predicted.contains(&ground_truth);
        CaseResult {
            case_id: case_id.into(),
            ground_truth,
            predicted,
            unrecognized,
            correct,
            diff_loc,
        }
    }
}

/// Builds a result for a corpus case from any prediction set.
pub fn case_result(
    case: &TransformationCase,
    predicted: BTreeSet<RefactoringKind>,
    unrecognized: Vec<String>,
) -> CaseResult {
    let diff_loc = diff_programs(&case.before, &case.after).diff_loc();
    CaseResult::new(&case.id, case.kind, predicted, unrecognized, diff_loc)
}

/// Scores a parsed model answer against its case.
pub fn case_result_from_answer(case: &TransformationCase, answer: &ModelAnswer) -> CaseResult {
    case_result(case, answer.recognized.clone(), answer.unrecognized_labels.clone())
}

/// Scores a structural detection list against its case.
pub fn case_result_from_detections(
    case: &TransformationCase,
    detections: &[Detection],
) -> CaseResult {
    let predicted = detections.iter().map(|d| d.kind).collect();
    case_result(case, predicted, Vec::new())
}

/// Records a case whose detector run produced no answer (a backend or prompt
/// failure). Scored as a miss with nothing emitted.
pub fn case_result_unanswered(case: &TransformationCase) -> CaseResult {
    case_result(case, BTreeSet::new(), Vec::new())
}

/// How emitted labels outside the catalog affect precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMode {
    /// Unrecognized labels count in the precision denominator.
    #[default]
    Strict,
    /// Unrecognized labels are excluded from the precision denominator.
    Lenient,
}

/// A correct-out-of-total pair for one table row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        if correct {
            self.correct += 1;
        }
    }

    /// `None` when the row has no cases, so renderers can distinguish
    /// "no data" from "measured zero".
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub detector_id: String,
    pub provenance: Provenance,
    pub precision_mode: PrecisionMode,
    pub per_kind: BTreeMap<RefactoringKind, Tally>,
    pub recall: f64,
    pub precision: f64,
    pub bucket_recall: BTreeMap<DiffSizeBucket, Tally>,
}

impl EvaluationReport {
    pub fn total_cases(&self) -> usize {
        self.per_kind.values().map(|t| t.total).sum()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("no results to score")]
    EmptyResults,
    #[error("case {case_id} appears more than once in the results")]
    DuplicateCase { case_id: String },
}

/// Aggregates case results into a report.
///
/// Recall is the fraction of cases whose prediction set contains the ground
/// truth. Precision is correct labels over emitted labels, where the
/// denominator includes unrecognized labels in strict mode. A run that
/// emitted no labels at all has precision 0: an empty answer earns no credit.
pub fn score(
    results: &[CaseResult],
    detector_id: &str,
    provenance: &Provenance,
    mode: PrecisionMode,
) -> Result<EvaluationReport, ScoreError> {
    if results.is_empty() {
        return Err(ScoreError::EmptyResults);
    }
    let mut seen = BTreeSet::new();
    for result in results {
        if !seen.insert(result.case_id.as_str()) {
            return Err(ScoreError::DuplicateCase { case_id: result.case_id.clone() });
        }
    }

    let mut per_kind: BTreeMap<RefactoringKind, Tally> = BTreeMap::new();
    let mut bucket_recall: BTreeMap<DiffSizeBucket, Tally> =
        DiffSizeBucket::ALL.iter().map(|&b| (b, Tally::default())).collect();
    let mut correct_cases = 0usize;
    let mut correct_labels = 0usize;
    let mut emitted_labels = 0usize;
    let mut unrecognized_labels = 0usize;

    for result in results {
        let correct = result.predicted.contains(&result.ground_truth);
        debug_assert_eq!(correct, result.correct, "stale correct flag on {}", result.case_id);
        per_kind.entry(result.ground_truth).or_default().add(correct);
        bucket_recall
            .get_mut(&DiffSizeBucket::classify(result.diff_loc))
            .expect("every bucket is pre-seeded")
            .add(correct);
        if correct {
            correct_cases += 1;
            correct_labels += 1;
        }
        emitted_labels += result.predicted.len();
        unrecognized_labels += result.unrecognized.len();
    }

    let denominator = match mode {
        PrecisionMode::Strict => emitted_labels + unrecognized_labels,
        PrecisionMode::Lenient => emitted_labels,
    };
    let precision = if denominator == 0 {
        0.0
    } else {
        correct_labels as f64 / denominator as f64
    };

    Ok(EvaluationReport {
        detector_id: detector_id.to_string(),
        provenance: provenance.clone(),
        precision_mode: mode,
        per_kind,
        recall: correct_cases as f64 / results.len() as f64,
        precision,
        bucket_recall,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

/// Renders a report. All three formats carry the same numbers; JSON is the
/// machine-readable source of truth and round-trips through `serde_json`.
pub fn emit(report: &EvaluationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => emit_markdown(report),
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)
                .expect("report serialization cannot fail");
            text.push('\n');
            text
        }
    }
}

fn percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

fn tally_cells(tally: &Tally) -> String {
    let rate = tally.fraction().map_or_else(|| "-".to_string(), percent);
    format!("{} | {} | {}", tally.correct, tally.total, rate)
}

/// Buckets shown in every report: the five named ranges are always listed,
/// zero-filled; the overflow bucket appears only when it has cases.
fn visible_buckets(report: &EvaluationReport) -> Vec<(DiffSizeBucket, Tally)> {
    DiffSizeBucket::ALL
        .iter()
        .filter_map(|&bucket| {
            let tally = report.bucket_recall.get(&bucket).copied().unwrap_or_default();
            (bucket != DiffSizeBucket::Overflow || tally.total > 0).then_some((bucket, tally))
        })
        .collect()
}

fn emit_markdown(report: &EvaluationReport) -> String {
    let mut lines = Vec::new();
    lines.push("# Detection Report".to_string());
    lines.push(String::new());
    lines.push(format!("- Detector: {}", report.detector_id));
    lines.push(format!(
        "- Corpus: seed {}, {} cases",
        report.provenance.seed,
        report.total_cases()
    ));
    let mode = match report.precision_mode {
        PrecisionMode::Strict => "strict",
        PrecisionMode::Lenient => "lenient",
    };
    lines.push(format!("- Precision mode: {mode}"));
    lines.push(String::new());
    lines.push("| Refactoring Type | Correct | Total | Recall |".to_string());
    lines.push("| --- | ---: | ---: | ---: |".to_string());
    for (kind, tally) in &report.per_kind {
        lines.push(format!("| {} | {} |", kind.display_name(), tally_cells(tally)));
    }
    let overall = Tally {
        correct: report.per_kind.values().map(|t| t.correct).sum(),
        total: report.total_cases(),
    };
    lines.push(format!(
        "| **Recall** | {} | {} | {} |",
        overall.correct,
        overall.total,
        percent(report.recall)
    ));
    lines.push(format!("| **Precision** |  |  | {} |", percent(report.precision)));
    lines.push(String::new());
    lines.push("## Recall by Diff Size".to_string());
    lines.push(String::new());
    lines.push("| Diff Size (LOC) | Correct | Total | Recall |".to_string());
    lines.push("| --- | ---: | ---: | ---: |".to_string());
    for (bucket, tally) in visible_buckets(report) {
        lines.push(format!("| {} | {} |", bucket.label(), tally_cells(&tally)));
    }
    lines.push(String::new());
    lines.join("\n")
}

fn emit_csv(report: &EvaluationReport) -> String {
    let mut lines = vec!["section,label,correct,total,fraction".to_string()];
    let fraction_cell =
        |tally: &Tally| tally.fraction().map_or_else(String::new, |f| f.to_string());
    for (kind, tally) in &report.per_kind {
        lines.push(format!(
            "kind,{},{},{},{}",
            kind.display_name(),
            tally.correct,
            tally.total,
            fraction_cell(tally)
        ));
    }
    let correct_cases: usize = report.per_kind.values().map(|t| t.correct).sum();
    lines.push(format!(
        "summary,recall,{},{},{}",
        correct_cases,
        report.total_cases(),
        report.recall
    ));
    lines.push(format!("summary,precision,,,{}", report.precision));
    for (bucket, tally) in visible_buckets(report) {
        lines.push(format!(
            "bucket,{},{},{},{}",
            bucket.label(),
            tally.correct,
            tally.total,
            fraction_cell(&tally)
        ));
    }
    lines.push(String::new());
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::detect::detect;
    use crate::generate::{build_corpus, GeneratorConfig};
    use crate::llm::{run_detection, MockBackend, PromptKind};

    fn provenance() -> Provenance {
        Provenance::new(&GeneratorConfig::with_seed(7))
    }

    fn result(
        id: &str,
        truth: RefactoringKind,
        predicted: &[RefactoringKind],
        unrecognized: &[&str],
        diff_loc: usize,
    ) -> CaseResult {
        CaseResult::new(
            id,
            truth,
            predicted.iter().copied().collect(),
            unrecognized.iter().map(|s| s.to_string()).collect(),
            diff_loc,
        )
    }

    /// Three correct singletons, one wrong singleton, and one unrecognized
    /// label on a correct case: the reference hand count.
    fn fixture() -> Vec<CaseResult> {
        vec![
            result("c1", RefactoringKind::RenameClass, &[RefactoringKind::RenameClass], &[], 4),
            result(
                "c2",
                RefactoringKind::MoveMethod,
                &[RefactoringKind::MoveMethod],
                &["Shuffle Method"],
                12,
            ),
            result("c3", RefactoringKind::PullUpField, &[RefactoringKind::PullUpField], &[], 6),
            result("c4", RefactoringKind::RenameField, &[RefactoringKind::MoveField], &[], 4),
        ]
    }

    #[test]
    fn exact_singletons_score_perfectly() {
        let results: Vec<CaseResult> = (0..10)
            .map(|i| {
                result(
                    &format!("case{i}"),
                    RefactoringKind::RenameClass,
                    &[RefactoringKind::RenameClass],
                    &[],
                    6,
                )
            })
            .collect();
        let report = score(&results, "t", &provenance(), PrecisionMode::Strict).unwrap();
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(
            report.per_kind[&RefactoringKind::RenameClass],
            Tally { correct: 10, total: 10 }
        );
        assert_eq!(
            report.bucket_recall[&DiffSizeBucket::B0to39],
            Tally { correct: 10, total: 10 }
        );
    }

    #[test]
    fn an_extra_label_halves_precision_but_not_recall() {
        let results = vec![result(
            "only",
            RefactoringKind::RenameField,
            &[RefactoringKind::RenameField, RefactoringKind::MoveField],
            &[],
            4,
        )];
        let report = score(&results, "t", &provenance(), PrecisionMode::Strict).unwrap();
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.precision, 0.5);
    }

    #[test]
    fn reference_fixture_scores_recall_75_and_strict_precision_60() {
        let report = score(&fixture(), "t", &provenance(), PrecisionMode::Strict).unwrap();
        assert_eq!(report.recall, 0.75);
        assert_eq!(report.precision, 0.6, "3 correct labels of 5 counted emissions");

        let lenient = score(&fixture(), "t", &provenance(), PrecisionMode::Lenient).unwrap();
        assert_eq!(lenient.recall, 0.75);
        assert_eq!(lenient.precision, 0.75, "unrecognized label leaves the denominator");
    }

    #[test]
    fn duplicate_ids_and_empty_input_are_rejected() {
        let mut results = fixture();
        results.push(results[0].clone());
        let err = score(&results, "t", &provenance(), PrecisionMode::Strict).unwrap_err();
        assert_eq!(err, ScoreError::DuplicateCase { case_id: "c1".to_string() });

        let err = score(&[], "t", &provenance(), PrecisionMode::Strict).unwrap_err();
        assert_eq!(err, ScoreError::EmptyResults);
    }

    #[test]
    fn empty_predictions_score_zero_precision_not_a_panic() {
        let results = vec![result("c1", RefactoringKind::RenameClass, &[], &[], 4)];
        let report = score(&results, "t", &provenance(), PrecisionMode::Strict).unwrap();
        assert_eq!(report.recall, 0.0);
        assert_eq!(report.precision, 0.0);
    }

    #[test]
    fn buckets_partition_every_case_including_overflow() {
        let results = vec![
            result("a", RefactoringKind::RenameClass, &[RefactoringKind::RenameClass], &[], 39),
            result("b", RefactoringKind::RenameClass, &[], &[], 40),
            result("c", RefactoringKind::RenameClass, &[RefactoringKind::RenameClass], &[], 160),
            result("d", RefactoringKind::RenameClass, &[RefactoringKind::RenameClass], &[], 400),
        ];
        let report = score(&results, "t", &provenance(), PrecisionMode::Strict).unwrap();
        let total: usize = report.bucket_recall.values().map(|t| t.total).sum();
        assert_eq!(total, results.len());
        assert_eq!(report.bucket_recall[&DiffSizeBucket::B40to79], Tally { correct: 0, total: 1 });
        assert_eq!(report.bucket_recall[&DiffSizeBucket::Overflow], Tally { correct: 1, total: 1 });
        assert_eq!(report.bucket_recall[&DiffSizeBucket::B80to119], Tally::default());
    }

    #[test]
    fn scoring_a_concatenation_merges_the_split_counts() {
        let first = fixture();
        let second = vec![
            result("d1", RefactoringKind::RenameClass, &[RefactoringKind::RenameClass], &[], 50),
            result("d2", RefactoringKind::MoveMethod, &[], &["???"], 10),
        ];
        let combined: Vec<CaseResult> =
            first.iter().cloned().chain(second.iter().cloned()).collect();

        let p = provenance();
        let report_a = score(&first, "t", &p, PrecisionMode::Strict).unwrap();
        let report_b = score(&second, "t", &p, PrecisionMode::Strict).unwrap();
        let report_ab = score(&combined, "t", &p, PrecisionMode::Strict).unwrap();

        let mut merged_kinds = report_a.per_kind.clone();
        for (kind, tally) in &report_b.per_kind {
            let entry = merged_kinds.entry(*kind).or_default();
            entry.correct += tally.correct;
            entry.total += tally.total;
        }
        assert_eq!(report_ab.per_kind, merged_kinds);

        let mut merged_buckets = report_a.bucket_recall.clone();
        for (bucket, tally) in &report_b.bucket_recall {
            let entry = merged_buckets.entry(*bucket).or_default();
            entry.correct += tally.correct;
            entry.total += tally.total;
        }
        assert_eq!(report_ab.bucket_recall, merged_buckets);

        let correct = |r: &EvaluationReport| {
            r.per_kind.values().map(|t| t.correct).sum::<usize>()
        };
        assert_eq!(correct(&report_ab), correct(&report_a) + correct(&report_b));
    }

    #[test]
    fn markdown_has_kind_rows_footers_and_all_named_buckets() {
        let report = score(&fixture(), "demo", &provenance(), PrecisionMode::Strict).unwrap();
        let text = emit(&report, ReportFormat::Markdown);
        assert!(text.contains("| Rename Class | 1 | 1 | 100.0% |"));
        assert!(text.contains("| Rename Field | 0 | 1 | 0.0% |"));
        assert!(text.contains("| **Recall** | 3 | 4 | 75.0% |"));
        assert!(text.contains("| **Precision** |  |  | 60.0% |"));
        for label in ["0-39", "40-79", "80-119", "120-159", "160-359"] {
            assert!(text.contains(&format!("| {label} |")), "missing bucket row {label}");
        }
        assert!(!text.contains(">359"), "empty overflow bucket must stay hidden");
        assert!(text.contains("| 80-119 | 0 | 0 | - |"), "empty buckets are zero-filled");
    }

    #[test]
    fn overflow_bucket_appears_once_populated() {
        let results = vec![result(
            "big",
            RefactoringKind::RenameClass,
            &[RefactoringKind::RenameClass],
            &[],
            500,
        )];
        let report = score(&results, "t", &provenance(), PrecisionMode::Strict).unwrap();
        let text = emit(&report, ReportFormat::Markdown);
        assert!(text.contains("| >359 | 1 | 1 | 100.0% |"));
    }

    #[test]
    fn json_report_round_trips() {
        let report = score(&fixture(), "demo", &provenance(), PrecisionMode::Strict).unwrap();
        let text = emit(&report, ReportFormat::Json);
        let parsed: EvaluationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn csv_carries_the_same_numbers_as_the_report() {
        let report = score(&fixture(), "demo", &provenance(), PrecisionMode::Strict).unwrap();
        let text = emit(&report, ReportFormat::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "section,label,correct,total,fraction");
        assert!(lines.contains(&"kind,Rename Class,1,1,1"));
        assert!(lines.contains(&"summary,recall,3,4,0.75"));
        assert!(lines.contains(&"summary,precision,,,0.6"));
        assert!(lines.contains(&"bucket,0-39,3,4,0.75"));
        assert!(lines.contains(&"bucket,80-119,0,0,"));
    }

    #[test]
    fn echo_mock_scores_a_perfect_run_end_to_end() {
        let build = build_corpus(&GeneratorConfig::with_seed(88), 1).unwrap();
        assert!(build.shortfalls.is_empty());
        let corpus = build.corpus;
        let mock = MockBackend::echo(&corpus);
        let outcomes = run_detection(&corpus, &mock, PromptKind::SmallProgramPair, 2);
        let results: Vec<CaseResult> = outcomes
            .iter()
            .map(|outcome| {
                let case = corpus.case(&outcome.case_id).expect("outcome ids come from the corpus");
                case_result_from_answer(case, outcome.result.as_ref().unwrap())
            })
            .collect();
        let report =
            score(&results, "mock-echo", &corpus.provenance, PrecisionMode::Strict).unwrap();
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.precision, 1.0);
    }

    #[test]
    fn structural_detector_scores_perfect_recall_on_a_fresh_corpus() {
        let build = build_corpus(&GeneratorConfig::with_seed(89), 2).unwrap();
        assert!(build.shortfalls.is_empty());
        let corpus = build.corpus;
        let results: Vec<CaseResult> = corpus
            .cases
            .iter()
            .map(|case| {
                let detections = detect(&case.before, &case.after).unwrap();
                case_result_from_detections(case, &detections)
            })
            .collect();
        let report =
            score(&results, "structural", &corpus.provenance, PrecisionMode::Strict).unwrap();
        assert_eq!(report.recall, 1.0);

        let non_hard: Vec<CaseResult> = corpus
            .cases
            .iter()
            .filter(|case| !case.hard)
            .map(|case| {
                let detections = detect(&case.before, &case.after).unwrap();
                case_result_from_detections(case, &detections)
            })
            .collect();
        let non_hard_report =
            score(&non_hard, "structural", &corpus.provenance, PrecisionMode::Strict).unwrap();
        assert!(non_hard_report.precision >= 0.99);
    }
}
