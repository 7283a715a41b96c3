//! `refdetect`: generate ground-truth refactoring corpora, run detectors over
//! them, and score the results.
//!
//! The subcommands chain into a pipeline over a shared output directory:
//! `generate` saves a corpus under `<out>/corpus`, `detect` writes
//! `<out>/results.json` for one detector, and `evaluate` renders report
//! tables from a results file. `diff` is a standalone viewer for the unified
//! diff between two source trees.
//!
//! API keys are read from the environment variable named in the backend
//! configuration file; they never appear in configuration or output files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use refdetect::catalog::{match_label, CatalogError, LabelMatch, RefactoringKind, GENERATED_KINDS};
use refdetect::detect::detect;
use refdetect::diffing::{diff_sources, DiffSizeBucket, NamedSource, DEFAULT_CONTEXT};
use refdetect::evaluate::{
    case_result_from_answer, case_result_from_detections, case_result_unanswered, emit, score,
    CaseResult, PrecisionMode, ReportFormat,
};
use refdetect::generate::{build_corpus_for, Corpus, CorpusBuild, GeneratorConfig};
use refdetect::llm::{run_detection, BackendConfig, ChatBackend, HttpBackend, MockBackend, PromptKind};
use refdetect::persist::{load_corpus, load_results, save_corpus, save_results, ResultRecord, ResultsFile};

#[derive(Parser)]
#[command(
    name = "refdetect",
    version,
    about = "Ground-truth refactoring corpora, detectors, and scoring"
)]
struct Cli {
    /// Seed for corpus generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory that run artifacts are written into.
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,
    /// Print per-case progress.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of single-refactoring program pairs.
    Generate(GenerateArgs),
    /// Run a detector over a saved corpus and write a results file.
    Detect(DetectArgs),
    /// Score a results file against its corpus and render report tables.
    Evaluate(EvaluateArgs),
    /// Print the unified diff between two source trees.
    Diff(DiffArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Cases to generate for each refactoring kind.
    #[arg(long, default_value_t = 10)]
    per_kind: usize,
    /// Restrict generation to these kinds (comma-separated, e.g. rename-class).
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetectorChoice {
    /// Deterministic AST comparison.
    Structural,
    /// Prompt a chat model over HTTP.
    Llm,
    /// Offline mock that always answers with the ground truth.
    MockEcho,
}

#[derive(Clone, Copy, ValueEnum)]
enum PromptChoice {
    /// Both program versions in full.
    Pair,
    /// The unified diff between the versions.
    Diff,
}

#[derive(Args)]
struct DetectArgs {
    /// Saved corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    detector: DetectorChoice,
    /// JSON file with chat backend settings (llm detector only).
    #[arg(long)]
    backend_config: Option<PathBuf>,
    /// Prompt style for prompt-driven detectors.
    #[arg(long, value_enum, default_value_t = PromptChoice::Pair)]
    prompt: PromptChoice,
    /// Maximum fraction of cases allowed to fail before the run exits nonzero.
    #[arg(long, default_value_t = 0.1)]
    error_threshold: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatChoice {
    Markdown,
    Csv,
    Json,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Results file written by `detect`.
    #[arg(long)]
    results: PathBuf,
    /// Corpus the results were produced from.
    #[arg(long)]
    corpus: PathBuf,
    /// Write only this report format (default: all three).
    #[arg(long, value_enum)]
    format: Option<FormatChoice>,
    /// Exclude unrecognized labels from the precision denominator.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct DiffArgs {
    /// Original sources: a file or a directory of files.
    #[arg(long)]
    before: PathBuf,
    /// Changed sources: a file or a directory of files.
    #[arg(long)]
    after: PathBuf,
}

/// Writes to stdout, exiting quietly when the reader has closed the pipe:
/// `refdetect ... | head` must truncate the output, not panic the tool.
fn write_stdout(text: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()).is_err() {
        std::process::exit(0);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => { write_stdout(&format!("{}\n", format_args!($($arg)*))) };
}

macro_rules! out {
    ($($arg:tt)*) => { write_stdout(&format!($($arg)*)) };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(&cli, args),
        Command::Detect(args) => cmd_detect(&cli, args),
        Command::Evaluate(args) => cmd_evaluate(&cli, args),
        Command::Diff(args) => cmd_diff(args),
    }
}

fn parse_kind_filter(labels: &[String]) -> Result<Vec<RefactoringKind>, String> {
    if labels.is_empty() {
        return Ok(GENERATED_KINDS.to_vec());
    }
    let supported = || {
        GENERATED_KINDS
            .iter()
            .map(|k| kebab(k.display_name()))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut kinds = Vec::new();
    for label in labels {
        let kind = match match_label(label) {
            Ok(LabelMatch::Recognized(kind)) => kind,
            Ok(LabelMatch::Unrecognized(_)) | Err(CatalogError::InvalidLabel) => {
                return Err(format!(
                    "unknown refactoring kind {label:?}; choose from: {}",
                    supported()
                ))
            }
            Err(e) => return Err(e.to_string()),
        };
        if !GENERATED_KINDS.contains(&kind) {
            return Err(format!(
                "{} is in the catalog but has no generator; choose from: {}",
                kind.display_name(),
                supported()
            ));
        }
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    Ok(kinds)
}

fn kebab(display_name: &str) -> String {
    display_name.to_ascii_lowercase().replace(' ', "-")
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<ExitCode, String> {
    let kinds = parse_kind_filter(&args.kinds)?;
    let config = GeneratorConfig::with_seed(cli.seed);
    let build: CorpusBuild = build_corpus_for(&config, args.per_kind, &kinds)
        .map_err(|e| format!("generation failed: {e}"))?;

    let corpus_dir = cli.out.join("corpus");
    save_corpus(&build.corpus, &corpus_dir).map_err(|e| format!("saving corpus: {e}"))?;

    outln!(
        "generated {} cases (seed {}, {} per kind over {} kinds)",
        build.corpus.cases.len(),
        cli.seed,
        args.per_kind,
        kinds.len()
    );
    outln!(
        "{:<32} {:>9} {:>9} {:>12} {:>8} {:>6} {:>10}",
        "kind", "produced", "attempts", "no-eligible", "resolve", "audit", "unchanged"
    );
    let mut attempts_total = 0;
    for kind in &kinds {
        let stats = build.stats.per_kind.get(kind).copied().unwrap_or_default();
        attempts_total += stats.attempts;
        outln!(
            "{:<32} {:>9} {:>9} {:>12} {:>8} {:>6} {:>10}",
            kind.display_name(),
            format!("{}/{}", stats.produced, args.per_kind),
            stats.attempts,
            stats.skipped_no_eligible,
            stats.skipped_resolve,
            stats.skipped_audit,
            stats.skipped_unchanged
        );
    }
    outln!("attrition: {} attempts -> {} cases", attempts_total, build.corpus.cases.len());
    outln!("corpus hash: {}", hash_directory(&corpus_dir)?);
    outln!("saved to {}", corpus_dir.display());

    if build.shortfalls.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for shortfall in &build.shortfalls {
            eprintln!(
                "warning: {} produced {} of {} requested cases within the attempt budget",
                shortfall.kind.display_name(),
                shortfall.obtained,
                shortfall.requested
            );
        }
        eprintln!("the partial corpus was saved; rerun with a different seed for full coverage");
        Ok(ExitCode::FAILURE)
    }
}

/// Digest of every file under `dir` (sorted relative paths and contents), so
/// identical corpora print identical hashes.
fn hash_directory(dir: &Path) -> Result<String, String> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files).map_err(|e| format!("hashing {}: {e}", dir.display()))?;
    files.sort();
    let mut hasher = Sha256::new();
    for relative in &files {
        let bytes = std::fs::read(dir.join(relative))
            .map_err(|e| format!("hashing {relative}: {e}"))?;
        hasher.update(relative.as_bytes());
        hasher.update([0]);
        hasher.update(&bytes);
        hasher.update([0]);
    }
    Ok(hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect())
}

fn collect_files(root: &Path, dir: &Path, into: &mut Vec<String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, into)?;
        } else {
            let relative = path
                .strip_prefix(root)
                .expect("walk stays under the root")
                .to_string_lossy()
                .into_owned();
            into.push(relative);
        }
    }
    Ok(())
}

fn cmd_detect(cli: &Cli, args: &DetectArgs) -> Result<ExitCode, String> {
    if !(0.0..=1.0).contains(&args.error_threshold) {
        return Err(format!(
            "--error-threshold {} is not a fraction in [0, 1]",
            args.error_threshold
        ));
    }
    if args.backend_config.is_some() && args.detector != DetectorChoice::Llm {
        return Err("--backend-config is only used with --detector llm".to_string());
    }
    let corpus = load_corpus(&args.corpus)
        .map_err(|e| format!("--corpus {}: {e}", args.corpus.display()))?;
    let prompt_kind = match args.prompt {
        PromptChoice::Pair => PromptKind::SmallProgramPair,
        PromptChoice::Diff => PromptKind::CommitDiff,
    };

    let (detector_id, backend_snapshot, records) = match args.detector {
        DetectorChoice::Structural => {
            ("structural".to_string(), None, detect_structural(&corpus))
        }
        DetectorChoice::MockEcho => {
            let backend = MockBackend::echo(&corpus);
            let workers = available_workers();
            let records = detect_with_backend(&corpus, &backend, prompt_kind, workers);
            (backend.id(), None, records)
        }
        DetectorChoice::Llm => {
            let path = args
                .backend_config
                .as_ref()
                .ok_or("--detector llm requires --backend-config")?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("--backend-config {}: {e}", path.display()))?;
            let config: BackendConfig = serde_json::from_str(&text)
                .map_err(|e| format!("--backend-config {}: {e}", path.display()))?;
            if let Some(var) = &config.api_key_env {
                if std::env::var(var).map(|v| v.trim().is_empty()).unwrap_or(true) {
                    return Err(format!(
                        "environment variable {var} is not set; the llm detector reads the API key from it"
                    ));
                }
            }
            let parallelism = config.parallelism;
            let backend = HttpBackend::new(config.clone()).map_err(|e| e.to_string())?;
            let records = detect_with_backend(&corpus, &backend, prompt_kind, parallelism);
            (backend.id(), Some(config), records)
        }
    };

    if cli.verbose {
        for record in &records {
            match &record.error {
                None => outln!("case {}: ok", record.result.case_id),
                Some(error) => outln!("case {}: failed ({error})", record.result.case_id),
            }
        }
    }

    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let total = records.len();
    outln!("detector {detector_id}: {total} cases, {failed} failed");

    std::fs::create_dir_all(&cli.out)
        .map_err(|e| format!("creating {}: {e}", cli.out.display()))?;
    let results_path = cli.out.join("results.json");
    let file = ResultsFile::new(
        detector_id,
        backend_snapshot,
        corpus.provenance.clone(),
        records,
    );
    save_results(&file, &results_path).map_err(|e| e.to_string())?;
    outln!("results written to {}", results_path.display());

    let failure_rate = if total == 0 { 0.0 } else { failed as f64 / total as f64 };
    if failure_rate > args.error_threshold {
        eprintln!(
            "{failed} of {total} cases failed, over the {:.0}% threshold",
            args.error_threshold * 100.0
        );
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn available_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8)
}

/// Runs the structural detector over every case on a CPU-bound worker pool.
fn detect_structural(corpus: &Corpus) -> Vec<ResultRecord> {
    let cases = &corpus.cases;
    let workers = available_workers().min(cases.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ResultRecord>>> = Mutex::new(vec![None; cases.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(case) = cases.get(index) else { break };
                let record = match detect(&case.before, &case.after) {
                    Ok(detections) => ResultRecord {
                        result: case_result_from_detections(case, &detections),
                        raw_text: None,
                        error: None,
                    },
                    Err(e) => ResultRecord {
                        result: case_result_unanswered(case),
                        raw_text: None,
                        error: Some(e.to_string()),
                    },
                };
                slots.lock().unwrap()[index] = Some(record);
            });
        }
    });
    let mut records: Vec<ResultRecord> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every case index was claimed"))
        .collect();
    records.sort_by(|a, b| a.result.case_id.cmp(&b.result.case_id));
    records
}

/// Runs a prompt-driven backend over every case. Failed queries become empty
/// predictions carrying the error text.
fn detect_with_backend(
    corpus: &Corpus,
    backend: &dyn ChatBackend,
    prompt_kind: PromptKind,
    parallelism: usize,
) -> Vec<ResultRecord> {
    run_detection(corpus, backend, prompt_kind, parallelism)
        .into_iter()
        .map(|outcome| {
            let case = corpus
                .case(&outcome.case_id)
                .expect("outcomes carry ids from this corpus");
            match outcome.result {
                Ok(answer) => ResultRecord {
                    result: case_result_from_answer(case, &answer),
                    raw_text: Some(answer.raw_text),
                    error: None,
                },
                Err(e) => ResultRecord {
                    result: case_result_unanswered(case),
                    raw_text: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn cmd_evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<ExitCode, String> {
    let results = load_results(&args.results)
        .map_err(|e| format!("--results {}: {e}", args.results.display()))?;
    let corpus = load_corpus(&args.corpus)
        .map_err(|e| format!("--corpus {}: {e}", args.corpus.display()))?;
    if results.provenance != corpus.provenance {
        return Err(format!(
            "results were produced from a different corpus (seed {} vs {})",
            results.provenance.seed, corpus.provenance.seed
        ));
    }
    results.validate_against(&corpus).map_err(|e| e.to_string())?;

    let mode = if args.lenient { PrecisionMode::Lenient } else { PrecisionMode::Strict };
    let case_results: Vec<CaseResult> =
        results.results.iter().map(|r| r.result.clone()).collect();
    let report = score(&case_results, &results.detector_id, &corpus.provenance, mode)
        .map_err(|e| e.to_string())?;

    out!("{}", emit(&report, ReportFormat::Markdown));

    std::fs::create_dir_all(&cli.out)
        .map_err(|e| format!("creating {}: {e}", cli.out.display()))?;
    let formats: Vec<(ReportFormat, &str)> = match args.format {
        Some(FormatChoice::Markdown) => vec![(ReportFormat::Markdown, "report.md")],
        Some(FormatChoice::Csv) => vec![(ReportFormat::Csv, "report.csv")],
        Some(FormatChoice::Json) => vec![(ReportFormat::Json, "report.json")],
        None => vec![
            (ReportFormat::Markdown, "report.md"),
            (ReportFormat::Csv, "report.csv"),
            (ReportFormat::Json, "report.json"),
        ],
    };
    for (format, name) in formats {
        let path = cli.out.join(name);
        std::fs::write(&path, emit(&report, format))
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
        outln!("report written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Reads a file, or every regular file directly inside a directory, as named
/// sources for diffing. Names are the file names, so like-named files on the
/// two sides pair up.
fn read_sources(path: &Path) -> Result<Vec<NamedSource>, String> {
    let read_file = |p: &Path| -> Result<String, String> {
        std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
    };
    if path.is_file() {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        return Ok(vec![NamedSource::new(name, read_file(path)?)]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut sources = Vec::new();
    for entry in entries {
        let file = entry.map_err(|e| format!("{}: {e}", path.display()))?.path();
        if file.is_file() {
            let name = file.file_name().unwrap().to_string_lossy().into_owned();
            sources.push(NamedSource::new(name, read_file(&file)?));
        }
    }
    sources.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(sources)
}

fn cmd_diff(args: &DiffArgs) -> Result<ExitCode, String> {
    let before = read_sources(&args.before)?;
    let after = read_sources(&args.after)?;
    let diff = diff_sources(&before, &after, DEFAULT_CONTEXT);
    out!("{}", diff.render());
    let loc = diff.diff_loc();
    outln!("diff_loc: {} (bucket {})", loc, DiffSizeBucket::classify(loc).label());
    Ok(ExitCode::SUCCESS)
}
