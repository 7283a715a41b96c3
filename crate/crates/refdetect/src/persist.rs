//! On-disk corpus and results formats.
//!
//! A saved corpus is a directory: `manifest.json` describing every case, and
//! `cases/<id>/before/*.mj`, `cases/<id>/after/*.mj` holding the programs in
//! their canonical rendering, one file per compilation unit. Source files are
//! stored as plain text, never embedded in JSON, so they can be read as
//! programs. Saves stage into a temporary sibling directory and commit with a
//! rename; readers never observe a half-written corpus.
//!
//! Loading re-parses and re-resolves every program and replays the
//! postcondition audit against the manifest's declared kind and subject, so a
//! corpus cannot silently drift from what its manifest claims.
//!
//! Results files snapshot the backend configuration, which holds the API key
//! environment variable's NAME only; keys themselves are never written.

use std::collections::BTreeSet;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::RefactoringKind;
use crate::diffing::diff_programs;
use crate::evaluate::CaseResult;
use crate::generate::{audit_case, Corpus, Provenance, Subject, TransformationCase};
use crate::llm::BackendConfig;
use crate::syntax::{self, CompilationUnit};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("I/O failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("unsupported schema version {found} (this tool reads version {supported})")]
    SchemaMismatch { found: u64, supported: u64 },
    #[error("integrity failure for case {case_id}: {reason}")]
    Integrity { case_id: String, reason: String },
}

fn io_err(path: &Path, source: std::io::Error) -> PersistError {
    PersistError::Io { path: path.to_path_buf(), source }
}

fn integrity(case_id: &str, reason: impl Into<String>) -> PersistError {
    PersistError::Integrity { case_id: case_id.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCase {
    pub id: String,
    pub kind: RefactoringKind,
    pub hard: bool,
    pub subject: Subject,
    pub before_dir: String,
    pub after_dir: String,
    /// Unit file names within each directory, in program order.
    pub before_files: Vec<String>,
    pub after_files: Vec<String>,
    pub diff_loc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u64,
    pub provenance: Provenance,
    pub cases: Vec<ManifestCase>,
}

fn unit_file_names(case_id: &str, units: &[CompilationUnit]) -> Result<Vec<String>, PersistError> {
    let names: Vec<String> =
        units.iter().map(|u| format!("{}.mj", u.package_name)).collect();
    let mut seen = BTreeSet::new();
    for name in &names {
        if !seen.insert(name.as_str()) {
            return Err(integrity(case_id, format!("duplicate unit file name {name}")));
        }
    }
    Ok(names)
}

fn write_units(
    dir: &Path,
    names: &[String],
    units: &[CompilationUnit],
) -> Result<(), PersistError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (name, unit) in names.iter().zip(units) {
        let path = dir.join(name);
        std::fs::write(&path, syntax::print(unit)).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

/// True when `dir` may be replaced by a save: it is missing, empty, or a
/// previously saved corpus (it has a manifest).
fn replaceable(dir: &Path) -> std::io::Result<bool> {
    match std::fs::read_dir(dir) {
        Ok(mut entries) => {
            Ok(entries.next().is_none() || dir.join("manifest.json").is_file())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(true),
        Err(e) => Err(e),
    }
}

/// Writes the corpus to `dir` and returns the manifest that was written.
///
/// Replaces an existing corpus at `dir`; refuses to replace a non-empty
/// directory that does not look like one. The write is staged next to the
/// target and committed by rename.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<CorpusManifest, PersistError> {
    if !replaceable(dir).map_err(|e| io_err(dir, e))? {
        return Err(io_err(
            dir,
            std::io::Error::other("refusing to replace a non-empty directory that is not a saved corpus"),
        ));
    }
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(|e| io_err(&parent, e))?;
    let staging = parent.join(format!(
        ".{}.staging-{}",
        dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        std::process::id()
    ));
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    }

    let result = stage_corpus(corpus, &staging);
    match result {
        Ok(manifest) => {
            if dir.exists() {
                std::fs::remove_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            std::fs::rename(&staging, dir).map_err(|e| io_err(dir, e))?;
            Ok(manifest)
        }
        Err(err) => {
            let _ = std::fs::remove_dir_all(&staging);
            Err(err)
        }
    }
}

fn stage_corpus(corpus: &Corpus, staging: &Path) -> Result<CorpusManifest, PersistError> {
    let mut cases = Vec::new();
    for case in &corpus.cases {
        let before_files = unit_file_names(&case.id, &case.before)?;
        let after_files = unit_file_names(&case.id, &case.after)?;
        let before_dir = format!("cases/{}/before", case.id);
        let after_dir = format!("cases/{}/after", case.id);
        write_units(&staging.join(&before_dir), &before_files, &case.before)?;
        write_units(&staging.join(&after_dir), &after_files, &case.after)?;
        cases.push(ManifestCase {
            id: case.id.clone(),
            kind: case.kind,
            hard: case.hard,
            subject: case.subject.clone(),
            before_dir,
            after_dir,
            before_files,
            after_files,
            diff_loc: diff_programs(&case.before, &case.after).diff_loc(),
        });
    }
    let manifest = CorpusManifest {
        schema_version: SCHEMA_VERSION,
        provenance: corpus.provenance.clone(),
        cases,
    };
    let manifest_path = staging.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .expect("manifest serialization cannot fail");
    text.push('\n');
    std::fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest)
}

/// Reads a JSON file, checking the schema version before the full parse so an
/// incompatible layout reports as a version problem, not a parse error.
fn read_versioned_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PersistError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| PersistError::Malformed { path: path.to_path_buf(), reason: e.to_string() })?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| PersistError::Malformed {
            path: path.to_path_buf(),
            reason: "missing schema_version".to_string(),
        })?;
    if found != SCHEMA_VERSION {
        return Err(PersistError::SchemaMismatch { found, supported: SCHEMA_VERSION });
    }
    serde_json::from_value(value)
        .map_err(|e| PersistError::Malformed { path: path.to_path_buf(), reason: e.to_string() })
}

/// A relative path that stays inside the corpus directory.
fn checked_relative(case_id: &str, relative: &str) -> Result<PathBuf, PersistError> {
    let path = PathBuf::from(relative);
    let safe = !path.is_absolute()
        && path
            .components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
    if !safe {
        return Err(integrity(case_id, format!("path {relative:?} escapes the corpus directory")));
    }
    Ok(path)
}

fn load_units(
    case_id: &str,
    dir: &Path,
    files: &[String],
) -> Result<Vec<CompilationUnit>, PersistError> {
    let mut units = Vec::new();
    for file in files {
        let path = dir.join(checked_relative(case_id, file)?);
        let source = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let unit = syntax::parse(&source).map_err(|e| {
            integrity(case_id, format!("{} does not parse: {e}", path.display()))
        })?;
        units.push(unit);
    }
    Ok(units)
}

/// Loads a corpus, re-deriving everything the manifest claims.
///
/// Every program is re-parsed and re-resolved, the declared kind and subject
/// are re-audited against the actual program pair, and the recorded diff size
/// is recomputed. Any disagreement is an integrity error naming the case.
pub fn load_corpus(dir: &Path) -> Result<Corpus, PersistError> {
    let manifest: CorpusManifest = read_versioned_json(&dir.join("manifest.json"))?;

    let mut ids = BTreeSet::new();
    for case in &manifest.cases {
        if !ids.insert(case.id.as_str()) {
            return Err(integrity(&case.id, "duplicate case id in manifest"));
        }
    }

    let mut cases = Vec::new();
    for entry in &manifest.cases {
        let before_dir = dir.join(checked_relative(&entry.id, &entry.before_dir)?);
        let after_dir = dir.join(checked_relative(&entry.id, &entry.after_dir)?);
        let before = load_units(&entry.id, &before_dir, &entry.before_files)?;
        let after = load_units(&entry.id, &after_dir, &entry.after_files)?;

        syntax::resolve(&before).map_err(|e| {
            integrity(&entry.id, format!("before version does not resolve: {e}"))
        })?;
        syntax::resolve(&after).map_err(|e| {
            integrity(&entry.id, format!("after version does not resolve: {e}"))
        })?;
        audit_case(entry.kind, &before, &after, &entry.subject)
            .map_err(|e| integrity(&entry.id, e.to_string()))?;

        let actual_diff_loc = diff_programs(&before, &after).diff_loc();
        if actual_diff_loc != entry.diff_loc {
            return Err(integrity(
                &entry.id,
                format!("manifest diff_loc {} but the stored pair has {actual_diff_loc}", entry.diff_loc),
            ));
        }
        let stubbed = matches!(entry.subject, Subject::PushedDown { abstract_stub: true, .. });
        if entry.hard != stubbed {
            return Err(integrity(&entry.id, "hard flag disagrees with the stored subject"));
        }

        cases.push(TransformationCase {
            id: entry.id.clone(),
            kind: entry.kind,
            before,
            after,
            subject: entry.subject.clone(),
            hard: entry.hard,
        });
    }

    Ok(Corpus { provenance: manifest.provenance, cases })
}

/// One persisted detection result: the scored fields plus the backend's raw
/// reply when there was one (structural detections have none). A case whose
/// query failed keeps its empty prediction and records the failure in
/// `error`, so "model wrong" and "request failed" stay distinguishable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    #[serde(flatten)]
    pub result: CaseResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A detection run's persisted output. `backend` is the configuration
/// snapshot for prompt-driven runs; it names the API key's environment
/// variable and never contains key material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub schema_version: u64,
    pub detector_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendConfig>,
    pub provenance: Provenance,
    pub results: Vec<ResultRecord>,
}

impl ResultsFile {
    pub fn new(
        detector_id: impl Into<String>,
        backend: Option<BackendConfig>,
        provenance: Provenance,
        results: Vec<ResultRecord>,
    ) -> ResultsFile {
        ResultsFile {
            schema_version: SCHEMA_VERSION,
            detector_id: detector_id.into(),
            backend,
            provenance,
            results,
        }
    }

    /// Checks that every result refers to a case in `corpus` and that each
    /// stored correctness flag matches its own prediction set.
    pub fn validate_against(&self, corpus: &Corpus) -> Result<(), PersistError> {
        for record in &self.results {
            let result = &record.result;
            let case = corpus.case(&result.case_id).ok_or_else(|| {
                integrity(&result.case_id, "result refers to a case the corpus does not contain")
            })?;
            if case.kind != result.ground_truth {
                return Err(integrity(
                    &result.case_id,
                    "recorded ground truth disagrees with the corpus",
                ));
            }
            if result.correct != result.predicted.contains(&result.ground_truth) {
                return Err(integrity(
                    &result.case_id,
                    "correct flag disagrees with the prediction set",
                ));
            }
        }
        Ok(())
    }
}

/// Writes a results file (staged sibling file, committed by rename).
pub fn save_results(file: &ResultsFile, path: &Path) -> Result<(), PersistError> {
    let mut text = serde_json::to_string_pretty(file).expect("results serialization cannot fail");
    text.push('\n');
    let staging = path.with_extension("json.staging");
    std::fs::write(&staging, text).map_err(|e| io_err(&staging, e))?;
    std::fs::rename(&staging, path).map_err(|e| io_err(path, e))
}

pub fn load_results(path: &Path) -> Result<ResultsFile, PersistError> {
    read_versioned_json(path)
}
