//! Release gate for the binary: two pipeline runs with identical flags must
//! be byte-identical, from the corpus files on disk to the final report.

use std::collections::BTreeMap;
use std::path::Path;

fn run(dir: &Path, args: &[&str]) {
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_refdetect"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "refdetect {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Reads every regular file under `root`, keyed by relative path.
fn directory_contents(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, files: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("directory is readable") {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, files);
            } else {
                let relative = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.insert(relative, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut files = BTreeMap::new();
    walk(root, root, &mut files);
    files
}

fn pipeline(dir: &Path, out: &str) {
    run(dir, &["generate", "--seed", "42", "--per-kind", "5", "--out", out]);
    let corpus = format!("{out}/corpus");
    let results = format!("{out}/results.json");
    run(dir, &["detect", "--corpus", &corpus, "--detector", "structural", "--out", out]);
    run(dir, &["evaluate", "--results", &results, "--corpus", &corpus, "--out", out]);
}

#[test]
fn criterion_8_identical_flags_reproduce_every_byte() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "first");
    pipeline(dir.path(), "second");

    let first_corpus = directory_contents(&dir.path().join("first/corpus"));
    let second_corpus = directory_contents(&dir.path().join("second/corpus"));
    assert!(!first_corpus.is_empty(), "corpus directory must not be empty");
    assert_eq!(
        first_corpus.keys().collect::<Vec<_>>(),
        second_corpus.keys().collect::<Vec<_>>(),
        "corpus file sets differ"
    );
    for (path, bytes) in &first_corpus {
        assert_eq!(bytes, &second_corpus[path], "corpus file {path} differs between runs");
    }

    let first_report = std::fs::read(dir.path().join("first/report.json")).unwrap();
    let second_report = std::fs::read(dir.path().join("second/report.json")).unwrap();
    assert!(!first_report.is_empty());
    assert_eq!(first_report, second_report, "report.json differs between runs");

    println!("[acceptance] criterion 8: PASS");
}
