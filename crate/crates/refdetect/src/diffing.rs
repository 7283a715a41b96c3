//! Line diffs between program versions.
//!
//! Rendering follows the unified format produced by `git diff`: `a/`-`b/`
//! path prefixes, `/dev/null` for added and deleted files, `@@` hunk headers
//! with the count omitted when it is 1 and a start of 0 when a side is empty.
//! Corpus files are canonical renderings that always end in a newline, so no
//! missing-newline marker is ever needed.
//!
//! The churn size of a change, [`UnifiedDiff::diff_loc`], counts added plus
//! removed lines; context lines do not contribute.

use serde::{Deserialize, Serialize};

use crate::syntax::{self, CompilationUnit};

pub const DEFAULT_CONTEXT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineTag {
    Context,
    Removed,
    Added,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub before_start: usize,
    pub before_count: usize,
    pub after_start: usize,
    pub after_count: usize,
    pub lines: Vec<(LineTag, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileStatus {
    Modified,
    Added,
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    pub path: String,
    pub status: FileStatus,
    pub hunks: Vec<Hunk>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnifiedDiff {
    pub file_diffs: Vec<FileDiff>,
}

/// A named text file participating in a diff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSource {
    pub path: String,
    pub content: String,
}

impl NamedSource {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> NamedSource {
        NamedSource { path: path.into(), content: content.into() }
    }
}

impl UnifiedDiff {
    pub fn is_empty(&self) -> bool {
        self.file_diffs.is_empty()
    }

    pub fn added(&self) -> usize {
        self.count_tag(LineTag::Added)
    }

    pub fn removed(&self) -> usize {
        self.count_tag(LineTag::Removed)
    }

    /// Changed lines of code: additions plus removals.
    pub fn diff_loc(&self) -> usize {
        self.added() + self.removed()
    }

    fn count_tag(&self, tag: LineTag) -> usize {
        self.file_diffs
            .iter()
            .flat_map(|f| &f.hunks)
            .flat_map(|h| &h.lines)
            .filter(|(t, _)| *t == tag)
            .count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for file in &self.file_diffs {
            let (left, right) = match file.status {
                FileStatus::Modified => {
                    (format!("a/{}", file.path), format!("b/{}", file.path))
                }
                FileStatus::Added => ("/dev/null".to_string(), format!("b/{}", file.path)),
                FileStatus::Deleted => (format!("a/{}", file.path), "/dev/null".to_string()),
            };
            out.push_str("--- ");
            out.push_str(&left);
            out.push('\n');
            out.push_str("+++ ");
            out.push_str(&right);
            out.push('\n');
            for hunk in &file.hunks {
                out.push_str(&format!(
                    "@@ -{} +{} @@\n",
                    range_text(hunk.before_start, hunk.before_count),
                    range_text(hunk.after_start, hunk.after_count)
                ));
                for (tag, text) in &hunk.lines {
                    out.push(match tag {
                        LineTag::Context => ' ',
                        LineTag::Removed => '-',
                        LineTag::Added => '+',
                    });
                    out.push_str(text);
                    out.push('\n');
                }
            }
        }
        out
    }
}

fn range_text(start: usize, count: usize) -> String {
    if count == 1 {
        start.to_string()
    } else {
        format!("{start},{count}")
    }
}

/// Diff two file sets matched by path. Files present on one side only are
/// rendered as whole-file additions or deletions. Identical files produce no
/// output at all.
pub fn diff_sources(before: &[NamedSource], after: &[NamedSource], context: usize) -> UnifiedDiff {
    let mut file_diffs = Vec::new();
    for b in before {
        match after.iter().find(|a| a.path == b.path) {
            Some(a) if a.content == b.content => {}
            Some(a) => {
                let hunks = hunks_between(&b.content, &a.content, context);
                file_diffs.push(FileDiff {
                    path: b.path.clone(),
                    status: FileStatus::Modified,
                    hunks,
                });
            }
            None => {
                let hunks = hunks_between(&b.content, "", context);
                file_diffs.push(FileDiff {
                    path: b.path.clone(),
                    status: FileStatus::Deleted,
                    hunks,
                });
            }
        }
    }
    for a in after {
        if !before.iter().any(|b| b.path == a.path) {
            let hunks = hunks_between("", &a.content, context);
            file_diffs.push(FileDiff { path: a.path.clone(), status: FileStatus::Added, hunks });
        }
    }
    UnifiedDiff { file_diffs }
}

/// Diff two program versions, one `.mj` file per compilation unit, in their
/// canonical renderings.
pub fn diff_programs(before: &[CompilationUnit], after: &[CompilationUnit]) -> UnifiedDiff {
    let to_sources = |units: &[CompilationUnit]| -> Vec<NamedSource> {
        units
            .iter()
            .map(|u| NamedSource::new(format!("{}.mj", u.package_name), syntax::print(u)))
            .collect()
    };
    diff_sources(&to_sources(before), &to_sources(after), DEFAULT_CONTEXT)
}

fn split_lines(text: &str) -> Vec<&str> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n').collect()
}

fn hunks_between(before: &str, after: &str, context: usize) -> Vec<Hunk> {
    let a = split_lines(before);
    let b = split_lines(after);
    let edits = myers_diff(&a, &b);
    group_hunks(&edits, context)
}

/// Shortest edit script between two line sequences (Myers' O(ND) algorithm).
fn myers_diff<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<(LineTag, &'a str)> {
    let n = a.len();
    let m = b.len();
    let max = n + m;
    if max == 0 {
        return Vec::new();
    }
    let offset = max as isize;
    let width = 2 * max + 1;
    let mut v = vec![0isize; width];
    let mut trace: Vec<Vec<isize>> = Vec::new();
    let mut depth = 0;
    'search: for d in 0..=(max as isize) {
        trace.push(v.clone());
        let mut k = -d;
        while k <= d {
            let idx = (k + offset) as usize;
            let mut x = if k == -d || (k != d && v[idx - 1] < v[idx + 1]) {
                v[idx + 1]
            } else {
                v[idx - 1] + 1
            };
            let mut y = x - k;
            while (x as usize) < n && (y as usize) < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            v[idx] = x;
            if x as usize >= n && y as usize >= m {
                depth = d;
                break 'search;
            }
            k += 2;
        }
    }

    let mut edits: Vec<(LineTag, &str)> = Vec::new();
    let mut x = n as isize;
    let mut y = m as isize;
    for d in (1..=depth).rev() {
        let v = &trace[d as usize];
        let k = x - y;
        let prev_k = if k == -d || (k != d && v[(k - 1 + offset) as usize] < v[(k + 1 + offset) as usize]) {
            k + 1
        } else {
            k - 1
        };
        let prev_x = v[(prev_k + offset) as usize];
        let prev_y = prev_x - prev_k;
        while x > prev_x && y > prev_y {
            edits.push((LineTag::Context, a[(x - 1) as usize]));
            x -= 1;
            y -= 1;
        }
        if x == prev_x {
            edits.push((LineTag::Added, b[(y - 1) as usize]));
            y -= 1;
        } else {
            edits.push((LineTag::Removed, a[(x - 1) as usize]));
            x -= 1;
        }
    }
    while x > 0 && y > 0 {
        edits.push((LineTag::Context, a[(x - 1) as usize]));
        x -= 1;
        y -= 1;
    }
    edits.reverse();
    edits
}

/// Group an edit script into hunks with `context` lines of surrounding
/// context; change runs whose gap is at most `2 * context` share a hunk.
fn group_hunks(edits: &[(LineTag, &str)], context: usize) -> Vec<Hunk> {
    let change_positions: Vec<usize> = edits
        .iter()
        .enumerate()
        .filter(|(_, (tag, _))| *tag != LineTag::Context)
        .map(|(i, _)| i)
        .collect();
    if change_positions.is_empty() {
        return Vec::new();
    }

    // Hunk spans over edit indices, before widening with context.
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for &pos in &change_positions {
        match spans.last_mut() {
            Some((_, end)) if pos - *end <= 2 * context + 1 => *end = pos,
            _ => spans.push((pos, pos)),
        }
    }

    // Line numbers consumed on each side before a given edit index.
    let mut before_lines = vec![0usize; edits.len() + 1];
    let mut after_lines = vec![0usize; edits.len() + 1];
    for (i, (tag, _)) in edits.iter().enumerate() {
        before_lines[i + 1] =
            before_lines[i] + usize::from(*tag != LineTag::Added);
        after_lines[i + 1] = after_lines[i] + usize::from(*tag != LineTag::Removed);
    }

    spans
        .into_iter()
        .map(|(start, end)| {
            let lo = start.saturating_sub(context);
            let hi = (end + context).min(edits.len() - 1);
            let lines: Vec<(LineTag, String)> =
                edits[lo..=hi].iter().map(|(t, s)| (*t, s.to_string())).collect();
            let before_count = before_lines[hi + 1] - before_lines[lo];
            let after_count = after_lines[hi + 1] - after_lines[lo];
            Hunk {
                before_start: if before_count == 0 { before_lines[lo] } else { before_lines[lo] + 1 },
                before_count,
                after_start: if after_count == 0 { after_lines[lo] } else { after_lines[lo] + 1 },
                after_count,
                lines,
            }
        })
        .collect()
}

/// Report bucket for the churn size of a case. The five named ranges match
/// the histogram used in result tables; everything past 359 lands in the
/// overflow bucket. Together the buckets partition all sizes from 0 up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiffSizeBucket {
    #[serde(rename = "0-39")]
    B0to39,
    #[serde(rename = "40-79")]
    B40to79,
    #[serde(rename = "80-119")]
    B80to119,
    #[serde(rename = "120-159")]
    B120to159,
    #[serde(rename = "160-359")]
    B160to359,
    #[serde(rename = ">359")]
    Overflow,
}

impl DiffSizeBucket {
    pub const ALL: [DiffSizeBucket; 6] = [
        DiffSizeBucket::B0to39,
        DiffSizeBucket::B40to79,
        DiffSizeBucket::B80to119,
        DiffSizeBucket::B120to159,
        DiffSizeBucket::B160to359,
        DiffSizeBucket::Overflow,
    ];

    pub fn classify(diff_loc: usize) -> DiffSizeBucket {
        match diff_loc {
            0..=39 => DiffSizeBucket::B0to39,
            40..=79 => DiffSizeBucket::B40to79,
            80..=119 => DiffSizeBucket::B80to119,
            120..=159 => DiffSizeBucket::B120to159,
            160..=359 => DiffSizeBucket::B160to359,
            _ => DiffSizeBucket::Overflow,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DiffSizeBucket::B0to39 => "0-39",
            DiffSizeBucket::B40to79 => "40-79",
            DiffSizeBucket::B80to119 => "80-119",
            DiffSizeBucket::B120to159 => "120-159",
            DiffSizeBucket::B160to359 => "160-359",
            DiffSizeBucket::Overflow => ">359",
        }
    }
}

impl std::fmt::Display for DiffSizeBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
