//! The refactoring taxonomy: canonical kinds, display names, one-sentence
//! definitions, and the label normalizer that maps free-text model output
//! onto the taxonomy.
//!
//! The catalog is embedded in the binary so that prompts built from it are
//! reproducible byte-for-byte. Extending the taxonomy is a source-level edit.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The canonical refactoring kinds, in catalog row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RefactoringKind {
    AddMethodParameter,
    EncapsulateField,
    ExtractClass,
    ExtractInterface,
    ExtractSuperclass,
    InlineClass,
    InlineMethod,
    MoveField,
    MoveMethod,
    PullUpField,
    PullUpMethod,
    PushDownField,
    PushDownMethod,
    RemoveMethodParameter,
    RenameField,
    RenameMethod,
    RenamePackage,
    RenameClass,
    ReplaceMagicNumberWithConstant,
}

/// All 19 kinds in catalog order.
pub const ALL_KINDS: [RefactoringKind; 19] = [
    RefactoringKind::AddMethodParameter,
    RefactoringKind::EncapsulateField,
    RefactoringKind::ExtractClass,
    RefactoringKind::ExtractInterface,
    RefactoringKind::ExtractSuperclass,
    RefactoringKind::InlineClass,
    RefactoringKind::InlineMethod,
    RefactoringKind::MoveField,
    RefactoringKind::MoveMethod,
    RefactoringKind::PullUpField,
    RefactoringKind::PullUpMethod,
    RefactoringKind::PushDownField,
    RefactoringKind::PushDownMethod,
    RefactoringKind::RemoveMethodParameter,
    RefactoringKind::RenameField,
    RefactoringKind::RenameMethod,
    RefactoringKind::RenamePackage,
    RefactoringKind::RenameClass,
    RefactoringKind::ReplaceMagicNumberWithConstant,
];

/// The ten kinds the corpus generator can mechanically apply. The remaining
/// nine are catalog-only: they appear in prompts so detectors must resist
/// emitting them spuriously, but no ground-truth cases are produced for them.
pub const GENERATED_KINDS: [RefactoringKind; 10] = [
    RefactoringKind::AddMethodParameter,
    RefactoringKind::EncapsulateField,
    RefactoringKind::MoveMethod,
    RefactoringKind::PullUpField,
    RefactoringKind::PullUpMethod,
    RefactoringKind::PushDownField,
    RefactoringKind::PushDownMethod,
    RefactoringKind::RenameField,
    RefactoringKind::RenameMethod,
    RefactoringKind::RenameClass,
];

impl RefactoringKind {
    /// Human-readable name, with abbreviations expanded.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::AddMethodParameter => "Add Method Parameter",
            Self::EncapsulateField => "Encapsulate Field",
            Self::ExtractClass => "Extract Class",
            Self::ExtractInterface => "Extract Interface",
            Self::ExtractSuperclass => "Extract Superclass",
            Self::InlineClass => "Inline Class",
            Self::InlineMethod => "Inline Method",
            Self::MoveField => "Move Field",
            Self::MoveMethod => "Move Method",
            Self::PullUpField => "Pull Up Field",
            Self::PullUpMethod => "Pull Up Method",
            Self::PushDownField => "Push Down Field",
            Self::PushDownMethod => "Push Down Method",
            Self::RemoveMethodParameter => "Remove Method Parameter",
            Self::RenameField => "Rename Field",
            Self::RenameMethod => "Rename Method",
            Self::RenamePackage => "Rename Package",
            Self::RenameClass => "Rename Class",
            Self::ReplaceMagicNumberWithConstant => "Replace Magic Number with Constant",
        }
    }

    /// One-sentence definition of the refactoring.
    pub fn definition(self) -> &'static str {
        match self {
            Self::AddMethodParameter => "Introduces a new parameter to an existing method.",
            Self::EncapsulateField => "Makes a field private and adds getter and setter methods.",
            Self::ExtractClass => {
                "Moves a group of related fields and methods from an existing class into a newly created class."
            }
            Self::ExtractInterface => "Creates a new interface from existing method(s) in a class.",
            Self::ExtractSuperclass => {
                "Creates a new superclass to encapsulate shared attributes and behavior from two or more existing classes."
            }
            Self::InlineClass => "Merges a class into another when it is too small or redundant.",
            Self::InlineMethod => "Replaces a method call with the method's body.",
            Self::MoveField => "Relocates a field to a more appropriate class.",
            Self::MoveMethod => "Relocates a method to a more appropriate class.",
            Self::PullUpField => "Moves a field from a child class to its parent class.",
            Self::PullUpMethod => "Moves a method from a child class to its parent class.",
            Self::PushDownField => "Moves a field from a parent class to one or more child classes.",
            Self::PushDownMethod => "Moves a method from a parent class to one or more child classes.",
            Self::RemoveMethodParameter => "Eliminates an existing parameter from a method signature.",
            Self::RenameField => "Changes the name of a class or instance variable.",
            Self::RenameMethod => "Changes the name of a method while preserving its behavior.",
            Self::RenamePackage => "Changes the name of a package declaration.",
            Self::RenameClass => "Changes the name of a class without altering its structure.",
            Self::ReplaceMagicNumberWithConstant => "Replaces a literal number with a named constant.",
        }
    }
}

impl fmt::Display for RefactoringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for RefactoringKind {
    type Err = CatalogError;

    /// Accepts display names, kebab-case ("rename-class"), and the fixed aliases.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match match_label(s)? {
            LabelMatch::Recognized(kind) => Ok(kind),
            LabelMatch::Unrecognized(raw) => Err(CatalogError::UnknownKind(raw)),
        }
    }
}

/// A catalog row: kind, display name, definition sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefactoringDefinition {
    pub kind: RefactoringKind,
    pub display_name: &'static str,
    pub definition: &'static str,
}

/// Outcome of matching a free-text label against the catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelMatch {
    Recognized(RefactoringKind),
    /// The verbatim label text, preserved for audit and error reporting.
    Unrecognized(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatalogError {
    #[error("label is empty")]
    InvalidLabel,
    #[error("unknown refactoring kind: {0:?}")]
    UnknownKind(String),
    #[error("definition list is empty")]
    EmptyDefinitions,
}

/// The full catalog in row order. Stable across calls.
pub fn catalog() -> &'static [RefactoringDefinition] {
    static CATALOG: OnceLock<Vec<RefactoringDefinition>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        ALL_KINDS
            .iter()
            .map(|&kind| RefactoringDefinition {
                kind,
                display_name: kind.display_name(),
                definition: kind.definition(),
            })
            .collect()
    })
}

/// Renders definitions as the `definition` block used in prompts:
/// one `- <display_name>: <definition>` line per entry, newline-joined.
pub fn render_definitions(defs: &[RefactoringDefinition]) -> Result<String, CatalogError> {
    if defs.is_empty() {
        return Err(CatalogError::EmptyDefinitions);
    }
    Ok(defs
        .iter()
        .map(|d| format!("- {}: {}", d.display_name, d.definition))
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Alias table for abbreviated or shortened names that still denote a unique
/// catalog entry. Directional mislabels ("push up", "pull down") are
/// deliberately absent: they count as unrecognized output.
const ALIASES: [(&str, RefactoringKind); 4] = [
    ("Add Parameter", RefactoringKind::AddMethodParameter),
    ("Add Met. Param.", RefactoringKind::AddMethodParameter),
    ("Remove Parameter", RefactoringKind::RemoveMethodParameter),
    ("Rep. Magic Num. with Cons.", RefactoringKind::ReplaceMagicNumberWithConstant),
];

/// Case-, whitespace-, and punctuation-insensitive key.
fn normalize(label: &str) -> String {
    label
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn lookup_table() -> &'static std::collections::BTreeMap<String, RefactoringKind> {
    static TABLE: OnceLock<std::collections::BTreeMap<String, RefactoringKind>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = std::collections::BTreeMap::new();
        for &kind in &ALL_KINDS {
            let key = normalize(kind.display_name());
            let prev = table.insert(key, kind);
            assert!(prev.is_none(), "display name collision for {kind:?}");
        }
        for &(alias, kind) in &ALIASES {
            let key = normalize(alias);
            if let Some(&existing) = table.get(&key) {
                // An alias may restate the entry it points at, never a different one.
                assert!(existing == kind, "alias {alias:?} maps to two kinds");
            }
            table.insert(key, kind);
        }
        table
    })
}

/// Matches a free-text label against display names and aliases.
///
/// Matching ignores case, whitespace, and punctuation. Input that matches
/// nothing yields [`LabelMatch::Unrecognized`] with the raw text preserved.
pub fn match_label(raw: &str) -> Result<LabelMatch, CatalogError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(CatalogError::InvalidLabel);
    }
    let key = normalize(trimmed);
    if key.is_empty() {
        // Punctuation-only input normalizes to nothing; treat as empty.
        return Err(CatalogError::InvalidLabel);
    }
    Ok(match lookup_table().get(&key) {
        Some(&kind) => LabelMatch::Recognized(kind),
        None => LabelMatch::Unrecognized(raw.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_19_rows_in_order() {
        let defs = catalog();
        assert_eq!(defs.len(), 19);
        assert_eq!(
            defs[1].definition,
            "Makes a field private and adds getter and setter methods."
        );
        assert_eq!(defs[17].display_name, "Rename Class");
        assert_eq!(defs[0].display_name, "Add Method Parameter");
        assert_eq!(defs[18].display_name, "Replace Magic Number with Constant");
    }

    #[test]
    fn definitions_end_with_period_and_names_unique() {
        let mut names = std::collections::BTreeSet::new();
        for def in catalog() {
            assert!(!def.definition.is_empty());
            assert!(def.definition.ends_with('.'), "{}", def.display_name);
            assert!(names.insert(def.display_name));
        }
    }

    #[test]
    fn render_single_definition() {
        let defs = [RefactoringDefinition {
            kind: RefactoringKind::EncapsulateField,
            display_name: "Encapsulate Field",
            definition: "Makes a field private and adds getter and setter methods.",
        }];
        assert_eq!(
            render_definitions(&defs).unwrap(),
            "- Encapsulate Field: Makes a field private and adds getter and setter methods."
        );
    }

    #[test]
    fn render_full_catalog_is_19_lines() {
        let text = render_definitions(catalog()).unwrap();
        assert_eq!(text.lines().count(), 19);
    }

    #[test]
    fn render_empty_is_an_error() {
        assert_eq!(render_definitions(&[]), Err(CatalogError::EmptyDefinitions));
    }

    #[test]
    fn match_display_names() {
        assert_eq!(
            match_label("Rename Class").unwrap(),
            LabelMatch::Recognized(RefactoringKind::RenameClass)
        );
        assert_eq!(
            match_label("RENAME   method.").unwrap(),
            LabelMatch::Recognized(RefactoringKind::RenameMethod)
        );
    }

    #[test]
    fn match_every_display_name_round_trips() {
        for &kind in &ALL_KINDS {
            assert_eq!(
                match_label(kind.display_name()).unwrap(),
                LabelMatch::Recognized(kind)
            );
            assert_eq!(
                match_label(&kind.display_name().to_uppercase()).unwrap(),
                LabelMatch::Recognized(kind)
            );
        }
    }

    #[test]
    fn invalid_names_stay_unrecognized() {
        assert_eq!(
            match_label("pull down member").unwrap(),
            LabelMatch::Unrecognized("pull down member".to_string())
        );
        assert_eq!(
            match_label("push up").unwrap(),
            LabelMatch::Unrecognized("push up".to_string())
        );
        // "Rename Type" is not an alias for Rename Class.
        assert_eq!(
            match_label("Rename Type").unwrap(),
            LabelMatch::Unrecognized("Rename Type".to_string())
        );
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(
            match_label("Add Parameter").unwrap(),
            LabelMatch::Recognized(RefactoringKind::AddMethodParameter)
        );
        assert_eq!(
            match_label("Add Met. Param.").unwrap(),
            LabelMatch::Recognized(RefactoringKind::AddMethodParameter)
        );
        assert_eq!(
            match_label("Remove Parameter").unwrap(),
            LabelMatch::Recognized(RefactoringKind::RemoveMethodParameter)
        );
        assert_eq!(
            match_label("Rep. Magic Num. with Cons.").unwrap(),
            LabelMatch::Recognized(RefactoringKind::ReplaceMagicNumberWithConstant)
        );
    }

    #[test]
    fn empty_label_is_an_error() {
        assert_eq!(match_label("  "), Err(CatalogError::InvalidLabel));
        assert_eq!(match_label("..."), Err(CatalogError::InvalidLabel));
    }

    #[test]
    fn alias_table_is_injective() {
        // Forces the startup check; a duplicate alias would panic here.
        let _ = lookup_table();
    }

    #[test]
    fn kind_parses_from_kebab_case() {
        assert_eq!(
            "rename-class".parse::<RefactoringKind>().unwrap(),
            RefactoringKind::RenameClass
        );
        assert_eq!(
            "pull-up-field".parse::<RefactoringKind>().unwrap(),
            RefactoringKind::PullUpField
        );
        assert!("not-a-kind".parse::<RefactoringKind>().is_err());
    }
}
