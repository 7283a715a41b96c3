//! Deterministic rule-based refactoring detection over before/after programs.
//!
//! The detector compares two resolvable versions of a program and reports
//! structural refactorings as [`Detection`] values. Rules run in a fixed
//! priority order and consume the elements they match, so one underlying
//! change is never reported twice under different labels. The pipeline
//! recognizes twelve kinds; the remaining catalog entries involve code
//! synthesis or statement mapping and are out of scope here.
//!
//! Priority order: class renames first (they define the name substitution
//! every later comparison runs under), then hierarchy moves, then plain
//! moves, then member renames, then parameter changes, then encapsulation.
//! Hierarchy rules outrank plain moves so a pull-up is never mislabeled as a
//! move, and orientation (which side of the edge lost the member) decides
//! pull-up versus push-down.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::RefactoringKind;
use crate::syntax::{
    resolve, AssignTarget, ClassDecl, CompilationUnit, Expr, FieldDecl, MethodDecl, Param,
    ResolutionFailure, Stmt, SymbolTable, TypeRef, Visibility,
};

/// A (class, member) coordinate. `member` is `None` when the element is the
/// class itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Locus {
    pub class: String,
    pub member: Option<String>,
}

impl Locus {
    fn class_only(class: &str) -> Self {
        Locus { class: class.to_string(), member: None }
    }

    fn member(class: &str, member: &str) -> Self {
        Locus { class: class.to_string(), member: Some(member.to_string()) }
    }
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.member {
            Some(m) => write!(f, "{}.{}", self.class, m),
            None => write!(f, "{}", self.class),
        }
    }
}

/// One detected refactoring.
///
/// `subject` is a short name-level description of the element. Renames use
/// "old -> new"; push-downs list the receiving subclasses after "->";
/// encapsulations use "field via getter/setter"; parameter changes name the
/// parameter. `source_locus` uses before-version names, `target_locus`
/// after-version names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub kind: RefactoringKind,
    pub subject: String,
    pub source_locus: Option<Locus>,
    pub target_locus: Option<Locus>,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Before => "before",
            Side::After => "after",
        })
    }
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("{side} version does not resolve: {failure}")]
    UnresolvedInput { side: Side, failure: ResolutionFailure },
}

/// Working state shared by the rules: both symbol tables, the class-rename
/// substitution discovered in phase one, and the per-class member deltas the
/// rules consume as they match.
pub struct MatchContext {
    before_table: SymbolTable,
    after_table: SymbolTable,
    /// after-name -> before-name for matched class renames, so source loci
    /// can report the name that actually existed in the old version
    unrename: BTreeMap<String, String>,
    deltas: BTreeMap<String, MemberDeltas>,
}

#[derive(Default)]
struct MemberDeltas {
    removed_fields: Vec<FieldDecl>,
    added_fields: Vec<FieldDecl>,
    changed_fields: Vec<(FieldDecl, FieldDecl)>,
    removed_methods: Vec<MethodDecl>,
    added_methods: Vec<MethodDecl>,
    changed_methods: Vec<(MethodDecl, MethodDecl)>,
}

impl MatchContext {
    /// Map a class name from the normalized (after) namespace back to its
    /// before-version name for source loci.
    fn before_name<'a>(&'a self, normalized: &'a str) -> &'a str {
        self.unrename.get(normalized).map(String::as_str).unwrap_or(normalized)
    }
}

pub fn detect(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
) -> Result<Vec<Detection>, DetectError> {
    resolve(before).map_err(|failure| DetectError::UnresolvedInput { side: Side::Before, failure })?;
    let after_table = resolve(after)
        .map_err(|failure| DetectError::UnresolvedInput { side: Side::After, failure })?;

    let mut detections = Vec::new();

    // Phase 1: class renames, producing the substitution everything else
    // compares under.
    let renames = match_class_renames(before, after, &mut detections);
    let normalized: Vec<CompilationUnit> = {
        let mut units = before.to_vec();
        apply_class_renames(&mut units, &renames);
        units
    };
    let normalized_table =
        resolve(&normalized).expect("renaming matched classes preserves resolution");
    let unrename: BTreeMap<String, String> =
        renames.iter().map(|(old, new)| (new.clone(), old.clone())).collect();

    let mut ctx = MatchContext {
        before_table: normalized_table,
        after_table,
        unrename,
        deltas: member_deltas(&normalized, after),
    };

    match_pull_ups(&mut ctx, &mut detections);
    match_push_downs(&mut ctx, &mut detections);
    match_moves(&mut ctx, &mut detections);
    match_member_renames(&normalized, after, &mut ctx, &mut detections);
    match_parameter_changes(&mut ctx, &mut detections);
    match_encapsulations(&mut ctx, &mut detections);

    Ok(detections)
}

/// One-sentence description of a detection.
pub fn explain(d: &Detection) -> String {
    let src = d.source_locus.as_ref();
    let tgt = d.target_locus.as_ref();
    let member = || src.and_then(|l| l.member.as_deref()).unwrap_or(&d.subject);
    let src_class = || src.map(|l| l.class.as_str()).unwrap_or("?");
    let tgt_class = || tgt.map(|l| l.class.as_str()).unwrap_or("?");
    match d.kind {
        RefactoringKind::RenameClass => {
            format!("Class {} was renamed to {}.", src_class(), tgt_class())
        }
        RefactoringKind::RenameMethod => format!(
            "Method {} in {} was renamed to {}.",
            member(),
            src_class(),
            tgt.and_then(|l| l.member.as_deref()).unwrap_or("?")
        ),
        RefactoringKind::RenameField => format!(
            "Field {} in {} was renamed to {}.",
            member(),
            src_class(),
            tgt.and_then(|l| l.member.as_deref()).unwrap_or("?")
        ),
        RefactoringKind::MoveMethod => {
            format!("Method {} was moved from {} to {}.", member(), src_class(), tgt_class())
        }
        RefactoringKind::MoveField => {
            format!("Field {} was moved from {} to {}.", member(), src_class(), tgt_class())
        }
        RefactoringKind::PullUpField => format!(
            "Field {} was moved from {} to its superclass {}.",
            member(),
            src_class(),
            tgt_class()
        ),
        RefactoringKind::PullUpMethod => format!(
            "Method {} was moved from {} to its superclass {}.",
            member(),
            src_class(),
            tgt_class()
        ),
        RefactoringKind::PushDownField => format!(
            "Field {} was moved from {} to {}.",
            member(),
            src_class(),
            subclass_phrase(&d.subject)
        ),
        RefactoringKind::PushDownMethod => format!(
            "Method {} was moved from {} to {}.",
            member(),
            src_class(),
            subclass_phrase(&d.subject)
        ),
        RefactoringKind::AddMethodParameter => format!(
            "Parameter {} was added to method {} in {}.",
            d.subject,
            member(),
            src_class()
        ),
        RefactoringKind::RemoveMethodParameter => format!(
            "Parameter {} was removed from method {} in {}.",
            d.subject,
            member(),
            src_class()
        ),
        RefactoringKind::EncapsulateField => {
            let accessors = d
                .subject
                .split_once(" via ")
                .map(|(_, names)| names.replace('/', " and "))
                .unwrap_or_else(|| d.subject.clone());
            format!(
                "Field {} in {} was encapsulated with accessors {}.",
                member(),
                src_class(),
                accessors
            )
        }
        _ => format!("Detected {} involving {}.", d.kind, d.subject),
    }
}

/// "S" -> "its subclass S"; "S, T" -> "its subclasses S, T".
fn subclass_phrase(subject: &str) -> String {
    let list = subject.split_once(" -> ").map(|(_, l)| l).unwrap_or(subject);
    if list.contains(',') {
        format!("its subclasses {list}")
    } else {
        format!("its subclass {list}")
    }
}

// ---------------------------------------------------------------------------
// phase 1: class renames

fn class_names(units: &[CompilationUnit]) -> Vec<String> {
    units.iter().flat_map(|u| &u.classes).map(|c| c.name.clone()).collect()
}

fn find_class<'a>(units: &'a [CompilationUnit], name: &str) -> Option<&'a ClassDecl> {
    units.iter().flat_map(|u| &u.classes).find(|c| c.name == name)
}

fn match_class_renames(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    detections: &mut Vec<Detection>,
) -> BTreeMap<String, String> {
    let before_names = class_names(before);
    let after_names = class_names(after);
    let mut removed: Vec<&str> = before_names
        .iter()
        .filter(|n| !after_names.contains(n))
        .map(String::as_str)
        .collect();
    let mut added: Vec<&str> =
        after_names.iter().filter(|n| !before_names.contains(n)).map(String::as_str).collect();
    removed.sort_unstable();
    added.sort_unstable();

    let mut renames = BTreeMap::new();
    for old in removed {
        let old_decl = find_class(before, old).unwrap();
        let matched = added.iter().position(|new| {
            let new_decl = find_class(after, *new).unwrap();
            classes_equal_under_rename(old_decl, new_decl, old, new)
        });
        if let Some(i) = matched {
            let new = added.remove(i);
            detections.push(Detection {
                kind: RefactoringKind::RenameClass,
                subject: format!("{old} -> {new}"),
                source_locus: Some(Locus::class_only(old)),
                target_locus: Some(Locus::class_only(new)),
                rationale: format!(
                    "class {old} exists only in the old version, {new} only in the new one, \
                     and their members are identical once {old} is substituted by {new}"
                ),
            });
            renames.insert(old.to_string(), new.to_string());
        }
    }
    renames
}

/// Member-for-member equality of two classes under the `old -> new` name
/// substitution, ignoring declaration order.
fn classes_equal_under_rename(a: &ClassDecl, b: &ClassDecl, old: &str, new: &str) -> bool {
    let mut substituted = a.clone();
    let mut map = BTreeMap::new();
    map.insert(old.to_string(), new.to_string());
    rename_types_in_class(&mut substituted, &map);
    substituted.name = new.to_string();
    if substituted.is_abstract != b.is_abstract
        || substituted.superclass != b.superclass
        || substituted.interfaces != b.interfaces
    {
        return false;
    }
    let sort_fields = |c: &ClassDecl| {
        let mut fs = c.fields.clone();
        fs.sort_by(|x, y| x.name.cmp(&y.name));
        fs
    };
    let sort_methods = |c: &ClassDecl| {
        let mut ms = c.methods.clone();
        ms.sort_by(|x, y| x.name.cmp(&y.name));
        ms
    };
    sort_fields(&substituted) == sort_fields(b) && sort_methods(&substituted) == sort_methods(b)
}

fn rename_types_in_class(class: &mut ClassDecl, map: &BTreeMap<String, String>) {
    let rename = |name: &mut String| {
        if let Some(new) = map.get(name) {
            *name = new.clone();
        }
    };
    let rename_ty = |ty: &mut TypeRef| {
        if let TypeRef::Named(n) = ty {
            if let Some(new) = map.get(n) {
                *n = new.clone();
            }
        }
    };
    if let Some(sup) = &mut class.superclass {
        rename(sup);
    }
    for marker in &mut class.interfaces {
        rename(marker);
    }
    for field in &mut class.fields {
        rename_ty(&mut field.type_name);
    }
    for method in &mut class.methods {
        if let crate::syntax::ReturnType::Type(ty) = &mut method.return_type {
            rename_ty(ty);
        }
        for p in &mut method.params {
            rename_ty(&mut p.type_name);
        }
        for stmt in method.body.iter_mut().flatten() {
            if let Stmt::LocalDecl { type_name, .. } = stmt {
                rename_ty(type_name);
            }
        }
    }
}

fn apply_class_renames(units: &mut [CompilationUnit], map: &BTreeMap<String, String>) {
    if map.is_empty() {
        return;
    }
    for unit in units {
        for class in &mut unit.classes {
            if let Some(new) = map.get(&class.name) {
                class.name = new.clone();
            }
            rename_types_in_class(class, map);
        }
    }
}

// ---------------------------------------------------------------------------
// delta pools

fn member_deltas(
    normalized_before: &[CompilationUnit],
    after: &[CompilationUnit],
) -> BTreeMap<String, MemberDeltas> {
    let mut deltas = BTreeMap::new();
    for old_class in normalized_before.iter().flat_map(|u| &u.classes) {
        let Some(new_class) = find_class(after, &old_class.name) else { continue };
        let mut d = MemberDeltas::default();
        for f in &old_class.fields {
            match new_class.field(&f.name) {
                Some(g) if g == f => {}
                Some(g) => d.changed_fields.push((f.clone(), g.clone())),
                None => d.removed_fields.push(f.clone()),
            }
        }
        for g in &new_class.fields {
            if old_class.field(&g.name).is_none() {
                d.added_fields.push(g.clone());
            }
        }
        for m in &old_class.methods {
            match new_class.method(&m.name) {
                Some(n) if n == m => {}
                Some(n) => d.changed_methods.push((m.clone(), n.clone())),
                None => d.removed_methods.push(m.clone()),
            }
        }
        for n in &new_class.methods {
            if old_class.method(&n.name).is_none() {
                d.added_methods.push(n.clone());
            }
        }
        deltas.insert(old_class.name.clone(), d);
    }
    deltas
}

// ---------------------------------------------------------------------------
// phase 2: hierarchy moves

/// Visibility may widen when a member moves up (private members must, to stay
/// reachable from the old location), but everything else must be identical.
fn hierarchy_equal_field(removed: &FieldDecl, added: &FieldDecl) -> bool {
    if added == removed {
        return true;
    }
    if removed.visibility == Visibility::Private {
        let mut widened = removed.clone();
        widened.visibility = Visibility::Protected;
        return &widened == added;
    }
    false
}

fn hierarchy_equal_method(removed: &MethodDecl, added: &MethodDecl) -> bool {
    if added == removed {
        return true;
    }
    if removed.visibility == Visibility::Private {
        let mut widened = removed.clone();
        widened.visibility = Visibility::Protected;
        return &widened == added;
    }
    false
}

fn match_pull_ups(ctx: &mut MatchContext, detections: &mut Vec<Detection>) {
    let class_list: Vec<String> = ctx.deltas.keys().cloned().collect();
    for sub in &class_list {
        let ancestors: Vec<String> =
            ctx.before_table.ancestors(sub).into_iter().map(str::to_string).collect();
        // fields
        let removed: Vec<FieldDecl> = ctx.deltas[sub].removed_fields.clone();
        for field in removed {
            let hit = ancestors.iter().find_map(|anc| {
                let delta = ctx.deltas.get(anc)?;
                let i = delta
                    .added_fields
                    .iter()
                    .position(|g| g.name == field.name && hierarchy_equal_field(&field, g))?;
                Some((anc.clone(), i))
            });
            if let Some((anc, i)) = hit {
                ctx.deltas.get_mut(&anc).unwrap().added_fields.remove(i);
                let d = ctx.deltas.get_mut(sub).unwrap();
                d.removed_fields.retain(|f| f.name != field.name);
                detections.push(Detection {
                    kind: RefactoringKind::PullUpField,
                    subject: field.name.clone(),
                    source_locus: Some(Locus::member(ctx.before_name(sub), &field.name)),
                    target_locus: Some(Locus::member(&anc, &field.name)),
                    rationale: format!(
                        "field {} left subclass {} and an identical field appeared in its \
                         superclass {}",
                        field.name, sub, anc
                    ),
                });
            }
        }
        // methods
        let removed: Vec<MethodDecl> = ctx.deltas[sub].removed_methods.clone();
        for method in removed {
            let hit = ancestors.iter().find_map(|anc| {
                let delta = ctx.deltas.get(anc)?;
                let i = delta
                    .added_methods
                    .iter()
                    .position(|n| n.name == method.name && hierarchy_equal_method(&method, n))?;
                Some((anc.clone(), i))
            });
            if let Some((anc, i)) = hit {
                ctx.deltas.get_mut(&anc).unwrap().added_methods.remove(i);
                let d = ctx.deltas.get_mut(sub).unwrap();
                d.removed_methods.retain(|m| m.name != method.name);
                detections.push(Detection {
                    kind: RefactoringKind::PullUpMethod,
                    subject: method.name.clone(),
                    source_locus: Some(Locus::member(ctx.before_name(sub), &method.name)),
                    target_locus: Some(Locus::member(&anc, &method.name)),
                    rationale: format!(
                        "method {} left subclass {} and an identical method appeared in its \
                         superclass {}",
                        method.name, sub, anc
                    ),
                });
            }
        }
    }
}

fn direct_subclasses(table: &SymbolTable, parent: &str) -> Vec<String> {
    table
        .classes
        .iter()
        .filter(|(_, summary)| summary.superclass.as_deref() == Some(parent))
        .map(|(name, _)| name.clone())
        .collect()
}

fn match_push_downs(ctx: &mut MatchContext, detections: &mut Vec<Detection>) {
    let class_list: Vec<String> = ctx.deltas.keys().cloned().collect();
    for parent in &class_list {
        let subs = direct_subclasses(&ctx.before_table, parent);
        if subs.is_empty() {
            continue;
        }
        // fields
        let removed: Vec<FieldDecl> = ctx.deltas[parent].removed_fields.clone();
        for field in removed {
            let receivers: Vec<String> = subs
                .iter()
                .filter(|s| {
                    ctx.deltas
                        .get(*s)
                        .is_some_and(|d| d.added_fields.iter().any(|g| g == &field))
                })
                .cloned()
                .collect();
            if receivers.is_empty() {
                continue;
            }
            for s in &receivers {
                ctx.deltas.get_mut(s).unwrap().added_fields.retain(|g| g != &field);
            }
            ctx.deltas.get_mut(parent).unwrap().removed_fields.retain(|f| f.name != field.name);
            detections.push(Detection {
                kind: RefactoringKind::PushDownField,
                subject: format!("{} -> {}", field.name, receivers.join(", ")),
                source_locus: Some(Locus::member(ctx.before_name(parent), &field.name)),
                target_locus: Some(Locus::member(&receivers[0], &field.name)),
                rationale: format!(
                    "field {} left {} and identical copies appeared in its direct subclasses {}",
                    field.name,
                    parent,
                    receivers.join(", ")
                ),
            });
        }
        // methods, including the retained-abstract-stub variant
        let removed: Vec<MethodDecl> = ctx.deltas[parent].removed_methods.clone();
        for method in removed {
            if self_push_down_method(ctx, detections, parent, &subs, &method, false) {
                ctx.deltas
                    .get_mut(parent)
                    .unwrap()
                    .removed_methods
                    .retain(|m| m.name != method.name);
            }
        }
        let changed: Vec<(MethodDecl, MethodDecl)> = ctx.deltas[parent].changed_methods.clone();
        for (old, new) in changed {
            if !is_abstract_stub_of(&new, &old) {
                continue;
            }
            if self_push_down_method(ctx, detections, parent, &subs, &old, true) {
                ctx.deltas
                    .get_mut(parent)
                    .unwrap()
                    .changed_methods
                    .retain(|(m, _)| m.name != old.name);
            }
        }
    }
}

fn is_abstract_stub_of(stub: &MethodDecl, original: &MethodDecl) -> bool {
    stub.is_abstract
        && stub.body.is_none()
        && !original.is_abstract
        && stub.name == original.name
        && stub.visibility == original.visibility
        && stub.return_type == original.return_type
        && stub.params == original.params
}

fn self_push_down_method(
    ctx: &mut MatchContext,
    detections: &mut Vec<Detection>,
    parent: &str,
    subs: &[String],
    method: &MethodDecl,
    stub_retained: bool,
) -> bool {
    let receivers: Vec<String> = subs
        .iter()
        .filter(|s| {
            ctx.deltas.get(*s).is_some_and(|d| d.added_methods.iter().any(|n| n == method))
        })
        .cloned()
        .collect();
    if receivers.is_empty() {
        return false;
    }
    for s in &receivers {
        ctx.deltas.get_mut(s).unwrap().added_methods.retain(|n| n != method);
    }
    let stub_note = if stub_retained {
        "; the original declaration remains as an abstract stub"
    } else {
        ""
    };
    detections.push(Detection {
        kind: RefactoringKind::PushDownMethod,
        subject: format!("{} -> {}", method.name, receivers.join(", ")),
        source_locus: Some(Locus::member(ctx.before_name(parent), &method.name)),
        target_locus: Some(Locus::member(&receivers[0], &method.name)),
        rationale: format!(
            "method {} left {} and identical copies appeared in its direct subclasses {}{}",
            method.name,
            parent,
            receivers.join(", "),
            stub_note
        ),
    });
    true
}

// ---------------------------------------------------------------------------
// phase 3: plain moves

fn match_moves(ctx: &mut MatchContext, detections: &mut Vec<Detection>) {
    let class_list: Vec<String> = ctx.deltas.keys().cloned().collect();
    for source in &class_list {
        // fields
        let removed: Vec<FieldDecl> = ctx.deltas[source].removed_fields.clone();
        for field in removed {
            let hit = class_list.iter().find(|target| {
                *target != source
                    && !ctx.before_table.inheritance_related(source, target)
                    && !ctx.after_table.inheritance_related(source, target)
                    && ctx.deltas[*target].added_fields.iter().any(|g| g == &field)
            });
            if let Some(target) = hit.cloned() {
                ctx.deltas.get_mut(&target).unwrap().added_fields.retain(|g| g != &field);
                ctx.deltas.get_mut(source).unwrap().removed_fields.retain(|f| f.name != field.name);
                detections.push(Detection {
                    kind: RefactoringKind::MoveField,
                    subject: field.name.clone(),
                    source_locus: Some(Locus::member(ctx.before_name(source), &field.name)),
                    target_locus: Some(Locus::member(&target, &field.name)),
                    rationale: format!(
                        "field {} left {} and an identical field appeared in {}, which is \
                         unrelated to it by inheritance",
                        field.name, source, target
                    ),
                });
            }
        }
        // methods
        let removed: Vec<MethodDecl> = ctx.deltas[source].removed_methods.clone();
        for method in removed {
            let hit = class_list.iter().find(|target| {
                *target != source
                    && !ctx.before_table.inheritance_related(source, target)
                    && !ctx.after_table.inheritance_related(source, target)
                    && ctx.deltas[*target].added_methods.iter().any(|n| n == &method)
            });
            if let Some(target) = hit.cloned() {
                ctx.deltas.get_mut(&target).unwrap().added_methods.retain(|n| n != &method);
                ctx.deltas
                    .get_mut(source)
                    .unwrap()
                    .removed_methods
                    .retain(|m| m.name != method.name);
                detections.push(Detection {
                    kind: RefactoringKind::MoveMethod,
                    subject: method.name.clone(),
                    source_locus: Some(Locus::member(ctx.before_name(source), &method.name)),
                    target_locus: Some(Locus::member(&target, &method.name)),
                    rationale: format!(
                        "method {} left {} and an identical method appeared in {}, which is \
                         unrelated to it by inheritance",
                        method.name, source, target
                    ),
                });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// phase 4: member renames

fn count_calls(units: &[CompilationUnit], name: &str) -> usize {
    let mut count = 0;
    visit_exprs(units, &mut |expr| {
        if matches!(expr, Expr::Call { name: n, .. } if n == name) {
            count += 1;
        }
    });
    count
}

fn count_field_refs(units: &[CompilationUnit], name: &str) -> usize {
    let mut count = 0;
    visit_exprs(units, &mut |expr| match expr {
        Expr::NameRef(n) | Expr::FieldAccess { name: n, .. } if n == name => count += 1,
        _ => {}
    });
    for unit in units {
        for class in &unit.classes {
            for method in &class.methods {
                for stmt in method.body.iter().flatten() {
                    if let Stmt::Assign { target, .. } = stmt {
                        match target {
                            AssignTarget::Name(n) | AssignTarget::Field { name: n, .. }
                                if n == name =>
                            {
                                count += 1
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    count
}

fn visit_exprs(units: &[CompilationUnit], f: &mut impl FnMut(&Expr)) {
    fn walk(expr: &Expr, f: &mut impl FnMut(&Expr)) {
        f(expr);
        match expr {
            Expr::FieldAccess { receiver, .. } => walk(receiver, f),
            Expr::Call { receiver, args, .. } => {
                if let Some(r) = receiver {
                    walk(r, f);
                }
                for a in args {
                    walk(a, f);
                }
            }
            Expr::Binary { left, right, .. } => {
                walk(left, f);
                walk(right, f);
            }
            _ => {}
        }
    }
    for unit in units {
        for class in &unit.classes {
            for field in &class.fields {
                if let Some(init) = &field.initializer {
                    walk(init, f);
                }
            }
            for method in &class.methods {
                for stmt in method.body.iter().flatten() {
                    match stmt {
                        Stmt::Return(e) | Stmt::ExprStmt(e) => walk(e, f),
                        Stmt::Assign { target, value } => {
                            if let AssignTarget::Field { receiver, .. } = target {
                                walk(receiver, f);
                            }
                            walk(value, f);
                        }
                        Stmt::LocalDecl { init, .. } => walk(init, f),
                    }
                }
            }
        }
    }
}

/// `removed` with its name (and recursive self-calls) substituted to
/// `new_name`; the candidate an added method must equal for a rename match.
fn renamed_method(removed: &MethodDecl, new_name: &str) -> MethodDecl {
    let mut expected = removed.clone();
    let old = expected.name.clone();
    expected.name = new_name.to_string();
    fn sub(expr: &mut Expr, old: &str, new: &str) {
        match expr {
            Expr::FieldAccess { receiver, .. } => sub(receiver, old, new),
            Expr::Call { receiver, name, args } => {
                if name == old {
                    *name = new.to_string();
                }
                if let Some(r) = receiver {
                    sub(r, old, new);
                }
                for a in args {
                    sub(a, old, new);
                }
            }
            Expr::Binary { left, right, .. } => {
                sub(left, old, new);
                sub(right, old, new);
            }
            _ => {}
        }
    }
    for stmt in expected.body.iter_mut().flatten() {
        match stmt {
            Stmt::Return(e) | Stmt::ExprStmt(e) => sub(e, &old, new_name),
            Stmt::Assign { target, value } => {
                if let AssignTarget::Field { receiver, .. } = target {
                    sub(receiver, &old, new_name);
                }
                sub(value, &old, new_name);
            }
            Stmt::LocalDecl { init, .. } => sub(init, &old, new_name),
        }
    }
    expected
}

fn match_member_renames(
    normalized_before: &[CompilationUnit],
    after: &[CompilationUnit],
    ctx: &mut MatchContext,
    detections: &mut Vec<Detection>,
) {
    let class_list: Vec<String> = ctx.deltas.keys().cloned().collect();
    for class in &class_list {
        // methods
        let removed: Vec<MethodDecl> = ctx.deltas[class].removed_methods.clone();
        for method in removed {
            let added = ctx.deltas[class].added_methods.clone();
            let hit = added.iter().find(|candidate| {
                candidate.name != method.name
                    && **candidate == renamed_method(&method, &candidate.name)
                    && count_calls(after, &method.name) == 0
                    && count_calls(normalized_before, &method.name)
                        == count_calls(after, &candidate.name)
            });
            if let Some(new_decl) = hit {
                let new_name = new_decl.name.clone();
                let d = ctx.deltas.get_mut(class).unwrap();
                d.added_methods.retain(|n| n.name != new_name);
                d.removed_methods.retain(|m| m.name != method.name);
                detections.push(Detection {
                    kind: RefactoringKind::RenameMethod,
                    subject: format!("{} -> {}", method.name, new_name),
                    source_locus: Some(Locus::member(ctx.before_name(class), &method.name)),
                    target_locus: Some(Locus::member(class, &new_name)),
                    rationale: format!(
                        "method {} disappeared from {} while {} appeared with the same \
                         signature and body, and every call site follows the new name",
                        method.name, class, new_name
                    ),
                });
            }
        }
        // fields
        let removed: Vec<FieldDecl> = ctx.deltas[class].removed_fields.clone();
        for field in removed {
            let added = ctx.deltas[class].added_fields.clone();
            let hit = added.iter().find(|candidate| {
                if candidate.name == field.name {
                    return false;
                }
                let mut expected = field.clone();
                expected.name = candidate.name.clone();
                **candidate == expected
                    && count_field_refs(after, &field.name) == 0
                    && count_field_refs(normalized_before, &field.name)
                        == count_field_refs(after, &candidate.name)
            });
            if let Some(new_decl) = hit {
                let new_name = new_decl.name.clone();
                let d = ctx.deltas.get_mut(class).unwrap();
                d.added_fields.retain(|g| g.name != new_name);
                d.removed_fields.retain(|f| f.name != field.name);
                detections.push(Detection {
                    kind: RefactoringKind::RenameField,
                    subject: format!("{} -> {}", field.name, new_name),
                    source_locus: Some(Locus::member(ctx.before_name(class), &field.name)),
                    target_locus: Some(Locus::member(class, &new_name)),
                    rationale: format!(
                        "field {} disappeared from {} while {} appeared with the same type, \
                         and every reference follows the new name",
                        field.name, class, new_name
                    ),
                });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// phase 5: parameter changes

/// Position where `longer` inserts exactly one parameter into `shorter`.
fn single_insertion(shorter: &[Param], longer: &[Param]) -> Option<usize> {
    if longer.len() != shorter.len() + 1 {
        return None;
    }
    (0..longer.len())
        .find(|&i| shorter[..i] == longer[..i] && shorter[i..] == longer[i + 1..])
}

fn match_parameter_changes(ctx: &mut MatchContext, detections: &mut Vec<Detection>) {
    let class_list: Vec<String> = ctx.deltas.keys().cloned().collect();
    for class in &class_list {
        let changed: Vec<(MethodDecl, MethodDecl)> = ctx.deltas[class].changed_methods.clone();
        for (old, new) in changed {
            let same_shape = old.visibility == new.visibility
                && old.is_abstract == new.is_abstract
                && old.return_type == new.return_type
                && old.body == new.body;
            if !same_shape {
                continue;
            }
            let detection = if let Some(i) = single_insertion(&old.params, &new.params) {
                let param = &new.params[i];
                Some((RefactoringKind::AddMethodParameter, param.name.clone(), format!(
                    "method {} in {} gained parameter {} while its body stayed the same",
                    old.name, class, param.name
                )))
            } else if let Some(i) = single_insertion(&new.params, &old.params) {
                let param = &old.params[i];
                Some((RefactoringKind::RemoveMethodParameter, param.name.clone(), format!(
                    "method {} in {} lost parameter {} while its body stayed the same",
                    old.name, class, param.name
                )))
            } else {
                None
            };
            if let Some((kind, param_name, rationale)) = detection {
                ctx.deltas.get_mut(class).unwrap().changed_methods.retain(|(m, _)| m.name != old.name);
                detections.push(Detection {
                    kind,
                    subject: param_name,
                    source_locus: Some(Locus::member(ctx.before_name(class), &old.name)),
                    target_locus: Some(Locus::member(class, &old.name)),
                    rationale,
                });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// phase 6: encapsulation

/// Getter shape: no parameters, returns the field's type, body returns the
/// field (with or without an explicit `this`).
fn is_getter_for(method: &MethodDecl, field: &FieldDecl) -> bool {
    if !method.params.is_empty()
        || method.is_abstract
        || method.return_type != crate::syntax::ReturnType::Type(field.type_name.clone())
    {
        return false;
    }
    match method.body.as_deref() {
        Some([Stmt::Return(Expr::NameRef(n))]) => n == &field.name,
        Some([Stmt::Return(Expr::FieldAccess { receiver, name })]) => {
            name == &field.name && matches!(**receiver, Expr::This)
        }
        _ => false,
    }
}

/// Setter shape: void, one parameter of the field's type, body assigns the
/// parameter to the field.
fn is_setter_for(method: &MethodDecl, field: &FieldDecl) -> bool {
    if method.is_abstract
        || method.return_type != crate::syntax::ReturnType::Void
        || method.params.len() != 1
        || method.params[0].type_name != field.type_name
    {
        return false;
    }
    let param = &method.params[0].name;
    match method.body.as_deref() {
        Some([Stmt::Assign { target, value: Expr::NameRef(v) }]) if v == param => match target {
            AssignTarget::Name(n) => n == &field.name,
            AssignTarget::Field { receiver: Expr::This, name } => name == &field.name,
            _ => false,
        },
        _ => false,
    }
}

fn match_encapsulations(ctx: &mut MatchContext, detections: &mut Vec<Detection>) {
    let class_list: Vec<String> = ctx.deltas.keys().cloned().collect();
    for class in &class_list {
        let changed: Vec<(FieldDecl, FieldDecl)> = ctx.deltas[class].changed_fields.clone();
        for (old, new) in changed {
            let tightened = old.visibility != Visibility::Private
                && new.visibility == Visibility::Private
                && old.type_name == new.type_name
                && old.initializer == new.initializer;
            if !tightened {
                continue;
            }
            let added = ctx.deltas[class].added_methods.clone();
            let getter = added.iter().find(|m| is_getter_for(m, &new));
            let setter = added.iter().find(|m| is_setter_for(m, &new));
            let (Some(getter), Some(setter)) = (getter, setter) else { continue };
            let (getter, setter) = (getter.name.clone(), setter.name.clone());
            let d = ctx.deltas.get_mut(class).unwrap();
            d.added_methods.retain(|m| m.name != getter && m.name != setter);
            d.changed_fields.retain(|(f, _)| f.name != old.name);
            detections.push(Detection {
                kind: RefactoringKind::EncapsulateField,
                subject: format!("{} via {}/{}", old.name, getter, setter),
                source_locus: Some(Locus::member(ctx.before_name(class), &old.name)),
                target_locus: Some(Locus::member(class, &old.name)),
                rationale: format!(
                    "field {} in {} became private and accessor methods {} and {} appeared \
                     that read and write exactly that field",
                    old.name, class, getter, setter
                ),
            });
        }
    }
}
