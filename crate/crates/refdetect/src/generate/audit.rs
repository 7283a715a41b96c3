//! Independent postcondition checks for generated transformation cases.
//!
//! The audit never trusts the code that applied a transformation. For each
//! kind it reconstructs the expected before-program from the after-program
//! and the recorded subject (an inverse rewrite with its own walkers), then
//! demands structural equality. Inverses catch both under-application
//! (a missed reference) and over-application (an unrelated edit smuggled into
//! the diff), because either leaves a residue the reconstruction cannot
//! remove.

use std::fmt;

use crate::catalog::RefactoringKind;
use crate::syntax::{
    AssignTarget, ClassDecl, CompilationUnit, Expr, MethodDecl, Param, ReturnType, Stmt, TypeRef,
    Visibility,
};

use super::Subject;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub kind: RefactoringKind,
    pub reason: String,
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "audit failed for {}: {}", self.kind, self.reason)
    }
}

impl std::error::Error for AuditFailure {}

pub fn audit_case(
    kind: RefactoringKind,
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    subject: &Subject,
) -> Result<(), AuditFailure> {
    let fail = |reason: &str| AuditFailure { kind, reason: reason.to_string() };
    if before == after {
        return Err(fail("programs are identical"));
    }
    match (kind, subject) {
        (RefactoringKind::RenameClass, Subject::Class { original, renamed }) => {
            audit_rename_class(before, after, original, renamed).map_err(|r| fail(&r))
        }
        (RefactoringKind::RenameMethod, Subject::Method { class, original, renamed }) => {
            audit_rename_method(before, after, class, original, renamed).map_err(|r| fail(&r))
        }
        (RefactoringKind::RenameField, Subject::Field { class, original, renamed }) => {
            audit_rename_field(before, after, class, original, renamed).map_err(|r| fail(&r))
        }
        (RefactoringKind::AddMethodParameter, Subject::Parameter { class, method, parameter }) => {
            audit_add_parameter(before, after, class, method, parameter).map_err(|r| fail(&r))
        }
        (
            RefactoringKind::EncapsulateField,
            Subject::Encapsulated { class, field, getter, setter },
        ) => audit_encapsulate(before, after, class, field, getter, setter).map_err(|r| fail(&r)),
        (RefactoringKind::MoveMethod, Subject::MovedMethod { method, source, target }) => {
            audit_move_method(before, after, method, source, target).map_err(|r| fail(&r))
        }
        (RefactoringKind::PullUpField, Subject::PulledUp { member, source, target }) => {
            audit_pull_up(before, after, member, source, target, true).map_err(|r| fail(&r))
        }
        (RefactoringKind::PullUpMethod, Subject::PulledUp { member, source, target }) => {
            audit_pull_up(before, after, member, source, target, false).map_err(|r| fail(&r))
        }
        (
            RefactoringKind::PushDownField,
            Subject::PushedDown { member, source, targets, abstract_stub },
        ) => {
            if *abstract_stub {
                return Err(fail("field push-down cannot leave an abstract stub"));
            }
            audit_push_down_field(before, after, member, source, targets).map_err(|r| fail(&r))
        }
        (
            RefactoringKind::PushDownMethod,
            Subject::PushedDown { member, source, targets, abstract_stub },
        ) => audit_push_down_method(before, after, member, source, targets, *abstract_stub)
            .map_err(|r| fail(&r)),
        _ => Err(fail("subject shape does not match the refactoring kind")),
    }
}

// ---------------------------------------------------------------------------
// audit-local walkers (independent of the application code)

fn find_class<'a>(units: &'a [CompilationUnit], name: &str) -> Option<&'a ClassDecl> {
    units.iter().flat_map(|u| &u.classes).find(|c| c.name == name)
}

fn find_class_mut<'a>(units: &'a mut [CompilationUnit], name: &str) -> Option<&'a mut ClassDecl> {
    units.iter_mut().flat_map(|u| &mut u.classes).find(|c| c.name == name)
}

fn visit_exprs_mut(units: &mut [CompilationUnit], f: &mut impl FnMut(&mut Expr)) {
    fn walk(expr: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
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
        f(expr);
    }
    for unit in units {
        for class in &mut unit.classes {
            for field in &mut class.fields {
                if let Some(init) = &mut field.initializer {
                    walk(init, f);
                }
            }
            for method in &mut class.methods {
                for stmt in method.body.iter_mut().flatten() {
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

/// True when `name` occurs anywhere as an identifier: declarations, type
/// references, expressions, or assignment targets.
fn mentions_identifier(units: &[CompilationUnit], name: &str) -> bool {
    fn expr_mentions(expr: &Expr, name: &str) -> bool {
        match expr {
            Expr::NameRef(n) => n == name,
            Expr::FieldAccess { receiver, name: n } => n == name || expr_mentions(receiver, name),
            Expr::Call { receiver, name: n, args } => {
                n == name
                    || receiver.as_deref().is_some_and(|r| expr_mentions(r, name))
                    || args.iter().any(|a| expr_mentions(a, name))
            }
            Expr::Binary { left, right, .. } => {
                expr_mentions(left, name) || expr_mentions(right, name)
            }
            _ => false,
        }
    }
    let type_mentions = |ty: &TypeRef| matches!(ty, TypeRef::Named(n) if n == name);
    for unit in units {
        for class in &unit.classes {
            if class.name == name
                || class.superclass.as_deref() == Some(name)
                || class.interfaces.iter().any(|i| i == name)
            {
                return true;
            }
            for field in &class.fields {
                if field.name == name || type_mentions(&field.type_name) {
                    return true;
                }
                if field.initializer.as_ref().is_some_and(|e| expr_mentions(e, name)) {
                    return true;
                }
            }
            for method in &class.methods {
                if method.name == name {
                    return true;
                }
                if let ReturnType::Type(ty) = &method.return_type {
                    if type_mentions(ty) {
                        return true;
                    }
                }
                if method.params.iter().any(|p| p.name == name || type_mentions(&p.type_name)) {
                    return true;
                }
                for stmt in method.body.iter().flatten() {
                    let hit = match stmt {
                        Stmt::Return(e) | Stmt::ExprStmt(e) => expr_mentions(e, name),
                        Stmt::Assign { target, value } => {
                            expr_mentions(value, name)
                                || match target {
                                    AssignTarget::Name(n) => n == name,
                                    AssignTarget::Field { receiver, name: n } => {
                                        n == name || expr_mentions(receiver, name)
                                    }
                                }
                        }
                        Stmt::LocalDecl { name: n, type_name, init } => {
                            n == name || type_mentions(type_name) || expr_mentions(init, name)
                        }
                    };
                    if hit {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn check_fresh_name(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    original: &str,
    renamed: &str,
) -> Result<(), String> {
    if original == renamed {
        return Err("renamed element kept its name".into());
    }
    if mentions_identifier(before, renamed) {
        return Err(format!("replacement name {renamed} already occurs before the change"));
    }
    if mentions_identifier(after, original) {
        return Err(format!("original name {original} still occurs after the change"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// renames: substitute the new name back and require exact equality

fn audit_rename_class(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    original: &str,
    renamed: &str,
) -> Result<(), String> {
    check_fresh_name(before, after, original, renamed)?;
    if find_class(after, renamed).is_none() {
        return Err(format!("no class named {renamed} after the change"));
    }
    let mut restored = after.to_vec();
    let rename = |n: &mut String| {
        if n == renamed {
            *n = original.to_string();
        }
    };
    let rename_ty = |ty: &mut TypeRef| {
        if let TypeRef::Named(n) = ty {
            rename(n);
        }
    };
    for unit in &mut restored {
        for class in &mut unit.classes {
            rename(&mut class.name);
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
                if let ReturnType::Type(ty) = &mut method.return_type {
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
    }
    if restored != before {
        return Err("undoing the rename does not restore the original program".into());
    }
    Ok(())
}

fn audit_rename_method(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    class: &str,
    original: &str,
    renamed: &str,
) -> Result<(), String> {
    check_fresh_name(before, after, original, renamed)?;
    let declaring = find_class(after, class).ok_or_else(|| format!("class {class} missing"))?;
    if declaring.method(renamed).is_none() {
        return Err(format!("{class} does not declare {renamed} after the change"));
    }
    let mut restored = after.to_vec();
    for method in &mut find_class_mut(&mut restored, class).unwrap().methods {
        if method.name == renamed {
            method.name = original.to_string();
        }
    }
    visit_exprs_mut(&mut restored, &mut |expr| {
        if let Expr::Call { name, .. } = expr {
            if name == renamed {
                *name = original.to_string();
            }
        }
    });
    if restored != before {
        return Err("undoing the rename does not restore the original program".into());
    }
    Ok(())
}

fn audit_rename_field(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    class: &str,
    original: &str,
    renamed: &str,
) -> Result<(), String> {
    check_fresh_name(before, after, original, renamed)?;
    let declaring = find_class(after, class).ok_or_else(|| format!("class {class} missing"))?;
    if declaring.field(renamed).is_none() {
        return Err(format!("{class} does not declare {renamed} after the change"));
    }
    let mut restored = after.to_vec();
    for field in &mut find_class_mut(&mut restored, class).unwrap().fields {
        if field.name == renamed {
            field.name = original.to_string();
        }
    }
    visit_exprs_mut(&mut restored, &mut |expr| match expr {
        Expr::NameRef(n) | Expr::FieldAccess { name: n, .. } if n == renamed => {
            *n = original.to_string();
        }
        _ => {}
    });
    for unit in &mut restored {
        for c in &mut unit.classes {
            for method in &mut c.methods {
                for stmt in method.body.iter_mut().flatten() {
                    if let Stmt::Assign { target, .. } = stmt {
                        match target {
                            AssignTarget::Name(n) | AssignTarget::Field { name: n, .. }
                                if n == renamed =>
                            {
                                *n = original.to_string();
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    if restored != before {
        return Err("undoing the rename does not restore the original program".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// signature changes

fn audit_add_parameter(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    class: &str,
    method: &str,
    parameter: &str,
) -> Result<(), String> {
    let decl_after = find_class(after, class)
        .and_then(|c| c.method(method))
        .ok_or_else(|| format!("{class}.{method} missing after the change"))?;
    match decl_after.params.last() {
        Some(last) if last.name == parameter && last.type_name == TypeRef::Int => {}
        _ => return Err(format!("{method} does not end with int parameter {parameter}")),
    }
    if mentions_identifier(before, parameter) {
        return Err(format!("parameter name {parameter} already occurs before the change"));
    }
    let mut restored = after.to_vec();
    let restored_decl = find_class_mut(&mut restored, class)
        .and_then(|c| c.methods.iter_mut().find(|m| m.name == method))
        .unwrap();
    restored_decl.params.pop();
    let mut bad_call = false;
    visit_exprs_mut(&mut restored, &mut |expr| {
        if let Expr::Call { name, args, .. } = expr {
            if name == method {
                match args.pop() {
                    Some(Expr::IntLit(0)) => {}
                    _ => bad_call = true,
                }
            }
        }
    });
    if bad_call {
        return Err(format!("a call to {method} does not pass the default argument last"));
    }
    if restored != before {
        return Err("undoing the parameter addition does not restore the original program".into());
    }
    Ok(())
}

fn audit_encapsulate(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    class: &str,
    field: &str,
    getter: &str,
    setter: &str,
) -> Result<(), String> {
    let owner_before =
        find_class(before, class).ok_or_else(|| format!("class {class} missing"))?;
    let field_before = owner_before
        .field(field)
        .ok_or_else(|| format!("{class}.{field} missing before the change"))?;
    if field_before.visibility == Visibility::Private {
        return Err(format!("{class}.{field} was already private"));
    }
    if mentions_identifier(before, getter) || mentions_identifier(before, setter) {
        return Err("accessor name already occurs before the change".into());
    }
    let owner_after = find_class(after, class).ok_or_else(|| format!("class {class} missing"))?;
    let field_after = owner_after
        .field(field)
        .ok_or_else(|| format!("{class}.{field} missing after the change"))?;
    if field_after.visibility != Visibility::Private {
        return Err(format!("{class}.{field} is not private after the change"));
    }

    let ty = field_before.type_name.clone();
    let expected_getter = MethodDecl {
        name: getter.to_string(),
        visibility: Visibility::Public,
        is_abstract: false,
        return_type: ReturnType::Type(ty.clone()),
        params: Vec::new(),
        body: Some(vec![Stmt::Return(Expr::FieldAccess {
            receiver: Box::new(Expr::This),
            name: field.to_string(),
        })]),
        span: Default::default(),
    };
    let expected_setter = MethodDecl {
        name: setter.to_string(),
        visibility: Visibility::Public,
        is_abstract: false,
        return_type: ReturnType::Void,
        params: vec![Param { name: field.to_string(), type_name: ty }],
        body: Some(vec![Stmt::Assign {
            target: AssignTarget::Field { receiver: Expr::This, name: field.to_string() },
            value: Expr::NameRef(field.to_string()),
        }]),
        span: Default::default(),
    };
    if owner_after.method(getter) != Some(&expected_getter) {
        return Err(format!("{getter} does not have the canonical accessor shape"));
    }
    if owner_after.method(setter) != Some(&expected_setter) {
        return Err(format!("{setter} does not have the canonical accessor shape"));
    }

    // Rebuild the original: restore visibility, drop the accessors, and turn
    // accessor calls outside the declaring class back into direct accesses.
    let mut restored = after.to_vec();
    {
        let owner = find_class_mut(&mut restored, class).unwrap();
        owner.fields.iter_mut().find(|f| f.name == field).unwrap().visibility =
            field_before.visibility;
        owner.methods.retain(|m| m.name != getter && m.name != setter);
    }
    for unit in &mut restored {
        for c in &mut unit.classes {
            if c.name == class {
                continue;
            }
            let mut restore_reads = |expr: &mut Expr| {
                let replacement = match expr {
                    Expr::Call { receiver: Some(r), name, args }
                        if name == getter && args.is_empty() =>
                    {
                        Some(Expr::FieldAccess { receiver: r.clone(), name: field.to_string() })
                    }
                    Expr::Call { receiver: None, name, args }
                        if name == getter && args.is_empty() =>
                    {
                        Some(Expr::NameRef(field.to_string()))
                    }
                    _ => None,
                };
                if let Some(replacement) = replacement {
                    *expr = replacement;
                }
            };
            for f in &mut c.fields {
                if let Some(init) = &mut f.initializer {
                    walk_restore(init, &mut restore_reads);
                }
            }
            for method in &mut c.methods {
                for stmt in method.body.iter_mut().flatten() {
                    match stmt {
                        Stmt::Return(e) | Stmt::ExprStmt(e) => walk_restore(e, &mut restore_reads),
                        Stmt::Assign { target, value } => {
                            if let AssignTarget::Field { receiver, .. } = target {
                                walk_restore(receiver, &mut restore_reads);
                            }
                            walk_restore(value, &mut restore_reads);
                        }
                        Stmt::LocalDecl { init, .. } => walk_restore(init, &mut restore_reads),
                    }
                    let write = match stmt {
                        Stmt::ExprStmt(Expr::Call { receiver: Some(r), name, args })
                            if name == setter && args.len() == 1 =>
                        {
                            Some(Stmt::Assign {
                                target: AssignTarget::Field {
                                    receiver: (**r).clone(),
                                    name: field.to_string(),
                                },
                                value: args[0].clone(),
                            })
                        }
                        Stmt::ExprStmt(Expr::Call { receiver: None, name, args })
                            if name == setter && args.len() == 1 =>
                        {
                            Some(Stmt::Assign {
                                target: AssignTarget::Name(field.to_string()),
                                value: args[0].clone(),
                            })
                        }
                        _ => None,
                    };
                    if let Some(write) = write {
                        *stmt = write;
                    }
                }
            }
        }
    }
    if restored != before {
        return Err("undoing the encapsulation does not restore the original program".into());
    }
    Ok(())
}

fn walk_restore(expr: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
    match expr {
        Expr::FieldAccess { receiver, .. } => walk_restore(receiver, f),
        Expr::Call { receiver, args, .. } => {
            if let Some(r) = receiver {
                walk_restore(r, f);
            }
            for a in args {
                walk_restore(a, f);
            }
        }
        Expr::Binary { left, right, .. } => {
            walk_restore(left, f);
            walk_restore(right, f);
        }
        _ => {}
    }
    f(expr);
}

// ---------------------------------------------------------------------------
// moves

fn audit_move_method(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    method: &str,
    source: &str,
    target: &str,
) -> Result<(), String> {
    if source == target {
        return Err("source and target coincide".into());
    }
    let decl_before = find_class(before, source)
        .and_then(|c| c.method(method))
        .ok_or_else(|| format!("{source}.{method} missing before the change"))?;
    if find_class(before, target).is_none() {
        return Err(format!("target class {target} missing before the change"));
    }
    let decl_after = find_class(after, target)
        .and_then(|c| c.method(method))
        .ok_or_else(|| format!("{target}.{method} missing after the change"))?;
    if decl_after != decl_before {
        return Err(format!("{method} changed while moving"));
    }
    if find_class(after, source).is_none_or(|c| c.method(method).is_some()) {
        return Err(format!("{source} still declares {method}"));
    }
    // Everything except the declaration site and the call receivers must be
    // untouched; receivers are free to change because they now have to
    // produce the target type.
    let normalize = |units: &[CompilationUnit], declaring: &str| -> Vec<CompilationUnit> {
        let mut out = units.to_vec();
        if let Some(c) = find_class_mut(&mut out, declaring) {
            c.methods.retain(|m| m.name != method);
        }
        visit_exprs_mut(&mut out, &mut |expr| {
            if let Expr::Call { receiver, name, .. } = expr {
                if name == method {
                    *receiver = None;
                }
            }
        });
        out
    };
    if normalize(before, source) != normalize(after, target) {
        return Err("the move changed more than the declaration and call receivers".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// hierarchy moves

fn audit_pull_up(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    member: &str,
    source: &str,
    target: &str,
    is_field: bool,
) -> Result<(), String> {
    let source_before =
        find_class(before, source).ok_or_else(|| format!("class {source} missing"))?;
    if source_before.superclass.as_deref() != Some(target) {
        return Err(format!("{target} is not the direct superclass of {source}"));
    }
    let mut restored = after.to_vec();
    if is_field {
        let original = source_before
            .field(member)
            .ok_or_else(|| format!("{source}.{member} missing before the change"))?;
        let index = source_before.fields.iter().position(|f| f.name == member).unwrap();
        let pulled = find_class(after, target)
            .and_then(|c| c.field(member))
            .ok_or_else(|| format!("{target}.{member} missing after the change"))?;
        let expected_visibility = match original.visibility {
            Visibility::Private => Visibility::Protected,
            v => v,
        };
        if pulled.visibility != expected_visibility {
            return Err(format!("{member} has the wrong visibility after the pull-up"));
        }
        let mut expected = original.clone();
        expected.visibility = expected_visibility;
        if pulled != &expected {
            return Err(format!("{member} changed while moving"));
        }
        find_class_mut(&mut restored, target).unwrap().fields.retain(|f| f.name != member);
        find_class_mut(&mut restored, source)
            .unwrap()
            .fields
            .insert(index, original.clone());
    } else {
        let original = source_before
            .method(member)
            .ok_or_else(|| format!("{source}.{member} missing before the change"))?;
        let index = source_before.methods.iter().position(|m| m.name == member).unwrap();
        let pulled = find_class(after, target)
            .and_then(|c| c.method(member))
            .ok_or_else(|| format!("{target}.{member} missing after the change"))?;
        let expected_visibility = match original.visibility {
            Visibility::Private => Visibility::Protected,
            v => v,
        };
        let mut expected = original.clone();
        expected.visibility = expected_visibility;
        if pulled != &expected {
            return Err(format!("{member} changed while moving"));
        }
        find_class_mut(&mut restored, target).unwrap().methods.retain(|m| m.name != member);
        find_class_mut(&mut restored, source)
            .unwrap()
            .methods
            .insert(index, original.clone());
    }
    if restored != before {
        return Err("undoing the pull-up does not restore the original program".into());
    }
    Ok(())
}

fn direct_subclasses_of(units: &[CompilationUnit], parent: &str) -> Vec<String> {
    units
        .iter()
        .flat_map(|u| &u.classes)
        .filter(|c| c.superclass.as_deref() == Some(parent))
        .map(|c| c.name.clone())
        .collect()
}

fn audit_push_down_field(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    member: &str,
    source: &str,
    targets: &[String],
) -> Result<(), String> {
    if direct_subclasses_of(before, source) != targets {
        return Err("recorded targets are not the direct subclasses of the source".into());
    }
    if targets.is_empty() {
        return Err("push-down with no target subclasses".into());
    }
    let source_before =
        find_class(before, source).ok_or_else(|| format!("class {source} missing"))?;
    let original = source_before
        .field(member)
        .ok_or_else(|| format!("{source}.{member} missing before the change"))?;
    let index = source_before.fields.iter().position(|f| f.name == member).unwrap();
    if find_class(after, source).is_none_or(|c| c.field(member).is_some()) {
        return Err(format!("{source} still declares {member}"));
    }
    let mut restored = after.to_vec();
    for t in targets {
        let copy = find_class(after, t)
            .and_then(|c| c.field(member))
            .ok_or_else(|| format!("{t}.{member} missing after the change"))?;
        if copy != original {
            return Err(format!("the copy of {member} in {t} differs from the original"));
        }
        find_class_mut(&mut restored, t).unwrap().fields.retain(|f| f.name != member);
    }
    find_class_mut(&mut restored, source)
        .unwrap()
        .fields
        .insert(index, original.clone());
    if restored != before {
        return Err("undoing the push-down does not restore the original program".into());
    }
    Ok(())
}

fn audit_push_down_method(
    before: &[CompilationUnit],
    after: &[CompilationUnit],
    member: &str,
    source: &str,
    targets: &[String],
    abstract_stub: bool,
) -> Result<(), String> {
    if direct_subclasses_of(before, source) != targets {
        return Err("recorded targets are not the direct subclasses of the source".into());
    }
    if targets.is_empty() {
        return Err("push-down with no target subclasses".into());
    }
    let source_before =
        find_class(before, source).ok_or_else(|| format!("class {source} missing"))?;
    let original = source_before
        .method(member)
        .ok_or_else(|| format!("{source}.{member} missing before the change"))?;
    if original.body.is_none() {
        return Err(format!("{source}.{member} had no body to push down"));
    }
    let index = source_before.methods.iter().position(|m| m.name == member).unwrap();

    let mut restored = after.to_vec();
    let source_after = find_class(after, source).ok_or_else(|| format!("class {source} gone"))?;
    if abstract_stub {
        let stub = source_after
            .method(member)
            .ok_or_else(|| format!("{source} lost {member} despite the abstract stub"))?;
        let expected = MethodDecl {
            name: original.name.clone(),
            visibility: original.visibility,
            is_abstract: true,
            return_type: original.return_type.clone(),
            params: original.params.clone(),
            body: None,
            span: Default::default(),
        };
        if stub != &expected {
            return Err(format!("the retained {member} is not an abstract stub of the original"));
        }
        let stub_index = source_after.methods.iter().position(|m| m.name == member).unwrap();
        if stub_index != index {
            return Err(format!("the abstract stub moved within {source}"));
        }
        let methods = &mut find_class_mut(&mut restored, source).unwrap().methods;
        methods[stub_index] = original.clone();
    } else {
        if source_after.method(member).is_some() {
            return Err(format!("{source} still declares {member}"));
        }
        find_class_mut(&mut restored, source)
            .unwrap()
            .methods
            .insert(index, original.clone());
    }
    for t in targets {
        let copy = find_class(after, t)
            .and_then(|c| c.method(member))
            .ok_or_else(|| format!("{t}.{member} missing after the change"))?;
        if copy != original {
            return Err(format!("the copy of {member} in {t} differs from the original"));
        }
        find_class_mut(&mut restored, t).unwrap().methods.retain(|m| m.name != member);
    }
    if restored != before {
        return Err("undoing the push-down does not restore the original program".into());
    }
    Ok(())
}
