//! Mechanical application of the ten generated refactoring kinds.
//!
//! Every mechanic follows the same scheme: enumerate eligible elements in
//! deterministic program order, draw one with the caller's random stream,
//! rewrite a clone of the program, and report the touched element as a
//! [`Subject`]. Eligibility rules are deliberately conservative; an element
//! that would need disambiguation (for example a method that is part of an
//! override group) is simply not offered, and the attempt is retried with a
//! fresh program. Global member-name uniqueness in generated programs keeps
//! reference rewriting capture-free; the rules below still guard against
//! collisions so hand-written inputs fail safe as NotApplicable.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::catalog::{RefactoringKind, GENERATED_KINDS};
use crate::syntax::{
    resolve, AssignTarget, ClassDecl, CompilationUnit, Expr, MethodDecl, Param, ReturnType, Span,
    Stmt, SymbolTable, TypeRef, Visibility,
};

use super::{GenerateError, Subject};

#[derive(Debug, Clone, PartialEq)]
pub struct AppliedCase {
    pub kind: RefactoringKind,
    pub after: Vec<CompilationUnit>,
    pub subject: Subject,
    pub hard: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ApplyOutcome {
    Applied(AppliedCase),
    /// The program offers no element the mechanic can act on.
    NotApplicable,
}

/// Apply one refactoring of `kind` to a resolvable program. The input must
/// resolve; passing an invalid program is a caller bug.
pub fn apply_refactoring(
    program: &[CompilationUnit],
    kind: RefactoringKind,
    rng: &mut impl Rng,
) -> Result<ApplyOutcome, GenerateError> {
    if !GENERATED_KINDS.contains(&kind) {
        return Err(GenerateError::InvalidKind(kind));
    }
    let table = resolve(program).expect("apply_refactoring requires a resolvable program");
    let applied = match kind {
        RefactoringKind::RenameClass => rename_class(program, rng),
        RefactoringKind::RenameMethod => rename_method(program, rng),
        RefactoringKind::RenameField => rename_field(program, rng),
        RefactoringKind::AddMethodParameter => add_method_parameter(program, rng),
        RefactoringKind::EncapsulateField => encapsulate_field(program, rng),
        RefactoringKind::MoveMethod => move_method(program, &table, rng),
        RefactoringKind::PullUpField => pull_up_field(program, rng),
        RefactoringKind::PullUpMethod => pull_up_method(program, &table, rng),
        RefactoringKind::PushDownField => push_down_field(program, &table, rng),
        RefactoringKind::PushDownMethod => push_down_method(program, &table, rng),
        _ => unreachable!("kind checked against GENERATED_KINDS"),
    };
    Ok(match applied {
        Some((after, subject, hard)) => {
            ApplyOutcome::Applied(AppliedCase { kind, after, subject, hard })
        }
        None => ApplyOutcome::NotApplicable,
    })
}

// ---------------------------------------------------------------------------
// shared walkers and lookups

fn classes(units: &[CompilationUnit]) -> impl Iterator<Item = &ClassDecl> {
    units.iter().flat_map(|u| &u.classes)
}

fn class_mut<'a>(units: &'a mut [CompilationUnit], name: &str) -> &'a mut ClassDecl {
    units
        .iter_mut()
        .flat_map(|u| &mut u.classes)
        .find(|c| c.name == name)
        .expect("class disappeared mid-rewrite")
}

/// Every identifier in use anywhere: class, field, method, parameter, and
/// local names. Fresh names are probed against this set.
fn all_identifiers(units: &[CompilationUnit]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for class in classes(units) {
        out.insert(class.name.clone());
        for f in &class.fields {
            out.insert(f.name.clone());
        }
        for m in &class.methods {
            out.insert(m.name.clone());
            for p in &m.params {
                out.insert(p.name.clone());
            }
            for stmt in m.body.iter().flatten() {
                if let Stmt::LocalDecl { name, .. } = stmt {
                    out.insert(name.clone());
                }
            }
        }
    }
    out
}

fn param_and_local_names(units: &[CompilationUnit]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for class in classes(units) {
        for m in &class.methods {
            for p in &m.params {
                out.insert(p.name.clone());
            }
            for stmt in m.body.iter().flatten() {
                if let Stmt::LocalDecl { name, .. } = stmt {
                    out.insert(name.clone());
                }
            }
        }
    }
    out
}

/// Method name -> classes declaring it. A name declared in more than one
/// class belongs to an override group and is left alone by the mechanics.
fn method_declarers(units: &[CompilationUnit]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for class in classes(units) {
        for m in &class.methods {
            out.entry(m.name.clone()).or_default().push(class.name.clone());
        }
    }
    out
}

fn fresh_name(base: &str, taken: &BTreeSet<String>, rng: &mut impl Rng) -> String {
    let start: u32 = rng.gen_range(10..100);
    for probe in 0..1000 {
        let candidate = format!("{base}R{:02}", (start + probe) % 100 + probe / 100 * 100);
        if !taken.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!("name space exhausted")
}

fn walk_expr_mut(expr: &mut Expr, f: &mut impl FnMut(&mut Expr)) {
    match expr {
        Expr::FieldAccess { receiver, .. } => walk_expr_mut(receiver, f),
        Expr::Call { receiver, args, .. } => {
            if let Some(receiver) = receiver {
                walk_expr_mut(receiver, f);
            }
            for arg in args {
                walk_expr_mut(arg, f);
            }
        }
        Expr::Binary { left, right, .. } => {
            walk_expr_mut(left, f);
            walk_expr_mut(right, f);
        }
        Expr::IntLit(_) | Expr::BoolLit(_) | Expr::NameRef(_) | Expr::This => {}
    }
    f(expr);
}

/// Visit every expression in a class, including field initializers and
/// assignment receivers, bottom-up.
fn rewrite_class_exprs(class: &mut ClassDecl, f: &mut impl FnMut(&mut Expr)) {
    for field in &mut class.fields {
        if let Some(init) = &mut field.initializer {
            walk_expr_mut(init, f);
        }
    }
    for method in &mut class.methods {
        for stmt in method.body.iter_mut().flatten() {
            match stmt {
                Stmt::Return(e) | Stmt::ExprStmt(e) => walk_expr_mut(e, f),
                Stmt::Assign { target, value } => {
                    if let AssignTarget::Field { receiver, .. } = target {
                        walk_expr_mut(receiver, f);
                    }
                    walk_expr_mut(value, f);
                }
                Stmt::LocalDecl { init, .. } => walk_expr_mut(init, f),
            }
        }
    }
}

fn rewrite_all_exprs(units: &mut [CompilationUnit], f: &mut impl FnMut(&mut Expr)) {
    for unit in units {
        for class in &mut unit.classes {
            rewrite_class_exprs(class, f);
        }
    }
}

fn collect_body_exprs<'a>(method: &'a MethodDecl, out: &mut Vec<&'a Expr>) {
    fn walk<'a>(expr: &'a Expr, out: &mut Vec<&'a Expr>) {
        out.push(expr);
        match expr {
            Expr::FieldAccess { receiver, .. } => walk(receiver, out),
            Expr::Call { receiver, args, .. } => {
                if let Some(receiver) = receiver {
                    walk(receiver, out);
                }
                for arg in args {
                    walk(arg, out);
                }
            }
            Expr::Binary { left, right, .. } => {
                walk(left, out);
                walk(right, out);
            }
            _ => {}
        }
    }
    for stmt in method.body.iter().flatten() {
        match stmt {
            Stmt::Return(e) | Stmt::ExprStmt(e) => walk(e, out),
            Stmt::Assign { target, value } => {
                if let AssignTarget::Field { receiver, .. } = target {
                    walk(receiver, out);
                }
                walk(value, out);
            }
            Stmt::LocalDecl { init, .. } => walk(init, out),
        }
    }
}

fn local_names(method: &MethodDecl) -> BTreeSet<String> {
    method
        .body
        .iter()
        .flatten()
        .filter_map(|s| match s {
            Stmt::LocalDecl { name, .. } => Some(name.clone()),
            _ => None,
        })
        .collect()
}

/// Names a body uses as own-class state: bare name references that are not
/// parameters or locals, this-qualified field accesses, and receiverless or
/// this-qualified calls. Assignment targets count too.
fn own_state_references(method: &MethodDecl) -> BTreeSet<String> {
    let mut refs = BTreeSet::new();
    let scope: BTreeSet<String> = method
        .params
        .iter()
        .map(|p| p.name.clone())
        .chain(local_names(method))
        .collect();
    let mut exprs = Vec::new();
    collect_body_exprs(method, &mut exprs);
    for expr in exprs {
        match expr {
            Expr::NameRef(n) if !scope.contains(n) => {
                refs.insert(n.clone());
            }
            Expr::FieldAccess { receiver, name } if matches!(**receiver, Expr::This) => {
                refs.insert(name.clone());
            }
            Expr::Call { receiver: None, name, .. } => {
                refs.insert(name.clone());
            }
            Expr::Call { receiver: Some(r), name, .. } if matches!(**r, Expr::This) => {
                refs.insert(name.clone());
            }
            _ => {}
        }
    }
    for stmt in method.body.iter().flatten() {
        match stmt {
            Stmt::Assign { target: AssignTarget::Name(n), .. } if !scope.contains(n) => {
                refs.insert(n.clone());
            }
            Stmt::Assign { target: AssignTarget::Field { receiver: Expr::This, name }, .. } => {
                refs.insert(name.clone());
            }
            _ => {}
        }
    }
    refs
}

fn uses_this(method: &MethodDecl) -> bool {
    let mut exprs = Vec::new();
    collect_body_exprs(method, &mut exprs);
    if exprs.iter().any(|e| matches!(e, Expr::This)) {
        return true;
    }
    method.body.iter().flatten().any(|s| {
        matches!(s, Stmt::Assign { target: AssignTarget::Field { receiver: Expr::This, .. }, .. })
    })
}

fn direct_subclasses(units: &[CompilationUnit], parent: &str) -> Vec<String> {
    classes(units)
        .filter(|c| c.superclass.as_deref() == Some(parent))
        .map(|c| c.name.clone())
        .collect()
}

/// Static class type of a receiver expression within `method` of `class`, if
/// it can be read off declarations: `this`, parameters, locals, and visible
/// fields. Anything else is unknown.
fn receiver_class(
    table: &SymbolTable,
    class: &str,
    method: &MethodDecl,
    expr: &Expr,
) -> Option<String> {
    let named = |ty: &TypeRef| match ty {
        TypeRef::Named(n) => Some(n.clone()),
        _ => None,
    };
    match expr {
        Expr::This => Some(class.to_string()),
        Expr::NameRef(n) => {
            if let Some(p) = method.params.iter().find(|p| &p.name == n) {
                return named(&p.type_name);
            }
            for stmt in method.body.iter().flatten() {
                if let Stmt::LocalDecl { name, type_name, .. } = stmt {
                    if name == n {
                        return named(type_name);
                    }
                }
            }
            table.lookup_field(class, n).and_then(|(_, sig)| named(&sig.type_name))
        }
        Expr::FieldAccess { receiver, name } => {
            let on = receiver_class(table, class, method, receiver)?;
            table.lookup_field(&on, name).and_then(|(_, sig)| named(&sig.type_name))
        }
        _ => None,
    }
}

fn pick<'a, T>(candidates: &'a [T], rng: &mut impl Rng) -> Option<&'a T> {
    if candidates.is_empty() {
        None
    } else {
        Some(&candidates[rng.gen_range(0..candidates.len())])
    }
}

type Applied = Option<(Vec<CompilationUnit>, Subject, bool)>;

// ---------------------------------------------------------------------------
// rename mechanics

fn rename_type(ty: &mut TypeRef, old: &str, new: &str) {
    if let TypeRef::Named(name) = ty {
        if name == old {
            *name = new.to_string();
        }
    }
}

fn rename_class(units: &[CompilationUnit], rng: &mut impl Rng) -> Applied {
    let names: Vec<String> = classes(units).map(|c| c.name.clone()).collect();
    let old = pick(&names, rng)?.clone();
    let new = fresh_name(&old, &all_identifiers(units), rng);
    let mut after = units.to_vec();
    for unit in &mut after {
        for class in &mut unit.classes {
            if class.name == old {
                class.name = new.clone();
            }
            if class.superclass.as_deref() == Some(old.as_str()) {
                class.superclass = Some(new.clone());
            }
            for marker in &mut class.interfaces {
                if marker == &old {
                    *marker = new.clone();
                }
            }
            for field in &mut class.fields {
                rename_type(&mut field.type_name, &old, &new);
            }
            for method in &mut class.methods {
                if let ReturnType::Type(ty) = &mut method.return_type {
                    rename_type(ty, &old, &new);
                }
                for p in &mut method.params {
                    rename_type(&mut p.type_name, &old, &new);
                }
                for stmt in method.body.iter_mut().flatten() {
                    if let Stmt::LocalDecl { type_name, .. } = stmt {
                        rename_type(type_name, &old, &new);
                    }
                }
            }
        }
    }
    Some((after, Subject::Class { original: old, renamed: new }, false))
}

fn rename_method(units: &[CompilationUnit], rng: &mut impl Rng) -> Applied {
    let declarers = method_declarers(units);
    let candidates: Vec<(String, String)> = classes(units)
        .flat_map(|c| c.methods.iter().map(move |m| (c.name.clone(), m.name.clone())))
        .filter(|(_, m)| declarers[m].len() == 1)
        .collect();
    let (class, old) = pick(&candidates, rng)?.clone();
    let new = fresh_name(&old, &all_identifiers(units), rng);
    let mut after = units.to_vec();
    for m in &mut class_mut(&mut after, &class).methods {
        if m.name == old {
            m.name = new.clone();
        }
    }
    rewrite_all_exprs(&mut after, &mut |expr| {
        if let Expr::Call { name, .. } = expr {
            if name == &old {
                *name = new.clone();
            }
        }
    });
    Some((after, Subject::Method { class, original: old, renamed: new }, false))
}

fn rename_field(units: &[CompilationUnit], rng: &mut impl Rng) -> Applied {
    let mut field_declarers: BTreeMap<String, usize> = BTreeMap::new();
    for class in classes(units) {
        for f in &class.fields {
            *field_declarers.entry(f.name.clone()).or_default() += 1;
        }
    }
    let shadowers = param_and_local_names(units);
    let candidates: Vec<(String, String)> = classes(units)
        .flat_map(|c| c.fields.iter().map(move |f| (c.name.clone(), f.name.clone())))
        .filter(|(_, f)| field_declarers[f] == 1 && !shadowers.contains(f))
        .collect();
    let (class, old) = pick(&candidates, rng)?.clone();
    let new = fresh_name(&old, &all_identifiers(units), rng);
    let mut after = units.to_vec();
    for f in &mut class_mut(&mut after, &class).fields {
        if f.name == old {
            f.name = new.clone();
        }
    }
    rewrite_all_exprs(&mut after, &mut |expr| match expr {
        Expr::NameRef(name) | Expr::FieldAccess { name, .. } if name == &old => {
            *name = new.clone();
        }
        _ => {}
    });
    for unit in &mut after {
        for class in &mut unit.classes {
            for method in &mut class.methods {
                for stmt in method.body.iter_mut().flatten() {
                    if let Stmt::Assign { target, .. } = stmt {
                        match target {
                            AssignTarget::Name(name) | AssignTarget::Field { name, .. }
                                if name == &old =>
                            {
                                *name = new.clone();
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    Some((after, Subject::Field { class, original: old, renamed: new }, false))
}

// ---------------------------------------------------------------------------
// signature mechanics

fn add_method_parameter(units: &[CompilationUnit], rng: &mut impl Rng) -> Applied {
    let declarers = method_declarers(units);
    let candidates: Vec<(String, String)> = classes(units)
        .flat_map(|c| {
            c.methods
                .iter()
                .filter(|m| m.body.is_some())
                .map(move |m| (c.name.clone(), m.name.clone()))
        })
        .filter(|(_, m)| declarers[m].len() == 1)
        .collect();
    let (class, method) = pick(&candidates, rng)?.clone();
    let taken = all_identifiers(units);
    let parameter = (0..)
        .map(|i| format!("p{i}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded probe");
    let mut after = units.to_vec();
    for m in &mut class_mut(&mut after, &class).methods {
        if m.name == method {
            m.params.push(Param { name: parameter.clone(), type_name: TypeRef::Int });
        }
    }
    rewrite_all_exprs(&mut after, &mut |expr| {
        if let Expr::Call { name, args, .. } = expr {
            if name == &method {
                args.push(Expr::IntLit(0));
            }
        }
    });
    Some((after, Subject::Parameter { class, method, parameter }, false))
}

fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

fn encapsulate_field(units: &[CompilationUnit], rng: &mut impl Rng) -> Applied {
    let taken = all_identifiers(units);
    let candidates: Vec<(String, String)> = classes(units)
        .flat_map(|c| {
            c.fields
                .iter()
                .filter(|f| f.visibility != Visibility::Private)
                .map(move |f| (c.name.clone(), f.name.clone()))
        })
        .filter(|(_, f)| {
            let cap = capitalize(f);
            !taken.contains(&format!("get{cap}")) && !taken.contains(&format!("set{cap}"))
        })
        .collect();
    let (class, field) = pick(&candidates, rng)?.clone();
    let getter = format!("get{}", capitalize(&field));
    let setter = format!("set{}", capitalize(&field));
    let field_ty = classes(units)
        .find(|c| c.name == class)
        .and_then(|c| c.field(&field))
        .map(|f| f.type_name.clone())
        .expect("candidate field exists");

    let mut after = units.to_vec();
    // Writes outside the declaring class become setter calls first, so the
    // read rewrite below only sees genuine reads.
    for unit in &mut after {
        for c in &mut unit.classes {
            if c.name == class {
                continue;
            }
            for method in &mut c.methods {
                for stmt in method.body.iter_mut().flatten() {
                    let rewritten = match stmt {
                        Stmt::Assign {
                            target: AssignTarget::Field { receiver, name },
                            value,
                        } if name == &field => Some(Expr::Call {
                            receiver: Some(Box::new(receiver.clone())),
                            name: setter.clone(),
                            args: vec![value.clone()],
                        }),
                        Stmt::Assign { target: AssignTarget::Name(name), value }
                            if name == &field =>
                        {
                            Some(Expr::Call {
                                receiver: None,
                                name: setter.clone(),
                                args: vec![value.clone()],
                            })
                        }
                        _ => None,
                    };
                    if let Some(call) = rewritten {
                        *stmt = Stmt::ExprStmt(call);
                    }
                }
            }
        }
    }
    for unit in &mut after {
        for c in &mut unit.classes {
            if c.name == class {
                continue;
            }
            rewrite_class_exprs(c, &mut |expr| {
                let replacement = match expr {
                    Expr::FieldAccess { receiver, name } if name == &field => Some(Expr::Call {
                        receiver: Some(receiver.clone()),
                        name: getter.clone(),
                        args: Vec::new(),
                    }),
                    Expr::NameRef(name) if name == &field => {
                        Some(Expr::Call { receiver: None, name: getter.clone(), args: Vec::new() })
                    }
                    _ => None,
                };
                if let Some(replacement) = replacement {
                    *expr = replacement;
                }
            });
        }
    }
    let owner = class_mut(&mut after, &class);
    for f in &mut owner.fields {
        if f.name == field {
            f.visibility = Visibility::Private;
        }
    }
    owner.methods.push(MethodDecl {
        name: getter.clone(),
        visibility: Visibility::Public,
        is_abstract: false,
        return_type: ReturnType::Type(field_ty.clone()),
        params: Vec::new(),
        body: Some(vec![Stmt::Return(Expr::FieldAccess {
            receiver: Box::new(Expr::This),
            name: field.clone(),
        })]),
        span: Span::default(),
    });
    owner.methods.push(MethodDecl {
        name: setter.clone(),
        visibility: Visibility::Public,
        is_abstract: false,
        return_type: ReturnType::Void,
        params: vec![Param { name: field.clone(), type_name: field_ty }],
        body: Some(vec![Stmt::Assign {
            target: AssignTarget::Field { receiver: Expr::This, name: field.clone() },
            value: Expr::NameRef(field.clone()),
        }]),
        span: Span::default(),
    });
    Some((after, Subject::Encapsulated { class, field, getter, setter }, false))
}

// ---------------------------------------------------------------------------
// move and hierarchy mechanics

fn move_method(units: &[CompilationUnit], table: &SymbolTable, rng: &mut impl Rng) -> Applied {
    let declarers = method_declarers(units);
    let class_names: Vec<String> = classes(units).map(|c| c.name.clone()).collect();

    // A movable method computes purely from its parameters: no `this`, no
    // own-state references.
    let mut candidates: Vec<(String, String, String)> = Vec::new();
    for source in classes(units) {
        for m in &source.methods {
            if m.body.is_none()
                || m.visibility == Visibility::Private
                || declarers[&m.name].len() != 1
                || uses_this(m)
                || !own_state_references(m).is_empty()
            {
                continue;
            }
            for target in &class_names {
                if target == &source.name || table.inheritance_related(&source.name, target) {
                    continue;
                }
                if call_sites_can_retarget(units, table, &m.name, target) {
                    candidates.push((source.name.clone(), m.name.clone(), target.clone()));
                }
            }
        }
    }
    let (source, method, target) = pick(&candidates, rng)?.clone();

    let mut after = units.to_vec();
    let source_class = class_mut(&mut after, &source);
    let index = source_class.methods.iter().position(|m| m.name == method).unwrap();
    let moved = source_class.methods.remove(index);
    class_mut(&mut after, &target).methods.push(moved);
    retarget_call_sites(&mut after, table, &method, &target);
    Some((after, Subject::MovedMethod { method, source, target }, false))
}

/// A call site can follow a moved method only if an expression of the target
/// type is reachable in its scope: `this` when the enclosing class is (or
/// descends from) the target, otherwise a parameter or visible field.
fn target_receiver(
    table: &SymbolTable,
    class: &str,
    method: &MethodDecl,
    target: &str,
) -> Option<Expr> {
    if class == target || table.ancestors(class).contains(&target) {
        return Some(Expr::This);
    }
    if let Some(p) = method
        .params
        .iter()
        .find(|p| p.type_name == TypeRef::Named(target.to_string()))
    {
        return Some(Expr::NameRef(p.name.clone()));
    }
    for c in table.chain(class) {
        let Some(summary) = table.class(c) else { continue };
        for (name, sig) in &summary.fields {
            if sig.type_name == TypeRef::Named(target.to_string())
                && (c == class || sig.visibility != Visibility::Private)
            {
                return Some(Expr::FieldAccess {
                    receiver: Box::new(Expr::This),
                    name: name.clone(),
                });
            }
        }
    }
    None
}

fn for_each_calling_method(
    units: &[CompilationUnit],
    method_name: &str,
    mut f: impl FnMut(&str, &MethodDecl),
) {
    for class in classes(units) {
        for m in &class.methods {
            let mut exprs = Vec::new();
            collect_body_exprs(m, &mut exprs);
            let calls = exprs
                .iter()
                .any(|e| matches!(e, Expr::Call { name, .. } if name == method_name));
            if calls {
                f(&class.name, m);
            }
        }
    }
}

fn call_sites_can_retarget(
    units: &[CompilationUnit],
    table: &SymbolTable,
    method_name: &str,
    target: &str,
) -> bool {
    let mut ok = true;
    for_each_calling_method(units, method_name, |class, m| {
        if target_receiver(table, class, m, target).is_none() {
            ok = false;
        }
    });
    ok
}

fn retarget_call_sites(
    units: &mut [CompilationUnit],
    table: &SymbolTable,
    method_name: &str,
    target: &str,
) {
    for unit in units {
        for class in &mut unit.classes {
            let class_name = class.name.clone();
            for method in &mut class.methods {
                let receiver = target_receiver(table, &class_name, method, target);
                let Some(receiver) = receiver else { continue };
                for stmt in method.body.iter_mut().flatten() {
                    let rewrite = &mut |expr: &mut Expr| {
                        if let Expr::Call { receiver: r, name, .. } = expr {
                            if name == method_name {
                                *r = Some(Box::new(receiver.clone()));
                            }
                        }
                    };
                    match stmt {
                        Stmt::Return(e) | Stmt::ExprStmt(e) => walk_expr_mut(e, rewrite),
                        Stmt::Assign { target, value } => {
                            if let AssignTarget::Field { receiver, .. } = target {
                                walk_expr_mut(receiver, rewrite);
                            }
                            walk_expr_mut(value, rewrite);
                        }
                        Stmt::LocalDecl { init, .. } => walk_expr_mut(init, rewrite),
                    }
                }
            }
        }
    }
}

fn pull_up_field(units: &[CompilationUnit], rng: &mut impl Rng) -> Applied {
    let class_index: BTreeMap<String, &ClassDecl> =
        classes(units).map(|c| (c.name.clone(), c)).collect();
    let candidates: Vec<(String, String, String)> = classes(units)
        .filter_map(|c| c.superclass.as_ref().map(|s| (c, s)))
        .flat_map(|(c, sup)| {
            c.fields
                .iter()
                .filter(|f| {
                    let parent = class_index[sup];
                    parent.field(&f.name).is_none() && parent.method(&f.name).is_none()
                })
                .map(move |f| (c.name.clone(), sup.clone(), f.name.clone()))
        })
        .collect();
    let (source, target, member) = pick(&candidates, rng)?.clone();

    let mut after = units.to_vec();
    let sub = class_mut(&mut after, &source);
    let index = sub.fields.iter().position(|f| f.name == member).unwrap();
    let mut field = sub.fields.remove(index);
    if field.visibility == Visibility::Private {
        field.visibility = Visibility::Protected;
    }
    class_mut(&mut after, &target).fields.push(field);
    Some((after, Subject::PulledUp { member, source, target }, false))
}

fn pull_up_method(units: &[CompilationUnit], table: &SymbolTable, rng: &mut impl Rng) -> Applied {
    let declarers = method_declarers(units);
    let mut candidates: Vec<(String, String, String)> = Vec::new();
    for class in classes(units) {
        let Some(parent) = class.superclass.clone() else { continue };
        for m in &class.methods {
            if m.body.is_none() || declarers[&m.name].len() != 1 {
                continue;
            }
            // Everything the body references as own state must already be
            // visible from the parent; otherwise the moved body would dangle.
            let refs = own_state_references(m);
            let visible_from_parent = refs.iter().all(|name| {
                let field = table.lookup_field(&parent, name);
                let method = table.lookup_method(&parent, name);
                match (field, method) {
                    (Some((declarer, sig)), _) => {
                        sig.visibility != Visibility::Private || declarer == parent
                    }
                    (_, Some((declarer, sig))) => {
                        sig.visibility != Visibility::Private || declarer == parent
                    }
                    _ => false,
                }
            });
            if visible_from_parent {
                candidates.push((class.name.clone(), parent.clone(), m.name.clone()));
            }
        }
    }
    let (source, target, member) = pick(&candidates, rng)?.clone();

    let mut after = units.to_vec();
    let sub = class_mut(&mut after, &source);
    let index = sub.methods.iter().position(|m| m.name == member).unwrap();
    let mut method = sub.methods.remove(index);
    if method.visibility == Visibility::Private {
        method.visibility = Visibility::Protected;
    }
    class_mut(&mut after, &target).methods.push(method);
    Some((after, Subject::PulledUp { member, source, target }, false))
}

/// References to `member` through receivers whose static type is `parent` or
/// one of its ancestors would dangle after a push-down; so would references
/// from the parent's own bodies.
fn pushed_member_stays_bound(
    units: &[CompilationUnit],
    table: &SymbolTable,
    parent: &str,
    member: &str,
) -> bool {
    let below_parent = |class: &str| class != parent && table.ancestors(class).contains(&parent);
    for class in classes(units) {
        for method in &class.methods {
            if class.name == parent && own_state_references(method).contains(member) {
                return false;
            }
            let mut exprs = Vec::new();
            collect_body_exprs(method, &mut exprs);
            let mut receivers: Vec<&Expr> = Vec::new();
            for expr in &exprs {
                match expr {
                    Expr::FieldAccess { receiver, name } if name == member => {
                        receivers.push(receiver)
                    }
                    Expr::Call { receiver: Some(r), name, .. } if name == member => {
                        receivers.push(r)
                    }
                    Expr::Call { receiver: None, name, .. } if name == member => {
                        if !below_parent(&class.name) {
                            return false;
                        }
                    }
                    Expr::NameRef(n) if n == member => {
                        // Bare reference: binds through the enclosing class.
                        if !below_parent(&class.name) {
                            return false;
                        }
                    }
                    _ => {}
                }
            }
            for stmt in method.body.iter().flatten() {
                match stmt {
                    Stmt::Assign { target: AssignTarget::Field { receiver, name }, .. }
                        if name == member =>
                    {
                        receivers.push(receiver)
                    }
                    Stmt::Assign { target: AssignTarget::Name(n), .. } if n == member => {
                        if !below_parent(&class.name) {
                            return false;
                        }
                    }
                    _ => {}
                }
            }
            for receiver in receivers {
                match receiver_class(table, &class.name, method, receiver) {
                    Some(c) if below_parent(&c) => {}
                    _ => return false,
                }
            }
        }
        if class.name == parent {
            for field in &class.fields {
                if let Some(init) = &field.initializer {
                    let mut exprs = vec![init];
                    // Initializers are expressions only; reuse the walker via
                    // a throwaway method shell is overkill, check directly.
                    while let Some(expr) = exprs.pop() {
                        match expr {
                            Expr::NameRef(n) if n == member => return false,
                            Expr::FieldAccess { receiver, name } => {
                                if name == member {
                                    return false;
                                }
                                exprs.push(receiver);
                            }
                            Expr::Call { receiver, name, args } => {
                                if name == member {
                                    return false;
                                }
                                if let Some(r) = receiver {
                                    exprs.push(r);
                                }
                                exprs.extend(args.iter());
                            }
                            Expr::Binary { left, right, .. } => {
                                exprs.push(left);
                                exprs.push(right);
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    true
}

fn push_down_field(units: &[CompilationUnit], table: &SymbolTable, rng: &mut impl Rng) -> Applied {
    let candidates: Vec<(String, String)> = classes(units)
        .filter(|c| !direct_subclasses(units, &c.name).is_empty())
        .flat_map(|c| c.fields.iter().map(move |f| (c.name.clone(), f.name.clone())))
        .filter(|(parent, field)| pushed_member_stays_bound(units, table, parent, field))
        .collect();
    let (source, member) = pick(&candidates, rng)?.clone();
    let targets = direct_subclasses(units, &source);

    let mut after = units.to_vec();
    let parent = class_mut(&mut after, &source);
    let index = parent.fields.iter().position(|f| f.name == member).unwrap();
    let field = parent.fields.remove(index);
    for t in &targets {
        class_mut(&mut after, t).fields.push(field.clone());
    }
    Some((
        after,
        Subject::PushedDown { member, source, targets, abstract_stub: false },
        false,
    ))
}

fn push_down_method(units: &[CompilationUnit], table: &SymbolTable, rng: &mut impl Rng) -> Applied {
    let declarers = method_declarers(units);
    let mut candidates: Vec<(String, String)> = Vec::new();
    for class in classes(units) {
        if direct_subclasses(units, &class.name).is_empty() {
            continue;
        }
        for m in &class.methods {
            if m.body.is_none() || declarers[&m.name].len() != 1 {
                continue;
            }
            // The copies live in the subclasses; anything the body uses from
            // the parent chain must stay visible from there. Private members
            // of the parent would not be.
            let body_survives_copy = own_state_references(m).iter().all(|name| {
                if name == &m.name {
                    return true;
                }
                let field = table.lookup_field(&class.name, name);
                let method = table.lookup_method(&class.name, name);
                match (field, method) {
                    (Some((_, sig)), _) => sig.visibility != Visibility::Private,
                    (_, Some((_, sig))) => sig.visibility != Visibility::Private,
                    _ => false,
                }
            });
            if body_survives_copy {
                candidates.push((class.name.clone(), m.name.clone()));
            }
        }
    }

    // Two variants per candidate: full removal needs every existing
    // reference to rebind below the parent, while the abstract-stub variant
    // keeps the parent's declaration alive and only needs a non-private
    // method in an abstract parent.
    let options: Vec<(String, String, bool, bool)> = candidates
        .into_iter()
        .filter_map(|(parent, member)| {
            let decl = classes(units).find(|c| c.name == parent).expect("candidate parent");
            let method = decl.method(&member).expect("candidate method");
            let stub_possible = decl.is_abstract && method.visibility != Visibility::Private;
            let removal_possible = pushed_member_stays_bound(units, table, &parent, &member);
            if stub_possible || removal_possible {
                Some((parent, member, stub_possible, removal_possible))
            } else {
                None
            }
        })
        .collect();
    let (source, member, stub_possible, removal_possible) = pick(&options, rng)?.clone();
    let stub = if stub_possible && removal_possible {
        rng.gen_bool(0.5)
    } else {
        stub_possible
    };
    let targets = direct_subclasses(units, &source);

    let mut after = units.to_vec();
    let parent = class_mut(&mut after, &source);
    let index = parent.methods.iter().position(|m| m.name == member).unwrap();
    let method = parent.methods.remove(index);
    if stub {
        parent.methods.insert(
            index,
            MethodDecl {
                name: method.name.clone(),
                visibility: method.visibility,
                is_abstract: true,
                return_type: method.return_type.clone(),
                params: method.params.clone(),
                body: None,
                span: Span::default(),
            },
        );
    }
    for t in &targets {
        class_mut(&mut after, t).methods.push(method.clone());
    }
    Some((
        after,
        Subject::PushedDown { member, source, targets, abstract_stub: stub },
        stub,
    ))
}
