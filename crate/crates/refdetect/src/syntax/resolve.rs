//! Name resolution and static checking.
//!
//! `resolve` validates a whole program (one or more compilation units sharing
//! a single flat class namespace) and produces a `SymbolTable` of class
//! summaries. All errors are collected in one pass rather than failing fast;
//! the table is returned only for fully valid programs.
//!
//! The package is flat, so of the four visibility levels only `private`
//! restricts access during checking. The other levels still matter to the
//! transformations (pull-up widens `private` to `protected`), just not here.

use std::collections::BTreeMap;
use std::fmt;

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolutionErrorKind {
    UnknownType,
    UnknownMember,
    DuplicateMember,
    CyclicInheritance,
    AbstractInstantiation,
    TypeMismatch,
}

impl fmt::Display for ResolutionErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ResolutionErrorKind::UnknownType => "unknown type",
            ResolutionErrorKind::UnknownMember => "unknown member",
            ResolutionErrorKind::DuplicateMember => "duplicate member",
            ResolutionErrorKind::CyclicInheritance => "cyclic inheritance",
            ResolutionErrorKind::AbstractInstantiation => "abstract violation",
            ResolutionErrorKind::TypeMismatch => "type mismatch",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionError {
    pub kind: ResolutionErrorKind,
    pub class: Option<String>,
    pub member: Option<String>,
    pub message: String,
}

impl fmt::Display for ResolutionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        match (&self.class, &self.member) {
            (Some(c), Some(m)) => write!(f, " in {c}.{m}")?,
            (Some(c), None) => write!(f, " in {c}")?,
            _ => {}
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionFailure {
    pub errors: Vec<ResolutionError>,
}

impl fmt::Display for ResolutionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} resolution error(s); first: {}", self.errors.len(), self.errors[0])
    }
}

impl std::error::Error for ResolutionFailure {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSig {
    pub type_name: TypeRef,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSig {
    pub visibility: Visibility,
    pub is_abstract: bool,
    pub return_type: ReturnType,
    pub params: Vec<TypeRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSummary {
    pub package: String,
    pub superclass: Option<String>,
    pub is_abstract: bool,
    pub fields: BTreeMap<String, FieldSig>,
    pub methods: BTreeMap<String, MethodSig>,
}

/// Class summaries keyed by class name. Map-backed throughout so that two
/// resolutions of the same program compare equal structurally.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolTable {
    pub classes: BTreeMap<String, ClassSummary>,
}

impl SymbolTable {
    pub fn class(&self, name: &str) -> Option<&ClassSummary> {
        self.classes.get(name)
    }

    /// Proper ancestors, nearest first. Cycle-guarded so it terminates even
    /// on tables built from invalid inputs.
    pub fn ancestors(&self, name: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let mut cur = self.classes.get(name).and_then(|c| c.superclass.as_deref());
        while let Some(next) = cur {
            if next == name || out.contains(&next) {
                break;
            }
            out.push(next);
            cur = self.classes.get(next).and_then(|c| c.superclass.as_deref());
        }
        out
    }

    /// The class itself followed by its proper ancestors.
    pub fn chain<'a>(&'a self, name: &'a str) -> Vec<&'a str> {
        let mut out = vec![name];
        out.extend(self.ancestors(name));
        out
    }

    pub fn lookup_field<'a>(&'a self, class: &'a str, name: &str) -> Option<(&'a str, &'a FieldSig)> {
        self.chain(class).into_iter().find_map(|c| {
            self.classes.get(c).and_then(|s| s.fields.get(name)).map(|sig| (c, sig))
        })
    }

    pub fn lookup_method<'a>(&'a self, class: &'a str, name: &str) -> Option<(&'a str, &'a MethodSig)> {
        self.chain(class).into_iter().find_map(|c| {
            self.classes.get(c).and_then(|s| s.methods.get(name)).map(|sig| (c, sig))
        })
    }

    /// True when one class is the other or an ancestor of the other.
    pub fn inheritance_related(&self, a: &str, b: &str) -> bool {
        a == b || self.ancestors(a).contains(&b) || self.ancestors(b).contains(&a)
    }
}

pub fn resolve(units: &[CompilationUnit]) -> Result<SymbolTable, ResolutionFailure> {
    let mut errors: Vec<ResolutionError> = Vec::new();
    let mut order: Vec<(&str, &ClassDecl)> = Vec::new();
    for unit in units {
        for class in &unit.classes {
            order.push((unit.package_name.as_str(), class));
        }
    }

    // Index classes; first declaration wins, later homonyms are errors.
    let mut index: BTreeMap<&str, (&str, &ClassDecl)> = BTreeMap::new();
    for &(pkg, class) in &order {
        if index.contains_key(class.name.as_str()) {
            errors.push(ResolutionError {
                kind: ResolutionErrorKind::DuplicateMember,
                class: Some(class.name.clone()),
                member: None,
                message: format!("class {} is declared more than once", class.name),
            });
        } else {
            index.insert(class.name.as_str(), (pkg, class));
        }
    }

    let table = build_table(&index);

    for (_, class) in index.values() {
        check_class_shape(class, &index, &mut errors);
    }
    check_hierarchy(&index, &mut errors);
    check_shadowing(&index, &table, &mut errors);
    check_abstract_satisfaction(&index, &table, &mut errors);
    for (_, class) in index.values() {
        check_bodies(class, &table, &mut errors);
    }

    if errors.is_empty() {
        Ok(table)
    } else {
        Err(ResolutionFailure { errors })
    }
}

fn build_table(index: &BTreeMap<&str, (&str, &ClassDecl)>) -> SymbolTable {
    let mut classes = BTreeMap::new();
    for (pkg, class) in index.values() {
        let mut fields = BTreeMap::new();
        for f in &class.fields {
            fields.entry(f.name.clone()).or_insert(FieldSig {
                type_name: f.type_name.clone(),
                visibility: f.visibility,
            });
        }
        let mut methods = BTreeMap::new();
        for m in &class.methods {
            methods.entry(m.name.clone()).or_insert(MethodSig {
                visibility: m.visibility,
                is_abstract: m.is_abstract,
                return_type: m.return_type.clone(),
                params: m.params.iter().map(|p| p.type_name.clone()).collect(),
            });
        }
        classes.insert(
            class.name.clone(),
            ClassSummary {
                package: pkg.to_string(),
                superclass: class.superclass.clone(),
                is_abstract: class.is_abstract,
                fields,
                methods,
            },
        );
    }
    SymbolTable { classes }
}

fn class_err(
    kind: ResolutionErrorKind,
    class: &str,
    member: Option<&str>,
    message: String,
) -> ResolutionError {
    ResolutionError {
        kind,
        class: Some(class.to_string()),
        member: member.map(str::to_string),
        message,
    }
}

fn check_named_type(
    ty: &TypeRef,
    index: &BTreeMap<&str, (&str, &ClassDecl)>,
    class: &str,
    member: &str,
    errors: &mut Vec<ResolutionError>,
) {
    if let TypeRef::Named(name) = ty {
        if !index.contains_key(name.as_str()) {
            errors.push(class_err(
                ResolutionErrorKind::UnknownType,
                class,
                Some(member),
                format!("unknown type {name}"),
            ));
        }
    }
}

fn check_class_shape(
    class: &ClassDecl,
    index: &BTreeMap<&str, (&str, &ClassDecl)>,
    errors: &mut Vec<ResolutionError>,
) {
    let mut names: BTreeMap<&str, ()> = BTreeMap::new();
    for f in &class.fields {
        if names.insert(f.name.as_str(), ()).is_some() {
            errors.push(class_err(
                ResolutionErrorKind::DuplicateMember,
                &class.name,
                Some(&f.name),
                format!("member {} is declared more than once", f.name),
            ));
        }
        check_named_type(&f.type_name, index, &class.name, &f.name, errors);
    }
    for m in &class.methods {
        if names.insert(m.name.as_str(), ()).is_some() {
            errors.push(class_err(
                ResolutionErrorKind::DuplicateMember,
                &class.name,
                Some(&m.name),
                format!("member {} is declared more than once", m.name),
            ));
        }
        if let ReturnType::Type(ty) = &m.return_type {
            check_named_type(ty, index, &class.name, &m.name, errors);
        }
        let mut param_names: BTreeMap<&str, ()> = BTreeMap::new();
        for p in &m.params {
            if param_names.insert(p.name.as_str(), ()).is_some() {
                errors.push(class_err(
                    ResolutionErrorKind::DuplicateMember,
                    &class.name,
                    Some(&m.name),
                    format!("parameter {} is declared more than once", p.name),
                ));
            }
            check_named_type(&p.type_name, index, &class.name, &m.name, errors);
        }
        if m.is_abstract != m.body.is_none() {
            let what = if m.is_abstract { "an abstract method cannot have a body" } else { "a concrete method needs a body" };
            errors.push(class_err(
                ResolutionErrorKind::AbstractInstantiation,
                &class.name,
                Some(&m.name),
                what.to_string(),
            ));
        }
        if m.is_abstract && !class.is_abstract {
            errors.push(class_err(
                ResolutionErrorKind::AbstractInstantiation,
                &class.name,
                Some(&m.name),
                format!("concrete class {} declares abstract method {}", class.name, m.name),
            ));
        }
    }
}

fn check_hierarchy(index: &BTreeMap<&str, (&str, &ClassDecl)>, errors: &mut Vec<ResolutionError>) {
    for (_, class) in index.values() {
        if let Some(sup) = &class.superclass {
            if !index.contains_key(sup.as_str()) {
                errors.push(class_err(
                    ResolutionErrorKind::UnknownType,
                    &class.name,
                    None,
                    format!("unknown superclass {sup}"),
                ));
            }
        }
    }
    // A cycle is reported once per participating class: the walk from each
    // class stops when it revisits any node, and errors only when that node
    // is the starting class.
    for (_, class) in index.values() {
        let mut seen: Vec<&str> = vec![class.name.as_str()];
        let mut cur = class.superclass.as_deref();
        while let Some(name) = cur {
            if name == class.name {
                errors.push(class_err(
                    ResolutionErrorKind::CyclicInheritance,
                    &class.name,
                    None,
                    format!("inheritance cycle through {}", class.name),
                ));
                break;
            }
            if seen.contains(&name) {
                break;
            }
            seen.push(name);
            cur = index.get(name).and_then(|(_, c)| c.superclass.as_deref());
        }
    }
}

fn visibility_rank(v: Visibility) -> u8 {
    match v {
        Visibility::Public => 3,
        Visibility::Protected => 2,
        Visibility::Package => 1,
        Visibility::Private => 0,
    }
}

fn check_shadowing(
    index: &BTreeMap<&str, (&str, &ClassDecl)>,
    table: &SymbolTable,
    errors: &mut Vec<ResolutionError>,
) {
    for (_, class) in index.values() {
        let ancestors = table.ancestors(&class.name);
        for f in &class.fields {
            for anc in &ancestors {
                let Some(summary) = table.class(anc) else { continue };
                if summary.fields.contains_key(&f.name) || summary.methods.contains_key(&f.name) {
                    errors.push(class_err(
                        ResolutionErrorKind::DuplicateMember,
                        &class.name,
                        Some(&f.name),
                        format!("{} shadows a member inherited from {anc}", f.name),
                    ));
                }
            }
        }
        for m in &class.methods {
            for anc in &ancestors {
                let Some(summary) = table.class(anc) else { continue };
                if summary.fields.contains_key(&m.name) {
                    errors.push(class_err(
                        ResolutionErrorKind::DuplicateMember,
                        &class.name,
                        Some(&m.name),
                        format!("{} shadows a field inherited from {anc}", m.name),
                    ));
                    continue;
                }
                let Some(inherited) = summary.methods.get(&m.name) else { continue };
                if inherited.visibility == Visibility::Private {
                    errors.push(class_err(
                        ResolutionErrorKind::DuplicateMember,
                        &class.name,
                        Some(&m.name),
                        format!("{} shadows a private method of {anc}", m.name),
                    ));
                    continue;
                }
                // Proper override: exact signature, no visibility narrowing,
                // never abstract over concrete.
                let params: Vec<TypeRef> = m.params.iter().map(|p| p.type_name.clone()).collect();
                if params != inherited.params || m.return_type != inherited.return_type {
                    errors.push(class_err(
                        ResolutionErrorKind::TypeMismatch,
                        &class.name,
                        Some(&m.name),
                        format!("override of {} changes the signature declared in {anc}", m.name),
                    ));
                }
                if visibility_rank(m.visibility) < visibility_rank(inherited.visibility) {
                    errors.push(class_err(
                        ResolutionErrorKind::TypeMismatch,
                        &class.name,
                        Some(&m.name),
                        format!("override of {} narrows visibility", m.name),
                    ));
                }
                if m.is_abstract && !inherited.is_abstract {
                    errors.push(class_err(
                        ResolutionErrorKind::AbstractInstantiation,
                        &class.name,
                        Some(&m.name),
                        format!("abstract {} overrides a concrete method of {anc}", m.name),
                    ));
                }
            }
        }
    }
}

fn check_abstract_satisfaction(
    index: &BTreeMap<&str, (&str, &ClassDecl)>,
    table: &SymbolTable,
    errors: &mut Vec<ResolutionError>,
) {
    for (_, class) in index.values() {
        if class.is_abstract {
            continue;
        }
        // Lowest declaration per method name wins along the chain.
        let mut lowest: BTreeMap<&str, (&str, &MethodSig)> = BTreeMap::new();
        for c in table.chain(&class.name) {
            let Some(summary) = table.class(c) else { continue };
            for (name, sig) in &summary.methods {
                lowest.entry(name.as_str()).or_insert((c, sig));
            }
        }
        for (name, (declarer, sig)) in lowest {
            // Declared directly in this concrete class: already reported by
            // the shape check.
            if sig.is_abstract && declarer != class.name {
                errors.push(class_err(
                    ResolutionErrorKind::AbstractInstantiation,
                    &class.name,
                    Some(name),
                    format!(
                        "concrete class {} does not implement abstract method {name} declared in {declarer}",
                        class.name
                    ),
                ));
            }
        }
    }
}

/// Static type of an expression. `Unknown` marks subexpressions whose own
/// error has already been reported; it silences cascading complaints.
#[derive(Debug, Clone, PartialEq, Eq)]
enum ExprType {
    Int,
    Boolean,
    Class(String),
    Void,
    Unknown,
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprType::Int => f.write_str("int"),
            ExprType::Boolean => f.write_str("boolean"),
            ExprType::Class(name) => f.write_str(name),
            ExprType::Void => f.write_str("void"),
            ExprType::Unknown => f.write_str("?"),
        }
    }
}

fn expr_type_of(ty: &TypeRef) -> ExprType {
    match ty {
        TypeRef::Int => ExprType::Int,
        TypeRef::Boolean => ExprType::Boolean,
        TypeRef::Named(name) => ExprType::Class(name.clone()),
    }
}

struct BodyChecker<'a> {
    table: &'a SymbolTable,
    class: &'a str,
    member: &'a str,
    scope: Vec<(String, ExprType)>,
    errors: &'a mut Vec<ResolutionError>,
}

impl<'a> BodyChecker<'a> {
    fn err(&mut self, kind: ResolutionErrorKind, message: String) {
        self.errors.push(class_err(kind, self.class, Some(self.member), message));
    }

    /// Widening assignment: a value of class `C` fits a slot typed with any
    /// ancestor of `C`.
    fn assignable(&self, value: &ExprType, slot: &TypeRef) -> bool {
        match (value, slot) {
            (ExprType::Unknown, _) => true,
            (ExprType::Int, TypeRef::Int) => true,
            (ExprType::Boolean, TypeRef::Boolean) => true,
            (ExprType::Class(c), TypeRef::Named(n)) => {
                c == n || self.table.ancestors(c).contains(&n.as_str())
            }
            _ => false,
        }
    }

    fn check_assignable(&mut self, value: &ExprType, slot: &TypeRef, what: &str) {
        if !self.assignable(value, slot) {
            self.err(
                ResolutionErrorKind::TypeMismatch,
                format!("{what}: expected {slot}, found {value}"),
            );
        }
    }

    fn lookup_scope(&self, name: &str) -> Option<ExprType> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone())
    }

    /// Field lookup honoring `private`: a private field resolves only from
    /// the body of its declaring class.
    fn visible_field(&mut self, on: &str, name: &str) -> Option<ExprType> {
        match self.table.lookup_field(on, name) {
            Some((declarer, sig)) => {
                if sig.visibility == Visibility::Private && declarer != self.class {
                    self.err(
                        ResolutionErrorKind::UnknownMember,
                        format!("field {name} is private in {declarer}"),
                    );
                    Some(ExprType::Unknown)
                } else {
                    Some(expr_type_of(&sig.type_name))
                }
            }
            None => None,
        }
    }

    fn type_of(&mut self, expr: &Expr) -> ExprType {
        match expr {
            Expr::IntLit(_) => ExprType::Int,
            Expr::BoolLit(_) => ExprType::Boolean,
            Expr::This => ExprType::Class(self.class.to_string()),
            Expr::NameRef(name) => {
                if let Some(ty) = self.lookup_scope(name) {
                    return ty;
                }
                match self.visible_field(&self.class.to_string(), name) {
                    Some(ty) => ty,
                    None => {
                        self.err(
                            ResolutionErrorKind::UnknownMember,
                            format!("unknown name {name}"),
                        );
                        ExprType::Unknown
                    }
                }
            }
            Expr::FieldAccess { receiver, name } => {
                let rt = self.type_of(receiver);
                let on = match rt {
                    ExprType::Class(c) => c,
                    ExprType::Unknown => return ExprType::Unknown,
                    other => {
                        self.err(
                            ResolutionErrorKind::TypeMismatch,
                            format!("field access on a value of type {other}"),
                        );
                        return ExprType::Unknown;
                    }
                };
                match self.visible_field(&on, name) {
                    Some(ty) => ty,
                    None => {
                        self.err(
                            ResolutionErrorKind::UnknownMember,
                            format!("no field {name} on {on}"),
                        );
                        ExprType::Unknown
                    }
                }
            }
            Expr::Call { receiver, name, args } => {
                let on = match receiver {
                    None => self.class.to_string(),
                    Some(expr) => match self.type_of(expr) {
                        ExprType::Class(c) => c,
                        ExprType::Unknown => return ExprType::Unknown,
                        other => {
                            self.err(
                                ResolutionErrorKind::TypeMismatch,
                                format!("method call on a value of type {other}"),
                            );
                            return ExprType::Unknown;
                        }
                    },
                };
                let Some((declarer, sig)) = self.table.lookup_method(&on, name) else {
                    self.err(
                        ResolutionErrorKind::UnknownMember,
                        format!("no method {name} on {on}"),
                    );
                    for arg in args {
                        self.type_of(arg);
                    }
                    return ExprType::Unknown;
                };
                let declarer = declarer.to_string();
                let sig = sig.clone();
                if sig.visibility == Visibility::Private && declarer != self.class {
                    self.err(
                        ResolutionErrorKind::UnknownMember,
                        format!("method {name} is private in {declarer}"),
                    );
                    return ExprType::Unknown;
                }
                if args.len() != sig.params.len() {
                    self.err(
                        ResolutionErrorKind::UnknownMember,
                        format!(
                            "method {name} on {on} takes {} argument(s), {} given",
                            sig.params.len(),
                            args.len()
                        ),
                    );
                    for arg in args {
                        self.type_of(arg);
                    }
                    return ExprType::Unknown;
                }
                for (arg, param) in args.iter().zip(&sig.params) {
                    let at = self.type_of(arg);
                    self.check_assignable(&at, param, &format!("argument to {name}"));
                }
                match &sig.return_type {
                    ReturnType::Void => ExprType::Void,
                    ReturnType::Type(ty) => expr_type_of(ty),
                }
            }
            Expr::Binary { op, left, right } => {
                let lt = self.type_of(left);
                let rt = self.type_of(right);
                let (operand, result): (ExprType, ExprType) = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        (ExprType::Int, ExprType::Int)
                    }
                    BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
                        (ExprType::Int, ExprType::Boolean)
                    }
                    BinOp::And | BinOp::Or => (ExprType::Boolean, ExprType::Boolean),
                    BinOp::Eq | BinOp::Ne => {
                        // Equality is defined on matching primitives only.
                        let ok = (lt == ExprType::Int && rt == ExprType::Int)
                            || (lt == ExprType::Boolean && rt == ExprType::Boolean)
                            || lt == ExprType::Unknown
                            || rt == ExprType::Unknown;
                        if !ok {
                            self.err(
                                ResolutionErrorKind::TypeMismatch,
                                format!("'{}' needs two ints or two booleans, found {lt} and {rt}", op.symbol()),
                            );
                        }
                        return ExprType::Boolean;
                    }
                };
                for side in [&lt, &rt] {
                    if *side != operand && *side != ExprType::Unknown {
                        self.err(
                            ResolutionErrorKind::TypeMismatch,
                            format!("'{}' needs {operand} operands, found {side}", op.symbol()),
                        );
                    }
                }
                result
            }
        }
    }

    fn type_of_target(&mut self, target: &AssignTarget) -> ExprType {
        match target {
            AssignTarget::Name(name) => {
                if let Some(ty) = self.lookup_scope(name) {
                    return ty;
                }
                match self.visible_field(&self.class.to_string(), name) {
                    Some(ty) => ty,
                    None => {
                        self.err(
                            ResolutionErrorKind::UnknownMember,
                            format!("unknown name {name}"),
                        );
                        ExprType::Unknown
                    }
                }
            }
            AssignTarget::Field { receiver, name } => {
                let receiver = receiver.clone();
                let expr = Expr::FieldAccess { receiver: Box::new(receiver), name: name.clone() };
                self.type_of(&expr)
            }
        }
    }
}

fn check_bodies(class: &ClassDecl, table: &SymbolTable, errors: &mut Vec<ResolutionError>) {
    for f in &class.fields {
        if let Some(init) = &f.initializer {
            let mut checker = BodyChecker {
                table,
                class: &class.name,
                member: &f.name,
                scope: Vec::new(),
                errors,
            };
            let ty = checker.type_of(init);
            checker.check_assignable(&ty, &f.type_name, "field initializer");
        }
    }
    for m in &class.methods {
        let Some(body) = &m.body else { continue };
        let mut checker = BodyChecker {
            table,
            class: &class.name,
            member: &m.name,
            scope: m
                .params
                .iter()
                .map(|p| (p.name.clone(), expr_type_of(&p.type_name)))
                .collect(),
            errors,
        };
        let last = body.len().checked_sub(1);
        for (i, stmt) in body.iter().enumerate() {
            match stmt {
                Stmt::Return(expr) => {
                    let ty = checker.type_of(expr);
                    match &m.return_type {
                        ReturnType::Void => checker.err(
                            ResolutionErrorKind::TypeMismatch,
                            "a void method cannot return a value".to_string(),
                        ),
                        ReturnType::Type(slot) => {
                            checker.check_assignable(&ty, slot, "return value")
                        }
                    }
                    if Some(i) != last {
                        checker.err(
                            ResolutionErrorKind::TypeMismatch,
                            "unreachable code after return".to_string(),
                        );
                    }
                }
                Stmt::Assign { target, value } => {
                    let tt = checker.type_of_target(target);
                    let vt = checker.type_of(value);
                    let slot = match tt {
                        ExprType::Int => Some(TypeRef::Int),
                        ExprType::Boolean => Some(TypeRef::Boolean),
                        ExprType::Class(c) => Some(TypeRef::Named(c)),
                        _ => None,
                    };
                    if let Some(slot) = slot {
                        checker.check_assignable(&vt, &slot, "assignment");
                    }
                }
                Stmt::ExprStmt(expr) => {
                    if !matches!(expr, Expr::Call { .. }) {
                        checker.err(
                            ResolutionErrorKind::TypeMismatch,
                            "only a method call can stand alone as a statement".to_string(),
                        );
                    }
                    checker.type_of(expr);
                }
                Stmt::LocalDecl { name, type_name, init } => {
                    if let TypeRef::Named(ty) = type_name {
                        if table.class(ty).is_none() {
                            checker.err(
                                ResolutionErrorKind::UnknownType,
                                format!("unknown type {ty}"),
                            );
                        }
                    }
                    if checker.scope.iter().any(|(n, _)| n == name) {
                        checker.err(
                            ResolutionErrorKind::DuplicateMember,
                            format!("{name} is already declared in this method"),
                        );
                    }
                    let it = checker.type_of(init);
                    checker.check_assignable(&it, type_name, "local initializer");
                    checker.scope.push((name.clone(), expr_type_of(type_name)));
                }
            }
        }
        // A misplaced return is reported as unreachable code above; complain
        // about a missing one only when the body has no return at all.
        let has_return = body.iter().any(|s| matches!(s, Stmt::Return(_)));
        if m.return_type != ReturnType::Void && !has_return {
            checker.err(
                ResolutionErrorKind::TypeMismatch,
                "method must end with a return statement".to_string(),
            );
        }
    }
}
