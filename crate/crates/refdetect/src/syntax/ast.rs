//! AST for the mini object-oriented source language.
//!
//! The language is a Java-like subset: a flat package namespace, classes with
//! single inheritance, `int`/`boolean` primitives, no generics, no
//! constructors, and no overloading (one method per name per class).

use std::fmt;

/// Half-open source region, line/column based (1-based, end exclusive).
///
/// Spans are carried for diagnostics only and do not take part in AST
/// equality: two trees that differ only in spans compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

/// One source file: a package declaration and its classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompilationUnit {
    pub package_name: String,
    pub classes: Vec<ClassDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub superclass: Option<String>,
    /// Interface names are uninterpreted markers: the language has no
    /// interface declaration form, so resolution leaves them unchecked.
    pub interfaces: Vec<String>,
    pub is_abstract: bool,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Visibility {
    Public,
    Protected,
    /// Default (package) visibility; prints as no keyword.
    Package,
    Private,
}

impl Visibility {
    pub fn keyword(self) -> Option<&'static str> {
        match self {
            Visibility::Public => Some("public"),
            Visibility::Protected => Some("protected"),
            Visibility::Package => None,
            Visibility::Private => Some("private"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeRef {
    Int,
    Boolean,
    Named(String),
}

impl TypeRef {
    pub fn is_primitive(&self) -> bool {
        matches!(self, TypeRef::Int | TypeRef::Boolean)
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Int => f.write_str("int"),
            TypeRef::Boolean => f.write_str("boolean"),
            TypeRef::Named(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReturnType {
    Void,
    Type(TypeRef),
}

impl fmt::Display for ReturnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnType::Void => f.write_str("void"),
            ReturnType::Type(ty) => ty.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub type_name: TypeRef,
    pub visibility: Visibility,
    pub initializer: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub type_name: TypeRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub visibility: Visibility,
    pub is_abstract: bool,
    pub return_type: ReturnType,
    pub params: Vec<Param>,
    /// Absent iff the method is abstract.
    pub body: Option<Vec<Stmt>>,
    pub span: Span,
}

/// Assignment targets: a bare name or a field access. The parser only ever
/// produces these two shapes on the left of `=`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignTarget {
    Name(String),
    Field { receiver: Expr, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Return(Expr),
    Assign { target: AssignTarget, value: Expr },
    ExprStmt(Expr),
    LocalDecl { name: String, type_name: TypeRef, init: Expr },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter. All operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    IntLit(i64),
    BoolLit(bool),
    /// A bare identifier: local, parameter, or field of the enclosing class.
    NameRef(String),
    FieldAccess { receiver: Box<Expr>, name: String },
    /// `receiver` absent means an implicit-this call.
    Call { receiver: Option<Box<Expr>>, name: String, args: Vec<Expr> },
    This,
    Binary { op: BinOp, left: Box<Expr>, right: Box<Expr> },
}

impl ClassDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }
}

impl CompilationUnit {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }
}

/// Looks a class up across a unit set.
pub fn find_class<'a>(units: &'a [CompilationUnit], name: &str) -> Option<&'a ClassDecl> {
    units.iter().find_map(|u| u.class(name))
}
