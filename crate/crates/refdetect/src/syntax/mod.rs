//! The mini object-oriented language: AST, parser, canonical printer, and
//! whole-program resolution.
//!
//! The language is a small Java-like subset: one flat package per program,
//! single inheritance, `int` and `boolean` primitives, fields and methods
//! only. Source files use the `.mj` extension and are always stored in the
//! canonical rendering produced by [`print`].

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod resolve;

pub use ast::{
    AssignTarget, BinOp, ClassDecl, CompilationUnit, Expr, FieldDecl, MethodDecl, Param,
    ReturnType, Span, Stmt, TypeRef, Visibility, find_class,
};
pub use parser::parse;
pub use printer::print;
pub use resolve::{
    resolve, ClassSummary, FieldSig, MethodSig, ResolutionError, ResolutionErrorKind,
    ResolutionFailure, SymbolTable,
};

/// Syntax error with the 1-based position of the offending token and a
/// description of what was expected there.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: expected {expected}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub expected: String,
}

impl ParseError {
    pub fn new(line: u32, column: u32, expected: impl Into<String>) -> ParseError {
        ParseError { line, column, expected: expected.into() }
    }
}
