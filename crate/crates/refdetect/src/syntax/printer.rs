//! Canonical source rendering.
//!
//! Every compilation unit has exactly one rendering: LF line endings, 4-space
//! indentation, fields before methods, one trailing newline. Corpus files on
//! disk and diff inputs both go through this function, so byte equality of
//! renderings is equivalent to AST equality.

use super::ast::*;

pub fn print(unit: &CompilationUnit) -> String {
    let mut out = String::new();
    out.push_str("package ");
    out.push_str(&unit.package_name);
    out.push_str(";\n");
    for class in &unit.classes {
        out.push('\n');
        write_class(&mut out, class);
    }
    out
}

fn write_class(out: &mut String, class: &ClassDecl) {
    if class.is_abstract {
        out.push_str("abstract ");
    }
    out.push_str("class ");
    out.push_str(&class.name);
    if let Some(superclass) = &class.superclass {
        out.push_str(" extends ");
        out.push_str(superclass);
    }
    if !class.interfaces.is_empty() {
        out.push_str(" implements ");
        out.push_str(&class.interfaces.join(", "));
    }
    out.push_str(" {\n");
    // A member is separated from its predecessor by a blank line unless both
    // are fields; field runs stay visually packed.
    let mut prev_was_member = false;
    let mut prev_was_field = false;
    for field in &class.fields {
        if prev_was_member && !prev_was_field {
            out.push('\n');
        }
        write_field(out, field);
        prev_was_member = true;
        prev_was_field = true;
    }
    for method in &class.methods {
        if prev_was_member {
            out.push('\n');
        }
        write_method(out, method);
        prev_was_member = true;
    }
    out.push_str("}\n");
}

fn write_field(out: &mut String, field: &FieldDecl) {
    out.push_str("    ");
    if let Some(kw) = field.visibility.keyword() {
        out.push_str(kw);
        out.push(' ');
    }
    out.push_str(&field.type_name.to_string());
    out.push(' ');
    out.push_str(&field.name);
    if let Some(init) = &field.initializer {
        out.push_str(" = ");
        write_expr(out, init);
    }
    out.push_str(";\n");
}

fn write_method(out: &mut String, method: &MethodDecl) {
    out.push_str("    ");
    if let Some(kw) = method.visibility.keyword() {
        out.push_str(kw);
        out.push(' ');
    }
    if method.is_abstract {
        out.push_str("abstract ");
    }
    out.push_str(&method.return_type.to_string());
    out.push(' ');
    out.push_str(&method.name);
    out.push('(');
    for (i, param) in method.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&param.type_name.to_string());
        out.push(' ');
        out.push_str(&param.name);
    }
    out.push(')');
    match &method.body {
        None => out.push_str(";\n"),
        Some(stmts) => {
            out.push_str(" {\n");
            for stmt in stmts {
                write_stmt(out, stmt);
            }
            out.push_str("    }\n");
        }
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt) {
    out.push_str("        ");
    match stmt {
        Stmt::Return(expr) => {
            out.push_str("return ");
            write_expr(out, expr);
        }
        Stmt::Assign { target, value } => {
            match target {
                AssignTarget::Name(name) => out.push_str(name),
                AssignTarget::Field { receiver, name } => {
                    write_receiver(out, receiver);
                    out.push('.');
                    out.push_str(name);
                }
            }
            out.push_str(" = ");
            write_expr(out, value);
        }
        Stmt::ExprStmt(expr) => write_expr(out, expr),
        Stmt::LocalDecl { name, type_name, init } => {
            out.push_str(&type_name.to_string());
            out.push(' ');
            out.push_str(name);
            out.push_str(" = ");
            write_expr(out, init);
        }
    }
    out.push_str(";\n");
}

fn write_expr(out: &mut String, expr: &Expr) {
    write_expr_ctx(out, expr, 0, false);
}

/// `parent_prec` is the precedence of the enclosing binary operator (0 when
/// none) and `is_right` whether this operand is its right child. Operators are
/// left-associative, so a right child at equal precedence needs parentheses.
fn write_expr_ctx(out: &mut String, expr: &Expr, parent_prec: u8, is_right: bool) {
    match expr {
        Expr::IntLit(value) => out.push_str(&value.to_string()),
        Expr::BoolLit(value) => out.push_str(if *value { "true" } else { "false" }),
        Expr::NameRef(name) => out.push_str(name),
        Expr::This => out.push_str("this"),
        Expr::FieldAccess { receiver, name } => {
            write_receiver(out, receiver);
            out.push('.');
            out.push_str(name);
        }
        Expr::Call { receiver, name, args } => {
            if let Some(receiver) = receiver {
                write_receiver(out, receiver);
                out.push('.');
            }
            out.push_str(name);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, arg);
            }
            out.push(')');
        }
        Expr::Binary { op, left, right } => {
            let prec = op.precedence();
            let needs_parens = prec < parent_prec || (prec == parent_prec && is_right);
            if needs_parens {
                out.push('(');
            }
            write_expr_ctx(out, left, prec, false);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr_ctx(out, right, prec, true);
            if needs_parens {
                out.push(')');
            }
        }
    }
}

/// Receivers of `.` bind tighter than any binary operator, so a binary
/// receiver always needs parentheses.
fn write_receiver(out: &mut String, receiver: &Expr) {
    if matches!(receiver, Expr::Binary { .. }) {
        out.push('(');
        write_expr(out, receiver);
        out.push(')');
    } else {
        write_expr(out, receiver);
    }
}
