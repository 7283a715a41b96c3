//! Hand-rolled lexer. Tracks line/column positions for spans and errors.

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    IntLit(i64),
    Keyword(Keyword),
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Package,
    Class,
    Extends,
    Implements,
    Abstract,
    Public,
    Protected,
    Private,
    Int,
    Boolean,
    Void,
    Return,
    True,
    False,
    This,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Keyword> {
        Some(match s {
            "package" => Keyword::Package,
            "class" => Keyword::Class,
            "extends" => Keyword::Extends,
            "implements" => Keyword::Implements,
            "abstract" => Keyword::Abstract,
            "public" => Keyword::Public,
            "protected" => Keyword::Protected,
            "private" => Keyword::Private,
            "int" => Keyword::Int,
            "boolean" => Keyword::Boolean,
            "void" => Keyword::Void,
            "return" => Keyword::Return,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "this" => Keyword::This,
            _ => return None,
        })
    }

    pub fn text(self) -> &'static str {
        match self {
            Keyword::Package => "package",
            Keyword::Class => "class",
            Keyword::Extends => "extends",
            Keyword::Implements => "implements",
            Keyword::Abstract => "abstract",
            Keyword::Public => "public",
            Keyword::Protected => "protected",
            Keyword::Private => "private",
            Keyword::Int => "int",
            Keyword::Boolean => "boolean",
            Keyword::Void => "void",
            Keyword::Return => "return",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::This => "this",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

pub fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! push {
        ($kind:expr, $l:expr, $c:expr) => {
            tokens.push(Token { kind: $kind, line: $l, col: $c })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '/' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'/') {
                    // line comment
                    for c in chars.by_ref() {
                        if c == '\n' {
                            line += 1;
                            col = 1;
                            break;
                        }
                    }
                } else {
                    push!(TokenKind::Slash, tline, tcol);
                }
            }
            '{' | '}' | '(' | ')' | ';' | ',' | '.' | '+' | '-' | '*' => {
                chars.next();
                col += 1;
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ';' => TokenKind::Semi,
                    ',' => TokenKind::Comma,
                    '.' => TokenKind::Dot,
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    _ => TokenKind::Star,
                };
                push!(kind, tline, tcol);
            }
            '=' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::EqEq, tline, tcol);
                } else {
                    push!(TokenKind::Assign, tline, tcol);
                }
            }
            '<' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::Le, tline, tcol);
                } else {
                    push!(TokenKind::Lt, tline, tcol);
                }
            }
            '>' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::Ge, tline, tcol);
                } else {
                    push!(TokenKind::Gt, tline, tcol);
                }
            }
            '!' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::NotEq, tline, tcol);
                } else {
                    return Err(ParseError::new(tline, tcol, "'!='"));
                }
            }
            '&' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'&') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::AndAnd, tline, tcol);
                } else {
                    return Err(ParseError::new(tline, tcol, "'&&'"));
                }
            }
            '|' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'|') {
                    chars.next();
                    col += 1;
                    push!(TokenKind::OrOr, tline, tcol);
                } else {
                    return Err(ParseError::new(tline, tcol, "'||'"));
                }
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        text.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let value: i64 = text
                    .parse()
                    .map_err(|_| ParseError::new(tline, tcol, "integer literal in range"))?;
                push!(TokenKind::IntLit(value), tline, tcol);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        text.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                match Keyword::from_ident(&text) {
                    Some(kw) => push!(TokenKind::Keyword(kw), tline, tcol),
                    None => push!(TokenKind::Ident(text), tline, tcol),
                }
            }
            other => {
                return Err(ParseError::new(
                    tline,
                    tcol,
                    format!("valid token, found {other:?}"),
                ));
            }
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, line, col });
    Ok(tokens)
}
