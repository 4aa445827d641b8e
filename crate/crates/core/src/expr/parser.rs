use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::fmt;

use super::{BinaryOp, Expr, UnaryOp};

/// Nesting limit; keeps the recursive descent off the end of the stack.
const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnexpectedChar(char),
    InvalidNumber(String),
    UnknownIdentifier(String),
    VariableOutOfRange {
        index: usize,
        arity: usize,
    },
    /// A `)` with no matching `(`.
    UnbalancedParen,
    /// Missing `)` after a group or call.
    ExpectedCloseParen,
    ExpectedOpenParen {
        function: String,
    },
    NonIntegerExponent(String),
    UnexpectedToken(String),
    UnexpectedEnd,
    TooDeep,
}

/// First parse error, located by byte offset into the input.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseDiagnostic {
    /// 0-based byte offset; equals the input length for end-of-input errors.
    pub offset: usize,
    pub kind: ParseErrorKind,
    pub expected: Option<&'static str>,
}

impl ParseDiagnostic {
    /// 1-based column of the error.
    pub fn column(&self) -> usize {
        self.offset + 1
    }

    pub fn message(&self) -> String {
        match &self.kind {
            ParseErrorKind::EmptyInput => "empty expression".to_string(),
            ParseErrorKind::UnexpectedChar(c) => alloc::format!("unexpected character '{c}'"),
            ParseErrorKind::InvalidNumber(s) => alloc::format!("invalid number '{s}'"),
            ParseErrorKind::UnknownIdentifier(s) => alloc::format!("unknown identifier '{s}'"),
            ParseErrorKind::VariableOutOfRange { index, arity } => {
                alloc::format!("variable x{index} outside x1..x{arity}")
            }
            ParseErrorKind::UnbalancedParen => "unbalanced ')'".to_string(),
            ParseErrorKind::ExpectedCloseParen => "expected ')'".to_string(),
            ParseErrorKind::ExpectedOpenParen { function } => {
                alloc::format!("expected '(' after '{function}'")
            }
            ParseErrorKind::NonIntegerExponent(s) => {
                alloc::format!("exponent must be a nonnegative integer literal, found '{s}'")
            }
            ParseErrorKind::UnexpectedToken(s) => alloc::format!("unexpected '{s}'"),
            ParseErrorKind::UnexpectedEnd => "unexpected end of input".to_string(),
            ParseErrorKind::TooDeep => alloc::format!("expression nested deeper than {MAX_DEPTH}"),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.offset, self.message())?;
        if let Some(hint) = self.expected {
            write!(f, " (expected {hint})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Num(&'a str),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok<'_> {
    fn text(&self) -> String {
        match self {
            Tok::Num(s) | Tok::Ident(s) => (*s).to_string(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(usize, Tok<'a>), ParseDiagnostic> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((start, Tok::End));
        }
        let c = bytes[start];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((start, t));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut e = end + 1;
                if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                    e += 1;
                }
                if e < bytes.len() && bytes[e].is_ascii_digit() {
                    while e < bytes.len() && bytes[e].is_ascii_digit() {
                        e += 1;
                    }
                    end = e;
                }
            }
            self.pos = end;
            return Ok((start, Tok::Num(&self.src[start..end])));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(&self.src[start..end])));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseDiagnostic {
            offset: start,
            kind: ParseErrorKind::UnexpectedChar(ch),
            expected: None,
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok<'a>,
    at: usize,
    arity: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseDiagnostic> {
        let (at, tok) = self.lexer.next()?;
        self.at = at;
        self.tok = tok;
        Ok(())
    }

    fn fail<T>(&self, kind: ParseErrorKind, expected: Option<&'static str>) -> Result<T, ParseDiagnostic> {
        Err(ParseDiagnostic {
            offset: self.at,
            kind,
            expected,
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseDiagnostic> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseDiagnostic> {
        let base = self.atom()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let exponent = match &self.tok {
            Tok::Num(s) if s.bytes().all(|b| b.is_ascii_digit()) => match s.parse::<u32>() {
                Ok(n) => n,
                Err(_) => return self.fail(ParseErrorKind::NonIntegerExponent((*s).to_string()), None),
            },
            Tok::End => return self.fail(ParseErrorKind::UnexpectedEnd, Some("integer exponent")),
            other => {
                let text = other.text();
                return self.fail(ParseErrorKind::NonIntegerExponent(text), Some("integer exponent"));
            }
        };
        self.bump()?;
        Ok(Expr::Pow(Box::new(base), exponent))
    }

    fn atom(&mut self) -> Result<Expr, ParseDiagnostic> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.fail(ParseErrorKind::TooDeep, None);
        }
        let out = self.atom_inner();
        self.depth -= 1;
        out
    }

    fn atom_inner(&mut self) -> Result<Expr, ParseDiagnostic> {
        match self.tok.clone() {
            Tok::Num(s) => {
                let v: f64 = match s.parse() {
                    Ok(v) => v,
                    Err(_) => return self.fail(ParseErrorKind::InvalidNumber(s.to_string()), None),
                };
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Minus => {
                self.bump()?;
                let inner = self.atom()?;
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name),
            Tok::RParen => self.fail(ParseErrorKind::UnbalancedParen, Some("an operand")),
            Tok::End => self.fail(ParseErrorKind::UnexpectedEnd, Some("an operand")),
            other => self.fail(ParseErrorKind::UnexpectedToken(other.text()), Some("an operand")),
        }
    }

    fn identifier(&mut self, name: &'a str) -> Result<Expr, ParseDiagnostic> {
        if let Some(op) = UnaryOp::from_name(name) {
            self.bump()?;
            if self.tok != Tok::LParen {
                return self.fail(
                    ParseErrorKind::ExpectedOpenParen {
                        function: name.to_string(),
                    },
                    Some("'('"),
                );
            }
            self.bump()?;
            let arg = self.expr()?;
            self.close_paren()?;
            return Ok(Expr::Unary(op, Box::new(arg)));
        }
        let digits = name
            .strip_prefix('x')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
        match digits {
            Some(d) => {
                let index: usize = d.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.arity {
                    return self.fail(
                        ParseErrorKind::VariableOutOfRange {
                            index,
                            arity: self.arity,
                        },
                        None,
                    );
                }
                self.bump()?;
                Ok(Expr::Var(index))
            }
            None => self.fail(ParseErrorKind::UnknownIdentifier(name.to_string()), None),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseDiagnostic> {
        if self.tok == Tok::RParen {
            self.bump()
        } else {
            self.fail(ParseErrorKind::ExpectedCloseParen, Some("')'"))
        }
    }
}

/// Parses `text` as a function of `x1..x{arity}`.
pub fn parse(text: &str, arity: usize) -> Result<Expr, ParseDiagnostic> {
    if text.trim().is_empty() {
        return Err(ParseDiagnostic {
            offset: 0,
            kind: ParseErrorKind::EmptyInput,
            expected: Some("an expression"),
        });
    }
    let mut parser = Parser {
        lexer: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        at: 0,
        arity,
        depth: 0,
    };
    parser.bump()?;
    let e = parser.expr()?;
    match parser.tok {
        Tok::End => Ok(e),
        Tok::RParen => parser.fail(ParseErrorKind::UnbalancedParen, None),
        ref other => {
            let text = other.text();
            parser.fail(
                ParseErrorKind::UnexpectedToken(text),
                Some("an operator or end of input"),
            )
        }
    }
}

/// Contents of a function file: one expression, optionally preceded by a
/// line `arity: N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSource {
    pub arity: Option<usize>,
    pub expr: Expr,
}

/// Parses a function file. Without an `arity:` header the arity defaults to
/// `default_arity`. Diagnostic offsets are relative to the whole text.
pub fn parse_function_source(text: &str, default_arity: usize) -> Result<FunctionSource, ParseDiagnostic> {
    let trimmed = text.trim_start_matches('\u{feff}');
    let bom = text.len() - trimmed.len();
    let first_line_end = trimmed.find('\n').unwrap_or(trimmed.len());
    let first = trimmed[..first_line_end].trim();
    if let Some(rest) = first.strip_prefix("arity:") {
        let n = rest.trim().parse::<usize>().map_err(|_| ParseDiagnostic {
            offset: bom,
            kind: ParseErrorKind::InvalidNumber(rest.trim().to_string()),
            expected: Some("arity: <positive integer>"),
        })?;
        let body_start = (first_line_end + 1).min(trimmed.len());
        let body = &trimmed[body_start..];
        let expr = parse(body, n).map_err(|mut d| {
            d.offset += bom + body_start;
            d
        })?;
        return Ok(FunctionSource { arity: Some(n), expr });
    }
    let expr = parse(trimmed, default_arity).map_err(|mut d| {
        d.offset += bom;
        d
    })?;
    Ok(FunctionSource { arity: None, expr })
}
