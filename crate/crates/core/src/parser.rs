//! Surface syntax for annotated programs and queries.
//!
//! The grammar is documented in `docs/syntax.md`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::ast::{
    Annotation, AnnotatedClause, Atom, ClauseError, Head, Literal, PredicateKey, Program, RuleId,
    Term, Var,
};

/// Which family of programs is being read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Disjunctive heads with probability annotations.
    #[default]
    Lpad,
    /// Single-head clauses whose annotation is a necessity lower bound.
    Possibilistic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unterminated quoted atom")]
    UnterminatedQuote,
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("expected a callable term, found {0}")]
    NotCallable(String),
    #[error("bad number {0:?}")]
    BadNumber(String),
    #[error("annotation must not be zero or negative")]
    BadAnnotation,
    #[error(transparent)]
    Clause(#[from] ClauseError),
    #[error("possibilistic clauses have exactly one head")]
    AnnotatedMultiHeadInPossMode,
    #[error("unknown directive {0:?}")]
    UnknownDirective(String),
}

/// A syntax or well-formedness error at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Quoted(String),
    Variable(String),
    Int(String),
    Float(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bar,
    Comma,
    Semicolon,
    End,
    Neck,
    Colon,
    Slash,
    Minus,
    Eq,
    NotEq,
    NotProvable,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) | Tok::Variable(s) | Tok::Int(s) | Tok::Float(s) => write!(f, "{s:?}"),
            Tok::Quoted(s) => write!(f, "'{s}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Bar => f.write_str("'|'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semicolon => f.write_str("';'"),
            Tok::End => f.write_str("'.'"),
            Tok::Neck => f.write_str("':-'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Eq => f.write_str("'='"),
            Tok::NotEq => f.write_str("'\\='"),
            Tok::NotProvable => f.write_str("'\\+'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn err(&self, line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line, column, kind }
    }

    fn skip_layout(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('/') if self.peek2() == Some('*') => {
                    self.bump();
                    self.bump();
                    let mut prev = ' ';
                    while let Some(c) = self.bump() {
                        if prev == '*' && c == '/' {
                            break;
                        }
                        prev = c;
                    }
                }
                _ => return,
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_layout();
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else {
                out.push(Spanned {
                    tok: Tok::Eof,
                    line,
                    column,
                });
                return Ok(out);
            };
            let tok = match c {
                'a'..='z' => Tok::Name(self.word()),
                'A'..='Z' | '_' => Tok::Variable(self.word()),
                '0'..='9' => self.number(line, column)?,
                '\'' => Tok::Quoted(self.quoted(line, column)?),
                '(' => self.single(Tok::LParen),
                ')' => self.single(Tok::RParen),
                '[' => self.single(Tok::LBracket),
                ']' => self.single(Tok::RBracket),
                '|' => self.single(Tok::Bar),
                ',' => self.single(Tok::Comma),
                ';' => self.single(Tok::Semicolon),
                '/' => self.single(Tok::Slash),
                '-' => self.single(Tok::Minus),
                '=' => self.single(Tok::Eq),
                '.' => self.single(Tok::End),
                ':' => {
                    self.bump();
                    if self.peek() == Some('-') {
                        self.bump();
                        Tok::Neck
                    } else {
                        Tok::Colon
                    }
                }
                '\\' => {
                    self.bump();
                    match self.peek() {
                        Some('=') => self.single(Tok::NotEq),
                        Some('+') => self.single(Tok::NotProvable),
                        _ => return Err(self.err(line, column, ParseErrorKind::UnexpectedChar('\\'))),
                    }
                }
                other => return Err(self.err(line, column, ParseErrorKind::UnexpectedChar(other))),
            };
            out.push(Spanned { tok, line, column });
        }
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump();
        tok
    }

    fn word(&mut self) -> String {
        let start = self.offset();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        let end = self.offset();
        self.src[start..end].to_string()
    }

    fn digits(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
    }

    fn number(&mut self, line: usize, column: usize) -> Result<Tok, ParseError> {
        let start = self.offset();
        self.digits();
        let mut float = false;
        if self.peek() == Some('.') && matches!(self.peek2(), Some(c) if c.is_ascii_digit()) {
            float = true;
            self.bump();
            self.digits();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let mut it = self.chars.clone();
            it.next();
            let next = it.next().map(|(_, c)| c);
            let after = it.next().map(|(_, c)| c);
            let exponent = match next {
                Some(d) if d.is_ascii_digit() => true,
                Some('+' | '-') => matches!(after, Some(d) if d.is_ascii_digit()),
                _ => false,
            };
            if exponent {
                float = true;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                self.digits();
            }
        }
        let end = self.offset();
        let text = self.src[start..end].to_string();
        if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
            return Err(self.err(line, column, ParseErrorKind::BadNumber(text)));
        }
        Ok(if float { Tok::Float(text) } else { Tok::Int(text) })
    }

    fn quoted(&mut self, line: usize, column: usize) -> Result<String, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err(line, column, ParseErrorKind::UnterminatedQuote)),
                Some('\'') => {
                    if self.peek() == Some('\'') {
                        self.bump();
                        s.push('\'');
                    } else {
                        return Ok(s);
                    }
                }
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some(c) => s.push(c),
                    None => return Err(self.err(line, column, ParseErrorKind::UnterminatedQuote)),
                },
                Some(c) => s.push(c),
            }
        }
    }
}

/// Variable scope of one clause or query.
#[derive(Default)]
struct Scope {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Scope {
    fn var(&mut self, name: &str) -> Term {
        if name == "_" {
            let v = self.names.len() as u32;
            self.names.push("_".to_string());
            return Term::var(v);
        }
        if let Some(&v) = self.index.get(name) {
            return Term::var(v);
        }
        let v = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        Term::var(v)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    mode: ParseMode,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            column: s.column,
            kind,
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        self.error_here(ParseErrorKind::Expected {
            expected: what.to_string(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut clauses = Vec::new();
        let mut tabled = BTreeSet::new();
        while *self.peek() != Tok::Eof {
            if *self.peek() == Tok::Neck {
                self.directive(&mut tabled)?;
            } else {
                let id = RuleId(clauses.len() + 1);
                clauses.push(self.clause(id)?);
            }
        }
        Ok(Program::new(clauses, tabled).expect("parser assigns dense rule ids"))
    }

    fn directive(&mut self, tabled: &mut BTreeSet<PredicateKey>) -> Result<(), ParseError> {
        self.next();
        match self.peek().clone() {
            Tok::Name(n) if n == "table" => {
                self.next();
            }
            other => {
                let name = match other {
                    Tok::Name(n) => n,
                    t => t.to_string(),
                };
                return Err(self.error_here(ParseErrorKind::UnknownDirective(name)));
            }
        }
        loop {
            let name = match self.next().tok {
                Tok::Name(n) | Tok::Quoted(n) => n,
                _ => {
                    self.pos -= 1;
                    return Err(self.expected("predicate name"));
                }
            };
            self.expect(Tok::Slash, "'/'")?;
            let arity = match self.peek().clone() {
                Tok::Int(s) => {
                    let a = s
                        .parse::<usize>()
                        .map_err(|_| self.error_here(ParseErrorKind::BadNumber(s.clone())))?;
                    self.next();
                    a
                }
                _ => return Err(self.expected("arity")),
            };
            tabled.insert(PredicateKey {
                name: Arc::from(name.as_str()),
                arity,
            });
            if *self.peek() == Tok::Comma {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::End, "'.'")
    }

    fn clause(&mut self, id: RuleId) -> Result<AnnotatedClause, ParseError> {
        let start = (self.toks[self.pos].line, self.toks[self.pos].column);
        let mut scope = Scope::default();
        let mut heads = Vec::new();
        loop {
            let atom = self.callable(&mut scope)?;
            let annotation = if *self.peek() == Tok::Colon {
                self.next();
                self.annotation()?
            } else {
                Annotation::one()
            };
            heads.push(Head { atom, annotation });
            if *self.peek() == Tok::Semicolon {
                self.next();
            } else {
                break;
            }
        }
        let mut body = Vec::new();
        if *self.peek() == Tok::Neck {
            self.next();
            loop {
                body.push(self.literal(&mut scope)?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::End, "'.'")?;
        let at = |kind| ParseError {
            line: start.0,
            column: start.1,
            kind,
        };
        if self.mode == ParseMode::Possibilistic && heads.len() > 1 {
            return Err(at(ParseErrorKind::AnnotatedMultiHeadInPossMode));
        }
        AnnotatedClause::new(id, heads, body, scope.names).map_err(|e| at(e.into()))
    }

    fn annotation(&mut self) -> Result<Annotation, ParseError> {
        let (text, num) = self.unsigned_number()?;
        if *self.peek() == Tok::Slash {
            self.next();
            let (_, den) = self.unsigned_number()?;
            if den.is_zero() {
                return Err(self.error_here(ParseErrorKind::BadAnnotation));
            }
            return Ok(Annotation::from_exact(num / den));
        }
        Ok(Annotation::from_decimal(&text, num))
    }

    fn unsigned_number(&mut self) -> Result<(String, BigRational), ParseError> {
        match self.peek().clone() {
            Tok::Int(s) | Tok::Float(s) => {
                let r = decimal_to_rational(&s)
                    .ok_or_else(|| self.error_here(ParseErrorKind::BadNumber(s.clone())))?;
                self.next();
                Ok((s, r))
            }
            _ => Err(self.expected("annotation")),
        }
    }

    fn literal(&mut self, scope: &mut Scope) -> Result<Literal, ParseError> {
        if *self.peek() == Tok::NotProvable {
            self.next();
            return Ok(Literal::Neg(self.callable(scope)?));
        }
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        let left = self.term(scope)?;
        match self.peek() {
            Tok::Eq => {
                self.next();
                Ok(Literal::Unify(left, self.term(scope)?))
            }
            Tok::NotEq => {
                self.next();
                Ok(Literal::NotUnify(left, self.term(scope)?))
            }
            _ => to_atom(left, line, column).map(Literal::Pos),
        }
    }

    fn callable(&mut self, scope: &mut Scope) -> Result<Atom, ParseError> {
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        let t = self.term(scope)?;
        to_atom(t, line, column)
    }

    fn term(&mut self, scope: &mut Scope) -> Result<Term, ParseError> {
        let s = self.next();
        match s.tok {
            Tok::Variable(name) => Ok(scope.var(&name)),
            Tok::Int(text) => parse_int(&text).ok_or(ParseError {
                line: s.line,
                column: s.column,
                kind: ParseErrorKind::BadNumber(text),
            }),
            Tok::Float(text) => parse_float(&text).ok_or(ParseError {
                line: s.line,
                column: s.column,
                kind: ParseErrorKind::BadNumber(text),
            }),
            Tok::Minus => match self.next().tok {
                Tok::Eof => Err(self.expected("number")),
                Tok::Int(text) => parse_int(&format!("-{text}")).ok_or(ParseError {
                    line: s.line,
                    column: s.column,
                    kind: ParseErrorKind::BadNumber(text),
                }),
                Tok::Float(text) => parse_float(&format!("-{text}")).ok_or(ParseError {
                    line: s.line,
                    column: s.column,
                    kind: ParseErrorKind::BadNumber(text),
                }),
                _ => {
                    self.pos -= 1;
                    Err(self.expected("number"))
                }
            },
            Tok::Name(name) | Tok::Quoted(name) => {
                if *self.peek() == Tok::LParen {
                    self.next();
                    let mut args = vec![self.term(scope)?];
                    while *self.peek() == Tok::Comma {
                        self.next();
                        args.push(self.term(scope)?);
                    }
                    self.expect(Tok::RParen, "',' or ')'")?;
                    Ok(Term::compound(&name, args))
                } else {
                    Ok(Term::constant(&name))
                }
            }
            Tok::LBracket => {
                if *self.peek() == Tok::RBracket {
                    self.next();
                    return Ok(Term::nil());
                }
                let mut items = vec![self.term(scope)?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    items.push(self.term(scope)?);
                }
                let tail = if *self.peek() == Tok::Bar {
                    self.next();
                    self.term(scope)?
                } else {
                    Term::nil()
                };
                self.expect(Tok::RBracket, "',', '|' or ']'")?;
                Ok(Term::list_with_tail(items, tail))
            }
            other => Err(ParseError {
                line: s.line,
                column: s.column,
                kind: ParseErrorKind::Expected {
                    expected: "term".to_string(),
                    found: other.to_string(),
                },
            }),
        }
    }
}

fn to_atom(t: Term, line: usize, column: usize) -> Result<Atom, ParseError> {
    let shown = t.to_string();
    Atom::from_term(t).ok_or(ParseError {
        line,
        column,
        kind: ParseErrorKind::NotCallable(shown),
    })
}

fn parse_int(text: &str) -> Option<Term> {
    text.parse::<i64>().ok().map(Term::Int)
}

fn parse_float(text: &str) -> Option<Term> {
    text.parse::<f64>().ok().filter(|x| x.is_finite()).map(Term::float)
}

/// Exact value of an unsigned decimal literal such as `0.3`, `12` or `2.5e-3`.
fn decimal_to_rational(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(digits * ten.pow(scale as u32))
    } else {
        BigRational::new(digits, ten.pow(scale.unsigned_abs()))
    };
    Some(value)
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    Lexer::new(text).tokens()
}

/// Parses a whole program.
pub fn parse_program(text: &str, mode: ParseMode) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        mode,
    };
    p.program()
}

/// Parses a query atom, optionally followed by `.`.
pub fn parse_query(text: &str) -> Result<Atom, ParseError> {
    parse_query_with_names(text).map(|(a, _)| a)
}

/// Like [`parse_query`], also returning the variable names in index order.
pub fn parse_query_with_names(text: &str) -> Result<(Atom, Vec<String>), ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        mode: ParseMode::Lpad,
    };
    let mut scope = Scope::default();
    let atom = p.callable(&mut scope)?;
    if *p.peek() == Tok::End {
        p.next();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.expected("end of query"));
    }
    Ok((atom, scope.names))
}

/// Variables of a query in index order.
pub fn query_vars(atom: &Atom) -> Vec<Var> {
    let mut v = Vec::new();
    atom.collect_vars(&mut v);
    v.sort();
    v
}
