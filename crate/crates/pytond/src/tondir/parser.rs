//! Parser for the textual TondIR syntax.
//!
//! Token syntax follows the form used throughout the IR listings:
//! `R1(a, s) :- R(a, b, c), (s=sum(b)).` with `//` line comments and
//! `{ }` block comments. Comparison accepts both `!=` and `<>`.

use super::ast::*;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Arrow, // :-
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Float(v) => format!("float `{v}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Arrow => "`:-`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Le => "`<=`".to_string(),
            Tok::Eq => "`=`".to_string(),
            Tok::Ne => "`!=`".to_string(),
            Tok::Ge => "`>=`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some(b'{') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    loop {
                        match self.bump() {
                            Some(b'}') => break,
                            Some(_) => {}
                            None => {
                                return Err(ParseError {
                                    line,
                                    col,
                                    message: "unterminated block comment".into(),
                                })
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'-' => {
                    self.bump();
                    Tok::Minus
                }
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'/' => {
                    self.bump();
                    Tok::Slash
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b':' => {
                    self.bump();
                    if self.peek() == Some(b'-') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        return Err(self.err("expected `:-`"));
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                    }
                    Tok::Eq
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ne
                    } else {
                        return Err(self.err("unknown operator token `!`"));
                    }
                }
                b'<' => {
                    self.bump();
                    match self.peek() {
                        Some(b'=') => {
                            self.bump();
                            Tok::Le
                        }
                        Some(b'>') => {
                            self.bump();
                            Tok::Ne
                        }
                        _ => Tok::Lt,
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                b'"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some(b'"') => break,
                            Some(b'\\') => match self.bump() {
                                Some(b'"') => s.push('"'),
                                Some(b'\\') => s.push('\\'),
                                Some(b'n') => s.push('\n'),
                                Some(b't') => s.push('\t'),
                                other => {
                                    return Err(self.err(format!(
                                        "invalid escape `\\{}`",
                                        other.map(|b| b as char).unwrap_or(' ')
                                    )))
                                }
                            },
                            Some(c) => s.push(c as char),
                            None => {
                                return Err(ParseError {
                                    line,
                                    col,
                                    message: "unterminated string literal".into(),
                                })
                            }
                        }
                    }
                    Tok::Str(s)
                }
                c if c.is_ascii_digit() => self.lex_number()?,
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' || c == b'$' {
                            s.push(c as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                other => return Err(self.err(format!("unexpected character `{}`", other as char))),
            };
            out.push((tok, line, col));
        }
    }

    fn lex_number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        let mut is_float = false;
        // A dot only starts a fraction if followed by a digit, so that the
        // rule terminator after an integer still lexes as `.`.
        if self.peek() == Some(b'.') && self.src.get(self.pos + 1).is_some_and(u8::is_ascii_digit) {
            is_float = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mut ahead = self.pos + 1;
            if matches!(self.src.get(ahead), Some(b'+') | Some(b'-')) {
                ahead += 1;
            }
            if self.src.get(ahead).is_some_and(u8::is_ascii_digit) {
                is_float = true;
                self.bump();
                if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                    self.bump();
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if is_float {
            text.parse::<f64>()
                .map(Tok::Float)
                .map_err(|e| self.err(format!("invalid float literal: {e}")))
        } else {
            text.parse::<i64>()
                .map(Tok::Int)
                .map_err(|e| self.err(format!("invalid integer literal: {e}")))
        }
    }
}

pub struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

/// Parses a textual TondIR program. Empty input yields an empty program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = Lexer::new(text).tokenize()?;
    let mut p = Parser { toks, pos: 0 };
    let mut rules = Vec::new();
    while !p.at(&Tok::Eof) {
        rules.push(p.rule()?);
    }
    Ok(Program::new(rules))
}

impl Parser {
    fn cur(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self, t: &Tok) -> bool {
        self.cur() == t
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        let (_, line, col) = self.toks[self.pos];
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.at(&t) {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(format!(
                "expected {}, found {}",
                t.describe(),
                self.cur().describe()
            )))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.cur().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err_here(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let head = self.head()?;
        self.expect(Tok::Arrow)?;
        let mut body = vec![self.atom()?];
        while self.at(&Tok::Comma) {
            self.bump();
            body.push(self.atom()?);
        }
        self.expect(Tok::Dot)?;
        Ok(Rule::new(head, body))
    }

    fn head(&mut self) -> Result<Head, ParseError> {
        let rel = self.relation_access()?;
        let mut group = None;
        let mut sort = None;
        let mut limit = None;
        loop {
            match self.cur().clone() {
                Tok::Ident(kw) if kw == "group" && group.is_none() => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let bracketed = self.at(&Tok::LBracket);
                    if bracketed {
                        self.bump();
                    }
                    let vars = self.ident_list()?;
                    if bracketed {
                        self.expect(Tok::RBracket)?;
                    }
                    self.expect(Tok::RParen)?;
                    group = Some(vars);
                }
                Tok::Ident(kw) if kw == "sort" && sort.is_none() => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::LBracket)?;
                    let vars = self.ident_list()?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Comma)?;
                    self.expect(Tok::LBracket)?;
                    let mut ascending = vec![self.bool_lit()?];
                    while self.at(&Tok::Comma) {
                        self.bump();
                        ascending.push(self.bool_lit()?);
                    }
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::RParen)?;
                    sort = Some(SortSpec { vars, ascending });
                }
                Tok::Ident(kw) if kw == "limit" && limit.is_none() => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    match self.bump() {
                        Tok::Int(n) if n >= 0 => limit = Some(n as u64),
                        other => {
                            return Err(self.err_here(format!(
                                "limit expects a non-negative integer, found {}",
                                other.describe()
                            )))
                        }
                    }
                    self.expect(Tok::RParen)?;
                }
                _ => break,
            }
        }
        Ok(Head {
            rel,
            group,
            sort,
            limit,
        })
    }

    fn bool_lit(&mut self) -> Result<bool, ParseError> {
        match self.bump() {
            Tok::Ident(s) if s == "True" || s == "true" => Ok(true),
            Tok::Ident(s) if s == "False" || s == "false" => Ok(false),
            other => Err(self.err_here(format!("expected boolean, found {}", other.describe()))),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut vars = vec![self.ident()?];
        while self.at(&Tok::Comma) {
            self.bump();
            vars.push(self.ident()?);
        }
        Ok(vars)
    }

    fn relation_access(&mut self) -> Result<RelationAccess, ParseError> {
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let vars = if self.at(&Tok::RParen) {
            Vec::new()
        } else {
            self.ident_list()?
        };
        self.expect(Tok::RParen)?;
        Ok(RelationAccess::new(name, vars))
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        match self.cur().clone() {
            Tok::Ident(kw) if kw == "exists" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut inner = vec![self.atom()?];
                while self.at(&Tok::Comma) {
                    self.bump();
                    inner.push(self.atom()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Atom::Exists(inner))
            }
            Tok::Ident(name) if EXT_ATOM_NAMES.contains(&name.as_str()) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let args = if self.at(&Tok::RParen) {
                    Vec::new()
                } else {
                    self.ident_list()?
                };
                self.expect(Tok::RParen)?;
                Ok(Atom::ExtAtom(ExtAtom { name, args }))
            }
            Tok::Ident(_) => Ok(Atom::Rel(self.relation_access()?)),
            Tok::LParen => {
                self.bump();
                // `((x, y)=[rows])` binds several variables to a constant
                // relation; `(x op t)` is a compare/assignment, where an
                // `=` to a bracket list is the single-column constant form.
                if self.at(&Tok::LParen) {
                    self.bump();
                    let vars = self.ident_list()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Eq)?;
                    let rows = self.const_rows(vars.len())?;
                    self.expect(Tok::RParen)?;
                    return Ok(Atom::Const(ConstRelation { vars, rows }));
                }
                let lhs = self.ident()?;
                let op = match self.bump() {
                    Tok::Lt => CmpOp::Lt,
                    Tok::Le => CmpOp::Le,
                    Tok::Eq => CmpOp::Eq,
                    Tok::Ne => CmpOp::Ne,
                    Tok::Ge => CmpOp::Ge,
                    Tok::Gt => CmpOp::Gt,
                    other => {
                        return Err(
                            self.err_here(format!("unknown operator token {}", other.describe()))
                        )
                    }
                };
                if op == CmpOp::Eq && self.at(&Tok::LBracket) {
                    let rows = self.const_rows(1)?;
                    self.expect(Tok::RParen)?;
                    return Ok(Atom::Const(ConstRelation {
                        vars: vec![lhs],
                        rows,
                    }));
                }
                let rhs = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(Atom::Compare(Compare { lhs, op, rhs }))
            }
            other => Err(self.err_here(format!("expected atom, found {}", other.describe()))),
        }
    }

    fn const_rows(&mut self, arity: usize) -> Result<Vec<Vec<Constant>>, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut rows = Vec::new();
        loop {
            let row = if self.at(&Tok::LParen) {
                self.bump();
                let mut row = vec![self.constant()?];
                while self.at(&Tok::Comma) {
                    self.bump();
                    row.push(self.constant()?);
                }
                self.expect(Tok::RParen)?;
                row
            } else {
                vec![self.constant()?]
            };
            if row.len() != arity {
                return Err(self.err_here(format!(
                    "constant relation row has {} columns, expected {}",
                    row.len(),
                    arity
                )));
            }
            rows.push(row);
            if self.at(&Tok::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        if rows.is_empty() {
            return Err(self.err_here("constant relation must be non-empty"));
        }
        Ok(rows)
    }

    fn constant(&mut self) -> Result<Constant, ParseError> {
        let negate = if self.at(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Int(v) => Ok(Constant::Int(if negate { -v } else { v })),
            Tok::Float(v) => Ok(Constant::Float(if negate { -v } else { v })),
            Tok::Str(s) if !negate => Ok(Constant::Str(s)),
            Tok::Ident(s) if s == "True" && !negate => Ok(Constant::Bool(true)),
            Tok::Ident(s) if s == "False" && !negate => Ok(Constant::Bool(false)),
            other => Err(self.err_here(format!("expected constant, found {}", other.describe()))),
        }
    }

    // Term grammar, loosest to tightest: or, and, comparison,
    // like/concat, additive, multiplicative, unary, primary.
    fn term(&mut self) -> Result<Term, ParseError> {
        self.term_or()
    }

    fn term_or(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_and()?;
        while matches!(self.cur(), Tok::Ident(s) if s == "or") {
            self.bump();
            let rhs = self.term_and()?;
            lhs = Term::binop(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term_and(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_cmp()?;
        while matches!(self.cur(), Tok::Ident(s) if s == "and") {
            self.bump();
            let rhs = self.term_cmp()?;
            lhs = Term::binop(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term_cmp(&mut self) -> Result<Term, ParseError> {
        let lhs = self.term_like()?;
        let op = match self.cur() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Ge => BinOp::Ge,
            Tok::Gt => BinOp::Gt,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.term_like()?;
        Ok(Term::binop(op, lhs, rhs))
    }

    fn term_like(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_add()?;
        loop {
            let op = match self.cur() {
                Tok::Ident(s) if s == "like" => BinOp::Like,
                Tok::Ident(s) if s == "concat" => BinOp::Concat,
                _ => break,
            };
            self.bump();
            let rhs = self.term_add()?;
            lhs = Term::binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term_add(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_mul()?;
        loop {
            let op = match self.cur() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term_mul()?;
            lhs = Term::binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term_mul(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.term_unary()?;
        loop {
            let op = match self.cur() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.term_unary()?;
            lhs = Term::binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term_unary(&mut self) -> Result<Term, ParseError> {
        if self.at(&Tok::Minus) {
            self.bump();
            let inner = self.term_unary()?;
            return Ok(match inner {
                Term::Const(Constant::Int(v)) => Term::Const(Constant::Int(-v)),
                Term::Const(Constant::Float(v)) => Term::Const(Constant::Float(-v)),
                other => Term::binop(BinOp::Sub, Term::int(0), other),
            });
        }
        self.term_primary()
    }

    fn term_primary(&mut self) -> Result<Term, ParseError> {
        match self.cur().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Int(v) => {
                self.bump();
                Ok(Term::Const(Constant::Int(v)))
            }
            Tok::Float(v) => {
                self.bump();
                Ok(Term::Const(Constant::Float(v)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Const(Constant::Str(s)))
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "True" {
                    return Ok(Term::Const(Constant::Bool(true)));
                }
                if name == "False" {
                    return Ok(Term::Const(Constant::Bool(false)));
                }
                if name == "if" {
                    self.expect(Tok::LParen)?;
                    let c = self.term()?;
                    self.expect(Tok::Comma)?;
                    let t = self.term()?;
                    self.expect(Tok::Comma)?;
                    let e = self.term()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Term::if_then_else(c, t, e));
                }
                if !self.at(&Tok::LParen) {
                    return Ok(Term::Var(name));
                }
                // call form: aggregate or external function
                self.bump();
                let mut args = Vec::new();
                if !self.at(&Tok::RParen) {
                    args.push(self.term()?);
                    while self.at(&Tok::Comma) {
                        self.bump();
                        args.push(self.term()?);
                    }
                }
                self.expect(Tok::RParen)?;
                if let Some(agg) = AggFn::parse(&name) {
                    if args.len() != 1 {
                        return Err(
                            self.err_here(format!("{name}() expects exactly one argument"))
                        );
                    }
                    return Ok(Term::Agg(agg, Box::new(args.into_iter().next().unwrap())));
                }
                Ok(Term::Ext(name, args))
            }
            other => Err(self.err_here(format!("expected term, found {}", other.describe()))),
        }
    }
}
