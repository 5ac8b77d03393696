//! Parser for the host-language subset: straight-line function bodies of
//! assignments and a final return, over a Pandas/NumPy-style API surface.
//! Decorated functions are parsed fully; everything else in the file is
//! skipped by indentation.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum PyExpr {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    List(Vec<PyExpr>),
    Tuple(Vec<PyExpr>),
    Dict(Vec<(PyExpr, PyExpr)>),
    Attr(Box<PyExpr>, String),
    Subscript(Box<PyExpr>, Box<PyExpr>),
    Call {
        func: Box<PyExpr>,
        args: Vec<PyExpr>,
        kwargs: Vec<(String, PyExpr)>,
    },
    BinOp(PyOp, Box<PyExpr>, Box<PyExpr>),
    Unary(PyUnary, Box<PyExpr>),
    Lambda {
        params: Vec<String>,
        body: Box<PyExpr>,
    },
    /// `then if cond else els`
    Ternary {
        cond: Box<PyExpr>,
        then: Box<PyExpr>,
        els: Box<PyExpr>,
    },
}

impl PyExpr {
    pub fn as_name(&self) -> Option<&str> {
        match self {
            PyExpr::Name(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_str_lit(&self) -> Option<&str> {
        match self {
            PyExpr::Str(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PyOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
    MatMul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    BitAnd,
    BitOr,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PyUnary {
    Neg,
    Not,
    Invert,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PyTarget {
    Name(String),
    /// `df['col'] = ...` column assignment.
    Column { frame: String, column: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PyStmt {
    Assign {
        target: PyTarget,
        value: PyExpr,
        line: usize,
    },
    Return {
        value: PyExpr,
        line: usize,
    },
}

impl PyStmt {
    pub fn line(&self) -> usize {
        match self {
            PyStmt::Assign { line, .. } | PyStmt::Return { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyDecorator {
    pub name: String,
    pub kwargs: Vec<(String, PyExpr)>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyFunction {
    pub name: String,
    pub params: Vec<String>,
    pub decorators: Vec<PyDecorator>,
    pub body: Vec<PyStmt>,
    pub line: usize,
    /// Set when the body contains a construct outside the subset; the
    /// error is reported only if the function carries the compiler's
    /// decorator.
    pub unsupported: Option<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SyntaxError {}

/// A logical source line after bracket-aware joining.
struct Line {
    number: usize,
    indent: usize,
    text: String,
}

fn logical_lines(source: &str) -> Vec<Line> {
    let mut out: Vec<Line> = Vec::new();
    let mut pending: Option<Line> = None;
    let mut depth: i32 = 0;
    for (i, raw) in source.lines().enumerate() {
        let no_comment = strip_comment(raw);
        let trimmed = no_comment.trim_end();
        if pending.is_none() && trimmed.trim().is_empty() {
            continue;
        }
        match &mut pending {
            Some(line) => {
                line.text.push(' ');
                line.text.push_str(trimmed.trim_start());
            }
            None => {
                let indent = trimmed.len() - trimmed.trim_start().len();
                pending = Some(Line {
                    number: i + 1,
                    indent,
                    text: trimmed.trim_start().to_string(),
                });
            }
        }
        depth += bracket_delta(trimmed);
        let text = &pending.as_ref().unwrap().text;
        let continues = depth > 0 || text.ends_with('\\') || text.ends_with('.');
        if !continues {
            out.push(pending.take().unwrap());
        } else if text.ends_with('\\') {
            let line = pending.as_mut().unwrap();
            line.text.pop();
            let t = line.text.trim_end().to_string();
            line.text = t;
        }
    }
    if let Some(line) = pending {
        out.push(line);
    }
    out
}

fn strip_comment(line: &str) -> String {
    let mut out = String::new();
    let mut in_str: Option<char> = None;
    for c in line.chars() {
        match in_str {
            Some(q) => {
                if c == q {
                    in_str = None;
                }
            }
            None => {
                if c == '\'' || c == '"' {
                    in_str = Some(c);
                } else if c == '#' {
                    break;
                }
            }
        }
        out.push(c);
    }
    out
}

fn bracket_delta(line: &str) -> i32 {
    let mut delta = 0;
    let mut in_str: Option<char> = None;
    for c in line.chars() {
        match in_str {
            Some(q) => {
                if c == q {
                    in_str = None;
                }
            }
            None => match c {
                '\'' | '"' => in_str = Some(c),
                '(' | '[' | '{' => delta += 1,
                ')' | ']' | '}' => delta -= 1,
                _ => {}
            },
        }
    }
    delta
}

/// Parses all function definitions in a source file. Undecorated
/// functions and unsupported statements inside them are tolerated; a
/// decorated function with unsupported statements reports them through
/// `PyFunction::unsupported`.
pub fn parse_module(source: &str) -> Result<Vec<PyFunction>, SyntaxError> {
    let lines = logical_lines(source);
    let mut functions = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        if line.indent == 0 && line.text.starts_with('@') {
            let mut decorators = Vec::new();
            while i < lines.len() && lines[i].text.starts_with('@') {
                decorators.push(parse_decorator(&lines[i])?);
                i += 1;
            }
            if i >= lines.len() || !lines[i].text.starts_with("def ") {
                return Err(SyntaxError {
                    line: lines[i.min(lines.len() - 1)].number,
                    message: "decorator must be followed by a function definition".into(),
                });
            }
            let (func, next) = parse_function(&lines, i, decorators)?;
            functions.push(func);
            i = next;
        } else if line.indent == 0 && line.text.starts_with("def ") {
            let (func, next) = parse_function(&lines, i, Vec::new())?;
            functions.push(func);
            i = next;
        } else {
            // imports, module-level statements: skipped
            i += 1;
        }
    }
    Ok(functions)
}

fn parse_decorator(line: &Line) -> Result<PyDecorator, SyntaxError> {
    let text = line.text.trim_start_matches('@');
    let mut p = ExprParser::new(text, line.number);
    let name = p.ident().map_err(|e| e.into_syntax(line.number))?;
    let mut kwargs = Vec::new();
    if p.eat('(') {
        while !p.peek_is(')') {
            let key = p.ident().map_err(|e| e.into_syntax(line.number))?;
            p.expect('=').map_err(|e| e.into_syntax(line.number))?;
            let value = p.expr().map_err(|e| e.into_syntax(line.number))?;
            kwargs.push((key, value));
            if !p.eat(',') {
                break;
            }
        }
        p.expect(')').map_err(|e| e.into_syntax(line.number))?;
    }
    Ok(PyDecorator {
        name,
        kwargs,
        line: line.number,
    })
}

fn parse_function(
    lines: &[Line],
    start: usize,
    decorators: Vec<PyDecorator>,
) -> Result<(PyFunction, usize), SyntaxError> {
    let header = &lines[start];
    let text = header
        .text
        .strip_prefix("def ")
        .and_then(|t| t.strip_suffix(':'))
        .ok_or_else(|| SyntaxError {
            line: header.number,
            message: "malformed function header".into(),
        })?;
    let mut p = ExprParser::new(text, header.number);
    let name = p.ident().map_err(|e| e.into_syntax(header.number))?;
    p.expect('(').map_err(|e| e.into_syntax(header.number))?;
    let mut params = Vec::new();
    while !p.peek_is(')') {
        params.push(p.ident().map_err(|e| e.into_syntax(header.number))?);
        if !p.eat(',') {
            break;
        }
    }
    p.expect(')').map_err(|e| e.into_syntax(header.number))?;

    let mut body = Vec::new();
    let mut unsupported = None;
    let mut i = start + 1;
    let body_indent = lines.get(i).map(|l| l.indent).unwrap_or(0);
    while i < lines.len() && lines[i].indent > header.indent {
        let line = &lines[i];
        if line.indent != body_indent && unsupported.is_none() {
            unsupported = Some((line.number, "nested block".to_string()));
        }
        match parse_statement(line) {
            Ok(stmt) => body.push(stmt),
            Err(e) => {
                if unsupported.is_none() {
                    unsupported = Some((e.line, e.message));
                }
            }
        }
        i += 1;
    }
    Ok((
        PyFunction {
            name,
            params,
            decorators,
            body,
            line: header.number,
            unsupported,
        },
        i,
    ))
}

fn parse_statement(line: &Line) -> Result<PyStmt, SyntaxError> {
    let text = line.text.as_str();
    let first_word: String = text
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    let unsupported_kind = match first_word.as_str() {
        "while" | "for" => Some("loop"),
        "if" | "elif" | "else" => Some("branch"),
        "with" => Some("context manager"),
        "try" | "except" | "finally" | "raise" => Some("exception handling"),
        "def" => Some("nested function"),
        "class" => Some("class definition"),
        "import" | "from" => Some("import inside function"),
        "del" => Some("deletion"),
        "global" | "nonlocal" => Some("global statement"),
        _ => None,
    };
    if let Some(what) = unsupported_kind {
        return Err(SyntaxError {
            line: line.number,
            message: format!("unsupported statement: {what}"),
        });
    }
    if let Some(rest) = text.strip_prefix("return") {
        let rest = rest.trim();
        if rest.is_empty() {
            return Err(SyntaxError {
                line: line.number,
                message: "unsupported statement: bare return".into(),
            });
        }
        let mut p = ExprParser::new(rest, line.number);
        let value = p.expr().map_err(|e| e.into_syntax(line.number))?;
        p.finish().map_err(|e| e.into_syntax(line.number))?;
        return Ok(PyStmt::Return {
            value,
            line: line.number,
        });
    }
    // assignment: target = expr, where target is a name or df['col']
    let Some(eq) = find_assign_eq(text) else {
        return Err(SyntaxError {
            line: line.number,
            message: "unsupported statement: expression statement".into(),
        });
    };
    let (lhs, rhs) = (text[..eq].trim(), text[eq + 1..].trim());
    let mut tp = ExprParser::new(lhs, line.number);
    let target_expr = tp.expr().map_err(|e| e.into_syntax(line.number))?;
    tp.finish().map_err(|e| e.into_syntax(line.number))?;
    let target = match target_expr {
        PyExpr::Name(n) => PyTarget::Name(n),
        PyExpr::Subscript(obj, key) => match (obj.as_name(), key.as_str_lit()) {
            (Some(frame), Some(column)) => PyTarget::Column {
                frame: frame.to_string(),
                column: column.to_string(),
            },
            _ => {
                return Err(SyntaxError {
                    line: line.number,
                    message: "unsupported assignment target".into(),
                })
            }
        },
        _ => {
            return Err(SyntaxError {
                line: line.number,
                message: "unsupported assignment target".into(),
            })
        }
    };
    let mut p = ExprParser::new(rhs, line.number);
    let value = p.expr().map_err(|e| e.into_syntax(line.number))?;
    p.finish().map_err(|e| e.into_syntax(line.number))?;
    Ok(PyStmt::Assign {
        target,
        value,
        line: line.number,
    })
}

/// Position of a top-level assignment `=` (not ==, <=, >=, !=).
fn find_assign_eq(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0;
    let mut in_str: Option<u8> = None;
    for (i, &c) in bytes.iter().enumerate() {
        match in_str {
            Some(q) => {
                if c == q {
                    in_str = None;
                }
            }
            None => match c {
                b'\'' | b'"' => in_str = Some(c),
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' | b'}' => depth -= 1,
                b'=' if depth == 0 => {
                    let prev = if i > 0 { bytes[i - 1] } else { b' ' };
                    let next = bytes.get(i + 1).copied().unwrap_or(b' ');
                    if prev != b'=' && prev != b'<' && prev != b'>' && prev != b'!' && next != b'='
                    {
                        return Some(i);
                    }
                }
                _ => {}
            },
        }
    }
    None
}

// --- expression parsing ----------------------------------------------------

#[derive(Debug)]
pub struct ExprError {
    pub message: String,
}

impl ExprError {
    fn into_syntax(self, line: usize) -> SyntaxError {
        SyntaxError {
            line,
            message: self.message,
        }
    }
}

pub struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> ExprParser<'a> {
    pub fn new(src: &'a str, _line: usize) -> Self {
        ExprParser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|c| *c == b' ' || *c == b'\t') {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.peek() == Some(c as u8)
    }

    pub fn eat(&mut self, c: char) -> bool {
        if self.peek_is(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let end = self.pos + kw.len();
        if self.src.get(self.pos..end) == Some(kw.as_bytes()) {
            let next = self.src.get(end).copied().unwrap_or(b' ');
            if !next.is_ascii_alphanumeric() && next != b'_' {
                self.pos = end;
                return true;
            }
        }
        false
    }

    pub fn finish(&mut self) -> Result<(), ExprError> {
        self.skip_ws();
        if self.pos < self.src.len() {
            Err(self.err(format!(
                "trailing input: {:?}",
                String::from_utf8_lossy(&self.src[self.pos..])
            )))
        } else {
            Ok(())
        }
    }

    pub fn ident(&mut self) -> Result<String, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos || self.src[start].is_ascii_digit() {
            return Err(self.err("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    pub fn expr(&mut self) -> Result<PyExpr, ExprError> {
        let value = self.or_expr()?;
        if self.eat_kw("if") {
            let cond = self.or_expr()?;
            if !self.eat_kw("else") {
                return Err(self.err("conditional expression missing else"));
            }
            let els = self.expr()?;
            return Ok(PyExpr::Ternary {
                cond: Box::new(cond),
                then: Box::new(value),
                els: Box::new(els),
            });
        }
        Ok(value)
    }

    fn or_expr(&mut self) -> Result<PyExpr, ExprError> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            let rhs = self.and_expr()?;
            lhs = PyExpr::BinOp(PyOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<PyExpr, ExprError> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            let rhs = self.not_expr()?;
            lhs = PyExpr::BinOp(PyOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<PyExpr, ExprError> {
        if self.eat_kw("not") {
            let inner = self.not_expr()?;
            return Ok(PyExpr::Unary(PyUnary::Not, Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<PyExpr, ExprError> {
        let lhs = self.bitor_expr()?;
        self.skip_ws();
        let op = if self.take_op("==") {
            PyOp::Eq
        } else if self.take_op("!=") {
            PyOp::Ne
        } else if self.take_op("<=") {
            PyOp::Le
        } else if self.take_op(">=") {
            PyOp::Ge
        } else if self.take_op("<") {
            PyOp::Lt
        } else if self.take_op(">") {
            PyOp::Gt
        } else {
            return Ok(lhs);
        };
        let rhs = self.bitor_expr()?;
        Ok(PyExpr::BinOp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn take_op(&mut self, op: &str) -> bool {
        self.skip_ws();
        let end = self.pos + op.len();
        if self.src.get(self.pos..end) == Some(op.as_bytes()) {
            // `<` must not swallow `<=`; callers try longer ops first.
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn bitor_expr(&mut self) -> Result<PyExpr, ExprError> {
        let mut lhs = self.bitand_expr()?;
        loop {
            self.skip_ws();
            if self.src.get(self.pos) == Some(&b'|') {
                self.pos += 1;
                let rhs = self.bitand_expr()?;
                lhs = PyExpr::BinOp(PyOp::BitOr, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn bitand_expr(&mut self) -> Result<PyExpr, ExprError> {
        let mut lhs = self.add_expr()?;
        loop {
            self.skip_ws();
            if self.src.get(self.pos) == Some(&b'&') {
                self.pos += 1;
                let rhs = self.add_expr()?;
                lhs = PyExpr::BinOp(PyOp::BitAnd, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn add_expr(&mut self) -> Result<PyExpr, ExprError> {
        let mut lhs = self.mul_expr()?;
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.mul_expr()?;
                    lhs = PyExpr::BinOp(PyOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.mul_expr()?;
                    lhs = PyExpr::BinOp(PyOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn mul_expr(&mut self) -> Result<PyExpr, ExprError> {
        let mut lhs = self.unary_expr()?;
        loop {
            self.skip_ws();
            let op = if self.take_op("**") {
                PyOp::Pow
            } else if self.take_op("//") {
                PyOp::FloorDiv
            } else if self.take_op("*") {
                PyOp::Mul
            } else if self.take_op("/") {
                PyOp::Div
            } else if self.take_op("%") {
                PyOp::Mod
            } else if self.take_op("@") {
                PyOp::MatMul
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary_expr()?;
            lhs = PyExpr::BinOp(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary_expr(&mut self) -> Result<PyExpr, ExprError> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b'-') => {
                self.pos += 1;
                let inner = self.unary_expr()?;
                Ok(match inner {
                    PyExpr::Int(v) => PyExpr::Int(-v),
                    PyExpr::Float(v) => PyExpr::Float(-v),
                    other => PyExpr::Unary(PyUnary::Neg, Box::new(other)),
                })
            }
            Some(b'~') => {
                self.pos += 1;
                let inner = self.unary_expr()?;
                Ok(PyExpr::Unary(PyUnary::Invert, Box::new(inner)))
            }
            _ => self.postfix_expr(),
        }
    }

    fn postfix_expr(&mut self) -> Result<PyExpr, ExprError> {
        let mut expr = self.primary()?;
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b'.') => {
                    self.pos += 1;
                    let attr = self.ident()?;
                    expr = PyExpr::Attr(Box::new(expr), attr);
                }
                Some(b'(') => {
                    self.pos += 1;
                    let (args, kwargs) = self.call_args()?;
                    expr = PyExpr::Call {
                        func: Box::new(expr),
                        args,
                        kwargs,
                    };
                }
                Some(b'[') => {
                    self.pos += 1;
                    let key = self.expr()?;
                    self.expect(']')?;
                    expr = PyExpr::Subscript(Box::new(expr), Box::new(key));
                }
                _ => return Ok(expr),
            }
        }
    }

    fn call_args(&mut self) -> Result<(Vec<PyExpr>, Vec<(String, PyExpr)>), ExprError> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.peek_is(')') {
            // keyword argument lookahead: ident '=' not followed by '='
            let save = self.pos;
            if let Ok(name) = self.ident() {
                self.skip_ws();
                if self.src.get(self.pos) == Some(&b'=')
                    && self.src.get(self.pos + 1) != Some(&b'=')
                {
                    self.pos += 1;
                    let value = self.expr()?;
                    kwargs.push((name, value));
                    if !self.eat(',') {
                        break;
                    }
                    continue;
                }
            }
            self.pos = save;
            args.push(self.expr()?);
            if !self.eat(',') {
                break;
            }
        }
        self.expect(')')?;
        Ok((args, kwargs))
    }

    fn primary(&mut self) -> Result<PyExpr, ExprError> {
        self.skip_ws();
        match self.src.get(self.pos).copied() {
            Some(b'(') => {
                self.pos += 1;
                let first = self.expr()?;
                if self.eat(',') {
                    let mut items = vec![first];
                    while !self.peek_is(')') {
                        items.push(self.expr()?);
                        if !self.eat(',') {
                            break;
                        }
                    }
                    self.expect(')')?;
                    return Ok(PyExpr::Tuple(items));
                }
                self.expect(')')?;
                Ok(first)
            }
            Some(b'[') => {
                self.pos += 1;
                let mut items = Vec::new();
                while !self.peek_is(']') {
                    items.push(self.expr()?);
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect(']')?;
                Ok(PyExpr::List(items))
            }
            Some(b'{') => {
                self.pos += 1;
                let mut items = Vec::new();
                while !self.peek_is('}') {
                    let key = self.expr()?;
                    self.expect(':')?;
                    let value = self.expr()?;
                    items.push((key, value));
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect('}')?;
                Ok(PyExpr::Dict(items))
            }
            Some(q @ (b'\'' | b'"')) => {
                self.pos += 1;
                let start = self.pos;
                while self.src.get(self.pos).is_some_and(|c| *c != q) {
                    self.pos += 1;
                }
                if self.src.get(self.pos) != Some(&q) {
                    return Err(self.err("unterminated string literal"));
                }
                let s = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.pos += 1;
                Ok(PyExpr::Str(s))
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                if self.eat_kw("lambda") {
                    let mut params = Vec::new();
                    while !self.peek_is(':') {
                        params.push(self.ident()?);
                        if !self.eat(',') {
                            break;
                        }
                    }
                    self.expect(':')?;
                    let body = self.expr()?;
                    return Ok(PyExpr::Lambda {
                        params,
                        body: Box::new(body),
                    });
                }
                let name = self.ident()?;
                Ok(match name.as_str() {
                    "True" => PyExpr::Bool(true),
                    "False" => PyExpr::Bool(false),
                    _ => PyExpr::Name(name),
                })
            }
            other => Err(self.err(format!(
                "unexpected character {:?}",
                other.map(|c| c as char)
            ))),
        }
    }

    fn number(&mut self) -> Result<PyExpr, ExprError> {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let mut is_float = false;
        if self.src.get(self.pos) == Some(&b'.')
            && self.src.get(self.pos + 1).is_some_and(u8::is_ascii_digit)
        {
            is_float = true;
            self.pos += 1;
            while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let mut ahead = self.pos + 1;
            if matches!(self.src.get(ahead), Some(b'+') | Some(b'-')) {
                ahead += 1;
            }
            if self.src.get(ahead).is_some_and(u8::is_ascii_digit) {
                is_float = true;
                self.pos = ahead + 1;
                while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if is_float {
            text.parse()
                .map(PyExpr::Float)
                .map_err(|e| self.err(format!("bad float: {e}")))
        } else {
            text.parse()
                .map(PyExpr::Int)
                .map_err(|e| self.err(format!("bad int: {e}")))
        }
    }
}
