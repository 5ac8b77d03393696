//! A-normal form: nested sub-expressions are extracted into fresh
//! single-assignment variables (`v1`, `v2`, ...) so every statement
//! performs one operation over names and literals. Parameter and
//! user-assigned names are preserved.

use super::pyast::*;
use std::collections::HashSet;

pub fn anf_normalize(f: &PyFunction) -> PyFunction {
    let mut taken: HashSet<String> = f.params.iter().cloned().collect();
    for stmt in &f.body {
        if let PyStmt::Assign {
            target: PyTarget::Name(n),
            ..
        } = stmt
        {
            taken.insert(n.clone());
        }
    }
    let mut norm = Normalizer {
        taken,
        counter: 0,
        out: Vec::new(),
    };
    for stmt in &f.body {
        match stmt {
            PyStmt::Assign {
                target,
                value,
                line,
            } => {
                let flat = norm.flatten(value, *line);
                norm.out.push(PyStmt::Assign {
                    target: target.clone(),
                    value: flat,
                    line: *line,
                });
            }
            PyStmt::Return { value, line } => {
                let flat = norm.flatten(value, *line);
                norm.out.push(PyStmt::Return {
                    value: flat,
                    line: *line,
                });
            }
        }
    }
    PyFunction {
        name: f.name.clone(),
        params: f.params.clone(),
        decorators: f.decorators.clone(),
        body: norm.out,
        line: f.line,
        unsupported: f.unsupported.clone(),
    }
}

struct Normalizer {
    taken: HashSet<String>,
    counter: usize,
    out: Vec<PyStmt>,
}

impl Normalizer {
    fn fresh(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("v{}", self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    /// Normalizes one statement's right-hand side: children become atoms,
    /// the top-level operation itself stays in place.
    fn flatten(&mut self, expr: &PyExpr, line: usize) -> PyExpr {
        match expr {
            PyExpr::Call { func, args, kwargs } => {
                let func = match &**func {
                    PyExpr::Attr(recv, method) => {
                        let recv = self.atomize(recv, line);
                        PyExpr::Attr(Box::new(recv), method.clone())
                    }
                    other => other.clone(),
                };
                let args = args.iter().map(|a| self.atomize(a, line)).collect();
                let kwargs = kwargs
                    .iter()
                    .map(|(k, v)| (k.clone(), self.atomize_literalish(v, line)))
                    .collect();
                PyExpr::Call {
                    func: Box::new(func),
                    args,
                    kwargs,
                }
            }
            PyExpr::Subscript(obj, key) => {
                let obj = self.atomize(obj, line);
                let key = self.atomize_literalish(key, line);
                PyExpr::Subscript(Box::new(obj), Box::new(key))
            }
            PyExpr::BinOp(op, l, r) => {
                let l = self.atomize(l, line);
                let r = self.atomize(r, line);
                PyExpr::BinOp(*op, Box::new(l), Box::new(r))
            }
            PyExpr::Unary(op, inner) => {
                let inner = self.atomize(inner, line);
                PyExpr::Unary(*op, Box::new(inner))
            }
            other => other.clone(),
        }
    }

    /// Returns an atom, extracting the expression into a fresh assignment
    /// first when needed.
    fn atomize(&mut self, expr: &PyExpr, line: usize) -> PyExpr {
        if is_atom(expr) {
            return expr.clone();
        }
        let flat = self.flatten(expr, line);
        let name = self.fresh();
        self.out.push(PyStmt::Assign {
            target: PyTarget::Name(name.clone()),
            value: flat,
            line,
        });
        PyExpr::Name(name)
    }

    /// Literal containers (lists, dicts, tuples of literals) stay inline
    /// as arguments; anything computed is extracted.
    fn atomize_literalish(&mut self, expr: &PyExpr, line: usize) -> PyExpr {
        if is_literalish(expr) {
            expr.clone()
        } else {
            self.atomize(expr, line)
        }
    }
}

/// Atoms survive as operands: names, scalar literals, column references
/// (`df.col`), and lambdas (whose bodies are substituted later).
fn is_atom(expr: &PyExpr) -> bool {
    match expr {
        PyExpr::Name(_)
        | PyExpr::Int(_)
        | PyExpr::Float(_)
        | PyExpr::Str(_)
        | PyExpr::Bool(_)
        | PyExpr::Lambda { .. } => true,
        PyExpr::Attr(base, _) => matches!(**base, PyExpr::Name(_)),
        PyExpr::List(items) | PyExpr::Tuple(items) => items.iter().all(is_literalish),
        PyExpr::Dict(items) => items.iter().all(|(k, v)| is_literalish(k) && is_literalish(v)),
        _ => false,
    }
}

fn is_literalish(expr: &PyExpr) -> bool {
    match expr {
        PyExpr::Int(_) | PyExpr::Float(_) | PyExpr::Str(_) | PyExpr::Bool(_) => true,
        PyExpr::Name(_) | PyExpr::Lambda { .. } => true,
        PyExpr::Attr(base, _) => matches!(**base, PyExpr::Name(_)),
        PyExpr::List(items) | PyExpr::Tuple(items) => items.iter().all(is_literalish),
        PyExpr::Dict(items) => items.iter().all(|(k, v)| is_literalish(k) && is_literalish(v)),
        _ => false,
    }
}
