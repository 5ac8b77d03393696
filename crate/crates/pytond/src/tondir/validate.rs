//! Structural validation. Checks head-variable binding, compare
//! classification, constant-relation shape, aggregate nesting and external
//! function names. Validation never panics; problems come back as
//! diagnostics.

use super::ast::*;
use std::collections::HashSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: rule {}: {}", sev, self.rule, self.message)
    }
}

/// How a Compare atom behaves, determined purely by textual order: `=`
/// against a variable not yet bound in the rule is an assignment, `=`
/// against a bound variable is an equality comparison, and any other
/// operator is a filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareKind {
    Assignment,
    Equality,
    Filter,
}

/// Per-atom classification for one rule, parallel to `rule.body`.
/// `None` for atoms that are not compares.
pub fn classify_compares(rule: &Rule) -> Vec<Option<CompareKind>> {
    let mut bound: HashSet<&str> = HashSet::new();
    let mut kinds = Vec::with_capacity(rule.body.len());
    for atom in &rule.body {
        match atom {
            Atom::Rel(rel) => {
                bound.extend(rel.vars.iter().map(String::as_str));
                kinds.push(None);
            }
            Atom::Const(c) => {
                bound.extend(c.vars.iter().map(String::as_str));
                kinds.push(None);
            }
            Atom::Exists(_) | Atom::ExtAtom(_) => kinds.push(None),
            Atom::Compare(c) => {
                let kind = if c.op != CmpOp::Eq {
                    CompareKind::Filter
                } else if bound.contains(c.lhs.as_str()) {
                    CompareKind::Equality
                } else {
                    bound.insert(c.lhs.as_str());
                    CompareKind::Assignment
                };
                kinds.push(Some(kind));
            }
        }
    }
    kinds
}

/// The variables a rule's body binds, in binding order.
pub fn bound_vars(body: &[Atom]) -> Vec<String> {
    let mut bound: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut push = |bound: &mut Vec<String>, v: &str| {
        if seen.insert(v.to_string()) {
            bound.push(v.to_string());
        }
    };
    for atom in body {
        match atom {
            Atom::Rel(rel) => rel.vars.iter().for_each(|v| push(&mut bound, v)),
            Atom::Const(c) => c.vars.iter().for_each(|v| push(&mut bound, v)),
            Atom::Exists(_) | Atom::ExtAtom(_) => {}
            Atom::Compare(c) => {
                if c.op == CmpOp::Eq {
                    push(&mut bound, &c.lhs);
                }
            }
        }
    }
    bound
}

pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (i, rule) in p.rules.iter().enumerate() {
        validate_rule(i, rule, &mut diags);
    }
    diags
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

fn validate_rule(idx: usize, rule: &Rule, diags: &mut Vec<Diagnostic>) {
    let mut bound: HashSet<String> = HashSet::new();
    let err = |msg: String| Diagnostic {
        severity: Severity::Error,
        rule: idx,
        message: msg,
    };
    let mut local = Vec::new();
    validate_atoms(&rule.body, &mut bound, idx, &mut local);
    diags.append(&mut local);

    for v in &rule.head.rel.vars {
        if !bound.contains(v) {
            diags.push(err(format!("unbound head variable {v}")));
        }
    }
    if let Some(group) = &rule.head.group {
        for v in group {
            if !bound.contains(v) {
                diags.push(err(format!("unbound group variable {v}")));
            }
        }
    }
    if let Some(sort) = &rule.head.sort {
        for v in &sort.vars {
            if !bound.contains(v) {
                diags.push(err(format!("unbound sort variable {v}")));
            }
        }
        if sort.ascending.len() != sort.vars.len() {
            diags.push(err(format!(
                "sort has {} variables but {} ascending flags",
                sort.vars.len(),
                sort.ascending.len()
            )));
        }
        if rule.head.group.is_some() {
            diags.push(Diagnostic {
                severity: Severity::Warning,
                rule: idx,
                message: "group and sort combined on one head; lowered as GROUP BY then ORDER BY"
                    .into(),
            });
        }
    } else if rule.head.limit.is_some() {
        diags.push(Diagnostic {
            severity: Severity::Warning,
            rule: idx,
            message: "limit without sort yields engine-order rows (non-deterministic)".into(),
        });
    }
}

fn validate_atoms(
    atoms: &[Atom],
    bound: &mut HashSet<String>,
    idx: usize,
    diags: &mut Vec<Diagnostic>,
) {
    let err = |msg: String| Diagnostic {
        severity: Severity::Error,
        rule: idx,
        message: msg,
    };
    for atom in atoms {
        match atom {
            Atom::Rel(rel) => {
                bound.extend(rel.vars.iter().cloned());
            }
            Atom::Const(c) => {
                if c.rows.is_empty() {
                    diags.push(err("constant relation must be non-empty".into()));
                }
                for row in &c.rows {
                    if row.len() != c.vars.len() {
                        diags.push(err(format!(
                            "constant relation row has {} columns, expected {}",
                            row.len(),
                            c.vars.len()
                        )));
                        break;
                    }
                }
                bound.extend(c.vars.iter().cloned());
            }
            Atom::Exists(inner) => {
                // Inner bindings are scoped to the existential.
                let mut inner_bound = bound.clone();
                validate_atoms(inner, &mut inner_bound, idx, diags);
            }
            Atom::ExtAtom(e) => {
                for v in &e.args {
                    if !bound.contains(v) {
                        diags.push(err(format!("unbound variable {v} in {}", e.name)));
                    }
                }
                if e.is_outer() && (e.args.len() < 2 || e.args.len() % 2 != 0) {
                    diags.push(err(format!(
                        "{} expects an even number of join variables",
                        e.name
                    )));
                }
            }
            Atom::Compare(c) => {
                let mut vars = Vec::new();
                c.rhs.collect_vars(&mut vars);
                for v in vars {
                    if !bound.contains(v) {
                        diags.push(err(format!("unbound variable {v} in comparison")));
                    }
                }
                check_terms(&c.rhs, idx, diags);
                if c.op == CmpOp::Eq {
                    bound.insert(c.lhs.clone());
                } else if !bound.contains(&c.lhs) {
                    diags.push(err(format!("unbound variable {} in comparison", c.lhs)));
                }
            }
        }
    }
}

fn check_terms(term: &Term, idx: usize, diags: &mut Vec<Diagnostic>) {
    match term {
        Term::Var(_) | Term::Const(_) => {}
        Term::Agg(_, arg) => {
            if arg.contains_agg() {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    rule: idx,
                    message: "aggregate nested inside another aggregate".into(),
                });
            }
            check_terms(arg, idx, diags);
        }
        Term::Ext(name, args) => {
            if !REGISTERED_EXT_FNS.contains(&name.as_str()) {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    rule: idx,
                    message: format!("unknown external function {name}"),
                });
            }
            args.iter().for_each(|a| check_terms(a, idx, diags));
        }
        Term::If(c, t, e) => {
            check_terms(c, idx, diags);
            check_terms(t, idx, diags);
            check_terms(e, idx, diags);
        }
        Term::BinOp(_, l, r) => {
            check_terms(l, idx, diags);
            check_terms(r, idx, diags);
        }
    }
}
