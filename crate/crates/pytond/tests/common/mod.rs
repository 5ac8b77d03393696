//! Shared test support: alpha-equivalence over programs and small
//! database builders.

#![allow(dead_code)]

use pytond::oracle::{Database, Relation, Value};
use pytond::tondir::ast::*;
use pytond::tondir::validate::{classify_compares, CompareKind};
use std::collections::{HashMap, HashSet};

/// Structural equality modulo consistent renaming of variables (with
/// shadowing at rebinding sites) and of derived relation names. Base
/// relation names must match exactly.
pub fn alpha_equivalent(a: &Program, b: &Program, base: &[&str]) -> Result<(), String> {
    if a.rules.len() != b.rules.len() {
        return Err(format!(
            "rule count differs: {} vs {}",
            a.rules.len(),
            b.rules.len()
        ));
    }
    let base: HashSet<&str> = base.iter().copied().collect();
    let mut rel_map: HashMap<String, String> = HashMap::new();
    for (i, (ra, rb)) in a.rules.iter().zip(&b.rules).enumerate() {
        alpha_rule(i, ra, rb, &base, &mut rel_map).map_err(|e| format!("rule {i}: {e}"))?;
    }
    Ok(())
}

struct VarMap {
    fwd: HashMap<String, String>,
    rev: HashMap<String, String>,
}

impl VarMap {
    fn bind(&mut self, l: &str, r: &str) {
        if let Some(old) = self.fwd.insert(l.to_string(), r.to_string()) {
            self.rev.remove(&old);
        }
        if let Some(old) = self.rev.insert(r.to_string(), l.to_string()) {
            self.fwd.remove(&old);
        }
    }

    fn check(&self, l: &str, r: &str) -> Result<(), String> {
        match (self.fwd.get(l), self.rev.get(r)) {
            (Some(mapped), _) if mapped != r => {
                Err(format!("variable {l} maps to {mapped}, not {r}"))
            }
            (_, Some(mapped)) if mapped != l => {
                Err(format!("variable {r} is already the image of {mapped}"))
            }
            (None, None) => Err(format!("variables {l} / {r} are unbound")),
            _ => Ok(()),
        }
    }
}

fn alpha_rule(
    _idx: usize,
    a: &Rule,
    b: &Rule,
    base: &HashSet<&str>,
    rel_map: &mut HashMap<String, String>,
) -> Result<(), String> {
    map_rel_name(a.name(), b.name(), base, rel_map)?;
    if a.body.len() != b.body.len() {
        return Err(format!(
            "atom count differs: {} vs {}",
            a.body.len(),
            b.body.len()
        ));
    }
    let mut vars = VarMap {
        fwd: HashMap::new(),
        rev: HashMap::new(),
    };
    let ka = classify_compares(a);
    let kb = classify_compares(b);
    for (i, (aa, ab)) in a.body.iter().zip(&b.body).enumerate() {
        alpha_atom(aa, ab, ka[i], kb[i], base, rel_map, &mut vars)
            .map_err(|e| format!("atom {i}: {e}"))?;
    }
    // Heads after the body so every binding is in scope.
    if a.head.rel.vars.len() != b.head.rel.vars.len() {
        return Err("head arity differs".into());
    }
    for (l, r) in a.head.rel.vars.iter().zip(&b.head.rel.vars) {
        vars.check(l, r).map_err(|e| format!("head: {e}"))?;
    }
    match (&a.head.group, &b.head.group) {
        (None, None) => {}
        (Some(ga), Some(gb)) if ga.len() == gb.len() => {
            for (l, r) in ga.iter().zip(gb) {
                vars.check(l, r).map_err(|e| format!("group: {e}"))?;
            }
        }
        _ => return Err("group clause differs".into()),
    }
    match (&a.head.sort, &b.head.sort) {
        (None, None) => {}
        (Some(sa), Some(sb)) if sa.vars.len() == sb.vars.len() => {
            if sa.ascending != sb.ascending {
                return Err("sort direction differs".into());
            }
            for (l, r) in sa.vars.iter().zip(&sb.vars) {
                vars.check(l, r).map_err(|e| format!("sort: {e}"))?;
            }
        }
        _ => return Err("sort clause differs".into()),
    }
    if a.head.limit != b.head.limit {
        return Err("limit differs".into());
    }
    Ok(())
}

fn map_rel_name(
    l: &str,
    r: &str,
    base: &HashSet<&str>,
    rel_map: &mut HashMap<String, String>,
) -> Result<(), String> {
    if base.contains(l) || base.contains(r) {
        if l != r {
            return Err(format!("base relation {l} vs {r}"));
        }
        return Ok(());
    }
    match rel_map.get(l) {
        Some(mapped) if mapped != r => Err(format!("relation {l} maps to {mapped}, not {r}")),
        _ => {
            rel_map.insert(l.to_string(), r.to_string());
            Ok(())
        }
    }
}

fn alpha_atom(
    a: &Atom,
    b: &Atom,
    ka: Option<CompareKind>,
    kb: Option<CompareKind>,
    base: &HashSet<&str>,
    rel_map: &mut HashMap<String, String>,
    vars: &mut VarMap,
) -> Result<(), String> {
    match (a, b) {
        (Atom::Rel(ra), Atom::Rel(rb)) => {
            map_rel_name(&ra.name, &rb.name, base, rel_map)?;
            if ra.vars.len() != rb.vars.len() {
                return Err("access arity differs".into());
            }
            for (l, r) in ra.vars.iter().zip(&rb.vars) {
                // Access variables may be fresh bindings or join re-uses;
                // a re-use must agree with the mapping.
                if vars.check(l, r).is_err() {
                    vars.bind(l, r);
                }
            }
            Ok(())
        }
        (Atom::Const(ca), Atom::Const(cb)) => {
            if ca.rows != cb.rows {
                return Err("constant relation rows differ".into());
            }
            for (l, r) in ca.vars.iter().zip(&cb.vars) {
                vars.bind(l, r);
            }
            Ok(())
        }
        (Atom::Exists(ia), Atom::Exists(ib)) => {
            if ia.len() != ib.len() {
                return Err("exists body length differs".into());
            }
            for (x, y) in ia.iter().zip(ib) {
                alpha_atom(x, y, None, None, base, rel_map, vars)?;
            }
            Ok(())
        }
        (Atom::Compare(cc), Atom::Compare(cd)) => {
            if cc.op != cd.op {
                return Err(format!("operator {} vs {}", cc.op, cd.op));
            }
            alpha_term(&cc.rhs, &cd.rhs, vars)?;
            let assign_a = ka == Some(CompareKind::Assignment) || cc.op == CmpOp::Eq && cc.rhs.contains_agg();
            let assign_b = kb == Some(CompareKind::Assignment) || cd.op == CmpOp::Eq && cd.rhs.contains_agg();
            if assign_a || assign_b {
                vars.bind(&cc.lhs, &cd.lhs);
                Ok(())
            } else {
                vars.check(&cc.lhs, &cd.lhs)
            }
        }
        (Atom::ExtAtom(ea), Atom::ExtAtom(eb)) => {
            if ea.name != eb.name || ea.args.len() != eb.args.len() {
                return Err(format!("marker {} vs {}", ea.name, eb.name));
            }
            for (l, r) in ea.args.iter().zip(&eb.args) {
                vars.check(l, r)?;
            }
            Ok(())
        }
        _ => Err(format!("atom shapes differ: {a:?} vs {b:?}")),
    }
}

fn alpha_term(a: &Term, b: &Term, vars: &VarMap) -> Result<(), String> {
    match (a, b) {
        (Term::Var(l), Term::Var(r)) => vars.check(l, r),
        (Term::Const(l), Term::Const(r)) => {
            if l == r {
                Ok(())
            } else {
                Err(format!("constants {l} vs {r}"))
            }
        }
        (Term::Agg(fa, ta), Term::Agg(fb, tb)) => {
            if fa != fb {
                return Err(format!("aggregate {} vs {}", fa.as_str(), fb.as_str()));
            }
            alpha_term(ta, tb, vars)
        }
        (Term::Ext(na, aa), Term::Ext(nb, ab)) => {
            if na != nb || aa.len() != ab.len() {
                return Err(format!("ext {na} vs {nb}"));
            }
            for (x, y) in aa.iter().zip(ab) {
                alpha_term(x, y, vars)?;
            }
            Ok(())
        }
        (Term::If(ca, ta, ea), Term::If(cb, tb, eb)) => {
            alpha_term(ca, cb, vars)?;
            alpha_term(ta, tb, vars)?;
            alpha_term(ea, eb, vars)
        }
        (Term::BinOp(oa, la, ra), Term::BinOp(ob, lb, rb)) => {
            if oa != ob {
                return Err(format!("operator {} vs {}", oa.as_str(), ob.as_str()));
            }
            alpha_term(la, lb, vars)?;
            alpha_term(ra, rb, vars)
        }
        _ => Err(format!("term shapes differ: {a:?} vs {b:?}")),
    }
}

// --- data builders ---------------------------------------------------------

pub fn rel(cols: &[&str], rows: Vec<Vec<Value>>) -> Relation {
    Relation::new(cols.iter().map(|c| c.to_string()).collect(), rows)
}

pub fn int_rows(rows: &[&[i64]]) -> Vec<Vec<Value>> {
    rows.iter()
        .map(|r| r.iter().map(|v| Value::Int(*v)).collect())
        .collect()
}

pub fn db(entries: Vec<(&str, Relation)>) -> Database {
    let mut out = Database::new();
    for (name, relation) in entries {
        out.insert(name, relation);
    }
    out
}
