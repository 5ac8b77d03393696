//! Rewrites that exploit uniqueness knowledge: dropping a GROUP BY whose
//! grouping columns are provably unique, and collapsing a self-join on a
//! unique, unfiltered column.

use super::uniqueness::{body_keys, KeyEnv};
use crate::catalog::Catalog;
use crate::tondir::ast::*;
use crate::tondir::validate::{classify_compares, CompareKind};
use std::collections::{HashMap, HashSet};

/// Removes grouping when the group columns are jointly unique in the
/// rule's body: aggregates degrade to their argument, `count` over a
/// constant becomes 1.
pub fn group_agg_elim(p: &Program, catalog: &Catalog) -> Program {
    let mut env = KeyEnv::from_catalog(catalog);
    let mut rules = Vec::with_capacity(p.rules.len());
    for rule in &p.rules {
        let mut rule = rule.clone();
        if let Some(group) = rule.head.group.clone() {
            let keys = body_keys(&rule, &env);
            if keys.covers(&group) && eliminable_aggs(&rule) {
                rule.head.group = None;
                for atom in &mut rule.body {
                    if let Atom::Compare(c) = atom {
                        c.rhs = degrade_aggs(c.rhs.clone());
                    }
                }
            }
        }
        env.extend_with_program(&Program::new(vec![rule.clone()]));
        rules.push(rule);
    }
    Program::new(rules)
}

/// `count` over a possibly-NULL variable cannot be rewritten to a
/// constant, so such rules are left alone.
fn eliminable_aggs(rule: &Rule) -> bool {
    fn term_ok(t: &Term) -> bool {
        match t {
            Term::Agg(AggFn::Count, arg) => matches!(**arg, Term::Const(_)),
            Term::Agg(_, _) => true,
            Term::BinOp(_, l, r) => term_ok(l) && term_ok(r),
            Term::If(c, a, b) => term_ok(c) && term_ok(a) && term_ok(b),
            Term::Ext(_, args) => args.iter().all(term_ok),
            Term::Var(_) | Term::Const(_) => true,
        }
    }
    rule.body.iter().all(|a| match a {
        Atom::Compare(c) => term_ok(&c.rhs),
        _ => true,
    })
}

fn degrade_aggs(t: Term) -> Term {
    match t {
        Term::Agg(AggFn::Count, _) => Term::int(1),
        Term::Agg(_, arg) => degrade_aggs(*arg),
        Term::BinOp(op, l, r) => Term::binop(op, degrade_aggs(*l), degrade_aggs(*r)),
        Term::If(c, a, b) => {
            Term::if_then_else(degrade_aggs(*c), degrade_aggs(*a), degrade_aggs(*b))
        }
        Term::Ext(name, args) => Term::Ext(name, args.into_iter().map(degrade_aggs).collect()),
        other => other,
    }
}

/// Collapses `R(a, x...), R(a, y...)` into a single access when the shared
/// columns cover a unique key of R and no filtering atom is restricted to
/// either access. The second access's variables are substituted by the
/// first access's variables at matching positions.
pub fn self_join_elim(p: &Program, catalog: &Catalog) -> Program {
    let mut env = KeyEnv::from_catalog(catalog);
    let mut rules = Vec::with_capacity(p.rules.len());
    for rule in &p.rules {
        let mut rule = rule.clone();
        loop {
            match try_eliminate_self_join(&rule, &env) {
                Some(rewritten) => rule = rewritten,
                None => break,
            }
        }
        env.extend_with_program(&Program::new(vec![rule.clone()]));
        rules.push(rule);
    }
    Program::new(rules)
}

fn try_eliminate_self_join(rule: &Rule, env: &KeyEnv) -> Option<Rule> {
    let accesses: Vec<(usize, &RelationAccess)> = rule
        .body
        .iter()
        .enumerate()
        .filter_map(|(i, a)| match a {
            Atom::Rel(rel) => Some((i, rel)),
            _ => None,
        })
        .collect();
    let has_outer = rule
        .body
        .iter()
        .any(|a| matches!(a, Atom::ExtAtom(e) if e.is_outer()));
    if has_outer {
        return None;
    }
    for (pi, (_, a)) in accesses.iter().enumerate() {
        for (ib, b) in accesses.iter().skip(pi + 1) {
            if a.name != b.name || a.vars.len() != b.vars.len() {
                continue;
            }
            // Shared variables must sit at the same positions so the join
            // pairs each row with itself.
            let shared: Vec<(usize, &String)> = a
                .vars
                .iter()
                .enumerate()
                .filter(|(k, v)| b.vars.get(*k) == Some(v))
                .map(|(k, v)| (k, v))
                .collect();
            if shared.is_empty() {
                continue;
            }
            let cross_shared = a
                .vars
                .iter()
                .enumerate()
                .any(|(k, v)| b.vars.contains(v) && b.vars.get(k) != Some(v));
            if cross_shared {
                continue;
            }
            let shared_positions: std::collections::BTreeSet<usize> =
                shared.iter().map(|(k, _)| *k).collect();
            let keys = env.keys.get(&a.name).cloned().unwrap_or_default();
            if !keys.iter().any(|k| k.is_subset(&shared_positions)) {
                continue;
            }
            if filtered_on(rule, a, b, &shared) {
                continue;
            }
            // Substitute b's variables by a's at matching positions and
            // drop the second access.
            let map: HashMap<String, String> = b
                .vars
                .iter()
                .zip(a.vars.iter())
                .filter(|(bv, av)| bv != av)
                .map(|(bv, av)| (bv.clone(), av.clone()))
                .collect();
            let mut out = rule.clone();
            out.body.remove(*ib);
            substitute_rule_vars(&mut out, &map);
            return Some(out);
        }
    }
    None
}

/// True if any filter (comparison or existential) references variables
/// bound by exactly one of the two accesses.
fn filtered_on(
    rule: &Rule,
    a: &RelationAccess,
    b: &RelationAccess,
    shared: &[(usize, &String)],
) -> bool {
    let shared_vars: HashSet<&String> = shared.iter().map(|(_, v)| *v).collect();
    let side_a: HashSet<&String> = a.vars.iter().filter(|v| !shared_vars.contains(v)).collect();
    let side_b: HashSet<&String> = b.vars.iter().filter(|v| !shared_vars.contains(v)).collect();
    let kinds = classify_compares(rule);
    for (i, atom) in rule.body.iter().enumerate() {
        let filter_vars: Vec<String> = match atom {
            Atom::Compare(c) if kinds[i] != Some(CompareKind::Assignment) => {
                let mut vars = vec![c.lhs.clone()];
                let mut rhs = Vec::new();
                c.rhs.collect_vars(&mut rhs);
                vars.extend(rhs.into_iter().map(str::to_string));
                vars
            }
            Atom::Exists(inner) => {
                let mut set = HashSet::new();
                super::dce::collect_exists_vars(inner, &mut set);
                set.into_iter().collect()
            }
            _ => continue,
        };
        let touches_a = filter_vars.iter().any(|v| side_a.contains(v));
        let touches_b = filter_vars.iter().any(|v| side_b.contains(v));
        if touches_a || touches_b {
            return true;
        }
    }
    false
}

pub(super) fn substitute_rule_vars(rule: &mut Rule, map: &HashMap<String, String>) {
    let subst = |v: &mut String| {
        if let Some(n) = map.get(v) {
            *v = n.clone();
        }
    };
    rule.head.rel.vars.iter_mut().for_each(subst);
    if let Some(g) = &mut rule.head.group {
        g.iter_mut().for_each(subst);
    }
    if let Some(s) = &mut rule.head.sort {
        s.vars.iter_mut().for_each(subst);
    }
    substitute_atoms(&mut rule.body, map);
}

pub(super) fn substitute_atoms(atoms: &mut [Atom], map: &HashMap<String, String>) {
    let subst = |v: &mut String| {
        if let Some(n) = map.get(v) {
            *v = n.clone();
        }
    };
    for atom in atoms {
        match atom {
            Atom::Rel(rel) => rel.vars.iter_mut().for_each(subst),
            Atom::Const(c) => c.vars.iter_mut().for_each(subst),
            Atom::ExtAtom(e) => e.args.iter_mut().for_each(subst),
            Atom::Exists(inner) => substitute_atoms(inner, map),
            Atom::Compare(c) => {
                subst(&mut c.lhs);
                substitute_term(&mut c.rhs, map);
            }
        }
    }
}

pub(super) fn substitute_term(term: &mut Term, map: &HashMap<String, String>) {
    match term {
        Term::Var(v) => {
            if let Some(n) = map.get(v) {
                *v = n.clone();
            }
        }
        Term::Const(_) => {}
        Term::Agg(_, arg) => substitute_term(arg, map),
        Term::Ext(_, args) => args.iter_mut().for_each(|a| substitute_term(a, map)),
        Term::If(c, t, e) => {
            substitute_term(c, map);
            substitute_term(t, map);
            substitute_term(e, map);
        }
        Term::BinOp(_, l, r) => {
            substitute_term(l, map);
            substitute_term(r, map);
        }
    }
}
