//! Dead code elimination. The local pass drops assignments whose variable
//! nothing reads within the rule; the global pass removes rules nothing
//! consumes and narrows heads to the columns downstream rules actually
//! use.

use crate::tondir::analysis::dependency_graph;
use crate::tondir::ast::*;
use crate::tondir::validate::{classify_compares, CompareKind};
use std::collections::HashSet;

/// Variables a rule *reads*: head projection, group and sort lists,
/// comparison operands, marker-atom arguments, existential bodies, and
/// every variable that appears more than once across accesses and
/// assignment targets (those express joins).
fn used_vars(rule: &Rule) -> HashSet<String> {
    let mut used: HashSet<String> = HashSet::new();
    used.extend(rule.head.rel.vars.iter().cloned());
    if let Some(g) = &rule.head.group {
        used.extend(g.iter().cloned());
    }
    if let Some(s) = &rule.head.sort {
        used.extend(s.vars.iter().cloned());
    }
    let kinds = classify_compares(rule);
    let mut binding_counts: std::collections::HashMap<&str, usize> = Default::default();
    for (i, atom) in rule.body.iter().enumerate() {
        match atom {
            Atom::Rel(rel) => {
                for v in &rel.vars {
                    *binding_counts.entry(v.as_str()).or_insert(0) += 1;
                }
            }
            Atom::Const(c) => {
                for v in &c.vars {
                    *binding_counts.entry(v.as_str()).or_insert(0) += 1;
                }
            }
            Atom::Exists(inner) => collect_exists_vars(inner, &mut used),
            Atom::ExtAtom(e) => used.extend(e.args.iter().cloned()),
            Atom::Compare(c) => {
                let mut vars = Vec::new();
                c.rhs.collect_vars(&mut vars);
                used.extend(vars.into_iter().map(str::to_string));
                match kinds[i] {
                    Some(CompareKind::Assignment) => {
                        *binding_counts.entry(c.lhs.as_str()).or_insert(0) += 1;
                    }
                    _ => {
                        used.insert(c.lhs.clone());
                    }
                }
            }
        }
    }
    for (v, n) in binding_counts {
        if n > 1 {
            used.insert(v.to_string());
        }
    }
    used
}

pub(super) fn collect_exists_vars(atoms: &[Atom], out: &mut HashSet<String>) {
    for atom in atoms {
        match atom {
            Atom::Rel(rel) => out.extend(rel.vars.iter().cloned()),
            Atom::Const(c) => out.extend(c.vars.iter().cloned()),
            Atom::ExtAtom(e) => out.extend(e.args.iter().cloned()),
            Atom::Exists(inner) => collect_exists_vars(inner, out),
            Atom::Compare(c) => {
                out.insert(c.lhs.clone());
                let mut vars = Vec::new();
                c.rhs.collect_vars(&mut vars);
                out.extend(vars.into_iter().map(str::to_string));
            }
        }
    }
}

/// Removes assignments whose variable is never read, to fixpoint.
pub fn local_dce(p: &Program) -> Program {
    let rules = p.rules.iter().map(local_dce_rule).collect();
    Program::new(rules)
}

fn local_dce_rule(rule: &Rule) -> Rule {
    let mut rule = rule.clone();
    loop {
        let used = used_vars(&rule);
        let kinds = classify_compares(&rule);
        let keep: Vec<bool> = rule
            .body
            .iter()
            .enumerate()
            .map(|(i, atom)| match (atom, kinds[i]) {
                (Atom::Compare(c), Some(CompareKind::Assignment)) => used.contains(&c.lhs),
                _ => true,
            })
            .collect();
        if keep.iter().all(|k| *k) {
            return rule;
        }
        let mut it = keep.iter();
        rule.body.retain(|_| *it.next().unwrap());
    }
}

/// Removes rules without consumers (except the sink) and narrows non-sink
/// heads to the positions downstream rules read. Accesses in consumers are
/// shrunk in lockstep so positional binding stays aligned.
pub fn global_dce(p: &Program) -> Program {
    let mut prog = local_dce(p);
    loop {
        let before = prog.clone();
        prog = drop_dead_rules(&prog);
        prog = narrow_heads(&prog);
        prog = local_dce(&prog);
        if prog == before {
            return prog;
        }
    }
}

fn drop_dead_rules(p: &Program) -> Program {
    if p.rules.is_empty() {
        return p.clone();
    }
    let graph = dependency_graph(p, None).expect("graph without base set");
    let sink = p.rules.len() - 1;
    let keep: Vec<bool> = (0..p.rules.len())
        .map(|i| i == sink || !graph.consumers[i].is_empty())
        .collect();
    if keep.iter().all(|k| *k) {
        return p.clone();
    }
    let rules = p
        .rules
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(r, _)| r.clone())
        .collect();
    Program::new(rules)
}

fn narrow_heads(p: &Program) -> Program {
    if p.rules.is_empty() {
        return p.clone();
    }
    let graph = dependency_graph(p, None).expect("graph without base set");
    let sink = p.rules.len() - 1;
    let mut def_counts: std::collections::HashMap<&str, usize> = Default::default();
    for rule in &p.rules {
        *def_counts.entry(rule.name()).or_insert(0) += 1;
    }
    let mut prog = p.clone();
    for i in 0..prog.rules.len() {
        if i == sink || graph.consumers[i].is_empty() {
            continue;
        }
        // Narrowing matches accesses by name; redefined names are skipped
        // (the optimizer entry point versions them apart up front).
        if def_counts[prog.rules[i].name()] > 1 {
            continue;
        }
        let arity = prog.rules[i].head.rel.arity();
        let name = prog.rules[i].head.rel.name.clone();
        // Positions any consumer reads through its access to this rule.
        let mut needed: Vec<bool> = vec![false; arity];
        for &j in &graph.consumers[i] {
            let consumer = &prog.rules[j];
            let used = used_vars(consumer);
            mark_needed(&consumer.body, &name, &used, &mut needed);
        }
        if needed.iter().all(|n| *n) {
            continue;
        }
        if needed.iter().all(|n| !*n) {
            // Consumers keep the rule alive only for its cardinality;
            // retain one column to keep the relation well-formed.
            needed[0] = true;
        }
        prog.rules[i].head.rel.vars = prune(&prog.rules[i].head.rel.vars, &needed);
        for &j in &graph.consumers[i] {
            let consumer = &mut prog.rules[j];
            prune_accesses(&mut consumer.body, &name, &needed);
        }
    }
    prog
}

fn mark_needed(atoms: &[Atom], name: &str, used: &HashSet<String>, needed: &mut [bool]) {
    let mut counts: std::collections::HashMap<&str, usize> = Default::default();
    count_access_vars(atoms, &mut counts);
    for atom in atoms {
        match atom {
            Atom::Rel(rel) if rel.name == name => {
                for (k, v) in rel.vars.iter().enumerate() {
                    if k < needed.len() && (used.contains(v) || counts.get(v.as_str()) > Some(&1)) {
                        needed[k] = true;
                    }
                }
            }
            Atom::Exists(inner) => mark_needed(inner, name, used, needed),
            _ => {}
        }
    }
}

fn count_access_vars<'a>(atoms: &'a [Atom], counts: &mut std::collections::HashMap<&'a str, usize>) {
    for atom in atoms {
        match atom {
            Atom::Rel(rel) => {
                for v in &rel.vars {
                    *counts.entry(v.as_str()).or_insert(0) += 1;
                }
            }
            Atom::Const(c) => {
                for v in &c.vars {
                    *counts.entry(v.as_str()).or_insert(0) += 1;
                }
            }
            Atom::Exists(inner) => count_access_vars(inner, counts),
            _ => {}
        }
    }
}

fn prune(vars: &[String], needed: &[bool]) -> Vec<String> {
    vars.iter()
        .zip(needed)
        .filter(|(_, n)| **n)
        .map(|(v, _)| v.clone())
        .collect()
}

fn prune_accesses(atoms: &mut [Atom], name: &str, needed: &[bool]) {
    for atom in atoms {
        match atom {
            Atom::Rel(rel) if rel.name == name => {
                if rel.vars.len() == needed.len() {
                    rel.vars = prune(&rel.vars, needed);
                }
            }
            Atom::Exists(inner) => prune_accesses(inner, name, needed),
            _ => {}
        }
    }
}
