//! Rule inlining: fusible rules are substituted into their consumers until
//! only flow breakers and the sink remain.

use super::breakers::{classify_flow_breaker, FlowBreakerKind};
use super::rewrite::substitute_atoms;
use crate::tondir::analysis::dependency_graph;
use crate::tondir::ast::*;
use crate::tondir::validate::{classify_compares, CompareKind};
use std::collections::{HashMap, HashSet};

/// Fuses chains of rules. A rule is inlined when it is not a flow breaker,
/// does not assign a UID (row numbering is order-sensitive), and either
/// has a single consumer or is cheap to duplicate (join-free and
/// filter-only). Bodies are spliced at the access position with producer
/// head variables positionally substituted by the consumer's access
/// variables; remaining producer variables are renamed apart on collision.
pub fn inline_rules(p: &Program) -> Program {
    let mut prog = p.clone();
    loop {
        let Some((idx, consumers)) = find_inline_candidate(&prog) else {
            return prog;
        };
        let producer = prog.rules[idx].clone();
        for &j in &consumers {
            let consumer = &mut prog.rules[j];
            *consumer = splice(consumer, &producer);
        }
        prog.rules.remove(idx);
    }
}

fn find_inline_candidate(p: &Program) -> Option<(usize, Vec<usize>)> {
    let graph = dependency_graph(p, None).ok()?;
    for (i, rule) in p.rules.iter().enumerate() {
        if classify_flow_breaker(rule, &graph.consumers[i]) != FlowBreakerKind::None {
            continue;
        }
        if assigns_uid(rule) {
            continue;
        }
        let consumers = &graph.consumers[i];
        if consumers.is_empty() {
            continue;
        }
        // Splicing only handles top-level accesses; a producer referenced
        // inside an existential stays materialized.
        if consumers
            .iter()
            .any(|&j| accessed_in_exists(&p.rules[j].body, rule.name()))
        {
            continue;
        }
        // Fusing into an outer-join rule would move the producer's
        // filters across the NULL-padding boundary.
        if consumers.iter().any(|&j| {
            p.rules[j]
                .body
                .iter()
                .any(|a| matches!(a, Atom::ExtAtom(e) if e.is_outer()))
        }) {
            continue;
        }
        if consumers.len() > 1 || consumer_accesses(p, i, &graph.consumers[i]) > 1 {
            // Duplicating (or multiplying within one consumer) is only
            // worthwhile when re-running the body is trivial.
            if !is_cheap_to_duplicate(rule) {
                continue;
            }
        }
        return Some((i, consumers.clone()));
    }
    None
}

fn consumer_accesses(p: &Program, producer: usize, consumers: &[usize]) -> usize {
    let name = p.rules[producer].name();
    consumers
        .iter()
        .map(|&j| count_accesses(&p.rules[j].body, name))
        .sum()
}

fn count_accesses(atoms: &[Atom], name: &str) -> usize {
    atoms
        .iter()
        .map(|a| match a {
            Atom::Rel(rel) if rel.name == name => 1,
            Atom::Exists(inner) => count_accesses(inner, name),
            _ => 0,
        })
        .sum()
}

fn assigns_uid(rule: &Rule) -> bool {
    rule.body.iter().any(|a| {
        matches!(a, Atom::Compare(c)
            if c.op == CmpOp::Eq && matches!(&c.rhs, Term::Ext(name, _) if name == "UID"))
    })
}

fn is_cheap_to_duplicate(rule: &Rule) -> bool {
    let mut accesses = 0;
    let kinds = classify_compares(rule);
    for (i, atom) in rule.body.iter().enumerate() {
        match atom {
            Atom::Rel(_) => accesses += 1,
            Atom::Const(_) => accesses += 1,
            Atom::Exists(_) => return false,
            Atom::ExtAtom(_) => return false,
            Atom::Compare(_) => {
                if kinds[i] == Some(CompareKind::Assignment) {
                    return false;
                }
            }
        }
    }
    accesses <= 1
}

/// Replaces every access to `producer` in `consumer` with the producer's
/// body.
fn splice(consumer: &Rule, producer: &Rule) -> Rule {
    let mut taken: HashSet<String> = HashSet::new();
    collect_rule_vars(consumer, &mut taken);
    let mut out = consumer.clone();
    loop {
        let Some(pos) = find_access(&out.body, producer.name()) else {
            return out;
        };
        let Atom::Rel(access) = out.body.remove(pos) else {
            unreachable!()
        };
        // Positional substitution: producer head var i becomes the
        // consumer's access var i. Other producer variables keep their
        // names unless they collide with the consumer's.
        let mut map: HashMap<String, String> = HashMap::new();
        let mut extra_bindings: Vec<Atom> = Vec::new();
        for (h, u) in producer.head.rel.vars.iter().zip(access.vars.iter()) {
            match map.get(h) {
                None => {
                    map.insert(h.clone(), u.clone());
                }
                // A head variable repeated across positions binds several
                // consumer variables to the same value.
                Some(first) => extra_bindings.push(Atom::Compare(Compare {
                    lhs: u.clone(),
                    op: CmpOp::Eq,
                    rhs: Term::var(first.clone()),
                })),
            }
        }
        let mut producer_vars: HashSet<String> = HashSet::new();
        collect_body_vars(&producer.body, &mut producer_vars);
        let mut avoid: HashSet<String> = taken.union(&producer_vars).cloned().collect();
        for v in producer_vars.iter() {
            if map.contains_key(v) {
                continue;
            }
            if taken.contains(v) {
                let fresh = fresh_name(v, &avoid);
                avoid.insert(fresh.clone());
                taken.insert(fresh.clone());
                map.insert(v.clone(), fresh);
            } else {
                taken.insert(v.clone());
            }
        }
        let mut body = producer.body.clone();
        substitute_atoms(&mut body, &map);
        body.extend(extra_bindings);
        // Splice at the access position so evaluation order is preserved.
        for (k, atom) in body.into_iter().enumerate() {
            out.body.insert(pos + k, atom);
        }
    }
}

fn find_access(atoms: &[Atom], name: &str) -> Option<usize> {
    atoms.iter().position(|a| matches!(a, Atom::Rel(rel) if rel.name == name))
}

fn accessed_in_exists(atoms: &[Atom], name: &str) -> bool {
    atoms.iter().any(|a| match a {
        Atom::Exists(inner) => {
            count_accesses(inner, name) > 0 || accessed_in_exists(inner, name)
        }
        _ => false,
    })
}

fn fresh_name(base: &str, taken: &HashSet<String>) -> String {
    for i in 1.. {
        let candidate = format!("{base}_{i}");
        if !taken.contains(&candidate) {
            return candidate;
        }
    }
    unreachable!()
}

fn collect_rule_vars(rule: &Rule, out: &mut HashSet<String>) {
    out.extend(rule.head.rel.vars.iter().cloned());
    if let Some(g) = &rule.head.group {
        out.extend(g.iter().cloned());
    }
    if let Some(s) = &rule.head.sort {
        out.extend(s.vars.iter().cloned());
    }
    collect_body_vars(&rule.body, out);
}

fn collect_body_vars(atoms: &[Atom], out: &mut HashSet<String>) {
    for atom in atoms {
        match atom {
            Atom::Rel(rel) => out.extend(rel.vars.iter().cloned()),
            Atom::Const(c) => out.extend(c.vars.iter().cloned()),
            Atom::ExtAtom(e) => out.extend(e.args.iter().cloned()),
            Atom::Exists(inner) => collect_body_vars(inner, out),
            Atom::Compare(c) => {
                out.insert(c.lhs.clone());
                let mut vars = Vec::new();
                c.rhs.collect_vars(&mut vars);
                out.extend(vars.into_iter().map(str::to_string));
            }
        }
    }
}
