//! Rule-level program analysis: most-recent-definition resolution,
//! internal name versioning and the rule dependency graph.

use super::ast::*;
use std::collections::{HashMap, HashSet};

/// Rewrites relation names so every definition is unique. The k-th
/// definition of `name` becomes `name$k` except that a single, non-shadowing
/// definition keeps its surface name. Body references are renamed to the
/// most recent prior definition; unknown names are left alone (base
/// relations). Printing strips the suffix again.
pub fn version_program(p: &Program, base_names: &HashSet<String>) -> Program {
    let mut def_count: HashMap<String, usize> = HashMap::new();
    for rule in &p.rules {
        *def_count.entry(rule.name().to_string()).or_insert(0) += 1;
    }

    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut current: HashMap<String, String> = HashMap::new();
    let mut rules = Vec::with_capacity(p.rules.len());
    for rule in &p.rules {
        let mut rule = rule.clone();
        rename_body_accesses(&mut rule.body, &current);
        let name = rule.name().to_string();
        let k = seen.entry(name.clone()).or_insert(0);
        *k += 1;
        let needs_suffix = def_count[&name] > 1 || base_names.contains(&name);
        let versioned = if needs_suffix {
            format!("{name}${k}")
        } else {
            name.clone()
        };
        current.insert(name, versioned.clone());
        rule.head.rel.name = versioned;
        rules.push(rule);
    }
    Program::new(rules)
}

fn rename_body_accesses(atoms: &mut [Atom], current: &HashMap<String, String>) {
    for atom in atoms {
        match atom {
            Atom::Rel(rel) => {
                if let Some(v) = current.get(&rel.name) {
                    rel.name = v.clone();
                }
            }
            Atom::Exists(inner) => rename_body_accesses(inner, current),
            Atom::Const(_) | Atom::Compare(_) | Atom::ExtAtom(_) => {}
        }
    }
}

/// Dependency graph over rule indices: an edge `i -> j` means rule `j`'s
/// body references the relation defined by rule `i`, resolving each name
/// to its most recent prior definition. Acyclic by construction since
/// references only look backwards.
#[derive(Debug, Clone, Default)]
pub struct DepGraph {
    /// edges[i] = indices of rules that consume rule i's relation.
    pub consumers: Vec<Vec<usize>>,
    /// producers[j] = indices of rules whose relations rule j reads.
    pub producers: Vec<Vec<usize>>,
    /// Base relation names referenced by each rule.
    pub base_refs: Vec<Vec<String>>,
}

impl DepGraph {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, cs) in self.consumers.iter().enumerate() {
            for &j in cs {
                out.push((i, j));
            }
        }
        out
    }

    /// Rules with no consumers (the sink is always one of these).
    pub fn sinks(&self) -> Vec<usize> {
        self.consumers
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("rule {rule}: unresolved relation {name}")]
pub struct UnresolvedRef {
    pub rule: usize,
    pub name: String,
}

/// Builds the dependency graph. When `base` is given, body references that
/// resolve to neither an earlier rule nor a base relation are an error.
pub fn dependency_graph(
    p: &Program,
    base: Option<&HashSet<String>>,
) -> Result<DepGraph, UnresolvedRef> {
    let n = p.rules.len();
    let mut graph = DepGraph {
        consumers: vec![Vec::new(); n],
        producers: vec![Vec::new(); n],
        base_refs: vec![Vec::new(); n],
    };
    let mut latest: HashMap<&str, usize> = HashMap::new();
    for (j, rule) in p.rules.iter().enumerate() {
        let mut refs = Vec::new();
        collect_access_names(&rule.body, &mut refs);
        for name in refs {
            match latest.get(name.as_str()) {
                Some(&i) => {
                    if !graph.consumers[i].contains(&j) {
                        graph.consumers[i].push(j);
                    }
                    if !graph.producers[j].contains(&i) {
                        graph.producers[j].push(i);
                    }
                }
                None => {
                    if let Some(base) = base {
                        if !base.contains(&name) {
                            return Err(UnresolvedRef { rule: j, name });
                        }
                    }
                    if !graph.base_refs[j].contains(&name) {
                        graph.base_refs[j].push(name);
                    }
                }
            }
        }
        latest.insert(rule.name(), j);
    }
    Ok(graph)
}

fn collect_access_names(atoms: &[Atom], out: &mut Vec<String>) {
    for atom in atoms {
        match atom {
            Atom::Rel(rel) => out.push(rel.name.clone()),
            Atom::Exists(inner) => collect_access_names(inner, out),
            Atom::Const(_) | Atom::Compare(_) | Atom::ExtAtom(_) => {}
        }
    }
}

/// All relation names a program's bodies reference without defining first
/// (the base relations it needs from the catalog).
pub fn required_base_relations(p: &Program) -> Vec<String> {
    let graph = dependency_graph(p, None).expect("infallible without base set");
    let mut out = Vec::new();
    for refs in graph.base_refs {
        for name in refs {
            if !out.contains(&name) {
                out.push(name);
            }
        }
    }
    out
}
