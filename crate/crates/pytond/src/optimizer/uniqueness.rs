//! Uniqueness propagation. Key knowledge starts at catalog constraints
//! and UID assignments and flows through filters and inner joins: a join
//! whose shared variables cover a key of one side preserves the other
//! side's keys, and the union of two sides' keys is always a key of the
//! join. Everything else is treated conservatively.

use crate::catalog::Catalog;
use crate::tondir::ast::*;
use std::collections::{BTreeSet, HashMap};

pub type VarKey = BTreeSet<String>;
/// Keys of a derived relation as head-column position sets. The empty set
/// means the relation has at most one row.
pub type PosKey = BTreeSet<usize>;

const MAX_KEYS: usize = 8;

/// Key sets (over body variables) of the joined body of a rule.
pub struct BodyKeys {
    pub keys: Vec<VarKey>,
}

impl BodyKeys {
    pub fn covers(&self, vars: &[String]) -> bool {
        let set: BTreeSet<&str> = vars.iter().map(String::as_str).collect();
        self.keys
            .iter()
            .any(|k| k.iter().all(|v| set.contains(v.as_str())))
    }
}

/// Per-relation key knowledge: name -> key position sets.
#[derive(Debug, Clone, Default)]
pub struct KeyEnv {
    pub keys: HashMap<String, Vec<PosKey>>,
}

impl KeyEnv {
    pub fn from_catalog(catalog: &Catalog) -> Self {
        let mut env = KeyEnv::default();
        for (name, table) in &catalog.tables {
            let mut sets = Vec::new();
            for unique in table.unique_sets() {
                let positions: Option<PosKey> = unique
                    .iter()
                    .map(|c| table.column_index(c))
                    .collect::<Option<BTreeSet<usize>>>();
                if let Some(p) = positions {
                    sets.push(p);
                }
            }
            env.keys.insert(name.clone(), sets);
        }
        env
    }

    /// Extends the environment with every rule's derived keys, in program
    /// order (the program must use unique definition names).
    pub fn extend_with_program(&mut self, p: &Program) {
        for rule in &p.rules {
            let keys = rule_output_keys(rule, self);
            self.keys.insert(rule.name().to_string(), keys);
        }
    }

    fn relation_keys(&self, name: &str) -> Vec<PosKey> {
        self.keys.get(name).cloned().unwrap_or_default()
    }
}

/// Keys of the rule's joined body, in body-variable terms.
pub fn body_keys(rule: &Rule, env: &KeyEnv) -> BodyKeys {
    let mut keys: Option<Vec<VarKey>> = None;
    let mut bound: BTreeSet<String> = BTreeSet::new();
    let has_outer = rule
        .body
        .iter()
        .any(|a| matches!(a, Atom::ExtAtom(e) if e.is_outer()));
    if has_outer {
        // Outer joins can inject NULL rows; stay conservative.
        return BodyKeys { keys: Vec::new() };
    }
    for atom in &rule.body {
        match atom {
            Atom::Rel(rel) => {
                let rel_keys: Vec<VarKey> = env
                    .relation_keys(&rel.name)
                    .into_iter()
                    .filter_map(|pos| {
                        pos.iter()
                            .map(|&i| rel.vars.get(i).cloned())
                            .collect::<Option<VarKey>>()
                    })
                    .collect();
                join_side(&mut keys, &mut bound, &rel.vars, rel_keys);
            }
            Atom::Const(c) => {
                let mut rel_keys = Vec::new();
                if c.rows.len() == 1 {
                    rel_keys.push(VarKey::new());
                }
                let mut distinct = true;
                for (i, r) in c.rows.iter().enumerate() {
                    for s in &c.rows[i + 1..] {
                        if r == s {
                            distinct = false;
                        }
                    }
                }
                if distinct {
                    rel_keys.push(c.vars.iter().cloned().collect());
                }
                join_side(&mut keys, &mut bound, &c.vars, rel_keys);
            }
            Atom::Compare(c) => {
                if c.op == CmpOp::Eq
                    && !bound.contains(&c.lhs)
                    && matches!(&c.rhs, Term::Ext(name, _) if name == "UID")
                {
                    if let Some(ks) = keys.as_mut() {
                        ks.push(std::iter::once(c.lhs.clone()).collect());
                    } else {
                        keys = Some(vec![std::iter::once(c.lhs.clone()).collect()]);
                    }
                }
                if c.op == CmpOp::Eq {
                    bound.insert(c.lhs.clone());
                }
            }
            Atom::Exists(_) | Atom::ExtAtom(_) => {}
        }
    }
    BodyKeys {
        keys: dedup_keys(keys.unwrap_or_default()),
    }
}

fn join_side(
    keys: &mut Option<Vec<VarKey>>,
    bound: &mut BTreeSet<String>,
    vars: &[String],
    side_keys: Vec<VarKey>,
) {
    let shared: BTreeSet<String> = vars.iter().filter(|v| bound.contains(*v)).cloned().collect();
    bound.extend(vars.iter().cloned());
    let Some(prev) = keys.take() else {
        *keys = Some(side_keys);
        return;
    };
    let mut next: Vec<VarKey> = Vec::new();
    let covers = |ks: &[VarKey], j: &BTreeSet<String>| ks.iter().any(|k| k.is_subset(j));
    // Join covers a key of the new side: previous keys survive.
    if covers(&side_keys, &shared) {
        next.extend(prev.iter().cloned());
    }
    // Join covers a previous key: the new side's keys survive.
    if covers(&prev, &shared) {
        next.extend(side_keys.iter().cloned());
    }
    // Unions of keys are always keys of the join.
    for a in &prev {
        for b in &side_keys {
            let mut u = a.clone();
            u.extend(b.iter().cloned());
            next.push(u);
        }
    }
    *keys = Some(dedup_keys(next));
}

fn dedup_keys(mut keys: Vec<VarKey>) -> Vec<VarKey> {
    keys.sort_by_key(|k| k.len());
    let mut out: Vec<VarKey> = Vec::new();
    for k in keys {
        // A superset of an existing key is redundant.
        if !out.iter().any(|have| have.is_subset(&k)) {
            out.push(k);
        }
        if out.len() >= MAX_KEYS {
            break;
        }
    }
    out
}

/// Keys of the rule's output relation, as head positions.
pub fn rule_output_keys(rule: &Rule, env: &KeyEnv) -> Vec<PosKey> {
    let head_vars = &rule.head.rel.vars;
    let pos_of = |v: &str| head_vars.iter().position(|h| h == v);
    let mut out: Vec<PosKey> = Vec::new();

    let has_agg = rule.body.iter().any(
        |a| matches!(a, Atom::Compare(c) if c.op == CmpOp::Eq && c.rhs.contains_agg()),
    );
    let has_unique = rule
        .body
        .iter()
        .any(|a| matches!(a, Atom::ExtAtom(e) if e.name == "unique"));

    if let Some(group) = &rule.head.group {
        if let Some(key) = group.iter().map(|v| pos_of(v)).collect::<Option<PosKey>>() {
            out.push(key);
        }
    } else if has_agg {
        // Aggregation over the whole input: at most one row.
        out.push(PosKey::new());
    }
    if has_unique {
        out.push((0..head_vars.len()).collect());
    }
    if rule.head.group.is_none() && !has_agg {
        let body = body_keys(rule, env);
        for key in body.keys {
            if let Some(pos) = key.iter().map(|v| pos_of(v)).collect::<Option<PosKey>>() {
                out.push(pos);
            }
        }
    }
    out.sort_by_key(|k| k.len());
    let mut deduped: Vec<PosKey> = Vec::new();
    for k in out {
        if !deduped.iter().any(|have| have.is_subset(&k)) {
            deduped.push(k);
        }
        if deduped.len() >= MAX_KEYS {
            break;
        }
    }
    deduped
}
