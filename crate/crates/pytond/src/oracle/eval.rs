//! Reference interpreter for TondIR over in-memory relations. Joins are
//! nested-loop, NULL and aggregate handling mirror SQL, and nothing is
//! optimized: this defines the semantics the optimizer and the SQL
//! backend are tested against.

use super::relation::{Database, Relation};
use super::value::{self, EvalError, Value};
use crate::tondir::ast::*;
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("rule {rule} ({name}): {source}")]
    Eval {
        rule: usize,
        name: String,
        source: EvalError,
    },
    #[error("rule {rule} ({name}): unknown relation {relation}")]
    UnknownRelation {
        rule: usize,
        name: String,
        relation: String,
    },
    #[error("rule {rule} ({name}): {message}")]
    Unsupported {
        rule: usize,
        name: String,
        message: String,
    },
}

type Env = HashMap<String, Value>;

/// Evaluates the whole program with most-recent-definition visibility and
/// returns the sink rule's relation. An empty program yields an empty
/// zero-column relation.
pub fn eval_program(p: &Program, db: &Database) -> Result<Relation, OracleError> {
    let mut derived: HashMap<String, Relation> = HashMap::new();
    let mut last = Relation::default();
    for (idx, rule) in p.rules.iter().enumerate() {
        let rel = eval_rule_at(idx, rule, db, &derived)?;
        derived.insert(rule.name().to_string(), rel.clone());
        last = rel;
    }
    Ok(last)
}

/// Evaluates one rule against base relations only.
pub fn eval_rule(rule: &Rule, db: &Database) -> Result<Relation, OracleError> {
    eval_rule_at(0, rule, db, &HashMap::new())
}

fn eval_rule_at(
    idx: usize,
    rule: &Rule,
    db: &Database,
    derived: &HashMap<String, Relation>,
) -> Result<Relation, OracleError> {
    let cx = RuleCx {
        idx,
        rule_name: rule.name().to_string(),
        db,
        derived,
    };
    cx.eval(rule)
}

struct RuleCx<'a> {
    idx: usize,
    rule_name: String,
    db: &'a Database,
    derived: &'a HashMap<String, Relation>,
}

impl<'a> RuleCx<'a> {
    fn lookup(&self, name: &str) -> Result<&Relation, OracleError> {
        self.derived
            .get(name)
            .or_else(|| self.db.get(name))
            .ok_or_else(|| OracleError::UnknownRelation {
                rule: self.idx,
                name: self.rule_name.clone(),
                relation: name.to_string(),
            })
    }

    fn err(&self, source: EvalError) -> OracleError {
        OracleError::Eval {
            rule: self.idx,
            name: self.rule_name.clone(),
            source,
        }
    }

    fn unsupported(&self, message: impl Into<String>) -> OracleError {
        OracleError::Unsupported {
            rule: self.idx,
            name: self.rule_name.clone(),
            message: message.into(),
        }
    }

    fn eval(&self, rule: &Rule) -> Result<Relation, OracleError> {
        let outer: Vec<&ExtAtom> = rule
            .body
            .iter()
            .filter_map(|a| match a {
                Atom::ExtAtom(e) if e.is_outer() => Some(e),
                _ => None,
            })
            .collect();
        if outer.len() > 1 {
            return Err(self.unsupported("more than one outer-join marker in a rule"));
        }
        let mut envs = self.join_phase(&rule.body, outer.first().copied())?;

        // Row phase: filters, assignments, existentials, in body order.
        // Assignments that involve aggregates (directly or through an
        // aggregated variable) are deferred to the group phase.
        let mut agg_atoms: Vec<&Atom> = Vec::new();
        let mut agg_vars: Vec<String> = Vec::new();
        let mut distinct = false;
        for atom in &rule.body {
            match atom {
                Atom::Rel(_) | Atom::Const(_) => {}
                Atom::ExtAtom(e) if e.is_outer() => {}
                Atom::ExtAtom(e) if e.name == "unique" => distinct = true,
                Atom::ExtAtom(e) => {
                    return Err(self.unsupported(format!("unknown marker atom {}", e.name)))
                }
                Atom::Exists(inner) => {
                    let mut kept = Vec::new();
                    for env in envs {
                        if !self.eval_exists(inner, &env)?.is_empty() {
                            kept.push(env);
                        }
                    }
                    envs = kept;
                }
                Atom::Compare(c) => {
                    let mut rhs_vars = Vec::new();
                    c.rhs.collect_vars(&mut rhs_vars);
                    let touches_agg = c.rhs.contains_agg()
                        || rhs_vars.iter().any(|v| agg_vars.iter().any(|a| a == v))
                        || agg_vars.iter().any(|a| a == &c.lhs);
                    if touches_agg {
                        if c.op == CmpOp::Eq && !agg_vars.contains(&c.lhs) {
                            agg_vars.push(c.lhs.clone());
                        }
                        agg_atoms.push(atom);
                        continue;
                    }
                    envs = self.apply_compare(c, envs)?;
                }
            }
        }

        // Group phase.
        let needs_group = !agg_atoms.is_empty() || rule.head.group.is_some();
        if needs_group {
            envs = self.group_phase(rule, envs, &agg_atoms)?;
        }

        // Sort on bindings, then project, then distinct and limit.
        if let Some(sort) = &rule.head.sort {
            sort_envs(&mut envs, sort);
        }
        let mut rows: Vec<Vec<Value>> = envs
            .iter()
            .map(|env| {
                rule.head
                    .rel
                    .vars
                    .iter()
                    .map(|v| env.get(v).cloned().unwrap_or(Value::Null))
                    .collect()
            })
            .collect();
        if distinct {
            let mut seen: Vec<Vec<Value>> = Vec::new();
            rows.retain(|row| {
                let dup = seen.iter().any(|s| {
                    s.iter()
                        .zip(row.iter())
                        .all(|(a, b)| a.cmp_total(b) == std::cmp::Ordering::Equal)
                });
                if !dup {
                    seen.push(row.clone());
                }
                !dup
            });
        }
        if let Some(limit) = rule.head.limit {
            rows.truncate(limit as usize);
        }
        Ok(Relation::new(rule.head.rel.vars.clone(), rows))
    }

    /// Joins all relation accesses and constant relations, handling at
    /// most one outer-join marker. The outer join binds exactly the two
    /// accesses carrying its variable pairs, at the left access's
    /// position, matching how JOIN syntax binds in SQL; other accesses
    /// cross-join around it.
    fn join_phase(&self, body: &[Atom], outer: Option<&ExtAtom>) -> Result<Vec<Env>, OracleError> {
        let accesses: Vec<&Atom> = body
            .iter()
            .filter(|a| matches!(a, Atom::Rel(_) | Atom::Const(_)))
            .collect();
        let Some(outer) = outer else {
            let mut envs = vec![Env::new()];
            for atom in accesses {
                envs = self.join_access(envs, atom)?;
            }
            return Ok(envs);
        };

        let pairs = outer.outer_pairs();
        if pairs.is_empty() {
            return Err(self.unsupported(format!("{} without join variables", outer.name)));
        }
        let binds_all = |atom: &&Atom, vars: &[&str]| match atom {
            Atom::Rel(rel) => vars.iter().all(|v| rel.vars.iter().any(|x| x == v)),
            _ => false,
        };
        let right_vars: Vec<&str> = pairs.iter().map(|(_, r)| *r).collect();
        let left_vars: Vec<&str> = pairs.iter().map(|(l, _)| *l).collect();
        let right_pos = accesses
            .iter()
            .position(|a| binds_all(a, &right_vars))
            .ok_or_else(|| self.unsupported("outer-join marker does not match an access"))?;
        let left_pos = accesses
            .iter()
            .enumerate()
            .position(|(i, a)| i != right_pos && binds_all(a, &left_vars))
            .ok_or_else(|| self.unsupported("outer-join marker does not match a left access"))?;
        let (Atom::Rel(left_rel), Atom::Rel(right_rel)) =
            (accesses[left_pos], accesses[right_pos])
        else {
            unreachable!()
        };
        let pair_envs = self.pairwise_outer(left_rel, right_rel, &pairs, &outer.name)?;

        let mut envs = vec![Env::new()];
        for (i, atom) in accesses.iter().enumerate() {
            if i == right_pos {
                continue;
            }
            if i == left_pos {
                envs = cross_unify(envs, &pair_envs);
            } else {
                envs = self.join_access(envs, atom)?;
            }
        }
        Ok(envs)
    }

    fn pairwise_outer(
        &self,
        left: &RelationAccess,
        right: &RelationAccess,
        pairs: &[(&str, &str)],
        kind: &str,
    ) -> Result<Vec<Env>, OracleError> {
        let left_rows = self.access_envs(left)?;
        let right_rows = self.access_envs(right)?;
        let matches_on = |l: &Env, r: &Env| -> bool {
            pairs.iter().all(|(lv, rv)| {
                match (l.get(*lv), r.get(*rv)) {
                    (Some(a), Some(b)) => a.eq_sql(b) == Some(true),
                    _ => false,
                }
            })
        };
        let null_env = |rel: &RelationAccess| -> Env {
            rel.vars.iter().map(|v| (v.clone(), Value::Null)).collect()
        };
        let mut out = Vec::new();
        if kind == "outer_left" || kind == "outer_full" {
            for l in &left_rows {
                let mut hit = false;
                for r in &right_rows {
                    if matches_on(l, r) {
                        hit = true;
                        let mut env = l.clone();
                        env.extend(r.clone());
                        out.push(env);
                    }
                }
                if !hit {
                    let mut env = l.clone();
                    env.extend(null_env(right));
                    out.push(env);
                }
            }
        }
        if kind == "outer_right" || kind == "outer_full" {
            for r in &right_rows {
                let mut hit = false;
                for l in &left_rows {
                    if matches_on(l, r) {
                        hit = true;
                        if kind == "outer_right" {
                            let mut env = l.clone();
                            env.extend(r.clone());
                            out.push(env);
                        }
                    }
                }
                if !hit {
                    let mut env = null_env(left);
                    env.extend(r.clone());
                    out.push(env);
                }
            }
        }
        if !matches!(kind, "outer_left" | "outer_right" | "outer_full") {
            return Err(self.unsupported(format!("unknown outer join {kind}")));
        }
        Ok(out)
    }

    fn access_envs(&self, rel: &RelationAccess) -> Result<Vec<Env>, OracleError> {
        let relation = self.lookup(&rel.name)?;
        if relation.arity() != rel.vars.len() {
            return Err(self.unsupported(format!(
                "access {} has {} variables but the relation has {} columns",
                crate::tondir::surface_name(&rel.name),
                rel.vars.len(),
                relation.arity()
            )));
        }
        Ok(relation
            .rows
            .iter()
            .map(|row| {
                rel.vars
                    .iter()
                    .zip(row.iter())
                    .map(|(v, x)| (v.clone(), x.clone()))
                    .collect()
            })
            .collect())
    }

    fn join_access(&self, envs: Vec<Env>, atom: &Atom) -> Result<Vec<Env>, OracleError> {
        let (vars, rows): (&[String], Vec<Vec<Value>>) = match atom {
            Atom::Rel(rel) => {
                let relation = self.lookup(&rel.name)?;
                if relation.arity() != rel.vars.len() {
                    return Err(self.unsupported(format!(
                        "access {} has {} variables but the relation has {} columns",
                        crate::tondir::surface_name(&rel.name),
                        rel.vars.len(),
                        relation.arity()
                    )));
                }
                (&rel.vars, relation.rows.clone())
            }
            Atom::Const(c) => (
                &c.vars,
                c.rows
                    .iter()
                    .map(|row| row.iter().map(Value::from_const).collect())
                    .collect(),
            ),
            _ => unreachable!(),
        };
        let mut out = Vec::new();
        for env in &envs {
            'rows: for row in &rows {
                let mut extended = env.clone();
                for (var, val) in vars.iter().zip(row.iter()) {
                    match extended.get(var) {
                        Some(prev) => {
                            if prev.eq_sql(val) != Some(true) {
                                continue 'rows;
                            }
                        }
                        None => {
                            extended.insert(var.clone(), val.clone());
                        }
                    }
                }
                out.push(extended);
            }
        }
        Ok(out)
    }

    fn apply_compare(&self, c: &Compare, mut envs: Vec<Env>) -> Result<Vec<Env>, OracleError> {
        // UID assigns 1..n over the rows in their current order.
        if c.op == CmpOp::Eq && matches!(&c.rhs, Term::Ext(name, _) if name == "UID") {
            for (i, env) in envs.iter_mut().enumerate() {
                env.insert(c.lhs.clone(), Value::Int(i as i64 + 1));
            }
            return Ok(envs);
        }
        let is_assignment = c.op == CmpOp::Eq && !envs.iter().any(|e| e.contains_key(&c.lhs));
        let mut out = Vec::new();
        for mut env in envs {
            let rhs = self.eval_term(&c.rhs, &env)?;
            if is_assignment {
                env.insert(c.lhs.clone(), rhs);
                out.push(env);
            } else {
                let lhs = env.get(&c.lhs).cloned().unwrap_or(Value::Null);
                let keep =
                    value::binop(BinOp::from_cmp(c.op), &lhs, &rhs).map_err(|e| self.err(e))?;
                if keep == Value::Bool(true) {
                    out.push(env);
                }
            }
        }
        Ok(out)
    }

    fn eval_exists(&self, inner: &[Atom], outer_env: &Env) -> Result<Vec<Env>, OracleError> {
        let mut envs = vec![outer_env.clone()];
        for atom in inner {
            match atom {
                Atom::Rel(_) | Atom::Const(_) => envs = self.join_access(envs, atom)?,
                Atom::Compare(c) => envs = self.apply_compare(c, envs)?,
                Atom::Exists(nested) => {
                    let mut kept = Vec::new();
                    for env in envs {
                        if !self.eval_exists(nested, &env)?.is_empty() {
                            kept.push(env);
                        }
                    }
                    envs = kept;
                }
                Atom::ExtAtom(e) => {
                    return Err(self.unsupported(format!("{} inside exists", e.name)))
                }
            }
            if envs.is_empty() {
                break;
            }
        }
        Ok(envs)
    }

    fn group_phase(
        &self,
        rule: &Rule,
        envs: Vec<Env>,
        agg_atoms: &[&Atom],
    ) -> Result<Vec<Env>, OracleError> {
        let group_vars = rule.head.group.clone().unwrap_or_default();
        let groups: Vec<Vec<Env>> = if group_vars.is_empty() {
            // Aggregation over everything: exactly one group, even when
            // the input is empty.
            vec![envs]
        } else {
            let mut keyed: Vec<(Vec<Value>, Vec<Env>)> = Vec::new();
            for env in envs {
                let key: Vec<Value> = group_vars
                    .iter()
                    .map(|v| env.get(v).cloned().unwrap_or(Value::Null))
                    .collect();
                match keyed.iter_mut().find(|(k, _)| {
                    k.iter()
                        .zip(key.iter())
                        .all(|(a, b)| a.cmp_total(b) == std::cmp::Ordering::Equal)
                }) {
                    Some((_, group)) => group.push(env),
                    None => keyed.push((key, vec![env])),
                }
            }
            keyed.into_iter().map(|(_, g)| g).collect()
        };

        let mut out = Vec::new();
        for group in groups {
            let mut env = group.first().cloned().unwrap_or_default();
            let mut keep = true;
            for atom in agg_atoms {
                let Atom::Compare(c) = atom else {
                    unreachable!()
                };
                let is_assignment = !env.contains_key(&c.lhs) || {
                    // The head may reuse a grouped source variable as an
                    // aggregation target; rebinding is an assignment.
                    c.op == CmpOp::Eq && c.rhs.contains_agg()
                };
                let rhs = self.eval_term_grouped(&c.rhs, &group, &env)?;
                if c.op == CmpOp::Eq && is_assignment {
                    env.insert(c.lhs.clone(), rhs);
                } else {
                    let lhs = env.get(&c.lhs).cloned().unwrap_or(Value::Null);
                    let ok = value::binop(BinOp::from_cmp(c.op), &lhs, &rhs)
                        .map_err(|e| self.err(e))?;
                    if ok != Value::Bool(true) {
                        keep = false;
                        break;
                    }
                }
            }
            if keep {
                out.push(env);
            }
        }
        Ok(out)
    }

    fn eval_term_grouped(
        &self,
        term: &Term,
        group: &[Env],
        env: &Env,
    ) -> Result<Value, OracleError> {
        match term {
            Term::Agg(fn_, arg) => {
                let mut vals = Vec::with_capacity(group.len());
                for row in group {
                    vals.push(self.eval_term(arg, row)?);
                }
                value::aggregate(*fn_, &vals).map_err(|e| self.err(e))
            }
            Term::BinOp(op, l, r) => {
                let lv = self.eval_term_grouped(l, group, env)?;
                let rv = self.eval_term_grouped(r, group, env)?;
                value::binop(*op, &lv, &rv).map_err(|e| self.err(e))
            }
            Term::If(c, t, e) => {
                let cond = self.eval_term_grouped(c, group, env)?;
                if cond == Value::Bool(true) {
                    self.eval_term_grouped(t, group, env)
                } else {
                    self.eval_term_grouped(e, group, env)
                }
            }
            other => self.eval_term(other, env),
        }
    }

    fn eval_term(&self, term: &Term, env: &Env) -> Result<Value, OracleError> {
        Ok(match term {
            Term::Var(v) => env.get(v).cloned().unwrap_or(Value::Null),
            Term::Const(c) => Value::from_const(c),
            Term::Agg(_, _) => {
                return Err(self.unsupported("aggregate outside a grouping context"))
            }
            Term::Ext(name, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_term(a, env)?);
                }
                value::ext_fn(name, &vals).map_err(|e| self.err(e))?
            }
            Term::If(c, t, e) => {
                let cond = self.eval_term(c, env)?;
                if cond == Value::Bool(true) {
                    self.eval_term(t, env)?
                } else {
                    self.eval_term(e, env)?
                }
            }
            Term::BinOp(op, l, r) => {
                let lv = self.eval_term(l, env)?;
                let rv = self.eval_term(r, env)?;
                value::binop(*op, &lv, &rv).map_err(|e| self.err(e))?
            }
        })
    }
}

/// Cross product of two env sets, equality-checking any shared variables.
fn cross_unify(base: Vec<Env>, add: &[Env]) -> Vec<Env> {
    let mut out = Vec::with_capacity(base.len() * add.len().max(1));
    for b in &base {
        'adds: for a in add {
            let mut env = b.clone();
            for (k, v) in a {
                match env.get(k) {
                    Some(prev) => {
                        if prev.eq_sql(v) != Some(true) {
                            continue 'adds;
                        }
                    }
                    None => {
                        env.insert(k.clone(), v.clone());
                    }
                }
            }
            out.push(env);
        }
    }
    out
}

/// Stable sort with NULLS LAST in both directions, matching the engine's
/// default null ordering.
fn sort_envs(envs: &mut [Env], sort: &SortSpec) {
    envs.sort_by(|a, b| {
        for (var, asc) in sort.vars.iter().zip(sort.ascending.iter()) {
            let (x, y) = (
                a.get(var).cloned().unwrap_or(Value::Null),
                b.get(var).cloned().unwrap_or(Value::Null),
            );
            let ord = match (x.is_null(), y.is_null()) {
                (true, true) => std::cmp::Ordering::Equal,
                (true, false) => std::cmp::Ordering::Greater,
                (false, true) => std::cmp::Ordering::Less,
                (false, false) => {
                    let o = x.cmp_sql(&y).unwrap_or(std::cmp::Ordering::Equal);
                    if *asc {
                        o
                    } else {
                        o.reverse()
                    }
                }
            };
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    });
}
