//! Lowers a validated TondIR program into a chain of CTEs plus a final
//! SELECT. Each rule becomes one CTE: relation accesses turn into FROM
//! items, shared variables into WHERE conjuncts, assignments into SELECT
//! expressions, aggregates into aggregate calls with GROUP BY from the
//! head, conditionals into CASE WHEN, constant relations into VALUES, and
//! outer-join markers into LEFT/RIGHT/FULL JOIN ... ON.

use super::dialect::{Dialect, DialectId};
use crate::catalog::Catalog;
use crate::tondir::ast::*;
use crate::tondir::printer::surface_name;
use crate::tondir::validate::{classify_compares, CompareKind};
use crate::tondir::version_program;
use std::collections::{HashMap, HashSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Cte {
    pub name: String,
    pub columns: Vec<String>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqlScript {
    pub dialect: DialectId,
    pub ctes: Vec<Cte>,
    pub final_select: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LowerError {
    #[error("cannot lower an empty program")]
    EmptyProgram,
    #[error("rule {rule}: access to {relation} has {got} variables but the relation has {expected} columns")]
    ArityMismatch {
        rule: usize,
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("rule {rule}: unknown relation {relation}")]
    UnknownRelation { rule: usize, relation: String },
    #[error("no {dialect} spelling for external function {name}")]
    UnmappedExt { dialect: &'static str, name: String },
    #[error("rule {rule}: variable {var} is not bound")]
    UnboundVar { rule: usize, var: String },
    #[error("rule {rule}: sort on a non-final rule loses ordering through a CTE; add a limit or sort the final rule")]
    NonSinkSort { rule: usize },
    #[error("rule {rule}: {message}")]
    Unsupported { rule: usize, message: String },
}

/// Renders the script as a single SQL statement, uppercase keywords, one
/// CTE per block. Deterministic and byte-stable for goldens.
pub fn render(script: &SqlScript) -> String {
    let mut out = String::new();
    if !script.ctes.is_empty() {
        out.push_str("WITH ");
        for (i, cte) in script.ctes.iter().enumerate() {
            if i > 0 {
                out.push_str(",\n");
            }
            out.push_str(&format!(
                "{}({}) AS (\n    {}\n)",
                cte.name,
                cte.columns.join(", "),
                cte.body
            ));
        }
        out.push('\n');
    }
    out.push_str(&script.final_select);
    out.push('\n');
    out
}

pub fn lower_program(
    p: &Program,
    dialect: &Dialect,
    catalog: &Catalog,
) -> Result<SqlScript, LowerError> {
    if p.rules.is_empty() {
        return Err(LowerError::EmptyProgram);
    }
    let versioned = version_program(p, &catalog.base_names());

    // Versioned names become SQL-safe unique CTE names.
    let mut sql_names: HashMap<String, String> = HashMap::new();
    let mut taken: HashSet<String> = catalog.base_names();
    for rule in &versioned.rules {
        let v = &rule.head.rel.name;
        if sql_names.contains_key(v) {
            continue;
        }
        let base = surface_name(v).to_string();
        let mut candidate = base.clone();
        let mut k = 1;
        while taken.contains(&candidate) {
            k += 1;
            candidate = format!("{base}_{k}");
        }
        taken.insert(candidate.clone());
        sql_names.insert(v.clone(), candidate);
    }

    let mut cte_columns: HashMap<String, Vec<String>> = HashMap::new();
    let mut ctes = Vec::new();
    let mut warnings = Vec::new();
    let sink_idx = versioned.rules.len() - 1;
    let mut final_select = String::new();
    for (idx, rule) in versioned.rules.iter().enumerate() {
        let mut lower = RuleLower {
            idx,
            dialect,
            catalog,
            sql_names: &sql_names,
            cte_columns: &cte_columns,
            warnings: &mut warnings,
            alias_counter: 0,
        };
        let is_sink = idx == sink_idx;
        let lowered = lower.lower_rule(rule, is_sink)?;
        let name = sql_names[&rule.head.rel.name].clone();
        cte_columns.insert(name.clone(), rule.head.rel.vars.clone());
        ctes.push(Cte {
            name: name.clone(),
            columns: rule.head.rel.vars.clone(),
            body: lowered.body,
        });
        if is_sink {
            let mut fs = format!("SELECT * FROM {name}");
            if let Some(tail) = lowered.sink_tail {
                fs.push(' ');
                fs.push_str(&tail);
            }
            final_select = fs;
        }
    }
    Ok(SqlScript {
        dialect: dialect.id,
        ctes,
        final_select,
        warnings,
    })
}

/// Emits the window expression for a UID occurrence. Without an explicit
/// ordering column the first column of the source is used and the caller
/// records a non-determinism warning.
pub fn lower_uid(order_col: Option<&str>) -> (String, Option<String>) {
    match order_col {
        Some(col) => (format!("row_number() OVER(ORDER BY {col}) AS ID"), None),
        None => (
            "row_number() OVER() AS ID".to_string(),
            Some("UID without an ordering column is non-deterministic".to_string()),
        ),
    }
}

struct LoweredRule {
    body: String,
    /// ORDER BY / LIMIT rendered onto the final SELECT for sink rules.
    sink_tail: Option<String>,
}

struct RuleLower<'a> {
    idx: usize,
    dialect: &'a Dialect,
    catalog: &'a Catalog,
    sql_names: &'a HashMap<String, String>,
    cte_columns: &'a HashMap<String, Vec<String>>,
    warnings: &'a mut Vec<String>,
    alias_counter: usize,
}

struct Scope {
    /// var -> qualified column reference.
    bindings: HashMap<String, String>,
    /// var -> lowered assignment expression.
    exprs: HashMap<String, String>,
    agg_vars: HashSet<String>,
}

impl Scope {
    fn new() -> Scope {
        Scope {
            bindings: HashMap::new(),
            exprs: HashMap::new(),
            agg_vars: HashSet::new(),
        }
    }

    fn resolve(&self, var: &str) -> Option<&String> {
        self.exprs.get(var).or_else(|| self.bindings.get(var))
    }
}

impl<'a> RuleLower<'a> {
    fn relation_columns(&self, name: &str) -> Result<(String, Vec<String>), LowerError> {
        if let Some(sql) = self.sql_names.get(name) {
            if let Some(cols) = self.cte_columns.get(sql) {
                return Ok((sql.clone(), cols.clone()));
            }
        }
        if let Some(table) = self.catalog.table(name) {
            return Ok((name.to_string(), table.column_names()));
        }
        Err(LowerError::UnknownRelation {
            rule: self.idx,
            relation: surface_name(name).to_string(),
        })
    }

    fn next_alias(&mut self) -> String {
        self.alias_counter += 1;
        format!("r{}", self.alias_counter)
    }

    fn lower_rule(&mut self, rule: &Rule, is_sink: bool) -> Result<LoweredRule, LowerError> {
        // Bare VALUES body for a pure constant-relation rule.
        if let [Atom::Const(c)] = rule.body.as_slice() {
            if c.vars == rule.head.rel.vars && rule.head.group.is_none() {
                let rows: Vec<String> = c
                    .rows
                    .iter()
                    .map(|row| {
                        let cells: Vec<String> =
                            row.iter().map(|v| self.constant(v)).collect();
                        format!("({})", cells.join(", "))
                    })
                    .collect();
                return Ok(LoweredRule {
                    body: format!("VALUES {}", rows.join(", ")),
                    sink_tail: None,
                });
            }
        }

        let accesses: Vec<(usize, &Atom)> = rule
            .body
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a, Atom::Rel(_) | Atom::Const(_)))
            .collect();
        let outer: Vec<&ExtAtom> = rule
            .body
            .iter()
            .filter_map(|a| match a {
                Atom::ExtAtom(e) if e.is_outer() => Some(e),
                _ => None,
            })
            .collect();
        if outer.len() > 1 {
            return Err(LowerError::Unsupported {
                rule: self.idx,
                message: "more than one outer-join marker in a rule".into(),
            });
        }

        let mut scope = Scope::new();
        let mut where_conds: Vec<String> = Vec::new();
        let mut from_items: Vec<String> = Vec::new();
        let mut first_access_col: Option<String> = None;

        // FROM items and variable bindings, positionally.
        let multi = accesses.len() > 1;
        let mut item_info: Vec<(String, String)> = Vec::new(); // (item sql, alias or name)
        for (_, atom) in &accesses {
            let (item, qualifier, vars, cols) = match atom {
                Atom::Rel(rel) => {
                    let (sql_name, cols) = self.relation_columns(&rel.name)?;
                    if cols.len() != rel.vars.len() {
                        return Err(LowerError::ArityMismatch {
                            rule: self.idx,
                            relation: surface_name(&rel.name).to_string(),
                            expected: cols.len(),
                            got: rel.vars.len(),
                        });
                    }
                    if multi {
                        let alias = self.next_alias();
                        (format!("{sql_name} AS {alias}"), alias, &rel.vars, cols)
                    } else {
                        (sql_name.clone(), String::new(), &rel.vars, cols)
                    }
                }
                Atom::Const(c) => {
                    let alias = self.next_alias();
                    let rows: Vec<String> = c
                        .rows
                        .iter()
                        .map(|row| {
                            let cells: Vec<String> =
                                row.iter().map(|v| self.constant(v)).collect();
                            format!("({})", cells.join(", "))
                        })
                        .collect();
                    (
                        format!("(VALUES {}) AS {alias}({})", rows.join(", "), c.vars.join(", ")),
                        alias,
                        &c.vars,
                        c.vars.clone(),
                    )
                }
                _ => unreachable!(),
            };
            for (var, col) in vars.iter().zip(cols.iter()) {
                let col_ref = if qualifier.is_empty() {
                    col.clone()
                } else {
                    format!("{qualifier}.{col}")
                };
                if first_access_col.is_none() {
                    first_access_col = Some(col_ref.clone());
                }
                match scope.bindings.get(var) {
                    Some(existing) => where_conds.push(format!("{existing} = {col_ref}")),
                    None => {
                        scope.bindings.insert(var.clone(), col_ref);
                    }
                }
            }
            item_info.push((item, qualifier));
        }

        // Outer join folds the right side's FROM item into a JOIN clause.
        if let Some(outer_atom) = outer.first() {
            let pairs = outer_atom.outer_pairs();
            let right_idx = accesses
                .iter()
                .position(|(_, a)| match a {
                    Atom::Rel(rel) => pairs.iter().all(|(_, r)| rel.vars.iter().any(|v| v == r)),
                    _ => false,
                })
                .ok_or_else(|| LowerError::Unsupported {
                    rule: self.idx,
                    message: "outer-join marker does not match an access".into(),
                })?;
            let left_idx = accesses
                .iter()
                .position(|(_, a)| match a {
                    Atom::Rel(rel) => pairs.iter().all(|(l, _)| rel.vars.iter().any(|v| v == l)),
                    Atom::Const(c) => pairs.iter().all(|(l, _)| c.vars.iter().any(|v| v == l)),
                    _ => false,
                })
                .filter(|i| *i != right_idx)
                .ok_or_else(|| LowerError::Unsupported {
                    rule: self.idx,
                    message: "outer-join marker does not match a left-side access".into(),
                })?;
            let join_kw = match outer_atom.name.as_str() {
                "outer_left" => "LEFT JOIN",
                "outer_right" => "RIGHT JOIN",
                _ => "FULL JOIN",
            };
            let on: Vec<String> = pairs
                .iter()
                .map(|(l, r)| {
                    Ok(format!(
                        "{} = {}",
                        scope
                            .bindings
                            .get(*l)
                            .ok_or_else(|| LowerError::UnboundVar {
                                rule: self.idx,
                                var: l.to_string(),
                            })?,
                        scope
                            .bindings
                            .get(*r)
                            .ok_or_else(|| LowerError::UnboundVar {
                                rule: self.idx,
                                var: r.to_string(),
                            })?
                    ))
                })
                .collect::<Result<_, LowerError>>()?;
            let joined = format!(
                "{} {} {} ON {}",
                item_info[left_idx].0,
                join_kw,
                item_info[right_idx].0,
                on.join(" AND ")
            );
            for (i, (item, _)) in item_info.iter().enumerate() {
                if i == left_idx {
                    from_items.push(joined.clone());
                } else if i != right_idx {
                    from_items.push(item.clone());
                }
            }
        } else {
            from_items.extend(item_info.iter().map(|(item, _)| item.clone()));
        }

        // Non-access atoms in order.
        let kinds = classify_compares(rule);
        let mut having: Vec<String> = Vec::new();
        let mut distinct = false;
        for (i, atom) in rule.body.iter().enumerate() {
            match atom {
                Atom::Rel(_) | Atom::Const(_) => {}
                Atom::ExtAtom(e) if e.is_outer() => {}
                Atom::ExtAtom(e) if e.name == "unique" => distinct = true,
                Atom::ExtAtom(e) => {
                    return Err(LowerError::Unsupported {
                        rule: self.idx,
                        message: format!("unknown marker atom {}", e.name),
                    })
                }
                Atom::Exists(inner) => {
                    let sub = self.lower_exists(inner, &scope)?;
                    where_conds.push(sub);
                }
                Atom::Compare(c) => {
                    if kinds[i] == Some(CompareKind::Assignment) {
                        if let Term::Ext(name, args) = &c.rhs {
                            if name == "UID" {
                                let order = match args.first() {
                                    Some(Term::Var(v)) => scope.resolve(v).cloned(),
                                    _ => first_access_col.clone(),
                                };
                                let expr = match order {
                                    Some(col) => format!("row_number() OVER(ORDER BY {col})"),
                                    None => "row_number() OVER()".to_string(),
                                };
                                self.warnings.push(format!(
                                    "rule {}: UID ordering follows the first column of its source; results depend on that order",
                                    self.idx
                                ));
                                scope.exprs.insert(c.lhs.clone(), expr);
                                continue;
                            }
                        }
                        let expr = self.term(&c.rhs, &scope)?;
                        if c.rhs.contains_agg() || self.refs_agg(&c.rhs, &scope) {
                            scope.agg_vars.insert(c.lhs.clone());
                        }
                        // Parenthesize so reuse inside other expressions
                        // keeps its grouping.
                        let stored = if matches!(c.rhs, Term::BinOp(..)) {
                            format!("({expr})")
                        } else {
                            expr
                        };
                        scope.exprs.insert(c.lhs.clone(), stored);
                    } else {
                        let lhs = scope.resolve(&c.lhs).cloned().ok_or_else(|| {
                            LowerError::UnboundVar {
                                rule: self.idx,
                                var: c.lhs.clone(),
                            }
                        })?;
                        let rhs = self.term(&c.rhs, &scope)?;
                        let op = match c.op {
                            CmpOp::Eq => "=",
                            CmpOp::Ne => "<>",
                            CmpOp::Lt => "<",
                            CmpOp::Le => "<=",
                            CmpOp::Gt => ">",
                            CmpOp::Ge => ">=",
                        };
                        let cond = format!("{lhs} {op} {rhs}");
                        let touches_agg = scope.agg_vars.contains(&c.lhs) || {
                            let mut vars = Vec::new();
                            c.rhs.collect_vars(&mut vars);
                            vars.iter().any(|v| scope.agg_vars.contains(*v))
                        } || c.rhs.contains_agg();
                        if touches_agg {
                            having.push(cond);
                        } else {
                            where_conds.push(cond);
                        }
                    }
                }
            }
        }

        // SELECT items from the head, positionally named.
        let mut select_items = Vec::new();
        for var in &rule.head.rel.vars {
            let item = if let Some(expr) = scope.exprs.get(var) {
                format!("{expr} AS {var}")
            } else if let Some(col_ref) = scope.bindings.get(var) {
                let terminal = col_ref.rsplit('.').next().unwrap_or(col_ref);
                if terminal == var {
                    col_ref.clone()
                } else {
                    format!("{col_ref} AS {var}")
                }
            } else {
                return Err(LowerError::UnboundVar {
                    rule: self.idx,
                    var: var.clone(),
                });
            };
            select_items.push(item);
        }

        let mut body = String::from("SELECT ");
        if distinct {
            body.push_str("DISTINCT ");
        }
        body.push_str(&select_items.join(", "));
        if !from_items.is_empty() {
            body.push_str(" FROM ");
            body.push_str(&from_items.join(", "));
        }
        if !where_conds.is_empty() {
            body.push_str(" WHERE ");
            body.push_str(&where_conds.join(" AND "));
        }
        if let Some(group) = &rule.head.group {
            let cols: Vec<String> = group
                .iter()
                .map(|v| {
                    scope
                        .resolve(v)
                        .cloned()
                        .ok_or_else(|| LowerError::UnboundVar {
                            rule: self.idx,
                            var: v.clone(),
                        })
                })
                .collect::<Result<_, _>>()?;
            body.push_str(" GROUP BY ");
            body.push_str(&cols.join(", "));
        }
        if !having.is_empty() {
            body.push_str(" HAVING ");
            body.push_str(&having.join(" AND "));
        }

        // Ordering: inside the CTE for non-final rules (only meaningful
        // with a limit), on the final SELECT for the sink.
        let mut sink_tail: Option<String> = None;
        let order_clause = match &rule.head.sort {
            Some(sort) => {
                let items: Vec<String> = sort
                    .vars
                    .iter()
                    .zip(&sort.ascending)
                    .map(|(v, asc)| {
                        let expr = if is_sink {
                            // The final SELECT sees the CTE's output columns.
                            if rule.head.rel.vars.contains(v) {
                                Ok(v.clone())
                            } else {
                                Err(LowerError::Unsupported {
                                    rule: self.idx,
                                    message: format!(
                                        "final sort variable {v} is not an output column"
                                    ),
                                })
                            }
                        } else {
                            scope
                                .resolve(v)
                                .cloned()
                                .ok_or_else(|| LowerError::UnboundVar {
                                    rule: self.idx,
                                    var: v.clone(),
                                })
                        }?;
                        Ok(format!(
                            "{expr} {} NULLS LAST",
                            if *asc { "ASC" } else { "DESC" }
                        ))
                    })
                    .collect::<Result<_, LowerError>>()?;
                Some(format!("ORDER BY {}", items.join(", ")))
            }
            None => None,
        };
        match (is_sink, order_clause, rule.head.limit) {
            (_, None, None) => {}
            (true, order, limit) => {
                let mut tail = String::new();
                if let Some(o) = order {
                    tail.push_str(&o);
                }
                if let Some(n) = limit {
                    if !tail.is_empty() {
                        tail.push(' ');
                    }
                    tail.push_str(&self.dialect.limit_clause(n));
                }
                sink_tail = Some(tail);
            }
            (false, Some(order), Some(n)) => {
                body.push(' ');
                body.push_str(&order);
                body.push(' ');
                body.push_str(&self.dialect.limit_clause(n));
            }
            (false, Some(_), None) => {
                return Err(LowerError::NonSinkSort { rule: self.idx });
            }
            (false, None, Some(n)) => {
                self.warnings.push(format!(
                    "rule {}: LIMIT without ORDER BY returns engine-order rows",
                    self.idx
                ));
                body.push(' ');
                body.push_str(&self.dialect.limit_clause(n));
            }
        }

        Ok(LoweredRule { body, sink_tail })
    }

    fn lower_exists(&mut self, atoms: &[Atom], parent: &Scope) -> Result<String, LowerError> {
        let mut scope = Scope {
            bindings: parent.bindings.clone(),
            exprs: parent.exprs.clone(),
            agg_vars: HashSet::new(),
        };
        let mut froms = Vec::new();
        let mut conds = Vec::new();
        for atom in atoms {
            match atom {
                Atom::Rel(rel) => {
                    let (sql_name, cols) = self.relation_columns(&rel.name)?;
                    if cols.len() != rel.vars.len() {
                        return Err(LowerError::ArityMismatch {
                            rule: self.idx,
                            relation: surface_name(&rel.name).to_string(),
                            expected: cols.len(),
                            got: rel.vars.len(),
                        });
                    }
                    let alias = self.next_alias();
                    froms.push(format!("{sql_name} AS {alias}"));
                    for (var, col) in rel.vars.iter().zip(cols.iter()) {
                        let col_ref = format!("{alias}.{col}");
                        match scope.bindings.get(var) {
                            Some(existing) => conds.push(format!("{col_ref} = {existing}")),
                            None => {
                                scope.bindings.insert(var.clone(), col_ref);
                            }
                        }
                    }
                }
                Atom::Compare(c) => {
                    let is_assignment =
                        c.op == CmpOp::Eq && scope.resolve(&c.lhs).is_none();
                    if is_assignment {
                        let expr = self.term(&c.rhs, &scope)?;
                        let stored = if matches!(c.rhs, Term::BinOp(..)) {
                            format!("({expr})")
                        } else {
                            expr
                        };
                        scope.exprs.insert(c.lhs.clone(), stored);
                    } else {
                        let lhs = scope.resolve(&c.lhs).cloned().ok_or_else(|| {
                            LowerError::UnboundVar {
                                rule: self.idx,
                                var: c.lhs.clone(),
                            }
                        })?;
                        let rhs = self.term(&c.rhs, &scope)?;
                        let op = match c.op {
                            CmpOp::Eq => "=",
                            CmpOp::Ne => "<>",
                            CmpOp::Lt => "<",
                            CmpOp::Le => "<=",
                            CmpOp::Gt => ">",
                            CmpOp::Ge => ">=",
                        };
                        conds.push(format!("{lhs} {op} {rhs}"));
                    }
                }
                Atom::Exists(inner) => {
                    conds.push(self.lower_exists(inner, &scope)?);
                }
                other => {
                    return Err(LowerError::Unsupported {
                        rule: self.idx,
                        message: format!("unsupported atom inside exists: {other:?}"),
                    })
                }
            }
        }
        let mut sub = String::from("EXISTS (SELECT 1");
        if !froms.is_empty() {
            sub.push_str(" FROM ");
            sub.push_str(&froms.join(", "));
        }
        if !conds.is_empty() {
            sub.push_str(" WHERE ");
            sub.push_str(&conds.join(" AND "));
        }
        sub.push(')');
        Ok(sub)
    }

    fn refs_agg(&self, term: &Term, scope: &Scope) -> bool {
        let mut vars = Vec::new();
        term.collect_vars(&mut vars);
        vars.iter().any(|v| scope.agg_vars.contains(*v))
    }

    fn constant(&self, c: &Constant) -> String {
        match c {
            Constant::Int(v) => v.to_string(),
            Constant::Float(v) => {
                if v.fract() == 0.0 && v.is_finite() && v.abs() < 1e15 {
                    format!("{v:.1}")
                } else {
                    format!("{v}")
                }
            }
            Constant::Bool(v) => self.dialect.bool_literal(*v),
            Constant::Str(s) => self.dialect.string_literal(s),
        }
    }

    fn term(&self, term: &Term, scope: &Scope) -> Result<String, LowerError> {
        self.term_prec(term, scope, 0)
    }

    fn term_prec(&self, term: &Term, scope: &Scope, parent: u8) -> Result<String, LowerError> {
        Ok(match term {
            Term::Var(v) => scope
                .resolve(v)
                .cloned()
                .ok_or_else(|| LowerError::UnboundVar {
                    rule: self.idx,
                    var: v.clone(),
                })?,
            Term::Const(c) => self.constant(c),
            Term::Agg(f, arg) => {
                if *f == AggFn::Count && matches!(**arg, Term::Const(_)) {
                    "COUNT(*)".to_string()
                } else {
                    format!(
                        "{}({})",
                        match f {
                            AggFn::Sum => "SUM",
                            AggFn::Min => "MIN",
                            AggFn::Max => "MAX",
                            AggFn::Count => "COUNT",
                            AggFn::Avg => "AVG",
                        },
                        self.term_prec(arg, scope, 0)?
                    )
                }
            }
            Term::Ext(name, args) => {
                let lowered: Vec<String> = args
                    .iter()
                    .map(|a| self.term_prec(a, scope, 0))
                    .collect::<Result<_, _>>()?;
                self.dialect.ext_call(name, &lowered).ok_or_else(|| {
                    LowerError::UnmappedExt {
                        dialect: self.dialect.id.name(),
                        name: name.clone(),
                    }
                })?
            }
            Term::If(c, t, e) => format!(
                "CASE WHEN {} THEN {} ELSE {} END",
                self.term_prec(c, scope, 0)?,
                self.term_prec(t, scope, 0)?,
                self.term_prec(e, scope, 0)?
            ),
            Term::BinOp(op, l, r) => {
                let prec = sql_prec(*op);
                let text = format!(
                    "{}{}{}",
                    self.term_prec(l, scope, prec)?,
                    sql_op(*op),
                    self.term_prec(r, scope, prec + 1)?
                );
                if prec < parent {
                    format!("({text})")
                } else {
                    text
                }
            }
        })
    }
}

fn sql_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Like | BinOp::Concat => 4,
        BinOp::Add | BinOp::Sub => 5,
        BinOp::Mul | BinOp::Div => 6,
    }
}

fn sql_op(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::And => " AND ",
        BinOp::Or => " OR ",
        BinOp::Like => " LIKE ",
        BinOp::Concat => " || ",
        BinOp::Eq => " = ",
        BinOp::Ne => " <> ",
        BinOp::Lt => " < ",
        BinOp::Le => " <= ",
        BinOp::Gt => " > ",
        BinOp::Ge => " >= ",
    }
}
