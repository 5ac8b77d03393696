//! Seeded generators for differential testing: random valid programs for
//! round-trip properties and random relational pipelines with matching
//! databases for optimizer/backend equivalence suites.

use crate::catalog::{Catalog, ScalarType, TableSchema};
use crate::oracle::{Database, Relation, Value};
use crate::tondir::ast::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct GeneratedCase {
    pub program: Program,
    pub catalog: Catalog,
    pub db: Database,
}

const STRINGS: &[&str] = &["a", "b", "c", "dd", "ee", "x", "yy", "z"];

fn rng_for(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed ^ 0x70_6e_64_74)
}

fn random_value(rng: &mut StdRng, ty: ScalarType, nullable: bool) -> Value {
    if nullable && rng.gen_bool(0.08) {
        return Value::Null;
    }
    match ty {
        ScalarType::Int64 => Value::Int(rng.gen_range(-20..=20)),
        ScalarType::Float64 => Value::Float(rng.gen_range(-40..=40) as f64 * 0.5),
        ScalarType::Bool => Value::Bool(rng.gen_bool(0.5)),
        ScalarType::String | ScalarType::Date => {
            Value::Str(STRINGS[rng.gen_range(0..STRINGS.len())].to_string())
        }
    }
}

fn random_constant(rng: &mut StdRng, ty: ScalarType) -> Constant {
    match ty {
        ScalarType::Int64 => Constant::Int(rng.gen_range(-20..=20)),
        ScalarType::Float64 => Constant::Float(rng.gen_range(-40..=40) as f64 * 0.5),
        ScalarType::Bool => Constant::Bool(rng.gen_bool(0.5)),
        ScalarType::String | ScalarType::Date => {
            Constant::Str(STRINGS[rng.gen_range(0..STRINGS.len())].to_string())
        }
    }
}

/// A random base table whose data honors its declared primary key.
fn gen_table(rng: &mut StdRng, name: &str) -> (TableSchema, Relation) {
    let n_cols = rng.gen_range(2..=5);
    let mut cols: Vec<(String, ScalarType)> = Vec::new();
    for k in 0..n_cols {
        let ty = match rng.gen_range(0..4) {
            0 => ScalarType::Int64,
            1 => ScalarType::Float64,
            2 => ScalarType::String,
            _ => ScalarType::Int64,
        };
        cols.push((format!("c{k}"), ty));
    }
    let with_pk = rng.gen_bool(0.5);
    let n_rows = rng.gen_range(0..=50);
    let mut rows: Vec<Vec<Value>> = Vec::new();
    let mut next_key: i64 = rng.gen_range(-5..=0);
    for _ in 0..n_rows {
        let mut row = Vec::with_capacity(cols.len());
        for (k, (_, ty)) in cols.iter().enumerate() {
            if k == 0 && with_pk {
                // Strictly increasing first column when declared a key.
                next_key += rng.gen_range(1..=3);
                row.push(Value::Int(next_key));
            } else {
                row.push(random_value(rng, *ty, k != 0));
            }
        }
        rows.push(row);
    }
    let mut schema = TableSchema::new(
        name,
        cols.iter().map(|(n, t)| (n.as_str(), *t)).collect(),
    );
    if with_pk {
        schema.columns[0].ty = ScalarType::Int64;
        schema = schema.with_primary_key(&["c0"]);
    }
    schema = schema.with_cardinality(n_rows as u64);
    let relation = Relation::new(cols.iter().map(|(n, _)| n.clone()).collect(), rows);
    (schema, relation)
}

struct RelInfo {
    name: String,
    cols: Vec<(String, ScalarType)>,
}

/// A random pipeline of filters, projections, computed columns, inner and
/// outer joins, group-aggregates and sort/limit over a random database.
pub fn gen_pipeline(seed: u64) -> GeneratedCase {
    let mut rng = rng_for(seed);
    let n_tables = rng.gen_range(2..=3);
    let mut schemas = Vec::new();
    let mut db = Database::new();
    let mut sources: Vec<RelInfo> = Vec::new();
    for t in 0..n_tables {
        let name = format!("t{t}");
        let (schema, relation) = gen_table(&mut rng, &name);
        sources.push(RelInfo {
            name: name.clone(),
            cols: schema
                .columns
                .iter()
                .map(|c| (c.name.clone(), c.ty))
                .collect(),
        });
        schemas.push(schema);
        db.insert(name, relation);
    }
    let catalog = Catalog::new(schemas);

    let mut rules: Vec<Rule> = Vec::new();
    let n_rules = rng.gen_range(2..=6);
    for r in 0..n_rules {
        let is_last = r + 1 == n_rules;
        let rule = gen_rule(&mut rng, r, &mut sources, is_last);
        rules.push(rule);
    }
    GeneratedCase {
        program: Program::new(rules),
        catalog,
        db,
    }
}

fn pick_source(rng: &mut StdRng, sources: &[RelInfo]) -> usize {
    // Prefer recent relations so pipelines chain.
    if sources.len() > 1 && rng.gen_bool(0.6) {
        sources.len() - 1 - rng.gen_range(0..2.min(sources.len() - 1))
    } else {
        rng.gen_range(0..sources.len())
    }
}

fn gen_rule(rng: &mut StdRng, idx: usize, sources: &mut Vec<RelInfo>, is_last: bool) -> Rule {
    let name = format!("q{idx}");
    let kind = rng.gen_range(0..10);
    let (rule, out_cols) = match kind {
        // Join of two sources.
        0 | 1 | 2 => gen_join_rule(rng, &name, sources, kind == 2),
        // Group-aggregate.
        3 | 4 => gen_group_rule(rng, &name, sources),
        // Filter/project/compute.
        _ => gen_map_rule(rng, &name, sources),
    };
    let mut rule = rule;
    // Sorting under a limit orders by every column so ties at the cut are
    // between identical rows and the taken multiset is well-defined.
    if is_last && rng.gen_bool(0.4) {
        let head_vars = rule.head.rel.vars.clone();
        let with_limit = rng.gen_bool(0.5);
        let vars: Vec<String> = if with_limit {
            head_vars.clone()
        } else {
            head_vars.iter().take(rng.gen_range(1..=head_vars.len())).cloned().collect()
        };
        let ascending: Vec<bool> = vars.iter().map(|_| rng.gen_bool(0.7)).collect();
        rule.head.sort = Some(SortSpec { vars, ascending });
        if with_limit {
            rule.head.limit = Some(rng.gen_range(0..8));
        }
    } else if !is_last && rng.gen_bool(0.15) && rule.head.group.is_none() {
        let head_vars = rule.head.rel.vars.clone();
        let ascending: Vec<bool> = head_vars.iter().map(|_| rng.gen_bool(0.5)).collect();
        rule.head.sort = Some(SortSpec {
            vars: head_vars,
            ascending,
        });
        rule.head.limit = Some(rng.gen_range(1..10));
    }
    sources.push(RelInfo {
        name: name.clone(),
        cols: out_cols,
    });
    rule
}

type RuleAndCols = (Rule, Vec<(String, ScalarType)>);

fn access_with_vars(rng: &mut StdRng, info: &RelInfo, prefix: &str) -> (RelationAccess, Vec<String>) {
    let _ = rng;
    let vars: Vec<String> = (0..info.cols.len())
        .map(|k| format!("{prefix}{k}"))
        .collect();
    (
        RelationAccess::new(info.name.clone(), vars.clone()),
        vars,
    )
}

fn random_filter(rng: &mut StdRng, vars: &[String], cols: &[(String, ScalarType)]) -> Atom {
    let k = rng.gen_range(0..cols.len());
    let ty = cols[k].1;
    let op = match rng.gen_range(0..5) {
        0 => CmpOp::Lt,
        1 => CmpOp::Le,
        2 => CmpOp::Gt,
        3 => CmpOp::Ge,
        _ => CmpOp::Ne,
    };
    Atom::Compare(Compare {
        lhs: vars[k].clone(),
        op,
        rhs: Term::Const(random_constant(rng, ty)),
    })
}

fn numeric_positions(cols: &[(String, ScalarType)]) -> Vec<usize> {
    cols.iter()
        .enumerate()
        .filter(|(_, (_, t))| t.is_numeric())
        .map(|(i, _)| i)
        .collect()
}

fn gen_map_rule(rng: &mut StdRng, name: &str, sources: &[RelInfo]) -> RuleAndCols {
    let info = &sources[pick_source(rng, sources)];
    let (access, vars) = access_with_vars(rng, info, "a");
    let mut body = vec![Atom::Rel(access)];
    for _ in 0..rng.gen_range(0..=2) {
        body.push(random_filter(rng, &vars, &info.cols));
    }
    let mut head: Vec<String> = Vec::new();
    let mut out_cols: Vec<(String, ScalarType)> = Vec::new();
    for (k, v) in vars.iter().enumerate() {
        if rng.gen_bool(0.7) || head.is_empty() {
            head.push(v.clone());
            out_cols.push((v.clone(), info.cols[k].1));
        }
    }
    // Computed column over numeric inputs.
    let nums = numeric_positions(&info.cols);
    if !nums.is_empty() && rng.gen_bool(0.5) {
        let a = nums[rng.gen_range(0..nums.len())];
        let b = nums[rng.gen_range(0..nums.len())];
        let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][rng.gen_range(0..3)];
        body.push(Atom::Compare(Compare {
            lhs: "w".into(),
            op: CmpOp::Eq,
            rhs: Term::binop(op, Term::var(vars[a].clone()), Term::var(vars[b].clone())),
        }));
        head.push("w".into());
        let ty = if info.cols[a].1 == ScalarType::Float64 || info.cols[b].1 == ScalarType::Float64
        {
            ScalarType::Float64
        } else {
            ScalarType::Int64
        };
        out_cols.push(("w".into(), ty));
    }
    (Rule::new(Head::plain(name, head), body), out_cols)
}

fn gen_join_rule(rng: &mut StdRng, name: &str, sources: &[RelInfo], outer: bool) -> RuleAndCols {
    let li = pick_source(rng, sources);
    let ri = rng.gen_range(0..sources.len());
    let left = &sources[li];
    let right = &sources[ri];
    let (l_access, l_vars) = access_with_vars(rng, left, "l");
    let (r_access, mut r_vars) = access_with_vars(rng, right, "r");
    // Pick join columns with matching types.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, (_, lt)) in left.cols.iter().enumerate() {
        for (j, (_, rt)) in right.cols.iter().enumerate() {
            if lt == rt {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        // No compatible columns: fall back to a map rule.
        return gen_map_rule(rng, name, sources);
    }
    let left_cols = left.cols.clone();
    let right_cols = right.cols.clone();
    let (jl, jr) = pairs[rng.gen_range(0..pairs.len())];
    let mut body;
    if outer {
        let marker = ["outer_left", "outer_right", "outer_full"][rng.gen_range(0..3)];
        body = vec![
            Atom::Rel(l_access),
            Atom::Rel(r_access),
            Atom::ExtAtom(ExtAtom {
                name: marker.into(),
                args: vec![l_vars[jl].clone(), r_vars[jr].clone()],
            }),
        ];
    } else {
        r_vars[jr] = l_vars[jl].clone();
        let r_access = RelationAccess::new(right.name.clone(), r_vars.clone());
        body = vec![Atom::Rel(l_access), Atom::Rel(r_access)];
        if rng.gen_bool(0.4) {
            body.push(random_filter(rng, &l_vars, &left.cols));
        }
    }
    let mut head: Vec<String> = Vec::new();
    let mut out_cols: Vec<(String, ScalarType)> = Vec::new();
    let typed: Vec<(String, ScalarType)> = l_vars
        .iter()
        .cloned()
        .zip(left_cols.iter().map(|(_, t)| *t))
        .chain(r_vars.iter().cloned().zip(right_cols.iter().map(|(_, t)| *t)))
        .collect();
    for (v, ty) in typed {
        if head.contains(&v) {
            continue;
        }
        if rng.gen_bool(0.6) || head.is_empty() {
            head.push(v.clone());
            out_cols.push((v, ty));
        }
    }
    (Rule::new(Head::plain(name, head), body), out_cols)
}

fn gen_group_rule(rng: &mut StdRng, name: &str, sources: &[RelInfo]) -> RuleAndCols {
    let info = &sources[pick_source(rng, sources)];
    let (access, vars) = access_with_vars(rng, info, "g");
    let mut body = vec![Atom::Rel(access)];
    if rng.gen_bool(0.3) {
        body.push(random_filter(rng, &vars, &info.cols));
    }
    let n_group = rng.gen_range(1..=info.cols.len().min(2));
    let group: Vec<String> = (0..n_group).map(|k| vars[k].clone()).collect();
    let mut head = group.clone();
    let mut out_cols: Vec<(String, ScalarType)> = (0..n_group)
        .map(|k| (vars[k].clone(), info.cols[k].1))
        .collect();
    let nums = numeric_positions(&info.cols);
    let n_aggs = rng.gen_range(1..=2);
    for a in 0..n_aggs {
        let target = format!("agg{a}");
        let (fn_, arg, ty) = if nums.is_empty() || rng.gen_bool(0.25) {
            (AggFn::Count, Term::Const(Constant::Int(1)), ScalarType::Int64)
        } else {
            let fn_ = [AggFn::Sum, AggFn::Min, AggFn::Max, AggFn::Avg, AggFn::Count]
                [rng.gen_range(0..5)];
            let col = nums[rng.gen_range(0..nums.len())];
            let ty = match fn_ {
                AggFn::Count => ScalarType::Int64,
                AggFn::Avg => ScalarType::Float64,
                _ => info.cols[col].1,
            };
            (fn_, Term::var(vars[col].clone()), ty)
        };
        body.push(Atom::Compare(Compare {
            lhs: target.clone(),
            op: CmpOp::Eq,
            rhs: Term::Agg(fn_, Box::new(arg)),
        }));
        head.push(target.clone());
        out_cols.push((target, ty));
    }
    let mut rule = Rule::new(Head::plain(name, head), body);
    rule.head.group = Some(group);
    (rule, out_cols)
}

/// Random syntactically valid programs for parse/print round-trips.
pub fn gen_program(seed: u64) -> Program {
    let mut rng = rng_for(seed.wrapping_mul(0x9e37_79b9).wrapping_add(17));
    let mut sources: Vec<RelInfo> = (0..rng.gen_range(1..=3))
        .map(|t| RelInfo {
            name: format!("base{t}"),
            cols: (0..rng.gen_range(1..=4))
                .map(|k| {
                    (
                        format!("c{k}"),
                        [ScalarType::Int64, ScalarType::Float64, ScalarType::String]
                            [rng.gen_range(0..3)],
                    )
                })
                .collect(),
        })
        .collect();
    let mut rules = Vec::new();
    let n = rng.gen_range(1..=6);
    for r in 0..n {
        let is_last = r + 1 == n;
        let mut rule = gen_rule(&mut rng, r, &mut sources, is_last);
        // Syntax variety the pipeline generator avoids.
        if rng.gen_bool(0.3) {
            rule.body.push(Atom::Compare(Compare {
                lhs: format!("e{r}"),
                op: CmpOp::Eq,
                rhs: Term::if_then_else(
                    Term::binop(
                        BinOp::Gt,
                        Term::Const(Constant::Float(-0.5)),
                        Term::Const(Constant::Float(1.25)),
                    ),
                    Term::Const(Constant::Str("quote\"needed".into())),
                    Term::Const(Constant::Str("plain".into())),
                ),
            }));
            rule.head.rel.vars.push(format!("e{r}"));
            if let Some(info) = sources.last_mut() {
                info.cols.push((format!("e{r}"), ScalarType::String));
            }
        }
        if rng.gen_bool(0.2) {
            rule.body.push(Atom::Const(ConstRelation {
                vars: vec![format!("k{r}")],
                rows: (0..rng.gen_range(1..4))
                    .map(|i| vec![Constant::Int(i)])
                    .collect(),
            }));
        }
        if rng.gen_bool(0.2) {
            let inner_rel = sources[rng.gen_range(0..sources.len())].name.clone();
            let inner_arity = sources
                .iter()
                .find(|s| s.name == inner_rel)
                .map(|s| s.cols.len())
                .unwrap_or(1);
            rule.body.push(Atom::Exists(vec![Atom::Rel(RelationAccess::new(
                inner_rel,
                (0..inner_arity).map(|k| format!("x{r}_{k}")).collect(),
            ))]));
        }
        rules.push(rule);
    }
    Program::new(rules)
}
