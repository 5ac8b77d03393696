//! Statement-by-statement translation of normalized source functions into
//! TondIR rules. Masks and column expressions stay virtual until an
//! operation forces a relation; every materialization appends one or more
//! rules, in statement order, with per-rule fresh variable naming.

use super::pyast::*;
use super::types::{DecoratorArgs, Layout};
use super::FrontendError;
use crate::catalog::{Catalog, LayoutSpec, ScalarType};
use crate::tondir::ast::*;
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Frame {
    pub rel: String,
    /// Physical columns of the backing relation, in order.
    pub phys: Vec<(String, ScalarType)>,
    /// Logical view: indices into `phys`.
    pub visible: Vec<usize>,
    /// Physical index of a row-identity column, when one is known.
    pub id_col: Option<usize>,
}

impl Frame {
    pub fn logical(&self) -> Vec<(String, ScalarType)> {
        self.visible.iter().map(|&i| self.phys[i].clone()).collect()
    }

    pub fn find_col(&self, name: &str) -> Option<usize> {
        self.visible
            .iter()
            .copied()
            .find(|&i| self.phys[i].0 == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Tensor {
    pub rel: String,
    pub phys: Vec<(String, ScalarType)>,
    pub id_idx: usize,
    pub val_idxs: Vec<usize>,
    pub order: u8,
    pub rows: Option<u64>,
    pub coo: Option<CooInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct CooInfo {
    pub row_idx: usize,
    pub col_idx: Option<usize>,
    pub val_idx: usize,
    pub shape: (u64, u64),
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct ScalarRel {
    pub rel: String,
    pub col: String,
    pub ty: ScalarType,
}

/// Scalar expression over the columns of one frame.
#[derive(Debug, Clone, PartialEq)]
pub(super) enum SExpr {
    Col(usize),
    Const(Constant),
    ScalarRef(ScalarRel),
    Bin(BinOp, Box<SExpr>, Box<SExpr>),
    If(Box<SExpr>, Box<SExpr>, Box<SExpr>),
    Ext(String, Vec<SExpr>),
    /// Membership in an explicit list, expanded to equality chains.
    InList {
        expr: Box<SExpr>,
        values: Vec<Constant>,
        negated: bool,
    },
    /// Membership in a single-column relation, lowered to an existential.
    InRel {
        expr: Box<SExpr>,
        rel: String,
        arity: usize,
        col: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Val {
    Frame(Frame),
    EmptyFrame,
    Mask { source: Frame, expr: SExpr },
    Series {
        source: Frame,
        expr: SExpr,
        ty: ScalarType,
        name: String,
    },
    Scalar(ScalarRel),
    Const(Constant),
    Tensor(Tensor),
    Grouped { frame: Frame, by: Vec<String> },
}

pub(super) struct Translator<'a> {
    pub catalog: &'a Catalog,
    pub args: &'a DecoratorArgs,
    pub distinct_provider: Option<&'a dyn Fn(&str, &str) -> Option<Vec<Constant>>>,
    pub rules: Vec<Rule>,
    pub env: HashMap<String, Val>,
    pub line: usize,
    pub fn_name: String,
}

/// Per-rule variable naming: variables are named after their columns,
/// suffixed on collision.
pub(super) struct Namer {
    used: HashSet<String>,
}

impl Namer {
    pub fn new() -> Namer {
        Namer {
            used: HashSet::new(),
        }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn name(&mut self, base: &str) -> String {
        let base = sanitize_ident(base);
        if self.used.insert(base.clone()) {
            return base;
        }
        for k in 2.. {
            let candidate = format!("{base}_{k}");
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
        unreachable!()
    }
}

pub(super) fn sanitize_ident(s: &str) -> String {
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if c.is_ascii_alphanumeric() || c == '_' {
            if i == 0 && c.is_ascii_digit() {
                out.push('c');
            }
            out.push(c);
        } else {
            out.push('_');
        }
    }
    if out.is_empty() {
        out.push('c');
    }
    out
}

impl<'a> Translator<'a> {
    pub fn new(
        catalog: &'a Catalog,
        args: &'a DecoratorArgs,
        distinct_provider: Option<&'a dyn Fn(&str, &str) -> Option<Vec<Constant>>>,
        fn_name: &str,
    ) -> Self {
        Translator {
            catalog,
            args,
            distinct_provider,
            rules: Vec::new(),
            env: HashMap::new(),
            line: 0,
            fn_name: fn_name.to_string(),
        }
    }

    pub fn err(&self, message: impl Into<String>) -> FrontendError {
        FrontendError::Compile {
            function: self.fn_name.clone(),
            line: Some(self.line),
            message: message.into(),
        }
    }

    pub fn bind_parameter(&mut self, name: &str) -> Result<(), FrontendError> {
        let table = self
            .catalog
            .table(name)
            .ok_or_else(|| self.err(format!("unknown relation {name}")))?;
        let phys: Vec<(String, ScalarType)> =
            table.columns.iter().map(|c| (c.name.clone(), c.ty)).collect();
        let val = match self.catalog.layouts.get(name) {
            Some(LayoutSpec::Dense {
                id_column,
                value_columns,
            }) => {
                let id_idx = phys
                    .iter()
                    .position(|(n, _)| n == id_column)
                    .ok_or_else(|| self.err(format!("{name}: bad dense layout")))?;
                let val_idxs: Vec<usize> = value_columns
                    .iter()
                    .map(|c| phys.iter().position(|(n, _)| n == c))
                    .collect::<Option<_>>()
                    .ok_or_else(|| self.err(format!("{name}: bad dense layout")))?;
                Val::Tensor(Tensor {
                    rel: name.to_string(),
                    order: if val_idxs.len() == 1 { 1 } else { 2 },
                    rows: table.cardinality,
                    id_idx,
                    val_idxs,
                    phys,
                    coo: None,
                })
            }
            Some(LayoutSpec::Coo {
                row,
                col,
                val,
                shape,
            }) => {
                let pos = |c: &String| phys.iter().position(|(n, _)| n == c);
                let (row_idx, val_idx) = match (pos(row), pos(val)) {
                    (Some(r), Some(v)) => (r, v),
                    _ => return Err(self.err(format!("{name}: bad coo layout"))),
                };
                let col_idx = pos(col);
                Val::Tensor(Tensor {
                    rel: name.to_string(),
                    order: if col_idx.is_some() { 2 } else { 1 },
                    rows: Some(shape.0),
                    id_idx: row_idx,
                    val_idxs: vec![val_idx],
                    phys,
                    coo: Some(CooInfo {
                        row_idx,
                        col_idx,
                        val_idx,
                        shape: *shape,
                    }),
                })
            }
            None => {
                let id_col = phys
                    .iter()
                    .position(|(n, _)| n.eq_ignore_ascii_case("id"));
                Val::Frame(Frame {
                    rel: name.to_string(),
                    visible: (0..phys.len()).collect(),
                    phys,
                    id_col,
                })
            }
        };
        self.env.insert(name.to_string(), val);
        Ok(())
    }

    pub fn push_rule(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    pub fn lookup(&self, name: &str) -> Result<Val, FrontendError> {
        self.env
            .get(name)
            .cloned()
            .ok_or_else(|| self.err(format!("unknown variable {name}")))
    }

    // --- expression-to-term machinery -----------------------------------

    /// Builds the access atom for a frame, naming variables after columns.
    /// Returns the variable names for all physical columns.
    pub(super) fn frame_access(&self, frame: &Frame, namer: &mut Namer) -> (RelationAccess, Vec<String>) {
        let vars: Vec<String> = frame.phys.iter().map(|(n, _)| namer.name(n)).collect();
        (
            RelationAccess::new(frame.rel.clone(), vars.clone()),
            vars,
        )
    }

    /// Lowers a scalar expression into a term over the given variable
    /// binding, materializing scalar references and membership tests into
    /// extra body atoms.
    pub(super) fn sexpr_term(
        &self,
        expr: &SExpr,
        vars: &[String],
        namer: &mut Namer,
        extra: &mut Vec<Atom>,
    ) -> Result<Term, FrontendError> {
        Ok(match expr {
            SExpr::Col(i) => Term::Var(vars[*i].clone()),
            SExpr::Const(c) => Term::Const(c.clone()),
            SExpr::ScalarRef(s) => {
                let var = namer.name(&s.col);
                extra.push(Atom::Rel(RelationAccess::new(s.rel.clone(), vec![var.clone()])));
                Term::Var(var)
            }
            SExpr::Bin(op, l, r) => Term::binop(
                *op,
                self.sexpr_term(l, vars, namer, extra)?,
                self.sexpr_term(r, vars, namer, extra)?,
            ),
            SExpr::If(c, t, e) => Term::if_then_else(
                self.sexpr_term(c, vars, namer, extra)?,
                self.sexpr_term(t, vars, namer, extra)?,
                self.sexpr_term(e, vars, namer, extra)?,
            ),
            SExpr::Ext(name, args) => {
                let mut lowered = Vec::with_capacity(args.len());
                for a in args {
                    lowered.push(self.sexpr_term(a, vars, namer, extra)?);
                }
                Term::Ext(name.clone(), lowered)
            }
            SExpr::InList {
                expr,
                values,
                negated,
            } => {
                let e = self.sexpr_term(expr, vars, namer, extra)?;
                let mut term: Option<Term> = None;
                for v in values {
                    let cmp = Term::binop(
                        if *negated { BinOp::Ne } else { BinOp::Eq },
                        e.clone(),
                        Term::Const(v.clone()),
                    );
                    term = Some(match term {
                        None => cmp,
                        Some(t) => Term::binop(
                            if *negated { BinOp::And } else { BinOp::Or },
                            t,
                            cmp,
                        ),
                    });
                }
                term.ok_or_else(|| self.err("isin over an empty list"))?
            }
            SExpr::InRel { .. } => {
                return Err(self.err(
                    "isin against a relation can only appear as a top-level filter conjunct",
                ))
            }
        })
    }

    /// Splits a boolean expression into conjuncts.
    pub(super) fn conjuncts(expr: &SExpr) -> Vec<SExpr> {
        match expr {
            SExpr::Bin(BinOp::And, l, r) => {
                let mut out = Self::conjuncts(l);
                out.extend(Self::conjuncts(r));
                out
            }
            other => vec![other.clone()],
        }
    }

    /// Lowers one filter conjunct into body atoms.
    pub(super) fn filter_atoms(
        &self,
        conjunct: &SExpr,
        vars: &[String],
        namer: &mut Namer,
        body: &mut Vec<Atom>,
    ) -> Result<(), FrontendError> {
        match conjunct {
            SExpr::InRel {
                expr,
                rel,
                arity,
                col,
            } => {
                let mut extra = Vec::new();
                let outer = self.sexpr_term(expr, vars, namer, &mut extra)?;
                body.extend(extra);
                let inner_vars: Vec<String> =
                    (0..*arity).map(|k| namer.name(&format!("k{k}"))).collect();
                let probe = inner_vars[*col].clone();
                body.push(Atom::Exists(vec![
                    Atom::Rel(RelationAccess::new(rel.clone(), inner_vars)),
                    Atom::Compare(Compare {
                        lhs: probe,
                        op: CmpOp::Eq,
                        rhs: outer,
                    }),
                ]));
                Ok(())
            }
            SExpr::Bin(op, l, r)
                if matches!(
                    op,
                    BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
                ) =>
            {
                let mut extra = Vec::new();
                // A bare column on one side becomes the compare lhs.
                let (lhs_var, cmp_op, rhs) = if let SExpr::Col(i) = **l {
                    let rhs = self.sexpr_term(r, vars, namer, &mut extra)?;
                    (vars[i].clone(), bin_to_cmp(*op), rhs)
                } else if let SExpr::Col(i) = **r {
                    let lhs = self.sexpr_term(l, vars, namer, &mut extra)?;
                    (vars[i].clone(), flip_cmp(bin_to_cmp(*op)), lhs)
                } else {
                    let t = self.sexpr_term(conjunct, vars, namer, &mut extra)?;
                    body.extend(extra);
                    let flag = namer.name("cond");
                    body.push(Atom::Compare(Compare {
                        lhs: flag.clone(),
                        op: CmpOp::Eq,
                        rhs: t,
                    }));
                    body.push(Atom::Compare(Compare {
                        lhs: flag,
                        op: CmpOp::Eq,
                        rhs: Term::Const(Constant::Bool(true)),
                    }));
                    return Ok(());
                };
                body.extend(extra);
                body.push(Atom::Compare(Compare {
                    lhs: lhs_var,
                    op: cmp_op,
                    rhs,
                }));
                Ok(())
            }
            other => {
                // Disjunctions and other boolean shapes: bind then test.
                let mut extra = Vec::new();
                let t = self.sexpr_term(other, vars, namer, &mut extra)?;
                body.extend(extra);
                let flag = namer.name("cond");
                body.push(Atom::Compare(Compare {
                    lhs: flag.clone(),
                    op: CmpOp::Eq,
                    rhs: t,
                }));
                body.push(Atom::Compare(Compare {
                    lhs: flag,
                    op: CmpOp::Eq,
                    rhs: Term::Const(Constant::Bool(true)),
                }));
                Ok(())
            }
        }
    }

    /// Logical negation of a boolean expression, pushed down to
    /// comparisons.
    pub(super) fn invert(&self, expr: &SExpr) -> Result<SExpr, FrontendError> {
        Ok(match expr {
            SExpr::Bin(op, l, r) => match op {
                BinOp::Eq => SExpr::Bin(BinOp::Ne, l.clone(), r.clone()),
                BinOp::Ne => SExpr::Bin(BinOp::Eq, l.clone(), r.clone()),
                BinOp::Lt => SExpr::Bin(BinOp::Ge, l.clone(), r.clone()),
                BinOp::Le => SExpr::Bin(BinOp::Gt, l.clone(), r.clone()),
                BinOp::Gt => SExpr::Bin(BinOp::Le, l.clone(), r.clone()),
                BinOp::Ge => SExpr::Bin(BinOp::Lt, l.clone(), r.clone()),
                BinOp::And => SExpr::Bin(
                    BinOp::Or,
                    Box::new(self.invert(l)?),
                    Box::new(self.invert(r)?),
                ),
                BinOp::Or => SExpr::Bin(
                    BinOp::And,
                    Box::new(self.invert(l)?),
                    Box::new(self.invert(r)?),
                ),
                _ => return Err(self.err("cannot negate a non-boolean expression")),
            },
            SExpr::InList {
                expr,
                values,
                negated,
            } => SExpr::InList {
                expr: expr.clone(),
                values: values.clone(),
                negated: !negated,
            },
            SExpr::Const(Constant::Bool(b)) => SExpr::Const(Constant::Bool(!b)),
            SExpr::InRel { .. } => {
                return Err(self.err("negated isin against a relation is unsupported"))
            }
            _ => return Err(self.err("cannot negate a non-boolean expression")),
        })
    }
}

pub(super) fn bin_to_cmp(op: BinOp) -> CmpOp {
    match op {
        BinOp::Eq => CmpOp::Eq,
        BinOp::Ne => CmpOp::Ne,
        BinOp::Lt => CmpOp::Lt,
        BinOp::Le => CmpOp::Le,
        BinOp::Gt => CmpOp::Gt,
        BinOp::Ge => CmpOp::Ge,
        _ => unreachable!("not a comparison"),
    }
}

pub(super) fn flip_cmp(op: CmpOp) -> CmpOp {
    match op {
        CmpOp::Lt => CmpOp::Gt,
        CmpOp::Le => CmpOp::Ge,
        CmpOp::Gt => CmpOp::Lt,
        CmpOp::Ge => CmpOp::Le,
        other => other,
    }
}

/// Result type of an arithmetic combination.
pub(super) fn combine_types(op: BinOp, l: ScalarType, r: ScalarType) -> ScalarType {
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul => {
            if l == ScalarType::Float64 || r == ScalarType::Float64 {
                ScalarType::Float64
            } else {
                ScalarType::Int64
            }
        }
        BinOp::Div => ScalarType::Float64,
        BinOp::Concat => ScalarType::String,
        _ => ScalarType::Bool,
    }
}

/// Layout check for spec-level decorator arguments: the sparse layout is
/// only legal when every tensor input is COO.
pub(super) fn check_layout(
    args: &DecoratorArgs,
    catalog: &Catalog,
    params: &[String],
) -> Result<(), String> {
    if args.layout == Layout::Sparse {
        for p in params {
            match catalog.layouts.get(p) {
                Some(LayoutSpec::Coo { .. }) | None => {}
                Some(LayoutSpec::Dense { .. }) => {
                    return Err(format!(
                        "sparse layout requested but input {p} is declared dense"
                    ))
                }
            }
        }
    }
    Ok(())
}

/// Distinct-value lookup order for pivot translation: decorator args
/// first, then a catalog/provider query, else an error.
pub(super) fn pivot_distinct_values(
    t: &Translator,
    table: &str,
    column: &str,
) -> Result<Vec<Constant>, FrontendError> {
    if let Some(values) = t.args.distinct_values.get(column) {
        return Ok(values.clone());
    }
    if let Some(provider) = t.distinct_provider {
        if let Some(values) = provider(table, column) {
            if values.is_empty() {
                return Err(t.err(format!(
                    "pivot: no distinct values found for column {column}"
                )));
            }
            return Ok(values);
        }
    }
    Err(t.err(format!(
        "pivot: distinct values for column {column} are available neither from decorator arguments nor from the catalog"
    )))
}

pub(super) type KwArgs = BTreeMap<String, PyExpr>;

pub(super) fn kwargs_map(kwargs: &[(String, PyExpr)]) -> KwArgs {
    kwargs.iter().cloned().collect()
}
