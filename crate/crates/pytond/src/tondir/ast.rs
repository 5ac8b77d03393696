//! TondIR data model: programs are ordered lists of rules, each rule an
//! assignment from a body (chain of atoms) to a head (relation access with
//! optional group/sort/limit clauses).
//!
//! Column identity is positional: the i-th variable of a relation access
//! binds the i-th column of the relation. Rule order is significant; a
//! relation name may be redefined, and body references resolve to the most
//! recent prior definition (else to a base relation).

use std::fmt;

/// An ordered list of rules. The last rule is the program sink.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Self {
        Program { rules }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The sink rule, if the program is non-empty.
    pub fn sink(&self) -> Option<&Rule> {
        self.rules.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub head: Head,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Head, body: Vec<Atom>) -> Self {
        Rule { head, body }
    }

    pub fn name(&self) -> &str {
        &self.head.rel.name
    }
}

/// Head of a rule: a relation access plus optional group, sort and limit.
///
/// The grammar nests `limit` inside `sort`, but `limit` without `sort` is
/// accepted to express top-n over an unordered relation; lowering flags it
/// as non-deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub rel: RelationAccess,
    pub group: Option<Vec<String>>,
    pub sort: Option<SortSpec>,
    pub limit: Option<u64>,
}

impl Head {
    pub fn plain(name: impl Into<String>, vars: Vec<String>) -> Self {
        Head {
            rel: RelationAccess::new(name, vars),
            group: None,
            sort: None,
            limit: None,
        }
    }
}

/// Sort clause: variables plus one ascending flag per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SortSpec {
    pub vars: Vec<String>,
    pub ascending: Vec<bool>,
}

/// Access to a relation with one variable per column, bound positionally.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationAccess {
    pub name: String,
    pub vars: Vec<String>,
}

impl RelationAccess {
    pub fn new(name: impl Into<String>, vars: Vec<String>) -> Self {
        RelationAccess {
            name: name.into(),
            vars,
        }
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// Access to a base relation or a previously defined rule.
    Rel(RelationAccess),
    /// Inline constant relation binding `vars` to the columns of `rows`.
    Const(ConstRelation),
    /// Existential filter: keeps a row iff the inner body matches at least
    /// once. Inner atoms may reference variables bound outside.
    Exists(Vec<Atom>),
    /// `(lhs op rhs)`. With op `=` and an unbound lhs this is an
    /// assignment; otherwise it is a comparison filter.
    Compare(Compare),
    /// Marker atom over bound variables: `outer_left(a1, a2)` records an
    /// outer join between the accesses binding its argument pairs, and
    /// `unique(c1, ...)` requests distinct output rows.
    ExtAtom(ExtAtom),
}

/// Names allowed as bare marker atoms in a body.
pub const EXT_ATOM_NAMES: &[&str] = &["outer_full", "outer_left", "outer_right", "unique"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExtAtom {
    pub name: String,
    pub args: Vec<String>,
}

impl ExtAtom {
    pub fn is_outer(&self) -> bool {
        is_outer_ext(&self.name)
    }

    /// (left, right) variable pairs of an outer-join marker, whose args
    /// interleave as `l1, r1, l2, r2, ...`.
    pub fn outer_pairs(&self) -> Vec<(&str, &str)> {
        self.args
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| (c[0].as_str(), c[1].as_str()))
            .collect()
    }
}

/// Constant relation: `(x=[1, 2, 3])` or `((x, y)=[(1, "a"), (2, "b")])`.
/// Rows are rectangular, non-empty, and have one column per bound variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstRelation {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Constant>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compare {
    pub lhs: String,
    pub op: CmpOp,
    pub rhs: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(String),
    Agg(AggFn, Box<Term>),
    /// External function call, e.g. `UID()`, `round(x)`, `outer_left(a, b)`.
    Ext(String, Vec<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    BinOp(BinOp, Box<Term>, Box<Term>),
    Const(Constant),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn int(v: i64) -> Self {
        Term::Const(Constant::Int(v))
    }

    pub fn binop(op: BinOp, l: Term, r: Term) -> Self {
        Term::BinOp(op, Box::new(l), Box::new(r))
    }

    pub fn if_then_else(c: Term, t: Term, e: Term) -> Self {
        Term::If(Box::new(c), Box::new(t), Box::new(e))
    }

    /// True if the term contains an aggregation anywhere.
    pub fn contains_agg(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) => false,
            Term::Agg(_, _) => true,
            Term::Ext(_, args) => args.iter().any(Term::contains_agg),
            Term::If(c, t, e) => c.contains_agg() || t.contains_agg() || e.contains_agg(),
            Term::BinOp(_, l, r) => l.contains_agg() || r.contains_agg(),
        }
    }

    /// Collects the variables referenced by the term, in order of
    /// appearance, into `out`.
    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => out.push(v),
            Term::Const(_) => {}
            Term::Agg(_, t) => t.collect_vars(out),
            Term::Ext(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Term::If(c, t, e) => {
                c.collect_vars(out);
                t.collect_vars(out);
                e.collect_vars(out);
            }
            Term::BinOp(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFn {
    Sum,
    Min,
    Max,
    Count,
    Avg,
}

impl AggFn {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Count => "count",
            AggFn::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Option<AggFn> {
        Some(match s {
            "sum" => AggFn::Sum,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            "count" => AggFn::Count,
            "avg" | "mean" => AggFn::Avg,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
    Like,
    Concat,
    // Comparisons are also terms so they can appear as `if` conditions.
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Like => "like",
            BinOp::Concat => "concat",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    pub fn from_cmp(op: CmpOp) -> BinOp {
        match op {
            CmpOp::Lt => BinOp::Lt,
            CmpOp::Le => BinOp::Le,
            CmpOp::Eq => BinOp::Eq,
            CmpOp::Ne => BinOp::Ne,
            CmpOp::Ge => BinOp::Ge,
            CmpOp::Gt => BinOp::Gt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constant {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Constant {
    pub fn type_name(&self) -> &'static str {
        match self {
            Constant::Int(_) => "integer",
            Constant::Float(_) => "float",
            Constant::Bool(_) => "boolean",
            Constant::Str(_) => "string",
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(v) => write!(f, "{v}"),
            // Shortest round-trip-exact decimal form.
            Constant::Float(v) => {
                if v.fract() == 0.0 && v.is_finite() && v.abs() < 1e15 {
                    write!(f, "{v:.1}")
                } else {
                    write!(f, "{v}")
                }
            }
            Constant::Bool(v) => write!(f, "{}", if *v { "True" } else { "False" }),
            Constant::Str(v) => write!(f, "\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\"")),
        }
    }
}

/// External functions understood by validation, the oracle and lowering.
pub const REGISTERED_EXT_FNS: &[&str] = &[
    "UID",
    "round",
    "outer_full",
    "outer_left",
    "outer_right",
    "unique",
    "upper",
    "lower",
    "strlen",
    "substr",
    "abs",
];

/// True for the outer-join marker atoms introduced by merge translation.
pub fn is_outer_ext(name: &str) -> bool {
    matches!(name, "outer_full" | "outer_left" | "outer_right")
}
