//! Runtime values with SQL semantics: three-valued comparisons, NULL
//! propagation in arithmetic, and NULL-skipping aggregates.

use crate::tondir::ast::{AggFn, BinOp, Constant};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Null,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("type error: {0}")]
    Type(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("{0}")]
    Other(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn from_const(c: &Constant) -> Value {
        match c {
            Constant::Int(v) => Value::Int(*v),
            Constant::Float(v) => Value::Float(*v),
            Constant::Bool(v) => Value::Bool(*v),
            Constant::Str(v) => Value::Str(v.clone()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    /// SQL equality: NULL against anything is unknown.
    pub fn eq_sql(&self, other: &Value) -> Option<bool> {
        self.cmp_sql(other).map(|o| o == Ordering::Equal)
    }

    /// SQL ordering comparison. Numeric types compare by value; other
    /// types only against themselves.
    pub fn cmp_sql(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => None,
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Float(a), Value::Float(b)) => a.partial_cmp(b),
            (Value::Int(a), Value::Float(b)) => (*a as f64).partial_cmp(b),
            (Value::Float(a), Value::Int(b)) => a.partial_cmp(&(*b as f64)),
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Total ordering used to canonicalize rows for bag comparison.
    /// NULL sorts first, then by type rank, then by value.
    pub fn cmp_total(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Bool(_) => 1,
                Value::Int(_) | Value::Float(_) => 2,
                Value::Str(_) => 3,
            }
        }
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (a, b) if rank(a) == 2 && rank(b) == 2 => {
                let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                x.partial_cmp(&y).unwrap_or(Ordering::Equal)
            }
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }

    /// Equality within a relative float tolerance, used by bag comparison.
    pub fn approx_eq(&self, other: &Value, rel_tol: f64) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (a, b) if a.as_f64().is_some() && b.as_f64().is_some() => {
                let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                if x == y {
                    return true;
                }
                (x - y).abs() <= rel_tol * x.abs().max(y.abs()).max(1.0)
            }
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => {
                if v.fract() == 0.0 && v.is_finite() && v.abs() < 1e15 {
                    write!(f, "{v:.1}")
                } else {
                    write!(f, "{v}")
                }
            }
            Value::Bool(v) => write!(f, "{}", if *v { "true" } else { "false" }),
            Value::Str(v) => write!(f, "{v}"),
            Value::Null => Ok(()),
        }
    }
}

fn type_err(op: &str, l: &Value, r: &Value) -> EvalError {
    EvalError::Type(format!("cannot apply {op} to {l:?} and {r:?}"))
}

/// Binary operations with SQL NULL propagation and three-valued logic.
pub fn binop(op: BinOp, l: &Value, r: &Value) -> Result<Value, EvalError> {
    use BinOp::*;
    match op {
        And => {
            return Ok(match (to_bool3(l), to_bool3(r)) {
                (Some(false), _) | (_, Some(false)) => Value::Bool(false),
                (Some(true), Some(true)) => Value::Bool(true),
                _ => Value::Null,
            })
        }
        Or => {
            return Ok(match (to_bool3(l), to_bool3(r)) {
                (Some(true), _) | (_, Some(true)) => Value::Bool(true),
                (Some(false), Some(false)) => Value::Bool(false),
                _ => Value::Null,
            })
        }
        _ => {}
    }
    if l.is_null() || r.is_null() {
        return Ok(Value::Null);
    }
    Ok(match op {
        Add | Sub | Mul => match (l, r) {
            (Value::Int(a), Value::Int(b)) => {
                let v = match op {
                    Add => a.checked_add(*b).ok_or(EvalError::Overflow("+"))?,
                    Sub => a.checked_sub(*b).ok_or(EvalError::Overflow("-"))?,
                    _ => a.checked_mul(*b).ok_or(EvalError::Overflow("*"))?,
                };
                Value::Int(v)
            }
            _ => {
                let (a, b) = (
                    l.as_f64().ok_or_else(|| type_err(op.as_str(), l, r))?,
                    r.as_f64().ok_or_else(|| type_err(op.as_str(), l, r))?,
                );
                Value::Float(match op {
                    Add => a + b,
                    Sub => a - b,
                    _ => a * b,
                })
            }
        },
        // `/` is true division; division by zero yields NULL.
        Div => {
            let (a, b) = (
                l.as_f64().ok_or_else(|| type_err("/", l, r))?,
                r.as_f64().ok_or_else(|| type_err("/", l, r))?,
            );
            if b == 0.0 {
                Value::Null
            } else {
                Value::Float(a / b)
            }
        }
        Eq | Ne | Lt | Le | Gt | Ge => {
            let cmp = l.cmp_sql(r);
            match cmp {
                None => Value::Null,
                Some(o) => Value::Bool(match op {
                    Eq => o == Ordering::Equal,
                    Ne => o != Ordering::Equal,
                    Lt => o == Ordering::Less,
                    Le => o != Ordering::Greater,
                    Gt => o == Ordering::Greater,
                    Ge => o != Ordering::Less,
                    _ => unreachable!(),
                }),
            }
        }
        Like => match (l, r) {
            (Value::Str(s), Value::Str(p)) => Value::Bool(like_match(s, p)),
            _ => return Err(type_err("like", l, r)),
        },
        Concat => Value::Str(format!("{l}{r}")),
        And | Or => unreachable!(),
    })
}

fn to_bool3(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        _ => None,
    }
}

/// SQL LIKE with `%` and `_` wildcards.
pub fn like_match(s: &str, pattern: &str) -> bool {
    fn rec(s: &[char], p: &[char]) -> bool {
        match p.split_first() {
            None => s.is_empty(),
            Some(('%', rest)) => (0..=s.len()).any(|i| rec(&s[i..], rest)),
            Some(('_', rest)) => !s.is_empty() && rec(&s[1..], rest),
            Some((c, rest)) => s.first() == Some(c) && rec(&s[1..], rest),
        }
    }
    let s: Vec<char> = s.chars().collect();
    let p: Vec<char> = pattern.chars().collect();
    rec(&s, &p)
}

/// Scalar external functions usable inside terms.
pub fn ext_fn(name: &str, args: &[Value]) -> Result<Value, EvalError> {
    let arg = |i: usize| -> Result<&Value, EvalError> {
        args.get(i)
            .ok_or_else(|| EvalError::Type(format!("{name}: missing argument {i}")))
    };
    match name {
        "round" => match arg(0)? {
            Value::Null => Ok(Value::Null),
            Value::Int(v) => Ok(Value::Int(*v)),
            Value::Float(v) => Ok(Value::Float(v.round())),
            other => Err(EvalError::Type(format!("round: not numeric: {other:?}"))),
        },
        "abs" => match arg(0)? {
            Value::Null => Ok(Value::Null),
            Value::Int(v) => Ok(Value::Int(v.abs())),
            Value::Float(v) => Ok(Value::Float(v.abs())),
            other => Err(EvalError::Type(format!("abs: not numeric: {other:?}"))),
        },
        "upper" | "lower" => match arg(0)? {
            Value::Null => Ok(Value::Null),
            Value::Str(s) => Ok(Value::Str(if name == "upper" {
                s.to_uppercase()
            } else {
                s.to_lowercase()
            })),
            other => Err(EvalError::Type(format!("{name}: not a string: {other:?}"))),
        },
        "strlen" => match arg(0)? {
            Value::Null => Ok(Value::Null),
            Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
            other => Err(EvalError::Type(format!("strlen: not a string: {other:?}"))),
        },
        // substr(s, start, len) with 1-based start, like SQL.
        "substr" => match (arg(0)?, arg(1)?, arg(2)?) {
            (Value::Null, _, _) => Ok(Value::Null),
            (Value::Str(s), Value::Int(start), Value::Int(len)) => {
                let start = (start - 1).max(0) as usize;
                let len = (*len).max(0) as usize;
                Ok(Value::Str(s.chars().skip(start).take(len).collect()))
            }
            _ => Err(EvalError::Type("substr: expected (string, int, int)".into())),
        },
        other => Err(EvalError::Type(format!("unknown external function {other}"))),
    }
}

/// Aggregates one column of values with SQL semantics: NULLs are ignored;
/// an empty (or all-NULL) input yields NULL for everything except count.
pub fn aggregate(fn_: AggFn, values: &[Value]) -> Result<Value, EvalError> {
    let present: Vec<&Value> = values.iter().filter(|v| !v.is_null()).collect();
    if fn_ == AggFn::Count {
        return Ok(Value::Int(present.len() as i64));
    }
    if present.is_empty() {
        return Ok(Value::Null);
    }
    match fn_ {
        AggFn::Sum => {
            if present.iter().all(|v| matches!(v, Value::Int(_))) {
                let mut acc: i64 = 0;
                for v in &present {
                    if let Value::Int(x) = v {
                        acc = acc.checked_add(*x).ok_or(EvalError::Overflow("sum"))?;
                    }
                }
                Ok(Value::Int(acc))
            } else {
                let mut acc = 0.0;
                for v in &present {
                    acc += v
                        .as_f64()
                        .ok_or_else(|| EvalError::Type(format!("sum over {v:?}")))?;
                }
                Ok(Value::Float(acc))
            }
        }
        AggFn::Avg => {
            let mut acc = 0.0;
            for v in &present {
                acc += v
                    .as_f64()
                    .ok_or_else(|| EvalError::Type(format!("avg over {v:?}")))?;
            }
            Ok(Value::Float(acc / present.len() as f64))
        }
        AggFn::Min | AggFn::Max => {
            let mut best = present[0].clone();
            for v in &present[1..] {
                let ord = v.cmp_sql(&best).ok_or_else(|| {
                    EvalError::Type(format!("cannot order {v:?} against {best:?}"))
                })?;
                let take = if fn_ == AggFn::Min {
                    ord == Ordering::Less
                } else {
                    ord == Ordering::Greater
                };
                if take {
                    best = (*v).clone();
                }
            }
            Ok(best)
        }
        AggFn::Count => unreachable!(),
    }
}
