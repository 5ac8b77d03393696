//! In-memory relations: ordered bags of typed tuples, plus the bag
//! comparison used by all differential tests.

use super::value::Value;
use crate::catalog::ScalarType;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Relation {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Relation {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Value>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        Relation { columns, rows }
    }

    pub fn empty(columns: Vec<String>) -> Self {
        Relation {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Sorted, duplicate-free values of one column (NULLs dropped).
    pub fn distinct_values(&self, column: &str) -> Option<Vec<Value>> {
        let idx = self.column_index(column)?;
        let mut vals: Vec<Value> = Vec::new();
        for row in &self.rows {
            let v = &row[idx];
            if !v.is_null() && !vals.contains(v) {
                vals.push(v.clone());
            }
        }
        vals.sort_by(|a, b| a.cmp_total(b));
        Some(vals)
    }
}

/// Named relations forming the test database.
#[derive(Debug, Clone, Default)]
pub struct Database {
    pub relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Self {
        Database::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, rel: Relation) {
        self.relations.insert(name.into(), rel);
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }
}

/// Outcome of a bag comparison, with a small diff for reporting.
#[derive(Debug, Clone, PartialEq)]
pub enum BagDiff {
    Equal,
    ArityMismatch {
        left: usize,
        right: usize,
    },
    CardinalityMismatch {
        left: usize,
        right: usize,
    },
    /// First differing row (by canonical order, or by position when
    /// ordered comparison was requested).
    RowMismatch {
        index: usize,
        left: Option<Vec<Value>>,
        right: Option<Vec<Value>>,
    },
}

impl BagDiff {
    pub fn is_equal(&self) -> bool {
        *self == BagDiff::Equal
    }
}

pub const FLOAT_REL_TOL: f64 = 1e-9;

/// Multiset equality (or sequence equality when `ordered`), with floats
/// compared within a relative tolerance of 1e-9.
pub fn bag_equal(a: &Relation, b: &Relation, ordered: bool) -> bool {
    bag_compare(a, b, ordered).is_equal()
}

pub fn bag_compare(a: &Relation, b: &Relation, ordered: bool) -> BagDiff {
    if a.arity() != b.arity() {
        return BagDiff::ArityMismatch {
            left: a.arity(),
            right: b.arity(),
        };
    }
    if a.len() != b.len() {
        return BagDiff::CardinalityMismatch {
            left: a.len(),
            right: b.len(),
        };
    }
    let (left, right): (Vec<&Vec<Value>>, Vec<&Vec<Value>>) = if ordered {
        (a.rows.iter().collect(), b.rows.iter().collect())
    } else {
        let mut l: Vec<&Vec<Value>> = a.rows.iter().collect();
        let mut r: Vec<&Vec<Value>> = b.rows.iter().collect();
        let key = |x: &&Vec<Value>, y: &&Vec<Value>| {
            for (a, b) in x.iter().zip(y.iter()) {
                let ord = a.cmp_total(b);
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        };
        l.sort_by(key);
        r.sort_by(key);
        (l, r)
    };
    for (i, (x, y)) in left.iter().zip(right.iter()).enumerate() {
        let same = x
            .iter()
            .zip(y.iter())
            .all(|(a, b)| a.approx_eq(b, FLOAT_REL_TOL));
        if !same {
            return BagDiff::RowMismatch {
                index: i,
                left: Some((*x).clone()),
                right: Some((*y).clone()),
            };
        }
    }
    BagDiff::Equal
}

// --- CSV interchange -----------------------------------------------------
//
// Comma separator, header row, ISO dates as plain strings, empty field
// means NULL. Fields are quoted only when they contain a comma, quote or
// newline, so output is byte-stable.

pub fn to_csv(rel: &Relation) -> String {
    let mut out = String::new();
    out.push_str(&join_csv_row(
        &rel.columns.iter().map(|c| c.as_str().into()).collect::<Vec<String>>(),
    ));
    out.push('\n');
    for row in &rel.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|v| match v {
                Value::Null => String::new(),
                other => other.to_string(),
            })
            .collect();
        out.push_str(&join_csv_row(&cells));
        out.push('\n');
    }
    out
}

fn join_csv_row(cells: &[String]) -> String {
    cells
        .iter()
        .map(|c| {
            if c.contains(',') || c.contains('"') || c.contains('\n') {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Parses CSV with column types supplied by the catalog.
pub fn from_csv_typed(text: &str, types: &[ScalarType]) -> Result<Relation, CsvError> {
    let mut lines = split_csv_records(text);
    if lines.is_empty() {
        return Err(CsvError::Malformed {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let header = lines.remove(0);
    if header.len() != types.len() {
        return Err(CsvError::Malformed {
            line: 1,
            message: format!("{} columns in header, {} types", header.len(), types.len()),
        });
    }
    let mut rows = Vec::new();
    for (i, cells) in lines.into_iter().enumerate() {
        if cells.len() != header.len() {
            return Err(CsvError::Malformed {
                line: i + 2,
                message: format!("{} fields, expected {}", cells.len(), header.len()),
            });
        }
        let mut row = Vec::with_capacity(cells.len());
        for (cell, ty) in cells.iter().zip(types) {
            row.push(parse_cell(cell, *ty).map_err(|message| CsvError::Malformed {
                line: i + 2,
                message,
            })?);
        }
        rows.push(row);
    }
    Ok(Relation::new(header, rows))
}

fn parse_cell(cell: &str, ty: ScalarType) -> Result<Value, String> {
    if cell.is_empty() {
        return Ok(Value::Null);
    }
    Ok(match ty {
        ScalarType::Int64 => Value::Int(
            cell.parse::<i64>()
                .map_err(|e| format!("bad int {cell:?}: {e}"))?,
        ),
        ScalarType::Float64 => Value::Float(
            cell.parse::<f64>()
                .map_err(|e| format!("bad float {cell:?}: {e}"))?,
        ),
        ScalarType::Bool => match cell {
            "true" | "True" | "1" => Value::Bool(true),
            "false" | "False" | "0" => Value::Bool(false),
            other => return Err(format!("bad bool {other:?}")),
        },
        ScalarType::String | ScalarType::Date => Value::Str(cell.to_string()),
    })
}

fn split_csv_records(text: &str) -> Vec<Vec<String>> {
    let mut records = Vec::new();
    let mut field = String::new();
    let mut record = Vec::new();
    let mut in_quotes = false;
    let mut chars = text.chars().peekable();
    let mut any = false;
    while let Some(c) = chars.next() {
        any = true;
        if in_quotes {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    field.push('"');
                }
                '"' => in_quotes = false,
                other => field.push(other),
            }
        } else {
            match c {
                '"' => in_quotes = true,
                ',' => record.push(std::mem::take(&mut field)),
                '\r' => {}
                '\n' => {
                    record.push(std::mem::take(&mut field));
                    records.push(std::mem::take(&mut record));
                }
                other => field.push(other),
            }
        }
    }
    if any && (!field.is_empty() || !record.is_empty()) {
        record.push(field);
        records.push(record);
    }
    records
}
