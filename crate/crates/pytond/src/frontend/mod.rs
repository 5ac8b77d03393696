//! Host-language frontend: function discovery, ANF normalization, type
//! inference, and translation into TondIR.

pub mod anf;
pub mod einsum;
mod ops;
mod ops_merge;
mod ops_tensor;
pub mod pyast;
mod translate;
pub mod types;

pub use anf::anf_normalize;
pub use einsum::{plan_einsum, EinsumError, EinsumPlan, EsKernel, PlanStep};
pub use types::{DecoratorArgs, Layout, TypeEnv, VarType};

use crate::catalog::{Catalog, ScalarType};
use crate::tondir::ast::{Constant, Program};
use pyast::{parse_module, PyExpr, PyFunction, PyStmt};

pub const DEFAULT_DECORATOR: &str = "pytond";

/// A discovered, decorated function in the source subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFunction {
    pub name: String,
    pub params: Vec<String>,
    pub args: DecoratorArgs,
    pub body: Vec<PyStmt>,
    pub line: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error("{function}: line {line}: unsupported statement: {construct}")]
    Unsupported {
        function: String,
        line: usize,
        construct: String,
    },
    #[error("{function}{}: {message}", .line.map(|l| format!(": line {l}")).unwrap_or_default())]
    Compile {
        function: String,
        line: Option<usize>,
        message: String,
    },
    #[error("syntax error: {0}")]
    Syntax(#[from] pyast::SyntaxError),
}

impl FrontendError {
    pub fn is_unsupported_construct(&self) -> bool {
        matches!(self, FrontendError::Unsupported { .. })
    }
}

/// Scans source text for functions carrying the compiler's decorator and
/// parses their decorator arguments. Undecorated functions are ignored;
/// unsupported constructs inside decorated functions are errors.
pub fn discover_functions(
    source: &str,
    decorator: &str,
) -> Result<Vec<SourceFunction>, FrontendError> {
    let functions = parse_module(source)?;
    let mut out = Vec::new();
    for f in functions {
        let Some(dec) = f.decorators.iter().find(|d| d.name == decorator) else {
            continue;
        };
        if let Some((line, construct)) = &f.unsupported {
            return Err(FrontendError::Unsupported {
                function: f.name.clone(),
                line: *line,
                construct: construct.clone(),
            });
        }
        let args = parse_decorator_args(&f, &dec.kwargs)?;
        out.push(SourceFunction {
            name: f.name.clone(),
            params: f.params.clone(),
            args,
            body: f.body.clone(),
            line: f.line,
        });
    }
    Ok(out)
}

fn parse_decorator_args(
    f: &PyFunction,
    kwargs: &[(String, PyExpr)],
) -> Result<DecoratorArgs, FrontendError> {
    let mut args = DecoratorArgs::default();
    let err = |message: String| FrontendError::Compile {
        function: f.name.clone(),
        line: Some(f.line),
        message,
    };
    for (key, value) in kwargs {
        match key.as_str() {
            "layout" => {
                args.layout = match value.as_str_lit() {
                    Some("dense") => Layout::Dense,
                    Some("sparse") => Layout::Sparse,
                    _ => return Err(err("layout must be 'dense' or 'sparse'".into())),
                };
            }
            "distinct_values" => {
                let PyExpr::Dict(items) = value else {
                    return Err(err("distinct_values must be a {column: [values]} dict".into()));
                };
                for (k, v) in items {
                    let col = k
                        .as_str_lit()
                        .ok_or_else(|| err("distinct_values keys must be column names".into()))?;
                    let PyExpr::List(vals) = v else {
                        return Err(err("distinct_values entries must be lists".into()));
                    };
                    let consts: Vec<Constant> = vals
                        .iter()
                        .map(|e| match e {
                            PyExpr::Int(v) => Some(Constant::Int(*v)),
                            PyExpr::Float(v) => Some(Constant::Float(*v)),
                            PyExpr::Str(s) => Some(Constant::Str(s.clone())),
                            PyExpr::Bool(b) => Some(Constant::Bool(*b)),
                            _ => None,
                        })
                        .collect::<Option<_>>()
                        .ok_or_else(|| err("distinct_values must hold literals".into()))?;
                    args.distinct_values.insert(col.to_string(), consts);
                }
            }
            "unique" => {
                let PyExpr::Dict(items) = value else {
                    return Err(err("unique must be a {relation: [columns]} dict".into()));
                };
                for (k, v) in items {
                    let rel = k
                        .as_str_lit()
                        .ok_or_else(|| err("unique keys must be relation names".into()))?;
                    let cols = match v {
                        PyExpr::List(cols) => cols
                            .iter()
                            .map(|e| e.as_str_lit().map(str::to_string))
                            .collect::<Option<Vec<_>>>(),
                        PyExpr::Str(s) => Some(vec![s.clone()]),
                        _ => None,
                    }
                    .ok_or_else(|| err("unique entries must name columns".into()))?;
                    args.unique.push((rel.to_string(), cols));
                }
            }
            other => return Err(err(format!("unknown decorator argument {other}"))),
        }
    }
    Ok(args)
}

/// Folds decorator uniqueness hints into a catalog copy so the optimizer
/// sees them as constraints.
pub fn catalog_with_hints(catalog: &Catalog, args: &DecoratorArgs) -> Catalog {
    let mut cat = catalog.clone();
    for (rel, cols) in &args.unique {
        if let Some(table) = cat.tables.get_mut(rel) {
            if !table.unique.contains(cols) {
                table.unique.push(cols.clone());
            }
        }
    }
    cat
}

/// Infers the result type of every statement variable. Runs the
/// translator in full; merge suffix renaming and layout checks come from
/// the same code path that emits rules.
pub fn infer_types(
    f: &SourceFunction,
    catalog: &Catalog,
) -> Result<TypeEnv, FrontendError> {
    let (_, env) = translate_with_env(f, catalog, None)?;
    Ok(env)
}

/// Translates a normalized function into a TondIR program.
pub fn translate_function(
    f: &SourceFunction,
    catalog: &Catalog,
    distinct_provider: Option<&dyn Fn(&str, &str) -> Option<Vec<Constant>>>,
) -> Result<Program, FrontendError> {
    let (program, _) = translate_with_env(f, catalog, distinct_provider)?;
    Ok(program)
}

fn translate_with_env(
    f: &SourceFunction,
    catalog: &Catalog,
    distinct_provider: Option<&dyn Fn(&str, &str) -> Option<Vec<Constant>>>,
) -> Result<(Program, TypeEnv), FrontendError> {
    translate::check_layout(&f.args, catalog, &f.params).map_err(|message| {
        FrontendError::Compile {
            function: f.name.clone(),
            line: Some(f.line),
            message,
        }
    })?;
    let mut cx = ops::FunctionCx::new(catalog, &f.args, distinct_provider, &f.name);
    let program = cx.run(&f.params, &f.body)?;
    let mut env = TypeEnv::default();
    for (name, val) in &cx.t.env {
        env.vars.insert(name.clone(), project_type(val));
    }
    Ok((program, env))
}

fn project_type(val: &translate::Val) -> VarType {
    use translate::Val;
    match val {
        Val::Frame(f) => VarType::Frame {
            schema: f.logical(),
        },
        Val::EmptyFrame => VarType::Frame { schema: Vec::new() },
        Val::Mask { .. } => VarType::Mask,
        Val::Series { ty, .. } => VarType::Series(*ty),
        Val::Scalar(s) => VarType::Scalar(s.ty),
        Val::Const(c) => VarType::Scalar(match c {
            Constant::Int(_) => ScalarType::Int64,
            Constant::Float(_) => ScalarType::Float64,
            Constant::Bool(_) => ScalarType::Bool,
            Constant::Str(_) => ScalarType::String,
        }),
        Val::Tensor(t) => VarType::Tensor {
            order: t.order,
            cols: t.val_idxs.len(),
            layout: if t.coo.is_some() {
                Layout::Sparse
            } else {
                Layout::Dense
            },
        },
        Val::Grouped { frame, .. } => VarType::Frame {
            schema: frame.logical(),
        },
    }
}

/// End-to-end per-function compilation: discover upstream, then ANF,
/// translation, and validation here.
pub fn compile_function(
    f: &SourceFunction,
    catalog: &Catalog,
    distinct_provider: Option<&dyn Fn(&str, &str) -> Option<Vec<Constant>>>,
) -> Result<Program, FrontendError> {
    let normalized = normalize_source(f);
    let program = translate_function(&normalized, catalog, distinct_provider)?;
    let diags = crate::tondir::validate(&program);
    if crate::tondir::validate::has_errors(&diags) {
        let first = diags
            .iter()
            .find(|d| d.severity == crate::tondir::Severity::Error)
            .unwrap();
        return Err(FrontendError::Compile {
            function: f.name.clone(),
            line: None,
            message: format!("internal translation produced invalid IR: {first}"),
        });
    }
    Ok(program)
}

/// ANF over a discovered function.
pub fn normalize_source(f: &SourceFunction) -> SourceFunction {
    let as_py = PyFunction {
        name: f.name.clone(),
        params: f.params.clone(),
        decorators: Vec::new(),
        body: f.body.clone(),
        line: f.line,
        unsupported: None,
    };
    let normalized = anf_normalize(&as_py);
    SourceFunction {
        name: f.name.clone(),
        params: f.params.clone(),
        args: f.args.clone(),
        body: normalized.body,
        line: f.line,
    }
}

/// Distinct values sourced from an in-memory relation, for pivot
/// translation in tests and the check command.
pub fn distinct_from_database<'a>(
    db: &'a crate::oracle::Database,
) -> impl Fn(&str, &str) -> Option<Vec<Constant>> + 'a {
    |table: &str, column: &str| {
        let rel = db.get(table)?;
        let values = rel.distinct_values(column)?;
        let consts: Option<Vec<Constant>> = values
            .iter()
            .map(|v| match v {
                crate::oracle::Value::Int(i) => Some(Constant::Int(*i)),
                crate::oracle::Value::Float(f) => Some(Constant::Float(*f)),
                crate::oracle::Value::Bool(b) => Some(Constant::Bool(*b)),
                crate::oracle::Value::Str(s) => Some(Constant::Str(s.clone())),
                crate::oracle::Value::Null => None,
            })
            .collect();
        consts
    }
}
