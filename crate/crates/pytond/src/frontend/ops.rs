//! Per-statement translation of the supported API surface.

use super::pyast::*;
use super::translate::*;
use super::types::DecoratorArgs;
use super::FrontendError;
use crate::catalog::{Catalog, ScalarType};
use crate::tondir::ast::*;

pub(super) struct FunctionCx<'a> {
    pub t: Translator<'a>,
    pub returned: Option<Val>,
}

impl<'a> FunctionCx<'a> {
    pub fn new(
        catalog: &'a Catalog,
        args: &'a DecoratorArgs,
        provider: Option<&'a dyn Fn(&str, &str) -> Option<Vec<Constant>>>,
        fn_name: &str,
    ) -> Self {
        FunctionCx {
            t: Translator::new(catalog, args, provider, fn_name),
            returned: None,
        }
    }

    pub fn run(
        &mut self,
        params: &[String],
        body: &[PyStmt],
    ) -> Result<Program, FrontendError> {
        for p in params {
            self.t.bind_parameter(p)?;
        }
        for stmt in body {
            self.t.line = stmt.line();
            self.stmt(stmt)?;
        }
        if let Some(val) = self.returned.take() {
            self.materialize_sink(val)?;
        }
        Ok(Program::new(std::mem::take(&mut self.t.rules)))
    }

    fn stmt(&mut self, stmt: &PyStmt) -> Result<(), FrontendError> {
        match stmt {
            PyStmt::Assign {
                target: PyTarget::Name(name),
                value,
                ..
            } => {
                let val = self.eval(value, name)?;
                self.t.env.insert(name.clone(), val);
                Ok(())
            }
            PyStmt::Assign {
                target: PyTarget::Column { frame, column },
                value,
                ..
            } => self.column_assign(frame, column, value),
            PyStmt::Return { value, .. } => {
                let val = self.eval(value, "result")?;
                self.returned = Some(val);
                Ok(())
            }
        }
    }

    /// Guarantees the program's sink rule is the returned relation.
    fn materialize_sink(&mut self, val: Val) -> Result<(), FrontendError> {
        let val = match val {
            Val::Series { .. } | Val::Mask { .. } => self.force_frame(val, "result")?,
            other => other,
        };
        let rel = match &val {
            Val::Frame(f) => f.rel.clone(),
            Val::Tensor(t) => t.rel.clone(),
            Val::Scalar(s) => s.rel.clone(),
            Val::Const(c) => {
                let rule = Rule::new(
                    Head::plain("result", vec!["value".into()]),
                    vec![Atom::Const(ConstRelation {
                        vars: vec!["value".into()],
                        rows: vec![vec![c.clone()]],
                    })],
                );
                self.t.push_rule(rule);
                return Ok(());
            }
            other => return Err(self.t.err(format!("cannot return {}", val_kind(other)))),
        };
        let already_sink = self
            .t
            .rules
            .last()
            .map(|r| r.name() == rel)
            .unwrap_or(false);
        if already_sink {
            return Ok(());
        }
        // Pass-through projection so evaluation ends at the returned value.
        match &val {
            Val::Frame(f) => {
                let mut namer = Namer::new();
                let (access, vars) = self.t.frame_access(f, &mut namer);
                let head_vars: Vec<String> =
                    f.visible.iter().map(|&i| vars[i].clone()).collect();
                self.t.push_rule(Rule::new(
                    Head::plain("result", head_vars),
                    vec![Atom::Rel(access)],
                ));
            }
            Val::Tensor(t) => {
                let mut namer = Namer::new();
                let vars: Vec<String> = t.phys.iter().map(|(n, _)| namer.name(n)).collect();
                let mut head = vec![vars[t.id_idx].clone()];
                head.extend(t.val_idxs.iter().map(|&i| vars[i].clone()));
                self.t.push_rule(Rule::new(
                    Head::plain("result", head),
                    vec![Atom::Rel(RelationAccess::new(t.rel.clone(), vars))],
                ));
            }
            Val::Scalar(s) => {
                self.t.push_rule(Rule::new(
                    Head::plain("result", vec![s.col.clone()]),
                    vec![Atom::Rel(RelationAccess::new(
                        s.rel.clone(),
                        vec![s.col.clone()],
                    ))],
                ));
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    // --- expression evaluation -------------------------------------------

    pub(super) fn eval(&mut self, expr: &PyExpr, target: &str) -> Result<Val, FrontendError> {
        match expr {
            PyExpr::Name(n) => self.t.lookup(n),
            PyExpr::Int(v) => Ok(Val::Const(Constant::Int(*v))),
            PyExpr::Float(v) => Ok(Val::Const(Constant::Float(*v))),
            PyExpr::Str(v) => Ok(Val::Const(Constant::Str(v.clone()))),
            PyExpr::Bool(v) => Ok(Val::Const(Constant::Bool(*v))),
            PyExpr::Attr(base, attr) => self.eval_attr(base, attr, target),
            PyExpr::Subscript(obj, key) => self.eval_subscript(obj, key, target),
            PyExpr::BinOp(op, l, r) => self.eval_binop(*op, l, r, target),
            PyExpr::Unary(op, inner) => self.eval_unary(*op, inner, target),
            PyExpr::Ternary { cond, then, els } => self.eval_ternary(cond, then, els),
            PyExpr::Call { func, args, kwargs } => self.eval_call(func, args, kwargs, target),
            PyExpr::List(_) | PyExpr::Tuple(_) | PyExpr::Dict(_) | PyExpr::Lambda { .. } => {
                Err(self.t.err("literal container used outside an API argument"))
            }
        }
    }

    fn eval_attr(&mut self, base: &PyExpr, attr: &str, target: &str) -> Result<Val, FrontendError> {
        let Some(name) = base.as_name() else {
            return Err(self.t.err("unsupported attribute base"));
        };
        let val = self.t.lookup(name)?;
        match val {
            Val::Frame(frame) => self.column_of(&frame, attr),
            Val::Tensor(t) if attr == "T" => self.tensor_einsum_sugar(&t, "T", None, target),
            other => Err(self
                .t
                .err(format!("no attribute {attr} on {}", val_kind(&other)))),
        }
    }

    fn column_of(&self, frame: &Frame, col: &str) -> Result<Val, FrontendError> {
        let idx = frame
            .find_col(col)
            .ok_or_else(|| self.t.err(format!("unknown column {col}")))?;
        Ok(Val::Series {
            expr: SExpr::Col(idx),
            ty: frame.phys[idx].1,
            name: col.to_string(),
            source: frame.clone(),
        })
    }

    fn eval_subscript(
        &mut self,
        obj: &PyExpr,
        key: &PyExpr,
        target: &str,
    ) -> Result<Val, FrontendError> {
        let Some(obj_name) = obj.as_name() else {
            return Err(self.t.err("unsupported subscript base"));
        };
        let val = self.t.lookup(obj_name)?;
        let Val::Frame(frame) = val else {
            return Err(self
                .t
                .err(format!("cannot subscript {}", val_kind(&val))));
        };
        match key {
            PyExpr::Str(col) => self.column_of(&frame, col),
            PyExpr::List(items) => {
                let cols: Vec<&str> = items
                    .iter()
                    .map(|e| e.as_str_lit())
                    .collect::<Option<_>>()
                    .ok_or_else(|| self.t.err("projection list must contain column names"))?;
                self.project(&frame, &cols, target)
            }
            other => {
                let key_val = self.eval(other, target)?;
                match key_val {
                    Val::Mask { source, expr } => {
                        if source.rel != frame.rel {
                            return Err(self
                                .t
                                .err("filter mask built over a different dataframe"));
                        }
                        self.filter(&frame, &expr, target)
                    }
                    other => Err(self
                        .t
                        .err(format!("unsupported subscript key: {}", val_kind(&other)))),
                }
            }
        }
    }

    fn project(&mut self, frame: &Frame, cols: &[&str], target: &str) -> Result<Val, FrontendError> {
        let mut namer = Namer::new();
        let (access, vars) = self.t.frame_access(frame, &mut namer);
        let mut head = Vec::new();
        let mut phys = Vec::new();
        for col in cols {
            let idx = frame
                .find_col(col)
                .ok_or_else(|| self.t.err(format!("unknown column {col}")))?;
            head.push(vars[idx].clone());
            phys.push(frame.phys[idx].clone());
        }
        self.t
            .push_rule(Rule::new(Head::plain(target, head), vec![Atom::Rel(access)]));
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            visible: (0..phys.len()).collect(),
            id_col: phys
                .iter()
                .position(|(n, _)| frame.id_col.map(|i| &frame.phys[i].0) == Some(n)),
            phys,
        }))
    }

    fn filter(&mut self, frame: &Frame, mask: &SExpr, target: &str) -> Result<Val, FrontendError> {
        let mut namer = Namer::new();
        let (access, vars) = self.t.frame_access(frame, &mut namer);
        let mut body = vec![Atom::Rel(access)];
        for conjunct in Translator::conjuncts(mask) {
            self.t.filter_atoms(&conjunct, &vars, &mut namer, &mut body)?;
        }
        let head: Vec<String> = frame.visible.iter().map(|&i| vars[i].clone()).collect();
        self.t.push_rule(Rule::new(Head::plain(target, head), body));
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            phys: frame.logical(),
            visible: (0..frame.visible.len()).collect(),
            id_col: frame
                .id_col
                .and_then(|i| frame.visible.iter().position(|&v| v == i)),
        }))
    }

    fn eval_binop(
        &mut self,
        op: PyOp,
        l: &PyExpr,
        r: &PyExpr,
        target: &str,
    ) -> Result<Val, FrontendError> {
        if op == PyOp::MatMul {
            let lv = self.eval(l, target)?;
            let rv = self.eval(r, target)?;
            return self.einsum(&[lv, rv], "ij,jk->ik", target);
        }
        let ir_op = match op {
            PyOp::Add => BinOp::Add,
            PyOp::Sub => BinOp::Sub,
            PyOp::Mul => BinOp::Mul,
            PyOp::Div => BinOp::Div,
            PyOp::Eq => BinOp::Eq,
            PyOp::Ne => BinOp::Ne,
            PyOp::Lt => BinOp::Lt,
            PyOp::Le => BinOp::Le,
            PyOp::Gt => BinOp::Gt,
            PyOp::Ge => BinOp::Ge,
            PyOp::BitAnd | PyOp::And => BinOp::And,
            PyOp::BitOr | PyOp::Or => BinOp::Or,
            PyOp::FloorDiv | PyOp::Mod | PyOp::Pow | PyOp::MatMul => {
                return Err(self.t.err(format!("unsupported operator {op:?}")))
            }
        };
        let lv = self.eval(l, target)?;
        let rv = self.eval(r, target)?;
        self.combine(ir_op, lv, rv, target)
    }

    fn combine(&mut self, op: BinOp, l: Val, r: Val, target: &str) -> Result<Val, FrontendError> {
        use SExpr as E;
        let is_cmp = matches!(
            op,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        );
        let is_bool = matches!(op, BinOp::And | BinOp::Or);
        // Scalar-only combinations materialize a fresh scalar relation.
        if matches!(l, Val::Scalar(_) | Val::Const(_)) && matches!(r, Val::Scalar(_) | Val::Const(_))
        {
            if let (Val::Const(a), Val::Const(b)) = (&l, &r) {
                if let Some(folded) = fold_consts(op, a, b) {
                    return Ok(Val::Const(folded));
                }
            }
            return self.scalar_rule(op, l, r, target);
        }
        let (frame, le, lt, re, rt) = self.align_series(l, r)?;
        let ty = combine_types(op, lt, rt);
        let expr = E::Bin(op, Box::new(le), Box::new(re));
        if is_cmp || is_bool {
            Ok(Val::Mask {
                source: frame,
                expr,
            })
        } else {
            Ok(Val::Series {
                source: frame,
                expr,
                ty,
                name: target.to_string(),
            })
        }
    }

    /// Aligns two operands onto one source frame, turning scalars and
    /// constants into scalar expressions.
    fn align_series(
        &mut self,
        l: Val,
        r: Val,
    ) -> Result<(Frame, SExpr, ScalarType, SExpr, ScalarType), FrontendError> {
        let frame = match (&l, &r) {
            (Val::Series { source, .. }, _) | (Val::Mask { source, .. }, _) => source.clone(),
            (_, Val::Series { source, .. }) | (_, Val::Mask { source, .. }) => source.clone(),
            _ => return Err(self.t.err("expression does not involve a dataframe column")),
        };
        let to_expr = |cx: &Self, v: Val| -> Result<(SExpr, ScalarType), FrontendError> {
            Ok(match v {
                Val::Series {
                    source, expr, ty, ..
                } => {
                    if source.rel != frame.rel {
                        return Err(cx.t.err("cross-dataframe expression"));
                    }
                    (expr, ty)
                }
                Val::Mask { source, expr } => {
                    if source.rel != frame.rel {
                        return Err(cx.t.err("cross-dataframe expression"));
                    }
                    (expr, ScalarType::Bool)
                }
                Val::Const(c) => {
                    let ty = const_type(&c);
                    (SExpr::Const(c), ty)
                }
                Val::Scalar(s) => (SExpr::ScalarRef(s.clone()), s.ty),
                other => return Err(cx.t.err(format!("cannot combine {}", val_kind(&other)))),
            })
        };
        let (le, lt) = to_expr(self, l)?;
        let (re, rt) = to_expr(self, r)?;
        Ok((frame, le, lt, re, rt))
    }

    fn scalar_rule(&mut self, op: BinOp, l: Val, r: Val, target: &str) -> Result<Val, FrontendError> {
        let mut namer = Namer::new();
        namer.reserve(target);
        let mut body = Vec::new();
        let mut term_of = |v: Val, namer: &mut Namer| -> Term {
            match v {
                Val::Scalar(s) => {
                    let var = namer.name(&s.col);
                    body.push(Atom::Rel(RelationAccess::new(s.rel, vec![var.clone()])));
                    Term::Var(var)
                }
                Val::Const(c) => Term::Const(c),
                _ => unreachable!(),
            }
        };
        let lt = term_of(l, &mut namer);
        let rt = term_of(r, &mut namer);
        body.push(Atom::Compare(Compare {
            lhs: target.to_string(),
            op: CmpOp::Eq,
            rhs: Term::binop(op, lt, rt),
        }));
        self.t.push_rule(Rule::new(
            Head::plain(target, vec![target.to_string()]),
            body,
        ));
        Ok(Val::Scalar(ScalarRel {
            rel: target.to_string(),
            col: target.to_string(),
            ty: ScalarType::Float64,
        }))
    }

    fn eval_unary(
        &mut self,
        op: PyUnary,
        inner: &PyExpr,
        target: &str,
    ) -> Result<Val, FrontendError> {
        let val = self.eval(inner, target)?;
        match op {
            PyUnary::Neg => self.combine(BinOp::Sub, Val::Const(Constant::Int(0)), val, target),
            PyUnary::Not | PyUnary::Invert => match val {
                Val::Mask { source, expr } => Ok(Val::Mask {
                    source,
                    expr: self.t.invert(&expr)?,
                }),
                other => Err(self
                    .t
                    .err(format!("cannot negate {}", val_kind(&other)))),
            },
        }
    }

    fn eval_ternary(
        &mut self,
        cond: &PyExpr,
        then: &PyExpr,
        els: &PyExpr,
    ) -> Result<Val, FrontendError> {
        let c = self.eval(cond, "cond")?;
        let t = self.eval(then, "then")?;
        let e = self.eval(els, "else")?;
        let Val::Mask { source, expr } = c else {
            return Err(self.t.err("conditional requires a boolean mask condition"));
        };
        let to_expr = |cx: &Self, v: Val| -> Result<(SExpr, ScalarType), FrontendError> {
            Ok(match v {
                Val::Series {
                    source: s, expr, ty, ..
                } if s.rel == source.rel => (expr, ty),
                Val::Const(c) => {
                    let ty = const_type(&c);
                    (SExpr::Const(c), ty)
                }
                Val::Scalar(s) => (SExpr::ScalarRef(s.clone()), s.ty),
                other => return Err(cx.t.err(format!("bad conditional arm: {}", val_kind(&other)))),
            })
        };
        let (te, tt) = to_expr(self, t)?;
        let (ee, _) = to_expr(self, e)?;
        Ok(Val::Series {
            source,
            expr: SExpr::If(Box::new(expr), Box::new(te), Box::new(ee)),
            ty: tt,
            name: "cond".into(),
        })
    }

    // --- calls -------------------------------------------------------------

    fn eval_call(
        &mut self,
        func: &PyExpr,
        args: &[PyExpr],
        kwargs: &[(String, PyExpr)],
        target: &str,
    ) -> Result<Val, FrontendError> {
        let kw = kwargs_map(kwargs);
        match func {
            PyExpr::Name(n) if n == "DataFrame" => Ok(Val::EmptyFrame),
            PyExpr::Attr(base, method) => {
                if let Some(module) = base.as_name() {
                    if module == "np" || module == "numpy" {
                        return self.numpy_call(method, args, &kw, target);
                    }
                    if (module == "pd" || module == "pandas") && method == "DataFrame" {
                        return Ok(Val::EmptyFrame);
                    }
                }
                let recv = self.eval(base, target)?;
                self.method_call(recv, method, args, &kw, target)
            }
            other => Err(self.t.err(format!("unsupported call: {other:?}"))),
        }
    }

    fn numpy_call(
        &mut self,
        func: &str,
        args: &[PyExpr],
        _kw: &KwArgs,
        target: &str,
    ) -> Result<Val, FrontendError> {
        match func {
            "einsum" => {
                let Some(spec) = args.first().and_then(|a| a.as_str_lit()) else {
                    return Err(self.t.err("einsum needs a literal spec string"));
                };
                let mut ops = Vec::new();
                for a in &args[1..] {
                    ops.push(self.eval_tensor_operand(a, target)?);
                }
                let spec = spec.to_string();
                self.einsum(&ops, &spec, target)
            }
            "matmul" | "dot" => {
                let mut ops = Vec::new();
                for a in args {
                    ops.push(self.eval_tensor_operand(a, target)?);
                }
                self.einsum(&ops, "ij,jk->ik", target)
            }
            "array" => {
                let Some(PyExpr::List(rows)) = args.first() else {
                    return Err(self.t.err("np.array expects a list literal"));
                };
                self.const_tensor(rows, target)
            }
            "where" => {
                if args.len() != 3 {
                    return Err(self.t.err("np.where expects (cond, then, else)"));
                }
                self.eval_ternary(&args[1].clone(), &args[0].clone(), &args[2].clone())
                    .map_err(|e| e)
                    .and_then(|_| {
                        // np.where(cond, a, b) == a if cond else b
                        self.eval_ternary(&args[0].clone(), &args[1].clone(), &args[2].clone())
                    })
            }
            other => Err(self.t.err(format!("untranslatable API: np.{other}"))),
        }
    }

    fn eval_tensor_operand(&mut self, expr: &PyExpr, target: &str) -> Result<Val, FrontendError> {
        match expr {
            PyExpr::List(rows) => self.const_tensor(rows, target),
            PyExpr::Call { func, args, .. } => {
                if let PyExpr::Attr(base, m) = &**func {
                    if base.as_name() == Some("np") && m == "array" {
                        if let Some(PyExpr::List(rows)) = args.first() {
                            return self.const_tensor(rows, target);
                        }
                    }
                }
                self.eval(expr, target)
            }
            other => self.eval(other, target),
        }
    }

    fn const_tensor(&mut self, rows: &[PyExpr], target: &str) -> Result<Val, FrontendError> {
        let as_const = |e: &PyExpr| -> Option<Constant> {
            match e {
                PyExpr::Int(v) => Some(Constant::Int(*v)),
                PyExpr::Float(v) => Some(Constant::Float(*v)),
                _ => None,
            }
        };
        let matrix: Vec<Vec<Constant>> = if rows.iter().all(|r| matches!(r, PyExpr::List(_))) {
            rows.iter()
                .map(|r| match r {
                    PyExpr::List(cells) => cells.iter().map(&as_const).collect::<Option<Vec<_>>>(),
                    _ => None,
                })
                .collect::<Option<_>>()
                .ok_or_else(|| self.t.err("np.array literal must be numeric"))?
        } else {
            rows.iter()
                .map(|c| as_const(c).map(|v| vec![v]))
                .collect::<Option<_>>()
                .ok_or_else(|| self.t.err("np.array literal must be numeric"))?
        };
        let order = if rows.iter().all(|r| matches!(r, PyExpr::List(_))) {
            2
        } else {
            1
        };
        let n_cols = matrix.first().map(|r| r.len()).unwrap_or(0);
        if matrix.is_empty() || matrix.iter().any(|r| r.len() != n_cols) {
            return Err(self.t.err("np.array literal must be rectangular and non-empty"));
        }
        let mut vars = vec!["ID".to_string()];
        let mut phys = vec![("ID".to_string(), ScalarType::Int64)];
        for k in 0..n_cols {
            vars.push(format!("c{k}"));
            phys.push((format!("c{k}"), ScalarType::Float64));
        }
        let const_rows: Vec<Vec<Constant>> = matrix
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut out = vec![Constant::Int(i as i64 + 1)];
                out.extend(row.iter().cloned());
                out
            })
            .collect();
        self.t.push_rule(Rule::new(
            Head::plain(target, vars.clone()),
            vec![Atom::Const(ConstRelation {
                vars,
                rows: const_rows,
            })],
        ));
        Ok(Val::Tensor(Tensor {
            rel: target.to_string(),
            id_idx: 0,
            val_idxs: (1..=n_cols).collect(),
            order,
            rows: Some(matrix.len() as u64),
            phys,
            coo: None,
        }))
    }

    fn method_call(
        &mut self,
        recv: Val,
        method: &str,
        args: &[PyExpr],
        kw: &KwArgs,
        target: &str,
    ) -> Result<Val, FrontendError> {
        match recv {
            Val::Frame(frame) => self.frame_method(frame, method, args, kw, target),
            Val::Series {
                source,
                expr,
                ty,
                name,
            } => self.series_method(source, expr, ty, &name, method, args, target),
            Val::Grouped { frame, by } => self.grouped_method(frame, by, method, args, target),
            Val::Tensor(t) => self.tensor_method(t, method, args, kw, target),
            other => Err(self.t.err(format!(
                "no method {method} on {}",
                val_kind(&other)
            ))),
        }
    }

    fn frame_method(
        &mut self,
        frame: Frame,
        method: &str,
        args: &[PyExpr],
        kw: &KwArgs,
        target: &str,
    ) -> Result<Val, FrontendError> {
        match method {
            "merge" => {
                let right = match args.first() {
                    Some(e) => self.eval(e, target)?,
                    None => return Err(self.t.err("merge needs a right dataframe")),
                };
                let right = self.force_frame(right, target)?;
                let Val::Frame(right) = right else { unreachable!() };
                self.merge(frame, right, kw, target)
            }
            "groupby" => {
                let by = str_or_list(args.first().or_else(|| kw.get("by")))
                    .ok_or_else(|| self.t.err("groupby needs column name(s)"))?;
                for c in &by {
                    frame
                        .find_col(c)
                        .ok_or_else(|| self.t.err(format!("unknown column {c}")))?;
                }
                Ok(Val::Grouped { frame, by })
            }
            "aggregate" | "agg" => {
                let fn_name = args
                    .first()
                    .and_then(|a| a.as_str_lit())
                    .ok_or_else(|| self.t.err("aggregate needs a function name"))?;
                let agg = AggFn::parse(fn_name)
                    .ok_or_else(|| self.t.err(format!("unknown aggregate {fn_name}")))?;
                self.aggregate_frame(&frame, agg, target)
            }
            "sort_values" => {
                let by = str_or_list(args.first().or_else(|| kw.get("by")))
                    .ok_or_else(|| self.t.err("sort_values needs column name(s)"))?;
                let ascending = bools_arg(kw.get("ascending"), by.len(), true)
                    .map_err(|m| self.t.err(m))?;
                self.sort_frame(&frame, &by, &ascending, target)
            }
            "head" => {
                let n = match args.first() {
                    Some(PyExpr::Int(n)) if *n >= 0 => *n as u64,
                    _ => return Err(self.t.err("head needs a non-negative count")),
                };
                self.limit_frame(&frame, n, target)
            }
            "drop" => {
                let cols = str_or_list(args.first().or_else(|| kw.get("columns").or(kw.get("labels"))))
                    .ok_or_else(|| self.t.err("drop needs column name(s)"))?;
                self.drop_cols(frame, &cols, target)
            }
            "to_numpy" => self.to_numpy(frame, target),
            "pivot_table" => self.pivot(frame, kw, target),
            "isin" => Err(self
                .t
                .err("isin is supported on single columns, e.g. df.col.isin(...)")),
            "apply" => {
                let Some(PyExpr::Lambda { params, body }) = args.first() else {
                    return Err(self.t.err("apply needs a lambda"));
                };
                let [param] = params.as_slice() else {
                    return Err(self.t.err("apply lambda takes exactly one argument"));
                };
                let expr = self.pyexpr_over_frame(body, &frame, param)?;
                let ty = self.sexpr_type(&expr, &frame);
                Ok(Val::Series {
                    source: frame,
                    expr,
                    ty,
                    name: target.to_string(),
                })
            }
            other => Err(self.t.err(format!("untranslatable API: {other}"))),
        }
    }

    fn series_method(
        &mut self,
        source: Frame,
        expr: SExpr,
        ty: ScalarType,
        name: &str,
        method: &str,
        args: &[PyExpr],
        target: &str,
    ) -> Result<Val, FrontendError> {
        match method {
            "sum" | "min" | "max" | "mean" | "count" => {
                let agg = AggFn::parse(method).unwrap();
                let mut namer = Namer::new();
                namer.reserve(target);
                let (access, vars) = self.t.frame_access(&source, &mut namer);
                let mut body = vec![Atom::Rel(access)];
                let mut extra = Vec::new();
                let term = self.t.sexpr_term(&expr, &vars, &mut namer, &mut extra)?;
                body.extend(extra);
                body.push(Atom::Compare(Compare {
                    lhs: target.to_string(),
                    op: CmpOp::Eq,
                    rhs: Term::Agg(agg, Box::new(term)),
                }));
                self.t.push_rule(Rule::new(
                    Head::plain(target, vec![target.to_string()]),
                    body,
                ));
                let out_ty = match agg {
                    AggFn::Count => ScalarType::Int64,
                    AggFn::Avg => ScalarType::Float64,
                    _ => ty,
                };
                Ok(Val::Scalar(ScalarRel {
                    rel: target.to_string(),
                    col: target.to_string(),
                    ty: out_ty,
                }))
            }
            "unique" => {
                let mut namer = Namer::new();
                let (access, vars) = self.t.frame_access(&source, &mut namer);
                let mut body = vec![Atom::Rel(access)];
                let head_var = match &expr {
                    SExpr::Col(i) => vars[*i].clone(),
                    other => {
                        let mut extra = Vec::new();
                        let term = self.t.sexpr_term(other, &vars, &mut namer, &mut extra)?;
                        body.extend(extra);
                        let v = namer.name(name);
                        body.push(Atom::Compare(Compare {
                            lhs: v.clone(),
                            op: CmpOp::Eq,
                            rhs: term,
                        }));
                        v
                    }
                };
                body.push(Atom::ExtAtom(ExtAtom {
                    name: "unique".into(),
                    args: vec![head_var.clone()],
                }));
                self.t
                    .push_rule(Rule::new(Head::plain(target, vec![head_var]), body));
                Ok(Val::Frame(Frame {
                    rel: target.to_string(),
                    phys: vec![(name.to_string(), ty)],
                    visible: vec![0],
                    id_col: None,
                }))
            }
            "isin" => {
                let needle = Box::new(expr);
                match args.first() {
                    Some(PyExpr::List(items)) => {
                        let values: Vec<Constant> = items
                            .iter()
                            .map(|e| match e {
                                PyExpr::Int(v) => Some(Constant::Int(*v)),
                                PyExpr::Float(v) => Some(Constant::Float(*v)),
                                PyExpr::Str(s) => Some(Constant::Str(s.clone())),
                                PyExpr::Bool(b) => Some(Constant::Bool(*b)),
                                _ => None,
                            })
                            .collect::<Option<_>>()
                            .ok_or_else(|| self.t.err("isin list must hold literals"))?;
                        Ok(Val::Mask {
                            source,
                            expr: SExpr::InList {
                                expr: needle,
                                values,
                                negated: false,
                            },
                        })
                    }
                    Some(other) => {
                        let v = self.eval(other, target)?;
                        let v = self.force_frame(v, &format!("{target}_keys"))?;
                        let Val::Frame(keys) = v else { unreachable!() };
                        if keys.visible.len() != 1 {
                            return Err(self
                                .t
                                .err("isin against a dataframe requires a single column"));
                        }
                        Ok(Val::Mask {
                            source,
                            expr: SExpr::InRel {
                                expr: needle,
                                rel: keys.rel.clone(),
                                arity: keys.phys.len(),
                                col: keys.visible[0],
                            },
                        })
                    }
                    None => Err(self.t.err("isin needs an argument")),
                }
            }
            "apply" => {
                let Some(PyExpr::Lambda { params, body }) = args.first() else {
                    return Err(self.t.err("apply needs a lambda"));
                };
                let [param] = params.as_slice() else {
                    return Err(self.t.err("apply lambda takes exactly one argument"));
                };
                let substituted =
                    self.pyexpr_over_series(body, &source, param, &expr)?;
                let ty = self.sexpr_type(&substituted, &source);
                Ok(Val::Series {
                    source,
                    expr: substituted,
                    ty,
                    name: target.to_string(),
                })
            }
            "round" | "abs" => Ok(Val::Series {
                source,
                expr: SExpr::Ext(method.to_string(), vec![expr]),
                ty,
                name: name.to_string(),
            }),
            other => Err(self.t.err(format!("untranslatable API: Series.{other}"))),
        }
    }

    fn grouped_method(
        &mut self,
        frame: Frame,
        by: Vec<String>,
        method: &str,
        args: &[PyExpr],
        target: &str,
    ) -> Result<Val, FrontendError> {
        let aggs: Vec<(String, AggFn)> = match method {
            "sum" | "mean" => {
                let agg = AggFn::parse(method).unwrap();
                frame
                    .logical()
                    .iter()
                    .filter(|(n, ty)| !by.contains(n) && ty.is_numeric())
                    .map(|(n, _)| (n.clone(), agg))
                    .collect()
            }
            "min" | "max" | "count" => {
                let agg = AggFn::parse(method).unwrap();
                frame
                    .logical()
                    .iter()
                    .filter(|(n, _)| !by.contains(n))
                    .map(|(n, _)| (n.clone(), agg))
                    .collect()
            }
            "agg" | "aggregate" => {
                let Some(PyExpr::Dict(items)) = args.first() else {
                    return Err(self
                        .t
                        .err("grouped agg needs a {column: function} dictionary"));
                };
                items
                    .iter()
                    .map(|(k, v)| {
                        let col = k.as_str_lit()?;
                        let f = AggFn::parse(v.as_str_lit()?)?;
                        Some((col.to_string(), f))
                    })
                    .collect::<Option<_>>()
                    .ok_or_else(|| self.t.err("grouped agg dictionary must map columns to function names"))?
            }
            other => {
                return Err(self
                    .t
                    .err(format!("untranslatable API: groupby().{other}")))
            }
        };
        if aggs.is_empty() {
            return Err(self.t.err("grouped aggregation selects no columns"));
        }
        let mut namer = Namer::new();
        for (col, _) in &aggs {
            namer.reserve(col);
        }
        let (access, vars) = self.t.frame_access(&frame, &mut namer);
        let mut body = vec![Atom::Rel(access)];
        let mut head = Vec::new();
        let mut out_phys = Vec::new();
        let mut group_vars = Vec::new();
        for g in &by {
            let idx = frame
                .find_col(g)
                .ok_or_else(|| self.t.err(format!("unknown column {g}")))?;
            head.push(vars[idx].clone());
            group_vars.push(vars[idx].clone());
            out_phys.push(frame.phys[idx].clone());
        }
        for (col, agg) in &aggs {
            let idx = frame
                .find_col(col)
                .ok_or_else(|| self.t.err(format!("unknown column {col}")))?;
            body.push(Atom::Compare(Compare {
                lhs: col.clone(),
                op: CmpOp::Eq,
                rhs: Term::Agg(*agg, Box::new(Term::Var(vars[idx].clone()))),
            }));
            head.push(col.clone());
            let ty = match agg {
                AggFn::Count => ScalarType::Int64,
                AggFn::Avg => ScalarType::Float64,
                _ => frame.phys[idx].1,
            };
            out_phys.push((col.clone(), ty));
        }
        let mut rule = Rule::new(Head::plain(target, head), body);
        rule.head.group = Some(group_vars);
        self.t.push_rule(rule);
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            visible: (0..out_phys.len()).collect(),
            phys: out_phys,
            id_col: None,
        }))
    }

    fn aggregate_frame(
        &mut self,
        frame: &Frame,
        agg: AggFn,
        target: &str,
    ) -> Result<Val, FrontendError> {
        let mut namer = Namer::new();
        let logical = frame.logical();
        for (n, _) in &logical {
            namer.reserve(n);
        }
        let (access, vars) = self.t.frame_access(frame, &mut namer);
        let mut body = vec![Atom::Rel(access)];
        let mut head = Vec::new();
        let mut out_phys = Vec::new();
        for (i, (name, ty)) in logical.iter().enumerate() {
            let src = vars[frame.visible[i]].clone();
            body.push(Atom::Compare(Compare {
                lhs: name.clone(),
                op: CmpOp::Eq,
                rhs: Term::Agg(agg, Box::new(Term::Var(src))),
            }));
            head.push(name.clone());
            out_phys.push((
                name.clone(),
                match agg {
                    AggFn::Count => ScalarType::Int64,
                    AggFn::Avg => ScalarType::Float64,
                    _ => *ty,
                },
            ));
        }
        self.t.push_rule(Rule::new(Head::plain(target, head), body));
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            visible: (0..out_phys.len()).collect(),
            phys: out_phys,
            id_col: None,
        }))
    }

    fn sort_frame(
        &mut self,
        frame: &Frame,
        by: &[String],
        ascending: &[bool],
        target: &str,
    ) -> Result<Val, FrontendError> {
        let mut namer = Namer::new();
        let (access, vars) = self.t.frame_access(frame, &mut namer);
        let head: Vec<String> = frame.visible.iter().map(|&i| vars[i].clone()).collect();
        let mut sort_vars = Vec::new();
        for b in by {
            let idx = frame
                .find_col(b)
                .ok_or_else(|| self.t.err(format!("unknown column {b}")))?;
            sort_vars.push(vars[idx].clone());
        }
        let mut rule = Rule::new(Head::plain(target, head), vec![Atom::Rel(access)]);
        rule.head.sort = Some(SortSpec {
            vars: sort_vars,
            ascending: ascending.to_vec(),
        });
        self.t.push_rule(rule);
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            phys: frame.logical(),
            visible: (0..frame.visible.len()).collect(),
            id_col: frame
                .id_col
                .and_then(|i| frame.visible.iter().position(|&v| v == i)),
        }))
    }

    fn limit_frame(&mut self, frame: &Frame, n: u64, target: &str) -> Result<Val, FrontendError> {
        let mut namer = Namer::new();
        let (access, vars) = self.t.frame_access(frame, &mut namer);
        let head: Vec<String> = frame.visible.iter().map(|&i| vars[i].clone()).collect();
        let mut rule = Rule::new(Head::plain(target, head), vec![Atom::Rel(access)]);
        rule.head.limit = Some(n);
        self.t.push_rule(rule);
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            phys: frame.logical(),
            visible: (0..frame.visible.len()).collect(),
            id_col: frame
                .id_col
                .and_then(|i| frame.visible.iter().position(|&v| v == i)),
        }))
    }

    fn drop_cols(
        &mut self,
        frame: Frame,
        cols: &[String],
        target: &str,
    ) -> Result<Val, FrontendError> {
        for c in cols {
            frame
                .find_col(c)
                .ok_or_else(|| self.t.err(format!("unknown column {c}")))?;
        }
        let id_name = frame.id_col.map(|i| frame.phys[i].0.clone());
        let only_id = cols.len() == 1 && Some(&cols[0]) == id_name.as_ref();
        if only_id {
            // The row-identity column stays in the relation; it is only
            // removed from the logical view and retagged as the tensor id.
            let id_idx = frame.id_col.unwrap();
            return Ok(Val::Frame(Frame {
                rel: frame.rel,
                visible: frame
                    .visible
                    .iter()
                    .copied()
                    .filter(|&i| i != id_idx)
                    .collect(),
                phys: frame.phys,
                id_col: Some(id_idx),
            }));
        }
        let keep: Vec<String> = frame
            .logical()
            .iter()
            .map(|(n, _)| n.clone())
            .filter(|n| !cols.contains(n))
            .collect();
        let keep_refs: Vec<&str> = keep.iter().map(String::as_str).collect();
        self.project(&frame, &keep_refs, target)
    }

    fn to_numpy(&mut self, frame: Frame, target: &str) -> Result<Val, FrontendError> {
        let id_idx = match frame.id_col {
            Some(i) => i,
            None => {
                // Establish row identity once, at first materialization.
                let mut namer = Namer::new();
                namer.reserve("ID");
                let (access, vars) = self.t.frame_access(&frame, &mut namer);
                let mut head = vec!["ID".to_string()];
                head.extend(frame.visible.iter().map(|&i| vars[i].clone()));
                let body = vec![
                    Atom::Rel(access),
                    Atom::Compare(Compare {
                        lhs: "ID".into(),
                        op: CmpOp::Eq,
                        rhs: Term::Ext("UID".into(), vec![]),
                    }),
                ];
                self.t.push_rule(Rule::new(Head::plain(target, head), body));
                let mut phys = vec![("ID".to_string(), ScalarType::Int64)];
                phys.extend(frame.logical());
                let val_idxs: Vec<usize> = (1..phys.len()).collect();
                for (name, ty) in &phys[1..] {
                    if !ty.is_numeric() {
                        return Err(self
                            .t
                            .err(format!("to_numpy over non-numeric column {name}")));
                    }
                }
                return Ok(Val::Tensor(Tensor {
                    rel: target.to_string(),
                    id_idx: 0,
                    order: if val_idxs.len() == 1 { 1 } else { 2 },
                    val_idxs,
                    phys,
                    rows: None,
                    coo: None,
                }));
            }
        };
        let val_idxs: Vec<usize> = frame
            .visible
            .iter()
            .copied()
            .filter(|&i| i != id_idx)
            .collect();
        for &i in &val_idxs {
            if !frame.phys[i].1.is_numeric() {
                return Err(self.t.err(format!(
                    "to_numpy over non-numeric column {}",
                    frame.phys[i].0
                )));
            }
        }
        if val_idxs.is_empty() {
            return Err(self.t.err("to_numpy over a dataframe with no value columns"));
        }
        Ok(Val::Tensor(Tensor {
            rel: frame.rel,
            id_idx,
            order: if val_idxs.len() == 1 { 1 } else { 2 },
            val_idxs,
            phys: frame.phys,
            rows: None,
            coo: None,
        }))
    }

    fn pivot(&mut self, frame: Frame, kw: &KwArgs, target: &str) -> Result<Val, FrontendError> {
        let get_str = |key: &str| kw.get(key).and_then(|e| e.as_str_lit().map(str::to_string));
        let index = get_str("index").ok_or_else(|| self.t.err("pivot_table needs index="))?;
        let columns = get_str("columns").ok_or_else(|| self.t.err("pivot_table needs columns="))?;
        let values = get_str("values").ok_or_else(|| self.t.err("pivot_table needs values="))?;
        let func = get_str("func")
            .or_else(|| get_str("aggfunc"))
            .unwrap_or_else(|| "sum".to_string());
        let agg = AggFn::parse(&func)
            .ok_or_else(|| self.t.err(format!("unknown pivot aggregate {func}")))?;
        let distinct = pivot_distinct_values(&self.t, &frame.rel, &columns)?;

        let mut namer = Namer::new();
        let idx_i = frame
            .find_col(&index)
            .ok_or_else(|| self.t.err(format!("unknown column {index}")))?;
        let col_i = frame
            .find_col(&columns)
            .ok_or_else(|| self.t.err(format!("unknown column {columns}")))?;
        let val_i = frame
            .find_col(&values)
            .ok_or_else(|| self.t.err(format!("unknown column {values}")))?;
        let out_names: Vec<String> = distinct
            .iter()
            .map(|v| match v {
                Constant::Str(s) => sanitize_ident(s),
                other => sanitize_ident(&other.to_string()),
            })
            .collect();
        for n in &out_names {
            namer.reserve(n);
        }
        let (access, vars) = self.t.frame_access(&frame, &mut namer);
        let mut body = vec![Atom::Rel(access)];
        let mut head = vec![vars[idx_i].clone()];
        let mut out_phys = vec![frame.phys[idx_i].clone()];
        let val_ty = if agg == AggFn::Count {
            ScalarType::Int64
        } else {
            frame.phys[val_i].1
        };
        for (value, out_name) in distinct.iter().zip(&out_names) {
            let cond = Term::binop(
                BinOp::Eq,
                Term::Var(vars[col_i].clone()),
                Term::Const(value.clone()),
            );
            let picked = Term::if_then_else(cond, Term::Var(vars[val_i].clone()), Term::int(0));
            body.push(Atom::Compare(Compare {
                lhs: out_name.clone(),
                op: CmpOp::Eq,
                rhs: Term::Agg(agg, Box::new(picked)),
            }));
            head.push(out_name.clone());
            out_phys.push((out_name.clone(), val_ty));
        }
        let mut rule = Rule::new(Head::plain(target, head), body);
        rule.head.group = Some(vec![vars[idx_i].clone()]);
        self.t.push_rule(rule);
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            visible: (0..out_phys.len()).collect(),
            phys: out_phys,
            id_col: None,
        }))
    }

    pub(super) fn force_frame(&mut self, val: Val, target: &str) -> Result<Val, FrontendError> {
        match val {
            Val::Frame(_) => Ok(val),
            Val::Series {
                source,
                expr,
                ty,
                name,
            } => {
                let mut namer = Namer::new();
                let (access, vars) = self.t.frame_access(&source, &mut namer);
                let mut body = vec![Atom::Rel(access)];
                let head_var = match &expr {
                    SExpr::Col(i) => vars[*i].clone(),
                    other => {
                        let mut extra = Vec::new();
                        let term = self.t.sexpr_term(other, &vars, &mut namer, &mut extra)?;
                        body.extend(extra);
                        let v = namer.name(&name);
                        body.push(Atom::Compare(Compare {
                            lhs: v.clone(),
                            op: CmpOp::Eq,
                            rhs: term,
                        }));
                        v
                    }
                };
                let col_name = match &expr {
                    SExpr::Col(i) => source.phys[*i].0.clone(),
                    _ => name.clone(),
                };
                self.t
                    .push_rule(Rule::new(Head::plain(target, vec![head_var]), body));
                Ok(Val::Frame(Frame {
                    rel: target.to_string(),
                    phys: vec![(col_name, ty)],
                    visible: vec![0],
                    id_col: None,
                }))
            }
            other => Err(self
                .t
                .err(format!("expected a dataframe, found {}", val_kind(&other)))),
        }
    }

    fn pyexpr_over_frame(
        &mut self,
        body: &PyExpr,
        frame: &Frame,
        row_param: &str,
    ) -> Result<SExpr, FrontendError> {
        self.pyexpr_to_sexpr(body, frame, &|cx, e| match e {
            PyExpr::Attr(base, col) if base.as_name() == Some(row_param) => {
                let idx = frame
                    .find_col(col)
                    .ok_or_else(|| cx.t.err(format!("unknown column {col}")))?;
                Ok(Some(SExpr::Col(idx)))
            }
            PyExpr::Subscript(base, key) if base.as_name() == Some(row_param) => {
                let col = key
                    .as_str_lit()
                    .ok_or_else(|| cx.t.err("row subscript must be a column name"))?;
                let idx = frame
                    .find_col(col)
                    .ok_or_else(|| cx.t.err(format!("unknown column {col}")))?;
                Ok(Some(SExpr::Col(idx)))
            }
            _ => Ok(None),
        })
    }

    fn pyexpr_over_series(
        &mut self,
        body: &PyExpr,
        frame: &Frame,
        param: &str,
        series: &SExpr,
    ) -> Result<SExpr, FrontendError> {
        self.pyexpr_to_sexpr(body, frame, &|_, e| match e {
            PyExpr::Name(n) if n == param => Ok(Some(series.clone())),
            _ => Ok(None),
        })
    }

    /// Evaluates a lambda body directly to a scalar expression over a
    /// frame; `subst` resolves parameter references.
    fn pyexpr_to_sexpr(
        &mut self,
        expr: &PyExpr,
        frame: &Frame,
        subst: &dyn Fn(&Self, &PyExpr) -> Result<Option<SExpr>, FrontendError>,
    ) -> Result<SExpr, FrontendError> {
        if let Some(replaced) = subst(self, expr)? {
            return Ok(replaced);
        }
        Ok(match expr {
            PyExpr::Int(v) => SExpr::Const(Constant::Int(*v)),
            PyExpr::Float(v) => SExpr::Const(Constant::Float(*v)),
            PyExpr::Str(s) => SExpr::Const(Constant::Str(s.clone())),
            PyExpr::Bool(b) => SExpr::Const(Constant::Bool(*b)),
            PyExpr::Name(n) => match self.t.lookup(n)? {
                Val::Const(c) => SExpr::Const(c),
                Val::Scalar(s) => SExpr::ScalarRef(s),
                other => {
                    return Err(self.t.err(format!(
                        "lambda references {} {n}",
                        val_kind(&other)
                    )))
                }
            },
            PyExpr::BinOp(op, l, r) => {
                let ir_op = match op {
                    PyOp::Add => BinOp::Add,
                    PyOp::Sub => BinOp::Sub,
                    PyOp::Mul => BinOp::Mul,
                    PyOp::Div => BinOp::Div,
                    PyOp::Eq => BinOp::Eq,
                    PyOp::Ne => BinOp::Ne,
                    PyOp::Lt => BinOp::Lt,
                    PyOp::Le => BinOp::Le,
                    PyOp::Gt => BinOp::Gt,
                    PyOp::Ge => BinOp::Ge,
                    PyOp::BitAnd | PyOp::And => BinOp::And,
                    PyOp::BitOr | PyOp::Or => BinOp::Or,
                    other => {
                        return Err(self.t.err(format!("unsupported operator {other:?} in lambda")))
                    }
                };
                SExpr::Bin(
                    ir_op,
                    Box::new(self.pyexpr_to_sexpr(l, frame, subst)?),
                    Box::new(self.pyexpr_to_sexpr(r, frame, subst)?),
                )
            }
            PyExpr::Unary(PyUnary::Neg, inner) => SExpr::Bin(
                BinOp::Sub,
                Box::new(SExpr::Const(Constant::Int(0))),
                Box::new(self.pyexpr_to_sexpr(inner, frame, subst)?),
            ),
            PyExpr::Ternary { cond, then, els } => SExpr::If(
                Box::new(self.pyexpr_to_sexpr(cond, frame, subst)?),
                Box::new(self.pyexpr_to_sexpr(then, frame, subst)?),
                Box::new(self.pyexpr_to_sexpr(els, frame, subst)?),
            ),
            other => return Err(self.t.err(format!("unsupported lambda expression: {other:?}"))),
        })
    }

    pub(super) fn sexpr_type(&self, expr: &SExpr, frame: &Frame) -> ScalarType {
        match expr {
            SExpr::Col(i) => frame.phys[*i].1,
            SExpr::Const(c) => const_type(c),
            SExpr::ScalarRef(s) => s.ty,
            SExpr::Bin(op, l, _) => combine_types(*op, self.sexpr_type(l, frame), ScalarType::Int64),
            SExpr::If(_, t, _) => self.sexpr_type(t, frame),
            SExpr::Ext(_, args) => args
                .first()
                .map(|a| self.sexpr_type(a, frame))
                .unwrap_or(ScalarType::Int64),
            SExpr::InList { .. } | SExpr::InRel { .. } => ScalarType::Bool,
        }
    }
}

pub(super) fn val_kind(val: &Val) -> &'static str {
    match val {
        Val::Frame(_) => "a dataframe",
        Val::EmptyFrame => "an empty dataframe",
        Val::Mask { .. } => "a boolean mask",
        Val::Series { .. } => "a column expression",
        Val::Scalar(_) => "a scalar",
        Val::Const(_) => "a constant",
        Val::Tensor(_) => "a tensor",
        Val::Grouped { .. } => "a grouped dataframe",
    }
}

pub(super) fn const_type(c: &Constant) -> ScalarType {
    match c {
        Constant::Int(_) => ScalarType::Int64,
        Constant::Float(_) => ScalarType::Float64,
        Constant::Bool(_) => ScalarType::Bool,
        Constant::Str(_) => ScalarType::String,
    }
}

pub(super) fn fold_consts(op: BinOp, a: &Constant, b: &Constant) -> Option<Constant> {
    use Constant::*;
    Some(match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.checked_add(*y)?),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.checked_sub(*y)?),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.checked_mul(*y)?),
        (BinOp::Add, Float(x), Float(y)) => Float(x + y),
        (BinOp::Sub, Float(x), Float(y)) => Float(x - y),
        (BinOp::Mul, Float(x), Float(y)) => Float(x * y),
        (BinOp::Div, _, _) => {
            let (x, y) = (num(a)?, num(b)?);
            if y == 0.0 {
                return None;
            }
            Float(x / y)
        }
        (BinOp::Add | BinOp::Sub | BinOp::Mul, _, _) => {
            let (x, y) = (num(a)?, num(b)?);
            Float(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                _ => x * y,
            })
        }
        _ => return None,
    })
}

fn num(c: &Constant) -> Option<f64> {
    match c {
        Constant::Int(v) => Some(*v as f64),
        Constant::Float(v) => Some(*v),
        _ => None,
    }
}

pub(super) fn str_or_list(expr: Option<&PyExpr>) -> Option<Vec<String>> {
    match expr? {
        PyExpr::Str(s) => Some(vec![s.clone()]),
        PyExpr::List(items) => items
            .iter()
            .map(|e| e.as_str_lit().map(str::to_string))
            .collect(),
        _ => None,
    }
}

pub(super) fn bools_arg(
    expr: Option<&PyExpr>,
    len: usize,
    default: bool,
) -> Result<Vec<bool>, String> {
    match expr {
        None => Ok(vec![default; len]),
        Some(PyExpr::Bool(b)) => Ok(vec![*b; len]),
        Some(PyExpr::List(items)) => {
            let flags: Option<Vec<bool>> = items
                .iter()
                .map(|e| match e {
                    PyExpr::Bool(b) => Some(*b),
                    _ => None,
                })
                .collect();
            let flags = flags.ok_or("ascending list must hold booleans")?;
            if flags.len() != len {
                return Err(format!(
                    "ascending has {} flags for {} sort columns",
                    flags.len(),
                    len
                ));
            }
            Ok(flags)
        }
        Some(_) => Err("ascending must be a boolean or list of booleans".into()),
    }
}
