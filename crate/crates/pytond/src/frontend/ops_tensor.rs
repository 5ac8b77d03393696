//! Dense and sparse tensor translation: the misc kernels (all, nonzero,
//! round, compress), einsum plan replay over dense relations, and the
//! join-and-sum COO path.

use super::einsum::{plan_einsum, parse_spec, EsKernel, PlanStep};
use super::ops::FunctionCx;
use super::pyast::*;
use super::translate::*;
use super::FrontendError;
use crate::catalog::ScalarType;
use crate::tondir::ast::*;
use std::collections::HashMap;

/// Einsum operand during plan replay.
#[derive(Debug, Clone)]
pub(super) enum EOp {
    Tensor(Tensor),
    ScalarRel(ScalarRel),
    ScalarConst(Constant),
}

impl<'a> FunctionCx<'a> {
    pub(super) fn tensor_method(
        &mut self,
        t: Tensor,
        method: &str,
        args: &[PyExpr],
        kw: &KwArgs,
        target: &str,
    ) -> Result<Val, FrontendError> {
        if t.coo.is_some() {
            return Err(self
                .t
                .err(format!("{method} is only supported on dense tensors")));
        }
        match method {
            "all" => {
                if t.order != 1 {
                    return Err(self.t.err("all() is supported on vectors"));
                }
                let mut namer = Namer::new();
                namer.reserve(target);
                let (access, vars) = self.tensor_access(&t, &mut namer);
                let val_var = vars[t.val_idxs[0]].clone();
                self.t.push_rule(Rule::new(
                    Head::plain(target, vec![target.to_string()]),
                    vec![
                        Atom::Rel(access),
                        Atom::Compare(Compare {
                            lhs: target.to_string(),
                            op: CmpOp::Eq,
                            rhs: Term::Agg(AggFn::Min, Box::new(Term::Var(val_var))),
                        }),
                    ],
                ));
                Ok(Val::Scalar(ScalarRel {
                    rel: target.to_string(),
                    col: target.to_string(),
                    ty: t.phys[t.val_idxs[0]].1,
                }))
            }
            "nonzero" => {
                if t.order != 1 {
                    return Err(self.t.err("nonzero() is supported on vectors"));
                }
                let mut namer = Namer::new();
                let (access, vars) = self.tensor_access(&t, &mut namer);
                let id_var = vars[t.id_idx].clone();
                let val_var = vars[t.val_idxs[0]].clone();
                self.t.push_rule(Rule::new(
                    Head::plain(target, vec![id_var]),
                    vec![
                        Atom::Rel(access),
                        Atom::Compare(Compare {
                            lhs: val_var,
                            op: CmpOp::Ne,
                            rhs: Term::int(0),
                        }),
                    ],
                ));
                Ok(Val::Frame(Frame {
                    rel: target.to_string(),
                    phys: vec![("ID".to_string(), ScalarType::Int64)],
                    visible: vec![0],
                    id_col: Some(0),
                }))
            }
            "round" => {
                let mut namer = Namer::new();
                let (access, vars) = self.tensor_access(&t, &mut namer);
                let mut body = vec![Atom::Rel(access)];
                let mut head = vec![vars[t.id_idx].clone()];
                for (k, &vi) in t.val_idxs.iter().enumerate() {
                    let out = namer.name(&format!("r{k}"));
                    body.push(Atom::Compare(Compare {
                        lhs: out.clone(),
                        op: CmpOp::Eq,
                        rhs: Term::Ext("round".into(), vec![Term::Var(vars[vi].clone())]),
                    }));
                    head.push(out);
                }
                self.t
                    .push_rule(Rule::new(Head::plain(target, head), body));
                Ok(Val::Tensor(self.fresh_tensor(target, t.val_idxs.len(), t.rows)))
            }
            "compress" => {
                let mask = match args.first() {
                    Some(PyExpr::List(items)) => items
                        .iter()
                        .map(|e| match e {
                            PyExpr::Bool(b) => Some(*b),
                            PyExpr::Int(v) => Some(*v != 0),
                            _ => None,
                        })
                        .collect::<Option<Vec<bool>>>()
                        .ok_or_else(|| self.t.err("compress mask must be a boolean list"))?,
                    _ => return Err(self.t.err("compress needs a literal mask list")),
                };
                if kw.get("axis").and_then(|e| match e {
                    PyExpr::Int(v) => Some(*v),
                    _ => None,
                }) != Some(1)
                {
                    return Err(self.t.err("compress is supported with axis=1"));
                }
                if mask.len() != t.val_idxs.len() {
                    return Err(self.t.err(format!(
                        "compress mask has {} entries for {} columns",
                        mask.len(),
                        t.val_idxs.len()
                    )));
                }
                let mut namer = Namer::new();
                let (access, vars) = self.tensor_access(&t, &mut namer);
                let mut head = vec![vars[t.id_idx].clone()];
                for (&vi, keep) in t.val_idxs.iter().zip(&mask) {
                    if *keep {
                        head.push(vars[vi].clone());
                    }
                }
                let cols = head.len() - 1;
                self.t
                    .push_rule(Rule::new(Head::plain(target, head), vec![Atom::Rel(access)]));
                Ok(Val::Tensor(self.fresh_tensor(target, cols, t.rows)))
            }
            "transpose" => self.tensor_einsum_sugar(&t, "T", None, target),
            "sum" => {
                let axis = kw
                    .get("axis")
                    .or_else(|| args.first())
                    .and_then(|e| match e {
                        PyExpr::Int(v) => Some(*v),
                        _ => None,
                    });
                self.tensor_einsum_sugar(&t, "sum", axis, target)
            }
            other => Err(self.t.err(format!("untranslatable API: tensor.{other}"))),
        }
    }

    pub(super) fn tensor_einsum_sugar(
        &mut self,
        t: &Tensor,
        op: &str,
        axis: Option<i64>,
        target: &str,
    ) -> Result<Val, FrontendError> {
        let spec = match (op, t.order, axis) {
            ("T", 2, _) => "ij->ji",
            ("sum", 1, _) => "i->",
            ("sum", 2, None) => "ij->",
            ("sum", 2, Some(0)) => "ij->j",
            ("sum", 2, Some(1)) => "ij->i",
            _ => return Err(self.t.err(format!("unsupported tensor op {op}"))),
        };
        self.einsum(&[Val::Tensor(t.clone())], spec, target)
    }

    pub(super) fn fresh_tensor(&self, rel: &str, cols: usize, rows: Option<u64>) -> Tensor {
        let mut phys = vec![("ID".to_string(), ScalarType::Int64)];
        for k in 0..cols {
            phys.push((format!("c{k}"), ScalarType::Float64));
        }
        Tensor {
            rel: rel.to_string(),
            id_idx: 0,
            val_idxs: (1..=cols).collect(),
            order: if cols == 1 { 1 } else { 2 },
            rows,
            phys,
            coo: None,
        }
    }

    /// Access with variables for every physical column; tensor value
    /// columns get positional names.
    pub(super) fn tensor_access(
        &self,
        t: &Tensor,
        namer: &mut Namer,
    ) -> (RelationAccess, Vec<String>) {
        let vars: Vec<String> = t
            .phys
            .iter()
            .enumerate()
            .map(|(i, (n, _))| {
                if i == t.id_idx {
                    namer.name("ID")
                } else {
                    namer.name(n)
                }
            })
            .collect();
        (RelationAccess::new(t.rel.clone(), vars.clone()), vars)
    }

    // --- einsum ------------------------------------------------------------

    pub(super) fn einsum(
        &mut self,
        operands: &[Val],
        spec: &str,
        target: &str,
    ) -> Result<Val, FrontendError> {
        let mut ops: Vec<EOp> = Vec::with_capacity(operands.len());
        let mut sparse = false;
        for v in operands {
            match v {
                Val::Tensor(t) => {
                    sparse |= t.coo.is_some();
                    ops.push(EOp::Tensor(t.clone()));
                }
                Val::Scalar(s) => ops.push(EOp::ScalarRel(s.clone())),
                Val::Const(c) => ops.push(EOp::ScalarConst(c.clone())),
                other => {
                    return Err(self
                        .t
                        .err(format!("einsum operand is {}", super::ops::val_kind(other))))
                }
            }
        }
        if sparse {
            if !ops.iter().all(|o| matches!(o, EOp::Tensor(t) if t.coo.is_some())) {
                return Err(self.t.err(
                    "einsum operands mix dense and sparse layouts; declare all inputs COO",
                ));
            }
            return self.sparse_einsum(&ops, spec, target);
        }
        let orders: Vec<u8> = ops
            .iter()
            .map(|o| match o {
                EOp::Tensor(t) => t.order,
                _ => 0,
            })
            .collect();
        let consts: Vec<bool> = ops
            .iter()
            .map(|o| matches!(o, EOp::ScalarConst(_)))
            .collect();
        let plan =
            plan_einsum(spec, &orders, &consts).map_err(|e| self.t.err(e.to_string()))?;

        let mut counter = 0usize;
        let next_name = |counter: &mut usize| {
            *counter += 1;
            format!("{target}_{counter}")
        };
        for step in &plan.steps {
            match step {
                PlanStep::Swap => ops.swap(0, 1),
                PlanStep::InlineConstant { .. } => {}
                PlanStep::Apply { kernel, operand } => {
                    let name = next_name(&mut counter);
                    let replaced = self.apply_unary_kernel(*kernel, &ops[*operand], &name)?;
                    ops[*operand] = replaced;
                }
                PlanStep::Finish { kernel } => {
                    return match kernel {
                        None => self.finish_identity(&ops[0], target, counter),
                        Some(k) => {
                            let result = self.finish_kernel(*k, &ops, target, &mut counter)?;
                            Ok(result)
                        }
                    };
                }
            }
        }
        Err(self.t.err("einsum plan ended without a final kernel"))
    }

    /// Identity plans alias the operand; a relation named after the
    /// target only materializes when the operand is a bare scalar value.
    fn finish_identity(
        &mut self,
        op: &EOp,
        target: &str,
        _counter: usize,
    ) -> Result<Val, FrontendError> {
        Ok(match op {
            EOp::Tensor(t) => Val::Tensor(t.clone()),
            EOp::ScalarRel(s) => Val::Scalar(s.clone()),
            EOp::ScalarConst(c) => {
                self.t.push_rule(Rule::new(
                    Head::plain(target, vec![target.to_string()]),
                    vec![Atom::Const(ConstRelation {
                        vars: vec![target.to_string()],
                        rows: vec![vec![c.clone()]],
                    })],
                ));
                Val::Scalar(ScalarRel {
                    rel: target.to_string(),
                    col: target.to_string(),
                    ty: super::ops::const_type(c),
                })
            }
        })
    }

    fn expect_tensor(&self, op: &EOp) -> Result<Tensor, FrontendError> {
        match op {
            EOp::Tensor(t) => Ok(t.clone()),
            _ => Err(self.t.err("einsum kernel expected a tensor operand")),
        }
    }

    fn apply_unary_kernel(
        &mut self,
        kernel: EsKernel,
        op: &EOp,
        name: &str,
    ) -> Result<EOp, FrontendError> {
        let t = self.expect_tensor(op)?;
        let mut namer = Namer::new();
        let (access, vars) = self.tensor_access(&t, &mut namer);
        let id_var = vars[t.id_idx].clone();
        let val = |k: usize| Term::Var(vars[t.val_idxs[k]].clone());
        let n = t.val_idxs.len();
        match kernel {
            // Vector sum to a scalar.
            EsKernel::Es1 => {
                let out = namer.name("s");
                self.t.push_rule(Rule::new(
                    Head::plain(name, vec![out.clone()]),
                    vec![
                        Atom::Rel(access),
                        Atom::Compare(Compare {
                            lhs: out.clone(),
                            op: CmpOp::Eq,
                            rhs: Term::Agg(AggFn::Sum, Box::new(val(0))),
                        }),
                    ],
                ));
                Ok(EOp::ScalarRel(ScalarRel {
                    rel: name.to_string(),
                    col: out,
                    ty: ScalarType::Float64,
                }))
            }
            // Row sum: one horizontal addition per row.
            EsKernel::Es2 => {
                let mut sum = val(0);
                for k in 1..n {
                    sum = Term::binop(BinOp::Add, sum, val(k));
                }
                let out = namer.name("c0");
                self.t.push_rule(Rule::new(
                    Head::plain(name, vec![id_var, out.clone()]),
                    vec![
                        Atom::Rel(access),
                        Atom::Compare(Compare {
                            lhs: out,
                            op: CmpOp::Eq,
                            rhs: sum,
                        }),
                    ],
                ));
                Ok(EOp::Tensor(self.fresh_tensor(name, 1, t.rows)))
            }
            // Diagonal: the k-th row keeps its k-th column.
            EsKernel::Es3 => {
                let mut pick = val(n - 1);
                for k in (0..n - 1).rev() {
                    let cond = Term::binop(
                        BinOp::Eq,
                        Term::Var(id_var.clone()),
                        Term::int(k as i64 + 1),
                    );
                    pick = Term::if_then_else(cond, val(k), pick);
                }
                let out = namer.name("c0");
                self.t.push_rule(Rule::new(
                    Head::plain(name, vec![id_var.clone(), out.clone()]),
                    vec![
                        Atom::Rel(access),
                        Atom::Compare(Compare {
                            lhs: out,
                            op: CmpOp::Eq,
                            rhs: pick,
                        }),
                    ],
                ));
                Ok(EOp::Tensor(self.fresh_tensor(name, 1, Some(n as u64))))
            }
            // Transpose via an index relation and grouped cell selection.
            EsKernel::Es4 => {
                let rows = t.rows.ok_or_else(|| {
                    self.t.err(
                        "einsum transpose needs a known row count for its operand; only catalog-backed tensors carry one",
                    )
                })? as usize;
                let idx_name = format!("{name}_idx");
                let idx_var = "i0".to_string();
                self.t.push_rule(Rule::new(
                    Head::plain(idx_name.clone(), vec![idx_var.clone()]),
                    vec![Atom::Const(ConstRelation {
                        vars: vec![idx_var.clone()],
                        rows: (0..n).map(|k| vec![Constant::Int(k as i64)]).collect(),
                    })],
                ));
                let mut body = vec![
                    Atom::Rel(access),
                    Atom::Rel(RelationAccess::new(idx_name, vec![idx_var.clone()])),
                ];
                let out_id = namer.name("OID");
                body.push(Atom::Compare(Compare {
                    lhs: out_id.clone(),
                    op: CmpOp::Eq,
                    rhs: Term::binop(BinOp::Add, Term::var(idx_var.clone()), Term::int(1)),
                }));
                // Cell (k, i0): value of input row k at column i0.
                let mut select_col = val(n - 1);
                for k in (0..n - 1).rev() {
                    let cond = Term::binop(
                        BinOp::Eq,
                        Term::var(idx_var.clone()),
                        Term::int(k as i64),
                    );
                    select_col = Term::if_then_else(cond, val(k), select_col);
                }
                let mut head = vec![out_id.clone()];
                for k in 0..rows {
                    let out = namer.name(&format!("c{k}"));
                    let cond = Term::binop(
                        BinOp::Eq,
                        Term::Var(id_var.clone()),
                        Term::int(k as i64 + 1),
                    );
                    let cell = Term::if_then_else(cond, select_col.clone(), Term::int(0));
                    body.push(Atom::Compare(Compare {
                        lhs: out.clone(),
                        op: CmpOp::Eq,
                        rhs: Term::Agg(AggFn::Sum, Box::new(cell)),
                    }));
                    head.push(out);
                }
                let mut rule = Rule::new(Head::plain(name, head), body);
                rule.head.group = Some(vec![out_id]);
                self.t.push_rule(rule);
                Ok(EOp::Tensor(self.fresh_tensor(name, rows, Some(n as u64))))
            }
            other => Err(self
                .t
                .err(format!("{other} is not a unary reduction kernel"))),
        }
    }

    fn finish_kernel(
        &mut self,
        kernel: EsKernel,
        ops: &[EOp],
        target: &str,
        counter: &mut usize,
    ) -> Result<Val, FrontendError> {
        // The final kernel's rules carry the target's name: plain `target`
        // when it is the only rule, `target_k` within a longer chain.
        let reshape_needed = kernel == EsKernel::Es8;
        let single = *counter == 0 && !reshape_needed;
        let name_for = |counter: &mut usize| {
            if single {
                target.to_string()
            } else {
                *counter += 1;
                format!("{target}_{counter}")
            }
        };
        match kernel {
            EsKernel::Es5 => {
                let name = name_for(counter);
                let mut namer = Namer::new();
                let out = namer.name("s");
                let mut body = Vec::new();
                let lt = self.scalar_term(&ops[0], &mut namer, &mut body);
                let rt = self.scalar_term(&ops[1], &mut namer, &mut body);
                body.push(Atom::Compare(Compare {
                    lhs: out.clone(),
                    op: CmpOp::Eq,
                    rhs: Term::binop(BinOp::Mul, lt, rt),
                }));
                self.t
                    .push_rule(Rule::new(Head::plain(name.clone(), vec![out.clone()]), body));
                Ok(Val::Scalar(ScalarRel {
                    rel: name,
                    col: out,
                    ty: ScalarType::Float64,
                }))
            }
            EsKernel::Es6 => {
                let name = name_for(counter);
                let t = self.expect_tensor(&ops[1])?;
                let mut namer = Namer::new();
                let (access, vars) = self.tensor_access(&t, &mut namer);
                let mut body = Vec::new();
                let scalar = self.scalar_term(&ops[0], &mut namer, &mut body);
                body.push(Atom::Rel(access));
                let mut head = vec![vars[t.id_idx].clone()];
                for (k, &vi) in t.val_idxs.iter().enumerate() {
                    let out = namer.name(&format!("o{k}"));
                    body.push(Atom::Compare(Compare {
                        lhs: out.clone(),
                        op: CmpOp::Eq,
                        rhs: Term::binop(
                            BinOp::Mul,
                            scalar.clone(),
                            Term::Var(vars[vi].clone()),
                        ),
                    }));
                    head.push(out);
                }
                let cols = t.val_idxs.len();
                let rows = t.rows;
                self.t.push_rule(Rule::new(Head::plain(name.clone(), head), body));
                Ok(Val::Tensor(self.fresh_tensor(&name, cols, rows)))
            }
            EsKernel::Es7 => {
                let name = name_for(counter);
                let a = self.expect_tensor(&ops[0])?;
                let b = self.expect_tensor(&ops[1])?;
                if a.val_idxs.len() != b.val_idxs.len() {
                    return Err(self.t.err("hadamard operands differ in column count"));
                }
                let mut namer = Namer::new();
                let (a_access, a_vars) = self.tensor_access(&a, &mut namer);
                let (_, mut b_vars) = self.tensor_access(&b, &mut namer);
                b_vars[b.id_idx] = a_vars[a.id_idx].clone();
                let b_access = RelationAccess::new(b.rel.clone(), b_vars.clone());
                let mut body = vec![Atom::Rel(a_access), Atom::Rel(b_access)];
                let mut head = vec![a_vars[a.id_idx].clone()];
                for k in 0..a.val_idxs.len() {
                    let out = namer.name(&format!("o{k}"));
                    body.push(Atom::Compare(Compare {
                        lhs: out.clone(),
                        op: CmpOp::Eq,
                        rhs: Term::binop(
                            BinOp::Mul,
                            Term::Var(a_vars[a.val_idxs[k]].clone()),
                            Term::Var(b_vars[b.val_idxs[k]].clone()),
                        ),
                    }));
                    head.push(out);
                }
                let cols = a.val_idxs.len();
                let rows = a.rows.or(b.rows);
                self.t.push_rule(Rule::new(Head::plain(name.clone(), head), body));
                Ok(Val::Tensor(self.fresh_tensor(&name, cols, rows)))
            }
            EsKernel::Es9 => {
                let name = name_for(counter);
                let a = self.expect_tensor(&ops[0])?;
                let b = self.expect_tensor(&ops[1])?;
                let mut namer = Namer::new();
                let (a_access, a_vars) = self.tensor_access(&a, &mut namer);
                let (_, mut b_vars) = self.tensor_access(&b, &mut namer);
                b_vars[b.id_idx] = a_vars[a.id_idx].clone();
                let b_access = RelationAccess::new(b.rel.clone(), b_vars.clone());
                let mut row_sum = Term::Var(b_vars[b.val_idxs[0]].clone());
                for &vi in &b.val_idxs[1..] {
                    row_sum = Term::binop(BinOp::Add, row_sum, Term::Var(b_vars[vi].clone()));
                }
                let mut body = vec![Atom::Rel(a_access), Atom::Rel(b_access)];
                let mut head = vec![a_vars[a.id_idx].clone()];
                for k in 0..a.val_idxs.len() {
                    let out = namer.name(&format!("o{k}"));
                    body.push(Atom::Compare(Compare {
                        lhs: out.clone(),
                        op: CmpOp::Eq,
                        rhs: Term::binop(
                            BinOp::Mul,
                            Term::Var(a_vars[a.val_idxs[k]].clone()),
                            row_sum.clone(),
                        ),
                    }));
                    head.push(out);
                }
                let cols = a.val_idxs.len();
                let rows = a.rows;
                self.t.push_rule(Rule::new(Head::plain(name.clone(), head), body));
                Ok(Val::Tensor(self.fresh_tensor(&name, cols, rows)))
            }
            EsKernel::Es8 => self.es8(ops, target, counter),
            k => Err(self.t.err(format!("{k} cannot be a final binary kernel"))),
        }
    }

    /// Batched outer-product sums: global sum of a_p*b_q per output cell,
    /// reshaped into rows by a constant index relation.
    fn es8(&mut self, ops: &[EOp], target: &str, counter: &mut usize) -> Result<Val, FrontendError> {
        let a = self.expect_tensor(&ops[0])?;
        let b = self.expect_tensor(&ops[1])?;
        let n = a.val_idxs.len();
        let m = b.val_idxs.len();

        let mut namer = Namer::new();
        let (a_access, a_vars) = self.tensor_access(&a, &mut namer);
        let (_, mut b_vars) = self.tensor_access(&b, &mut namer);
        b_vars[b.id_idx] = a_vars[a.id_idx].clone();
        let b_access = RelationAccess::new(b.rel.clone(), b_vars.clone());
        let mut body = vec![Atom::Rel(a_access), Atom::Rel(b_access)];
        let mut sum_vars = Vec::with_capacity(n * m);
        let mut head = Vec::with_capacity(n * m);
        for p in 0..n {
            for q in 0..m {
                let out = namer.name(&format!("s{}", p * m + q));
                body.push(Atom::Compare(Compare {
                    lhs: out.clone(),
                    op: CmpOp::Eq,
                    rhs: Term::Agg(
                        AggFn::Sum,
                        Box::new(Term::binop(
                            BinOp::Mul,
                            Term::Var(a_vars[a.val_idxs[p]].clone()),
                            Term::Var(b_vars[b.val_idxs[q]].clone()),
                        )),
                    ),
                }));
                sum_vars.push(out.clone());
                head.push(out);
            }
        }
        // Scalar result when both dimensions degenerate.
        if n == 1 && m == 1 {
            *counter += 1;
            let name = format!("{target}_{counter}");
            self.t.push_rule(Rule::new(Head::plain(name.clone(), head), body));
            return Ok(Val::Scalar(ScalarRel {
                rel: name,
                col: sum_vars[0].clone(),
                ty: ScalarType::Float64,
            }));
        }
        *counter += 1;
        let sums_name = format!("{target}_{counter}");
        self.t
            .push_rule(Rule::new(Head::plain(sums_name.clone(), head), body));

        *counter += 1;
        let idx_name = format!("{target}_{counter}");
        self.t.push_rule(Rule::new(
            Head::plain(idx_name.clone(), vec!["c0".to_string()]),
            vec![Atom::Const(ConstRelation {
                vars: vec!["c0".to_string()],
                rows: (0..n).map(|i| vec![Constant::Int(i as i64)]).collect(),
            })],
        ));

        *counter += 1;
        let out_name = format!("{target}_{counter}");
        let mut namer = Namer::new();
        let svars: Vec<String> = sum_vars.iter().map(|v| namer.name(v)).collect();
        let ivar = namer.name("i0");
        let id_var = namer.name("ID");
        let mut body = vec![
            Atom::Rel(RelationAccess::new(sums_name, svars.clone())),
            Atom::Rel(RelationAccess::new(idx_name, vec![ivar.clone()])),
            Atom::Compare(Compare {
                lhs: id_var.clone(),
                op: CmpOp::Eq,
                rhs: Term::binop(BinOp::Add, Term::var(ivar.clone()), Term::int(1)),
            }),
        ];
        let mut head = vec![id_var];
        for q in 0..m {
            // Row i takes cell s[i*m + q].
            let mut pick = Term::Var(svars[(n - 1) * m + q].clone());
            for i in (0..n - 1).rev() {
                let cond = Term::binop(BinOp::Eq, Term::var(ivar.clone()), Term::int(i as i64));
                pick = Term::if_then_else(cond, Term::Var(svars[i * m + q].clone()), pick);
            }
            let out = namer.name(&format!("c{q}"));
            body.push(Atom::Compare(Compare {
                lhs: out.clone(),
                op: CmpOp::Eq,
                rhs: pick,
            }));
            head.push(out);
        }
        self.t
            .push_rule(Rule::new(Head::plain(out_name.clone(), head), body));
        Ok(Val::Tensor(self.fresh_tensor(&out_name, m, Some(n as u64))))
    }

    fn scalar_term(&self, op: &EOp, namer: &mut Namer, body: &mut Vec<Atom>) -> Term {
        match op {
            EOp::ScalarConst(c) => Term::Const(c.clone()),
            EOp::ScalarRel(s) => {
                let var = namer.name(&s.col);
                body.push(Atom::Rel(RelationAccess::new(
                    s.rel.clone(),
                    vec![var.clone()],
                )));
                Term::Var(var)
            }
            EOp::Tensor(_) => unreachable!("kernel shape mismatch"),
        }
    }

    // --- sparse (COO) path --------------------------------------------------

    /// One join-and-sum rule: shared indices join by variable, output
    /// indices group the head, values multiply into a summed cell.
    fn sparse_einsum(&mut self, ops: &[EOp], spec: &str, target: &str) -> Result<Val, FrontendError> {
        let (inputs, out) = parse_spec(spec).map_err(|e| self.t.err(e.to_string()))?;
        let tensors: Vec<Tensor> = ops
            .iter()
            .map(|o| self.expect_tensor(o))
            .collect::<Result<_, _>>()?;
        for (input, t) in inputs.iter().zip(&tensors) {
            if input.len() != t.order as usize {
                return Err(self.t.err(format!(
                    "einsum spec {spec:?}: operand order mismatch"
                )));
            }
        }
        let mut namer = Namer::new();
        let mut index_var: HashMap<char, String> = HashMap::new();
        let mut extent: HashMap<char, u64> = HashMap::new();
        let mut body = Vec::new();
        let mut val_vars = Vec::new();
        for (input, t) in inputs.iter().zip(&tensors) {
            let coo = t.coo.clone().expect("sparse operand");
            let mut vars: Vec<String> = t.phys.iter().map(|(n, _)| namer.name(n)).collect();
            let chars: Vec<char> = input.chars().collect();
            let positions: Vec<usize> = match chars.len() {
                1 => vec![coo.row_idx],
                2 => vec![coo.row_idx, coo.col_idx.expect("matrix coo")],
                _ => return Err(self.t.err("sparse einsum supports orders 1 and 2")),
            };
            for (c, pos) in chars.iter().zip(&positions) {
                match index_var.get(c) {
                    Some(v) => vars[*pos] = v.clone(),
                    None => {
                        index_var.insert(*c, vars[*pos].clone());
                    }
                }
            }
            for (k, c) in chars.iter().enumerate() {
                let e = if k == 0 { coo.shape.0 } else { coo.shape.1 };
                extent.entry(*c).or_insert(e);
            }
            val_vars.push(vars[coo.val_idx].clone());
            body.push(Atom::Rel(RelationAccess::new(t.rel.clone(), vars)));
        }
        let mut product = Term::Var(val_vars[0].clone());
        for v in &val_vars[1..] {
            product = Term::binop(BinOp::Mul, product, Term::Var(v.clone()));
        }
        let out_chars: Vec<char> = out.chars().collect();
        let needs_sum = inputs
            .iter()
            .flat_map(|s| s.chars())
            .any(|c| !out_chars.contains(&c))
            || ops.len() > 1;
        let val_out = namer.name("val");
        let rhs = if needs_sum {
            Term::Agg(AggFn::Sum, Box::new(product))
        } else {
            product
        };
        body.push(Atom::Compare(Compare {
            lhs: val_out.clone(),
            op: CmpOp::Eq,
            rhs,
        }));
        let mut head: Vec<String> = out_chars
            .iter()
            .map(|c| index_var[c].clone())
            .collect();
        let group: Vec<String> = head.clone();
        head.push(val_out);
        let mut rule = Rule::new(Head::plain(target, head), body);
        if needs_sum && !group.is_empty() {
            rule.head.group = Some(group);
        }
        self.t.push_rule(rule);

        let shape = match out_chars.as_slice() {
            [] => (1, 1),
            [r] => (extent[r], 1),
            [r, c] => (extent[r], extent[c]),
            _ => return Err(self.t.err("sparse einsum output order > 2")),
        };
        let order = out_chars.len().max(1) as u8;
        let mut phys: Vec<(String, ScalarType)> = Vec::new();
        for (k, _) in out_chars.iter().enumerate() {
            phys.push((
                if k == 0 { "row_ID" } else { "col_ID" }.to_string(),
                ScalarType::Int64,
            ));
        }
        phys.push(("val".to_string(), ScalarType::Float64));
        if out_chars.is_empty() {
            return Ok(Val::Scalar(ScalarRel {
                rel: target.to_string(),
                col: "val".into(),
                ty: ScalarType::Float64,
            }));
        }
        let val_idx = phys.len() - 1;
        Ok(Val::Tensor(Tensor {
            rel: target.to_string(),
            id_idx: 0,
            val_idxs: vec![val_idx],
            order,
            rows: Some(shape.0),
            phys,
            coo: Some(CooInfo {
                row_idx: 0,
                col_idx: if out_chars.len() == 2 { Some(1) } else { None },
                val_idx,
                shape,
            }),
        }))
    }
}
