//! Merge translation and implicit joins from column assignment.

use super::ops::{val_kind, FunctionCx};
use super::pyast::*;
use super::translate::*;
use super::FrontendError;
use crate::catalog::ScalarType;
use crate::tondir::ast::*;

struct MergeSpec {
    how: String,
    join_left: Vec<String>,
    join_right: Vec<String>,
    keep_once: bool,
    suffixes: (String, String),
}

impl<'a> FunctionCx<'a> {
    pub(super) fn merge(
        &mut self,
        left: Frame,
        right: Frame,
        kw: &KwArgs,
        target: &str,
    ) -> Result<Val, FrontendError> {
        let spec = self.merge_spec(kw)?;
        match spec.how.as_str() {
            "cross" | "inner" | "left" | "right" | "outer" => {}
            other => {
                return Err(self.t.err(format!(
                    "merge how must be one of cross, inner, left, right, outer; got {other}"
                )))
            }
        }
        for (side, frame, cols) in [
            ("left", &left, &spec.join_left),
            ("right", &right, &spec.join_right),
        ] {
            for c in cols {
                if frame.find_col(c).is_none() {
                    return Err(self
                        .t
                        .err(format!("merge: {side} dataframe has no column {c}")));
                }
            }
        }
        for (l, r) in spec.join_left.iter().zip(&spec.join_right) {
            let lt = left.phys[left.find_col(l).unwrap()].1;
            let rt = right.phys[right.find_col(r).unwrap()].1;
            let compatible = lt == rt || (lt.is_numeric() && rt.is_numeric());
            if !compatible {
                return Err(self.t.err(format!(
                    "merge on columns with incompatible scalar types: {l} is {lt}, {r} is {rt}"
                )));
            }
        }

        // Output schema with implicit suffix renaming: shared non-join
        // names get the suffixes; a shared join column is kept once.
        let left_names: Vec<String> = left.logical().iter().map(|(n, _)| n.clone()).collect();
        let right_names: Vec<String> = right.logical().iter().map(|(n, _)| n.clone()).collect();
        let shared: Vec<&String> = left_names.iter().filter(|n| right_names.contains(n)).collect();
        let is_kept_join = |name: &str| {
            spec.keep_once && spec.join_left.iter().any(|j| j == name)
        };
        let left_out = |name: &str| -> String {
            if shared.iter().any(|s| *s == name) && !is_kept_join(name) {
                format!("{name}{}", spec.suffixes.0)
            } else {
                name.to_string()
            }
        };
        let right_out = |name: &str| -> String {
            if shared.iter().any(|s| *s == name) && !is_kept_join(name) {
                format!("{name}{}", spec.suffixes.1)
            } else {
                name.to_string()
            }
        };

        let mut namer = Namer::new();
        let left_vars: Vec<String> = left
            .phys
            .iter()
            .map(|(n, _)| namer.name(&left_out(n)))
            .collect();
        // Right join columns share the left variable for an inner join.
        let mut right_vars: Vec<String> = Vec::with_capacity(right.phys.len());
        let mut equalities: Vec<Atom> = Vec::new();
        let mut outer_pairs: Vec<String> = Vec::new();
        for (i, (n, _)) in right.phys.iter().enumerate() {
            let join_pos = spec
                .join_right
                .iter()
                .position(|j| right.find_col(j) == Some(i));
            let var = match join_pos {
                Some(k) if spec.how != "cross" => {
                    let l_idx = left.find_col(&spec.join_left[k]).unwrap();
                    let l_var = left_vars[l_idx].clone();
                    match spec.how.as_str() {
                        "inner" if spec.keep_once => l_var,
                        "inner" => {
                            // Both columns are kept; bind fresh and filter.
                            let v = namer.name(&right_out(n));
                            equalities.push(Atom::Compare(Compare {
                                lhs: v.clone(),
                                op: CmpOp::Eq,
                                rhs: Term::Var(l_var),
                            }));
                            v
                        }
                        _ => {
                            let v = namer.name(&right_out(n));
                            outer_pairs.push(l_var);
                            outer_pairs.push(v.clone());
                            v
                        }
                    }
                }
                _ => namer.name(&right_out(n)),
            };
            right_vars.push(var);
        }

        let mut body = vec![
            Atom::Rel(RelationAccess::new(left.rel.clone(), left_vars.clone())),
            Atom::Rel(RelationAccess::new(right.rel.clone(), right_vars.clone())),
        ];
        match spec.how.as_str() {
            "left" | "right" | "outer" => {
                let name = match spec.how.as_str() {
                    "left" => "outer_left",
                    "right" => "outer_right",
                    _ => "outer_full",
                };
                if outer_pairs.is_empty() {
                    return Err(self.t.err("outer merge needs join columns"));
                }
                body.push(Atom::ExtAtom(ExtAtom {
                    name: name.into(),
                    args: outer_pairs,
                }));
            }
            _ => body.extend(equalities),
        }

        let mut head = Vec::new();
        let mut out_phys: Vec<(String, ScalarType)> = Vec::new();
        for &i in &left.visible {
            head.push(left_vars[i].clone());
            out_phys.push((left_out(&left.phys[i].0), left.phys[i].1));
        }
        for &i in &right.visible {
            if spec.keep_once
                && spec
                    .join_right
                    .iter()
                    .any(|j| right.find_col(j) == Some(i))
            {
                continue;
            }
            head.push(right_vars[i].clone());
            out_phys.push((right_out(&right.phys[i].0), right.phys[i].1));
        }
        self.t.push_rule(Rule::new(Head::plain(target, head), body));

        // Row identity survives an inner merge on both sides' id columns.
        let id_col = if spec.how == "inner" && spec.keep_once {
            let left_id = left
                .id_col
                .map(|i| spec.join_left.contains(&left.phys[i].0))
                .unwrap_or(false);
            let right_id = right
                .id_col
                .map(|i| spec.join_right.contains(&right.phys[i].0))
                .unwrap_or(false);
            if left_id && right_id {
                out_phys
                    .iter()
                    .position(|(n, _)| spec.join_left.contains(n))
            } else {
                None
            }
        } else {
            None
        };
        Ok(Val::Frame(Frame {
            rel: target.to_string(),
            visible: (0..out_phys.len()).collect(),
            phys: out_phys,
            id_col,
        }))
    }

    fn merge_spec(&self, kw: &KwArgs) -> Result<MergeSpec, FrontendError> {
        let how = kw
            .get("how")
            .map(|e| {
                e.as_str_lit()
                    .map(str::to_string)
                    .ok_or_else(|| self.t.err("merge how must be a string"))
            })
            .transpose()?
            .unwrap_or_else(|| "inner".to_string());
        let suffixes = match kw.get("suffixes") {
            None => ("_x".to_string(), "_y".to_string()),
            Some(PyExpr::Tuple(items)) | Some(PyExpr::List(items)) => {
                match items.as_slice() {
                    [PyExpr::Str(a), PyExpr::Str(b)] => (a.clone(), b.clone()),
                    _ => return Err(self.t.err("suffixes must be two strings")),
                }
            }
            Some(_) => return Err(self.t.err("suffixes must be two strings")),
        };
        let (join_left, join_right, keep_once) = if let Some(on) = kw.get("on") {
            let cols = super::ops::str_or_list(Some(on))
                .ok_or_else(|| self.t.err("merge on must name column(s)"))?;
            (cols.clone(), cols, true)
        } else if kw.contains_key("left_on") || kw.contains_key("right_on") {
            let l = super::ops::str_or_list(kw.get("left_on"))
                .ok_or_else(|| self.t.err("merge needs left_on column(s)"))?;
            let r = super::ops::str_or_list(kw.get("right_on"))
                .ok_or_else(|| self.t.err("merge needs right_on column(s)"))?;
            if l.len() != r.len() {
                return Err(self.t.err("left_on and right_on must have equal length"));
            }
            let keep_once = l == r;
            (l, r, keep_once)
        } else if how == "cross" {
            (Vec::new(), Vec::new(), false)
        } else {
            return Err(self.t.err("merge needs on= or left_on=/right_on="));
        };
        Ok(MergeSpec {
            how,
            join_left,
            join_right,
            keep_once,
            suffixes,
        })
    }

    /// `df[col] = series` column assignment, including the implicit-join
    /// form when the value comes from a different dataframe.
    pub(super) fn column_assign(
        &mut self,
        frame_var: &str,
        column: &str,
        value: &PyExpr,
    ) -> Result<(), FrontendError> {
        let val = self.eval(value, column)?;
        let current = self.t.lookup(frame_var)?;
        // A one-column frame used as a source column expression.
        let val = match val {
            Val::Frame(f) if f.visible.len() == 1 => {
                let idx = f.visible[0];
                let (name, ty) = f.phys[idx].clone();
                Val::Series {
                    source: f,
                    expr: SExpr::Col(idx),
                    ty,
                    name,
                }
            }
            other => other,
        };
        match current {
            Val::EmptyFrame => match val {
                Val::Series {
                    source, expr, ty, ..
                } => {
                    let mut namer = Namer::new();
                    let (access, vars) = self.t.frame_access(&source, &mut namer);
                    let mut body = vec![Atom::Rel(access)];
                    let head_var = self.column_binding(column, &expr, &vars, &mut namer, &mut body)?;
                    self.t
                        .push_rule(Rule::new(Head::plain(frame_var, vec![head_var]), body));
                    self.t.env.insert(
                        frame_var.to_string(),
                        Val::Frame(Frame {
                            rel: frame_var.to_string(),
                            phys: vec![(column.to_string(), ty)],
                            visible: vec![0],
                            id_col: None,
                        }),
                    );
                    Ok(())
                }
                Val::Const(c) => {
                    self.t.push_rule(Rule::new(
                        Head::plain(frame_var, vec![column.to_string()]),
                        vec![Atom::Const(ConstRelation {
                            vars: vec![column.to_string()],
                            rows: vec![vec![c.clone()]],
                        })],
                    ));
                    self.t.env.insert(
                        frame_var.to_string(),
                        Val::Frame(Frame {
                            rel: frame_var.to_string(),
                            phys: vec![(column.to_string(), super::ops::const_type(&c))],
                            visible: vec![0],
                            id_col: None,
                        }),
                    );
                    Ok(())
                }
                other => Err(self.t.err(format!(
                    "cannot assign {} as the first column",
                    val_kind(&other)
                ))),
            },
            Val::Frame(frame) => match val {
                Val::Series {
                    source,
                    expr,
                    ty,
                    ..
                } if source.rel == frame.rel => {
                    self.append_column(frame_var, &frame, column, &expr, ty)
                }
                Val::Mask { source, expr } if source.rel == frame.rel => {
                    self.append_column(frame_var, &frame, column, &expr, ScalarType::Bool)
                }
                Val::Const(c) => {
                    let ty = super::ops::const_type(&c);
                    self.append_column(frame_var, &frame, column, &SExpr::Const(c), ty)
                }
                Val::Series {
                    source, expr, ty, ..
                } => self.implicit_join(frame_var, frame, column, source, expr, ty),
                other => Err(self.t.err(format!(
                    "cannot assign {} to a column",
                    val_kind(&other)
                ))),
            },
            other => Err(self.t.err(format!(
                "cannot assign a column on {}",
                val_kind(&other)
            ))),
        }
    }

    fn column_binding(
        &self,
        column: &str,
        expr: &SExpr,
        vars: &[String],
        namer: &mut Namer,
        body: &mut Vec<Atom>,
    ) -> Result<String, FrontendError> {
        if let SExpr::Col(i) = expr {
            return Ok(vars[*i].clone());
        }
        let mut extra = Vec::new();
        let term = self.t.sexpr_term(expr, vars, namer, &mut extra)?;
        body.extend(extra);
        let var = namer.name(column);
        body.push(Atom::Compare(Compare {
            lhs: var.clone(),
            op: CmpOp::Eq,
            rhs: term,
        }));
        Ok(var)
    }

    /// Same-frame column append or overwrite.
    fn append_column(
        &mut self,
        frame_var: &str,
        frame: &Frame,
        column: &str,
        expr: &SExpr,
        ty: ScalarType,
    ) -> Result<(), FrontendError> {
        let mut namer = Namer::new();
        namer.reserve(column);
        let (access, vars) = self.t.frame_access(frame, &mut namer);
        let mut body = vec![Atom::Rel(access)];
        let mut extra = Vec::new();
        let term = self.t.sexpr_term(expr, &vars, &mut namer, &mut extra)?;
        body.extend(extra);
        let new_var = match expr {
            SExpr::Col(i) => vars[*i].clone(),
            _ => {
                body.push(Atom::Compare(Compare {
                    lhs: column.to_string(),
                    op: CmpOp::Eq,
                    rhs: term,
                }));
                column.to_string()
            }
        };
        let mut head = Vec::new();
        let mut out_phys = Vec::new();
        let existing = frame.find_col(column);
        for &i in &frame.visible {
            if Some(i) == existing {
                head.push(new_var.clone());
                out_phys.push((column.to_string(), ty));
            } else {
                head.push(vars[i].clone());
                out_phys.push(frame.phys[i].clone());
            }
        }
        if existing.is_none() {
            head.push(new_var);
            out_phys.push((column.to_string(), ty));
        }
        self.t
            .push_rule(Rule::new(Head::plain(frame_var, head), body));
        self.t.env.insert(
            frame_var.to_string(),
            Val::Frame(Frame {
                rel: frame_var.to_string(),
                visible: (0..out_phys.len()).collect(),
                id_col: frame.id_col.and_then(|i| {
                    let name = &frame.phys[i].0;
                    out_phys.iter().position(|(n, _)| n == name)
                }),
                phys: out_phys,
            }),
        );
        Ok(())
    }

    /// Row-aligned append from another dataframe: both sides get a UID
    /// when they lack row identity, then an explicit join on the ids.
    fn implicit_join(
        &mut self,
        frame_var: &str,
        frame: Frame,
        column: &str,
        source: Frame,
        expr: SExpr,
        ty: ScalarType,
    ) -> Result<(), FrontendError> {
        let (left, left_added_uid) = self.ensure_row_id(frame_var, frame)?;
        let source_name = crate::tondir::surface_name(&source.rel).to_string();
        let (right, right_remap) = self.ensure_row_id(&source_name, source)?;
        let expr = match &right_remap {
            Some(remap) => remap_cols(&expr, remap),
            None => expr,
        };

        let mut namer = Namer::new();
        namer.reserve(column);
        let left_vars: Vec<String> = left.phys.iter().map(|(n, _)| namer.name(n)).collect();
        let mut right_vars: Vec<String> = Vec::with_capacity(right.phys.len());
        for (i, (n, _)) in right.phys.iter().enumerate() {
            if Some(i) == right.id_col {
                right_vars.push(left_vars[left.id_col.unwrap()].clone());
            } else {
                right_vars.push(namer.name(n));
            }
        }
        let mut body = vec![
            Atom::Rel(RelationAccess::new(left.rel.clone(), left_vars.clone())),
            Atom::Rel(RelationAccess::new(right.rel.clone(), right_vars.clone())),
        ];
        let head_var = self.column_binding(column, &expr, &right_vars, &mut namer, &mut body)?;
        // A UID introduced for this join is dropped again in the head; a
        // pre-existing id column stays part of the schema.
        let mut head = Vec::new();
        let mut out_phys = Vec::new();
        for &i in &left.visible {
            if Some(i) == left.id_col && left_added_uid.is_some() {
                continue;
            }
            head.push(left_vars[i].clone());
            out_phys.push(left.phys[i].clone());
        }
        head.push(head_var);
        out_phys.push((column.to_string(), ty));
        let id_col = if left_added_uid.is_some() {
            None
        } else {
            left.id_col.and_then(|i| {
                let name = &left.phys[i].0;
                out_phys.iter().position(|(n, _)| n == name)
            })
        };
        self.t
            .push_rule(Rule::new(Head::plain(frame_var, head), body));
        self.t.env.insert(
            frame_var.to_string(),
            Val::Frame(Frame {
                rel: frame_var.to_string(),
                visible: (0..out_phys.len()).collect(),
                phys: out_phys,
                id_col,
            }),
        );
        Ok(())
    }

    /// Adds `(ID=UID())` in a redefining rule when the frame has no row
    /// identity yet, updating every environment entry backed by it.
    /// Returns the remap of old physical column indices when a UID rule
    /// was emitted.
    fn ensure_row_id(
        &mut self,
        rel_name: &str,
        frame: Frame,
    ) -> Result<(Frame, Option<Vec<usize>>), FrontendError> {
        if frame.id_col.is_some() {
            return Ok((frame, None));
        }
        let mut namer = Namer::new();
        namer.reserve("ID");
        let (access, vars) = self.t.frame_access(&frame, &mut namer);
        let mut head = vec!["ID".to_string()];
        head.extend(frame.visible.iter().map(|&i| vars[i].clone()));
        self.t.push_rule(Rule::new(
            Head::plain(rel_name, head),
            vec![
                Atom::Rel(access),
                Atom::Compare(Compare {
                    lhs: "ID".into(),
                    op: CmpOp::Eq,
                    rhs: Term::Ext("UID".into(), vec![]),
                }),
            ],
        ));
        let mut phys = vec![("ID".to_string(), ScalarType::Int64)];
        phys.extend(frame.logical());
        let new_frame = Frame {
            rel: rel_name.to_string(),
            visible: (0..phys.len()).collect(),
            phys,
            id_col: Some(0),
        };
        // Re-point environment values that referenced the old relation.
        let old_rel = frame.rel.clone();
        let remap: Vec<usize> = frame.visible.clone();
        for val in self.t.env.values_mut() {
            match val {
                Val::Frame(f) if f.rel == old_rel => {
                    *f = new_frame.clone();
                }
                Val::Series { source, expr, .. } if source.rel == old_rel => {
                    *expr = remap_cols(expr, &remap);
                    *source = new_frame.clone();
                }
                Val::Mask { source, expr } if source.rel == old_rel => {
                    *expr = remap_cols(expr, &remap);
                    *source = new_frame.clone();
                }
                _ => {}
            }
        }
        Ok((new_frame, Some(remap)))
    }
}

/// After a UID rule reshapes `(cols...)` into `(ID, visible-cols...)`,
/// column indices move: old physical index `remap[k]` is now `k + 1`.
fn remap_cols(expr: &SExpr, remap: &[usize]) -> SExpr {
    match expr {
        SExpr::Col(i) => {
            let new = remap.iter().position(|&v| v == *i).map(|k| k + 1);
            SExpr::Col(new.unwrap_or(*i))
        }
        SExpr::Const(_) | SExpr::ScalarRef(_) => expr.clone(),
        SExpr::Bin(op, l, r) => SExpr::Bin(
            *op,
            Box::new(remap_cols(l, remap)),
            Box::new(remap_cols(r, remap)),
        ),
        SExpr::If(c, t, e) => SExpr::If(
            Box::new(remap_cols(c, remap)),
            Box::new(remap_cols(t, remap)),
            Box::new(remap_cols(e, remap)),
        ),
        SExpr::Ext(name, args) => SExpr::Ext(
            name.clone(),
            args.iter().map(|a| remap_cols(a, remap)).collect(),
        ),
        SExpr::InList {
            expr,
            values,
            negated,
        } => SExpr::InList {
            expr: Box::new(remap_cols(expr, remap)),
            values: values.clone(),
            negated: *negated,
        },
        SExpr::InRel {
            expr,
            rel,
            arity,
            col,
        } => SExpr::InRel {
            expr: Box::new(remap_cols(expr, remap)),
            rel: rel.clone(),
            arity: *arity,
            col: *col,
        },
    }
}

