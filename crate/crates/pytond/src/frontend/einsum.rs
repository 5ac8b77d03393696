//! Einsum planning: canonicalizes a binary or unary spec and reduces it
//! to a sequence of fundamental kernel applications plus operand swaps
//! and constant inlining. Dense translation replays the plan; the sparse
//! COO path bypasses planning entirely.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsKernel {
    Es1,
    Es2,
    Es3,
    Es4,
    Es5,
    Es6,
    Es7,
    Es8,
    Es9,
}

impl EsKernel {
    pub fn id(&self) -> &'static str {
        match self {
            EsKernel::Es1 => "ES1",
            EsKernel::Es2 => "ES2",
            EsKernel::Es3 => "ES3",
            EsKernel::Es4 => "ES4",
            EsKernel::Es5 => "ES5",
            EsKernel::Es6 => "ES6",
            EsKernel::Es7 => "ES7",
            EsKernel::Es8 => "ES8",
            EsKernel::Es9 => "ES9",
        }
    }

    pub fn spec(&self) -> &'static str {
        match self {
            EsKernel::Es1 => "i->",
            EsKernel::Es2 => "ij->i",
            EsKernel::Es3 => "ii->i",
            EsKernel::Es4 => "ij->ji",
            EsKernel::Es5 => ",->",
            EsKernel::Es6 => ",ij->ij",
            EsKernel::Es7 => "ij,ij->ij",
            EsKernel::Es8 => "ij,ik->jk",
            EsKernel::Es9 => "ij,ik->ij",
        }
    }
}

impl fmt::Display for EsKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanStep {
    /// Reduce one operand in place with a unary kernel.
    Apply { kernel: EsKernel, operand: usize },
    /// Swap the two operands.
    Swap,
    /// The operand is a compile-time constant; its value is inlined into
    /// the kernel instead of a relation access.
    InlineConstant { operand: usize },
    /// The remaining computation is exactly this kernel (None when the
    /// spec is an identity and no work is needed).
    Finish { kernel: Option<EsKernel> },
}

impl PlanStep {
    pub fn describe(&self) -> String {
        match self {
            PlanStep::Apply { kernel, operand } => format!("{kernel}@{operand}"),
            PlanStep::Swap => "swap".to_string(),
            PlanStep::InlineConstant { operand } => format!("inline@{operand}"),
            PlanStep::Finish { kernel: Some(k) } => k.id().to_string(),
            PlanStep::Finish { kernel: None } => "identity".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EinsumPlan {
    pub canonical: String,
    pub steps: Vec<PlanStep>,
}

impl EinsumPlan {
    /// Kernel names in order, e.g. `["ES3", "ES1", "swap", "ES4", "ES6"]`.
    pub fn step_names(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| match s {
                PlanStep::Apply { kernel, .. } => kernel.id().to_string(),
                PlanStep::Swap => "swap".to_string(),
                PlanStep::InlineConstant { .. } => "inline".to_string(),
                PlanStep::Finish { kernel: Some(k) } => k.id().to_string(),
                PlanStep::Finish { kernel: None } => "identity".to_string(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EinsumError {
    #[error("malformed einsum spec {0:?}: {1}")]
    Parse(String, String),
    #[error("einsum spec {0:?}: output index {1} is absent from all inputs")]
    OutputIndexAbsent(String, char),
    #[error("einsum spec {0:?} is not reducible to the fundamental kernels with order <= 2 operands")]
    NotReducible(String),
    #[error("einsum spec {0:?}: operand {1} has {2} indices but order {3}")]
    OrderMismatch(String, usize, usize, u8),
    #[error("einsum transpose needs a known row count for its operand; only catalog-backed tensors carry one")]
    TransposeNeedsRows,
    #[error("einsum operands mix dense and sparse layouts")]
    LayoutMismatch,
}

pub fn parse_spec(spec: &str) -> Result<(Vec<String>, String), EinsumError> {
    let err = |m: &str| EinsumError::Parse(spec.to_string(), m.to_string());
    let spec_ns: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let (lhs, out) = spec_ns
        .split_once("->")
        .ok_or_else(|| err("expected explicit `->`"))?;
    let inputs: Vec<String> = lhs.split(',').map(str::to_string).collect();
    if inputs.is_empty() || inputs.len() > 2 {
        return Err(err("expected one or two operands"));
    }
    for part in inputs.iter().chain(std::iter::once(&out.to_string())) {
        if !part.chars().all(|c| c.is_ascii_lowercase()) {
            return Err(err("indices must be lowercase letters"));
        }
    }
    for c in out.chars() {
        if !inputs.iter().any(|i| i.contains(c)) {
            return Err(EinsumError::OutputIndexAbsent(spec.to_string(), c));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for c in out.chars() {
        if !seen.insert(c) {
            return Err(err("repeated output index"));
        }
    }
    Ok((inputs, out.to_string()))
}

/// Relabels indices by first appearance so e.g. `ab,cc->ba` reads
/// `ij,kk->ji`.
pub fn canonicalize(inputs: &[String], out: &str) -> String {
    let mut map: Vec<char> = Vec::new();
    let fresh = |map: &mut Vec<char>, c: char| -> char {
        if let Some(i) = map.iter().position(|x| *x == c) {
            (b'i' + i as u8) as char
        } else {
            map.push(c);
            (b'i' + (map.len() - 1) as u8) as char
        }
    };
    let mut parts = Vec::new();
    for input in inputs {
        parts.push(
            input
                .chars()
                .map(|c| fresh(&mut map, c))
                .collect::<String>(),
        );
    }
    let out: String = out.chars().map(|c| fresh(&mut map, c)).collect();
    format!("{}->{}", parts.join(","), out)
}

fn fundamental(inputs: &[String], out: &str) -> Option<EsKernel> {
    let canon = canonicalize(inputs, out);
    match canon.as_str() {
        "i->" => Some(EsKernel::Es1),
        "ij->i" => Some(EsKernel::Es2),
        "ii->i" => Some(EsKernel::Es3),
        "ij->ji" => Some(EsKernel::Es4),
        ",->" => Some(EsKernel::Es5),
        ",ij->ij" | ",i->i" => Some(EsKernel::Es6),
        "ij,ij->ij" | "i,i->i" => Some(EsKernel::Es7),
        "ij,ik->jk" | "i,i->" | "ij,i->j" => Some(EsKernel::Es8),
        "ij,ik->ij" | "ij,i->ij" => Some(EsKernel::Es9),
        _ => None,
    }
}

fn is_identity(inputs: &[String], out: &str) -> bool {
    inputs.len() == 1 && inputs[0] == out
}

/// Plans a dense einsum. `orders` gives each operand's tensor order
/// (0 for scalars); `consts` marks operands whose values are known at
/// compile time and can be inlined.
pub fn plan_einsum(
    spec: &str,
    orders: &[u8],
    consts: &[bool],
) -> Result<EinsumPlan, EinsumError> {
    let (inputs, out) = parse_spec(spec)?;
    if inputs.len() != orders.len() {
        return Err(EinsumError::Parse(
            spec.to_string(),
            format!("{} operands supplied, spec has {}", orders.len(), inputs.len()),
        ));
    }
    for (p, (input, order)) in inputs.iter().zip(orders).enumerate() {
        if input.len() != *order as usize {
            return Err(EinsumError::OrderMismatch(
                spec.to_string(),
                p,
                input.len(),
                *order,
            ));
        }
        if *order > 2 {
            return Err(EinsumError::Parse(
                spec.to_string(),
                "operands of order > 2 are unsupported".into(),
            ));
        }
    }
    let canonical = canonicalize(&inputs, &out);
    let mut state: Vec<String> = match canonical.split_once("->") {
        Some((lhs, _)) => lhs.split(',').map(str::to_string).collect(),
        None => unreachable!(),
    };
    let out_c = canonical.split_once("->").unwrap().1.to_string();
    let mut is_const: Vec<bool> = consts.to_vec();
    let mut steps: Vec<PlanStep> = Vec::new();

    for _guard in 0..24 {
        if is_identity(&state, &out_c) {
            push_inlines(&mut steps, &is_const);
            steps.push(PlanStep::Finish { kernel: None });
            return Ok(EinsumPlan { canonical, steps });
        }
        if let Some(k) = fundamental(&state, &out_c) {
            push_inlines(&mut steps, &is_const);
            steps.push(PlanStep::Finish { kernel: Some(k) });
            return Ok(EinsumPlan { canonical, steps });
        }
        // Collapse a repeated index: 'xx' -> 'x'.
        if let Some(p) = state.iter().position(|s| {
            s.len() == 2 && s.chars().nth(0) == s.chars().nth(1)
        }) {
            let c = state[p].chars().next().unwrap();
            steps.push(PlanStep::Apply {
                kernel: EsKernel::Es3,
                operand: p,
            });
            state[p] = c.to_string();
            is_const[p] = false;
            continue;
        }
        // Sum out an index that appears nowhere else.
        if let Some((p, pos)) = find_dead_index(&state, &out_c) {
            match (state[p].len(), pos) {
                (1, _) => {
                    steps.push(PlanStep::Apply {
                        kernel: EsKernel::Es1,
                        operand: p,
                    });
                    state[p] = String::new();
                }
                (2, 1) => {
                    steps.push(PlanStep::Apply {
                        kernel: EsKernel::Es2,
                        operand: p,
                    });
                    state[p].pop();
                }
                (2, 0) => {
                    steps.push(PlanStep::Apply {
                        kernel: EsKernel::Es4,
                        operand: p,
                    });
                    state[p] = state[p].chars().rev().collect();
                }
                _ => return Err(EinsumError::NotReducible(spec.to_string())),
            }
            is_const[p] = false;
            continue;
        }
        // Put a scalar operand first.
        if state.len() == 2 && state[1].is_empty() && !state[0].is_empty() {
            steps.push(PlanStep::Swap);
            state.swap(0, 1);
            is_const.swap(0, 1);
            continue;
        }
        // Alignment: bounded lookahead over transposes and a swap.
        let candidates: &[&[Candidate]] = &[
            &[Candidate::T(0)],
            &[Candidate::T(1)],
            &[Candidate::S],
            &[Candidate::S, Candidate::T(0)],
            &[Candidate::S, Candidate::T(1)],
            &[Candidate::T(0), Candidate::T(1)],
        ];
        let mut applied = false;
        'outer: for seq in candidates {
            let mut trial = state.clone();
            let mut ok = true;
            for c in *seq {
                match c {
                    Candidate::T(p) => {
                        if trial.get(*p).map(|s| s.len()) != Some(2) {
                            ok = false;
                            break;
                        }
                        trial[*p] = trial[*p].chars().rev().collect();
                    }
                    Candidate::S => {
                        if trial.len() != 2 {
                            ok = false;
                            break;
                        }
                        trial.swap(0, 1);
                    }
                }
            }
            if ok && (fundamental(&trial, &out_c).is_some() || is_identity(&trial, &out_c)) {
                for c in *seq {
                    match c {
                        Candidate::T(p) => {
                            steps.push(PlanStep::Apply {
                                kernel: EsKernel::Es4,
                                operand: *p,
                            });
                            state[*p] = state[*p].chars().rev().collect();
                            is_const[*p] = false;
                        }
                        Candidate::S => {
                            steps.push(PlanStep::Swap);
                            state.swap(0, 1);
                            is_const.swap(0, 1);
                        }
                    }
                }
                applied = true;
                break 'outer;
            }
        }
        if !applied {
            return Err(EinsumError::NotReducible(spec.to_string()));
        }
    }
    Err(EinsumError::NotReducible(spec.to_string()))
}

enum Candidate {
    T(usize),
    S,
}

fn push_inlines(steps: &mut Vec<PlanStep>, is_const: &[bool]) {
    for (p, c) in is_const.iter().enumerate() {
        if *c {
            steps.push(PlanStep::InlineConstant { operand: p });
        }
    }
}

fn find_dead_index(state: &[String], out: &str) -> Option<(usize, usize)> {
    // Trailing positions first: summing the second index is a single
    // kernel, while the first would need a transpose.
    for (p, s) in state.iter().enumerate() {
        let chars: Vec<char> = s.chars().collect();
        for pos in (0..chars.len()).rev() {
            let c = chars[pos];
            let elsewhere = out.contains(c)
                || state
                    .iter()
                    .enumerate()
                    .any(|(q, other)| q != p && other.contains(c));
            if !elsewhere {
                return Some((p, pos));
            }
        }
    }
    None
}

/// Replays the plan symbolically, returning the trace of intermediate
/// specs. Used by tests to confirm every plan ends at a fundamental
/// kernel.
pub fn replay(plan: &EinsumPlan) -> Result<Vec<String>, EinsumError> {
    let (lhs, out) = plan.canonical.split_once("->").unwrap();
    let mut state: Vec<String> = lhs.split(',').map(str::to_string).collect();
    let mut trace = vec![plan.canonical.clone()];
    for step in &plan.steps {
        match step {
            PlanStep::Apply { kernel, operand } => {
                let s = &mut state[*operand];
                match kernel {
                    EsKernel::Es1 => *s = String::new(),
                    EsKernel::Es2 => {
                        s.pop();
                    }
                    EsKernel::Es3 => *s = s.chars().next().into_iter().collect(),
                    EsKernel::Es4 => *s = s.chars().rev().collect(),
                    other => {
                        return Err(EinsumError::Parse(
                            plan.canonical.clone(),
                            format!("{other} is not a unary reduction"),
                        ))
                    }
                }
            }
            PlanStep::Swap => state.swap(0, 1),
            PlanStep::InlineConstant { .. } => {}
            PlanStep::Finish { .. } => {}
        }
        trace.push(format!("{}->{}", state.join(","), out));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_example_reduces_through_es3_es1_swap_es4_to_es6() {
        let plan = plan_einsum("ab,cc->ba", &[2, 2], &[false, false]).unwrap();
        assert_eq!(plan.canonical, "ij,kk->ji");
        assert_eq!(
            plan.step_names(),
            vec!["ES3", "ES1", "swap", "ES4", "ES6"]
        );
    }

    #[test]
    fn matmul_plans_transpose_then_es8() {
        let plan = plan_einsum("ij,jk->ik", &[2, 2], &[false, false]).unwrap();
        assert_eq!(
            plan.steps,
            vec![
                PlanStep::Apply {
                    kernel: EsKernel::Es4,
                    operand: 0
                },
                PlanStep::Finish {
                    kernel: Some(EsKernel::Es8)
                },
            ]
        );
        let trace = replay(&plan).unwrap();
        assert_eq!(trace.last().unwrap(), "ji,jk->ik");
    }

    #[test]
    fn transpose_is_already_fundamental() {
        let plan = plan_einsum("ij->ji", &[2], &[false]).unwrap();
        assert_eq!(
            plan.steps,
            vec![PlanStep::Finish {
                kernel: Some(EsKernel::Es4)
            }]
        );
    }

    #[test]
    fn identity_spec_needs_no_kernel() {
        let plan = plan_einsum("ij->ij", &[2], &[false]).unwrap();
        assert_eq!(plan.steps, vec![PlanStep::Finish { kernel: None }]);
    }

    #[test]
    fn every_fundamental_kernel_plans_to_itself() {
        let cases: &[(&str, &[u8])] = &[
            ("i->", &[1]),
            ("ij->i", &[2]),
            ("ii->i", &[2]),
            ("ij->ji", &[2]),
            (",->", &[0, 0]),
            (",ij->ij", &[0, 2]),
            ("ij,ij->ij", &[2, 2]),
            ("ij,ik->jk", &[2, 2]),
            ("ij,ik->ij", &[2, 2]),
        ];
        for (i, (spec, orders)) in cases.iter().enumerate() {
            let plan = plan_einsum(spec, orders, &vec![false; orders.len()]).unwrap();
            let expect = [
                EsKernel::Es1,
                EsKernel::Es2,
                EsKernel::Es3,
                EsKernel::Es4,
                EsKernel::Es5,
                EsKernel::Es6,
                EsKernel::Es7,
                EsKernel::Es8,
                EsKernel::Es9,
            ][i];
            assert_eq!(
                plan.steps,
                vec![PlanStep::Finish {
                    kernel: Some(expect)
                }],
                "spec {spec}"
            );
        }
    }

    #[test]
    fn output_index_absent_is_rejected() {
        let err = plan_einsum("i,j->ijk", &[1, 1], &[false, false]).unwrap_err();
        assert!(matches!(err, EinsumError::OutputIndexAbsent(_, 'k')));
    }

    #[test]
    fn constants_are_marked_for_inlining() {
        let plan = plan_einsum(",ij->ij", &[0, 2], &[true, false]).unwrap();
        assert_eq!(
            plan.steps,
            vec![
                PlanStep::InlineConstant { operand: 0 },
                PlanStep::Finish {
                    kernel: Some(EsKernel::Es6)
                },
            ]
        );
    }

    #[test]
    fn full_matrix_sum_reduces_by_rowsum_then_vector_sum() {
        let plan = plan_einsum("ij->", &[2], &[false]).unwrap();
        assert_eq!(plan.step_names(), vec!["ES2", "ES1"]);
    }

    #[test]
    fn column_sum_transposes_first() {
        let plan = plan_einsum("ij->j", &[2], &[false]).unwrap();
        assert_eq!(plan.step_names(), vec!["ES4", "ES2"]);
    }
}
