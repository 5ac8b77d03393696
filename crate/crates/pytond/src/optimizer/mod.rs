//! Rewrite-based optimization of TondIR programs, staged as cumulative
//! levels: O1 adds local/global dead code elimination, O2 group-aggregate
//! elimination, O3 self-join elimination, O4 rule inlining plus a final
//! cleanup pass.

pub mod breakers;
pub mod dce;
pub mod inline;
pub mod rewrite;
pub mod uniqueness;

pub use breakers::{classify_flow_breaker, FlowBreakerKind};
pub use dce::{global_dce, local_dce};
pub use inline::inline_rules;
pub use rewrite::{group_agg_elim, self_join_elim};

use crate::catalog::Catalog;
use crate::tondir::ast::Program;
use crate::tondir::version_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OptLevel {
    O0,
    O1,
    O2,
    O3,
    O4,
}

impl OptLevel {
    pub fn from_u8(v: u8) -> Option<OptLevel> {
        Some(match v {
            0 => OptLevel::O0,
            1 => OptLevel::O1,
            2 => OptLevel::O2,
            3 => OptLevel::O3,
            4 => OptLevel::O4,
            _ => return None,
        })
    }

    pub fn as_u8(&self) -> u8 {
        match self {
            OptLevel::O0 => 0,
            OptLevel::O1 => 1,
            OptLevel::O2 => 2,
            OptLevel::O3 => 3,
            OptLevel::O4 => 4,
        }
    }
}

/// Applies the cumulative passes of the level, each to fixpoint, in order
/// DCE, group-aggregate elimination, self-join elimination, inlining, and
/// a final DCE. Relation names are versioned apart first so passes see
/// single-definition names; printing restores surface names.
pub fn optimize(p: &Program, level: OptLevel, catalog: &Catalog) -> Program {
    if level == OptLevel::O0 {
        return p.clone();
    }
    let mut prog = version_program(p, &catalog.base_names());
    prog = fixpoint(prog, |p| global_dce(&local_dce(p)));
    if level >= OptLevel::O2 {
        prog = fixpoint(prog, |p| group_agg_elim(p, catalog));
    }
    if level >= OptLevel::O3 {
        prog = fixpoint(prog, |p| self_join_elim(p, catalog));
    }
    if level >= OptLevel::O4 {
        prog = fixpoint(prog, |p| inline_rules(p));
    }
    if level >= OptLevel::O2 {
        // Rewrites above leave dead assignments and columns behind.
        prog = fixpoint(prog, |p| global_dce(&local_dce(p)));
    }
    prog
}

fn fixpoint(mut p: Program, pass: impl Fn(&Program) -> Program) -> Program {
    loop {
        let next = pass(&p);
        if next == p {
            return p;
        }
        p = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Catalog, ScalarType, TableSchema};
    use crate::oracle::{bag_equal, eval_program, Database, Relation, Value};
    use crate::tondir::{parse_program, print_program};

    fn cat(tables: Vec<TableSchema>) -> Catalog {
        Catalog::new(tables)
    }

    fn t4(name: &str) -> TableSchema {
        TableSchema::new(
            name,
            vec![
                ("a", ScalarType::Int64),
                ("b", ScalarType::Int64),
                ("c", ScalarType::Int64),
                ("d", ScalarType::Int64),
            ],
        )
    }

    #[test]
    fn local_dce_removes_unused_assignment() {
        let p = parse_program("R1(y) :- R(a, b), (x=a), (y=a*b).").unwrap();
        let out = local_dce(&p);
        assert_eq!(
            print_program(&out).trim(),
            "R1(y) :- R(a, b), (y=a*b)."
        );
    }

    #[test]
    fn local_dce_removes_chains_and_keeps_live_code() {
        let p = parse_program("R1(y) :- R(a, b), (x=a), (w=x), (y=a*b).").unwrap();
        let out = local_dce(&p);
        assert_eq!(print_program(&out).trim(), "R1(y) :- R(a, b), (y=a*b).");

        let p = parse_program("R1(y) :- R(a, b), (y=a*b).").unwrap();
        assert_eq!(local_dce(&p), p);
    }

    #[test]
    fn global_dce_narrows_heads() {
        let p = parse_program(
            "R1(a, b, c, d) :- R(a, b, c, d), (a<10), (c=d).\n\
             R2(a, s) group(a) :- R1(a, b, c, d), (s=sum(b)).",
        )
        .unwrap();
        let out = global_dce(&p);
        let printed = print_program(&out);
        assert_eq!(
            printed.trim(),
            "R1(a, b) :- R(a, b, c, d), (a<10), (c=d).\n\
             R2(a, s) group(a) :- R1(a, b), (s=sum(b))."
        );
    }

    #[test]
    fn global_dce_keeps_fully_used_program() {
        let p = parse_program(
            "R1(a, b) :- R(a, b, c, d).\nR2(a, b) :- R1(a, b), (a<10).",
        )
        .unwrap();
        assert_eq!(global_dce(&p), p);
    }

    #[test]
    fn group_agg_elim_on_unique_grouping() {
        let catalog = cat(vec![TableSchema::new(
            "R",
            vec![
                ("ID", ScalarType::Int64),
                ("a", ScalarType::Int64),
                ("b", ScalarType::Int64),
                ("c", ScalarType::Int64),
            ],
        )
        .with_primary_key(&["ID"])]);
        let p = parse_program("R1(ID, s) group(ID) :- R(ID, a, b, c), (s=sum(b)).").unwrap();
        let out = group_agg_elim(&p, &catalog);
        assert_eq!(
            print_program(&out).trim(),
            "R1(ID, s) :- R(ID, a, b, c), (s=b)."
        );

        // Non-unique grouping column: unchanged.
        let catalog = cat(vec![TableSchema::new(
            "R",
            vec![
                ("ID", ScalarType::Int64),
                ("a", ScalarType::Int64),
                ("b", ScalarType::Int64),
                ("c", ScalarType::Int64),
            ],
        )]);
        assert_eq!(group_agg_elim(&p, &catalog), p);
    }

    #[test]
    fn self_join_elim_on_unique_column() {
        let catalog = cat(vec![t4("R").with_primary_key(&["a"])]);
        let p = parse_program("R1(z) :- R(a, b1, c1, d1), R(a, b2, c2, d2), (z=b1*c2).").unwrap();
        let out = self_join_elim(&p, &catalog);
        assert_eq!(
            print_program(&out).trim(),
            "R1(z) :- R(a, b1, c1, d1), (z=b1*c1)."
        );
    }

    #[test]
    fn self_join_kept_when_filtered_or_not_unique() {
        let catalog = cat(vec![t4("R").with_primary_key(&["a"])]);
        let filtered =
            parse_program("R1(z) :- R(a, b1, c1, d1), R(a, b2, c2, d2), (b1>5), (z=b1*c2).")
                .unwrap();
        assert_eq!(self_join_elim(&filtered, &catalog), filtered);

        let no_key = cat(vec![t4("R")]);
        let p = parse_program("R1(z) :- R(a, b1, c1, d1), R(a, b2, c2, d2), (z=b1*c2).").unwrap();
        assert_eq!(self_join_elim(&p, &no_key), p);
    }

    #[test]
    fn classify_breakers_by_shape() {
        let p = parse_program(
            "R7(b, m) group(b) :- R6(b, g), (m=max(g)).\n\
             R8(b) :- R7(b, m).\n\
             R9(b) sort([b], [True]) limit(3) :- R8(b).",
        )
        .unwrap();
        let graph = crate::tondir::dependency_graph(&p, None).unwrap();
        // Aggregate wins over GroupBy in classification order.
        assert_eq!(
            classify_flow_breaker(&p.rules[0], &graph.consumers[0]),
            FlowBreakerKind::Aggregate
        );
        assert_eq!(
            classify_flow_breaker(&p.rules[1], &graph.consumers[1]),
            FlowBreakerKind::None
        );
        assert_eq!(
            classify_flow_breaker(&p.rules[2], &graph.consumers[2]),
            FlowBreakerKind::SortLimit
        );
    }

    #[test]
    fn group_head_without_aggregate_is_groupby_breaker() {
        let p = parse_program("R2(b) group(b) :- R1(b, g).").unwrap();
        assert_eq!(
            classify_flow_breaker(&p.rules[0], &[]),
            FlowBreakerKind::GroupBy
        );
    }

    #[test]
    fn inline_fuses_filter_chain_into_grouped_sink() {
        let p = parse_program(
            r#"
            R2(b, c, d) :- R1(a, b, c, d), (a > 1000).
            R3(b, d) :- R2(b, c, d), (c != "A").
            R5(e, g) :- R4(e, f, g), (f > 100).
            R6(b, g) :- R3(b, x), R5(x, g).
            R7(b, m) group(b) :- R6(b, g), (m = max(g)).
            "#,
        )
        .unwrap();
        let out = inline_rules(&p);
        assert_eq!(out.rules.len(), 1);
        assert_eq!(
            print_program(&out).trim(),
            "R7(b, m) group(b) :- R1(a, b, c, x), (a>1000), (c!=\"A\"), R4(x, f, g), (f>100), (m=max(g))."
        );
    }

    #[test]
    fn inline_leaves_single_sink_alone() {
        let p = parse_program("R1(a) :- R(a, b).").unwrap();
        assert_eq!(inline_rules(&p), p);
    }

    #[test]
    fn optimize_o0_is_identity() {
        let p = parse_program("R1(a) :- R(a, b).\nR2(a) :- R1(a).").unwrap();
        let catalog = cat(vec![]);
        assert_eq!(optimize(&p, OptLevel::O0, &catalog), p);
    }

    #[test]
    fn optimizer_preserves_oracle_semantics_on_inlining_pipeline() {
        let src = r#"
            R2(b, c, d) :- R1(a, b, c, d), (a > 1000).
            R3(b, d) :- R2(b, c, d), (c != "A").
            R5(e, g) :- R4(e, f, g), (f > 100).
            R6(b, g) :- R3(b, x), R5(x, g).
            R7(b, m) group(b) :- R6(b, g), (m = max(g)).
        "#;
        let p = parse_program(src).unwrap();
        let mut db = Database::new();
        let mut r1 = Vec::new();
        let mut r4 = Vec::new();
        for i in 0..20i64 {
            r1.push(vec![
                Value::Int(900 + i * 17),
                Value::Int(i % 4),
                Value::Str(if i % 3 == 0 { "A".into() } else { "B".into() }),
                Value::Int(i),
            ]);
            r4.push(vec![
                Value::Int(i),
                Value::Int(80 + i * 5),
                Value::Int(1000 - i * 7),
            ]);
        }
        db.insert(
            "R1",
            Relation::new(
                vec!["a".into(), "b".into(), "c".into(), "d".into()],
                r1,
            ),
        );
        db.insert(
            "R4",
            Relation::new(vec!["e".into(), "f".into(), "g".into()], r4),
        );
        let catalog = cat(vec![]);
        let baseline = eval_program(&p, &db).unwrap();
        for level in [OptLevel::O1, OptLevel::O2, OptLevel::O3, OptLevel::O4] {
            let opt = optimize(&p, level, &catalog);
            let got = eval_program(&opt, &db).unwrap();
            assert!(
                bag_equal(&baseline, &got, false),
                "level {level:?} changed results:\n{}",
                print_program(&opt)
            );
        }
        let o4 = optimize(&p, OptLevel::O4, &catalog);
        assert_eq!(o4.rules.len(), 1);
    }

    #[test]
    fn passes_are_idempotent() {
        let p = parse_program(
            "R2(b, c) :- R1(a, b, c), (a > 10).\n\
             R7(b, m) group(b) :- R2(b, c), (m = max(c)).",
        )
        .unwrap();
        let once = inline_rules(&p);
        assert_eq!(inline_rules(&once), once);
        let once = local_dce(&p);
        assert_eq!(local_dce(&once), once);
        let once = global_dce(&p);
        assert_eq!(global_dce(&once), once);
    }
}
