//! SQL code generation: dialect adaptation, sort/limit coalescing,
//! CTE lowering and deterministic rendering.

pub mod coalesce;
pub mod dialect;
pub mod lower;

pub use coalesce::{coalesce_sort_limit, CoalesceError};
pub use dialect::{Dialect, DialectId};
pub use lower::{lower_program, lower_uid, render, Cte, LowerError, SqlScript};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Catalog, ScalarType, TableSchema};
    use crate::tondir::parse_program;

    fn catalog_r3() -> Catalog {
        Catalog::new(vec![TableSchema::new(
            "R",
            vec![
                ("a", ScalarType::Int64),
                ("b", ScalarType::Int64),
                ("c", ScalarType::Int64),
            ],
        )])
    }

    fn lower_text(src: &str, catalog: &Catalog) -> String {
        let p = parse_program(src).unwrap();
        let script = lower_program(&p, &Dialect::duck(), catalog).unwrap();
        render(&script)
    }

    #[test]
    fn aggregate_rule_lowers_to_with_select() {
        let sql = lower_text("R1(a, s) :- R(a, b, c), (s=sum(b)).", &catalog_r3());
        assert_eq!(
            sql,
            "WITH R1(a, s) AS (\n    SELECT a, SUM(b) AS s FROM R\n)\nSELECT * FROM R1\n"
        );
    }

    #[test]
    fn constant_rule_lowers_to_values() {
        let sql = lower_text("R(c0) :- (c0=[1, 2, 3]).", &Catalog::default());
        assert_eq!(
            sql,
            "WITH R(c0) AS (\n    VALUES (1), (2), (3)\n)\nSELECT * FROM R\n"
        );
    }

    #[test]
    fn join_uses_aliases_and_where() {
        let catalog = Catalog::new(vec![
            TableSchema::new("x", vec![("id", ScalarType::Int64), ("v", ScalarType::Float64)]),
            TableSchema::new("y", vec![("id", ScalarType::Int64), ("w", ScalarType::Float64)]),
        ]);
        let sql = lower_text("v1(ID, c0, c1) :- x(ID, c0), y(ID, c1).", &catalog);
        assert!(
            sql.contains("FROM x AS r1, y AS r2 WHERE r1.id = r2.id"),
            "{sql}"
        );
        assert!(sql.contains("SELECT r1.id AS ID, r1.v AS c0, r2.w AS c1"), "{sql}");
    }

    #[test]
    fn group_sort_limit_and_case_render() {
        let catalog = catalog_r3();
        let sql = lower_text(
            "R1(a, s) group(a) sort([s], [False]) limit(5) :- R(a, b, c), (s=sum(if(b>2, c, 0))).",
            &catalog,
        );
        assert!(sql.contains("GROUP BY a"), "{sql}");
        assert!(
            sql.contains("SELECT * FROM R1 ORDER BY s DESC NULLS LAST LIMIT 5"),
            "{sql}"
        );
        assert!(
            sql.contains("SUM(CASE WHEN b > 2 THEN c ELSE 0 END) AS s"),
            "{sql}"
        );
    }

    #[test]
    fn uid_lowers_to_row_number_window() {
        let catalog = catalog_r3();
        let p = parse_program("R1(ID, a) :- R(a, b, c), (ID=UID()).").unwrap();
        let script = lower_program(&p, &Dialect::duck(), &catalog).unwrap();
        let sql = render(&script);
        assert!(
            sql.contains("row_number() OVER(ORDER BY a) AS ID"),
            "{sql}"
        );
        assert!(!script.warnings.is_empty());

        let (frag, warn) = lower_uid(Some("col"));
        assert_eq!(frag, "row_number() OVER(ORDER BY col) AS ID");
        assert!(warn.is_none());
    }

    #[test]
    fn outer_join_markers_lower_to_join_syntax() {
        let catalog = Catalog::new(vec![
            TableSchema::new("L", vec![("a", ScalarType::Int64), ("b", ScalarType::Int64)]),
            TableSchema::new("S", vec![("a", ScalarType::Int64), ("c", ScalarType::Int64)]),
        ]);
        let sql = lower_text(
            "R(a1, b1, c2) :- L(a1, b1), S(a2, c2), outer_left(a1, a2).",
            &catalog,
        );
        assert!(
            sql.contains("FROM L AS r1 LEFT JOIN S AS r2 ON r1.a = r2.a"),
            "{sql}"
        );
    }

    #[test]
    fn exists_lowers_to_exists_subquery() {
        let catalog = Catalog::new(vec![
            TableSchema::new("R", vec![("a", ScalarType::Int64)]),
            TableSchema::new("K", vec![("k", ScalarType::Int64)]),
        ]);
        let sql = lower_text("R1(a) :- R(a), exists(K(k), (k=a)).", &catalog);
        assert!(
            sql.contains("WHERE EXISTS (SELECT 1 FROM K AS r1 WHERE r1.k = a)"),
            "{sql}"
        );
    }

    #[test]
    fn redefined_relations_get_unique_cte_names() {
        let catalog = Catalog::new(vec![
            TableSchema::new(
                "df1",
                vec![
                    ("a", ScalarType::Int64),
                    ("x", ScalarType::Int64),
                    ("y", ScalarType::Int64),
                ],
            ),
            TableSchema::new("df2", vec![("b", ScalarType::Int64), ("z", ScalarType::Int64)]),
        ]);
        let p = parse_program(
            r#"
            df3(a) :- df1(a, x, y).
            df3(ID, a) :- df3(a), (ID=UID()).
            df2(ID, b, z) :- df2(b, z), (ID=UID()).
            df3(a, b) :- df3(ID, a), df2(ID, b, z).
            "#,
        )
        .unwrap();
        let script = lower_program(&p, &Dialect::duck(), &catalog).unwrap();
        let names: Vec<&str> = script.ctes.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["df3", "df3_2", "df2_2", "df3_3"]);
        let sql = render(&script);
        assert!(sql.contains("SELECT * FROM df3_3"), "{sql}");
    }

    #[test]
    fn dialects_differ_only_in_mapped_tokens() {
        let catalog = catalog_r3();
        let p = parse_program(
            "R1(a, x) sort([a], [True]) limit(3) :- R(a, b, c), (x=round(b/2)).",
        )
        .unwrap();
        let duck = render(&lower_program(&p, &Dialect::duck(), &catalog).unwrap());
        let ansi = render(&lower_program(&p, &Dialect::ansi(), &catalog).unwrap());
        assert!(duck.contains("round(b/2)"), "{duck}");
        assert!(ansi.contains("ROUND(b/2)"), "{ansi}");
        assert!(duck.contains("LIMIT 3"), "{duck}");
        assert!(ansi.contains("FETCH FIRST 3 ROWS ONLY"), "{ansi}");
        let normalize = |s: &str| {
            s.replace("ROUND", "round")
                .replace("FETCH FIRST 3 ROWS ONLY", "LIMIT 3")
        };
        assert_eq!(normalize(&duck), normalize(&ansi));
    }

    #[test]
    fn coalesce_merges_sort_with_downstream_limit() {
        let p = parse_program(
            "R1(a, b) sort([b], [True]) :- R(a, b, c).\nR2(a, b) limit(4) :- R1(a, b).",
        )
        .unwrap();
        let out = coalesce_sort_limit(&p).unwrap();
        assert!(out.rules[0].head.sort.is_none());
        let head = &out.rules[1].head;
        assert_eq!(head.limit, Some(4));
        assert_eq!(
            head.sort,
            Some(crate::tondir::ast::SortSpec {
                vars: vec!["b".into()],
                ascending: vec![true],
            })
        );
        let sql = lower_text(
            &crate::tondir::print_program(&out),
            &catalog_r3(),
        );
        assert!(
            sql.contains("SELECT * FROM R2 ORDER BY b ASC NULLS LAST LIMIT 4"),
            "{sql}"
        );
    }

    #[test]
    fn coalesce_leaves_sink_sort_alone() {
        let p = parse_program("R1(a) sort([a], [True]) :- R(a, b, c).").unwrap();
        assert_eq!(coalesce_sort_limit(&p).unwrap(), p);
    }

    #[test]
    fn coalesce_rejects_unpushable_sort() {
        let p = parse_program(
            "R1(a) sort([a], [True]) :- R(a, b, c).\n\
             R2(s) :- R1(a), (s=sum(a)).\n\
             R3(s) :- R2(s), (s>0).",
        )
        .unwrap();
        // R1's sort cannot merge into R2 (no limit, not the sink).
        assert!(coalesce_sort_limit(&p).is_err());
    }

    #[test]
    fn disjunctive_filter_renders_with_parentheses() {
        let catalog = catalog_r3();
        let sql = lower_text(
            "R1(a) :- R(a, b, c), (t=((a>1 and b<5) or c=9)), (t=True).",
            &catalog,
        );
        assert!(
            sql.contains("WHERE (a > 1 AND b < 5 OR c = 9) = TRUE"),
            "{sql}"
        );
    }
}
