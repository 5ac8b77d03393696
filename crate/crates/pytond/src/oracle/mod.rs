//! Reference interpreter and test-side data model: in-memory relations,
//! SQL-compatible evaluation of TondIR, bag comparison and CSV loading.

pub mod eval;
pub mod relation;
pub mod value;

pub use eval::{eval_program, eval_rule, OracleError};
pub use relation::{
    bag_compare, bag_equal, from_csv_typed, to_csv, BagDiff, Database, Relation, FLOAT_REL_TOL,
};
pub use value::{EvalError, Value};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tondir::parse_program;

    fn ints(vals: &[i64]) -> Vec<Value> {
        vals.iter().map(|v| Value::Int(*v)).collect()
    }

    /// The running pivot example: a 7-row table grouped on `a` with one
    /// conditional sum per distinct value of `b`.
    fn pivot_db() -> Database {
        let rows = [
            ("x", "v1", 10),
            ("y", "v3", 30),
            ("y", "v1", 60),
            ("z", "v2", 20),
            ("y", "v3", 40),
            ("x", "v2", 60),
            ("z", "v2", 50),
        ];
        let mut db = Database::new();
        db.insert(
            "R",
            Relation::new(
                vec!["a".into(), "b".into(), "c".into()],
                rows.iter()
                    .map(|(a, b, c)| {
                        vec![
                            Value::Str(a.to_string()),
                            Value::Str(b.to_string()),
                            Value::Int(*c),
                        ]
                    })
                    .collect(),
            ),
        );
        db
    }

    #[test]
    fn pivot_rule_produces_grouped_conditional_sums() {
        let p = parse_program(
            r#"R1(a, p1, p2, p3) group(a) :- R(a, b, c),
               (p1=sum(if(b="v1", c, 0))),
               (p2=sum(if(b="v2", c, 0))),
               (p3=sum(if(b="v3", c, 0)))."#,
        )
        .unwrap();
        let out = eval_program(&p, &pivot_db()).unwrap();
        let expect = Relation::new(
            vec!["a".into(), "p1".into(), "p2".into(), "p3".into()],
            vec![
                vec![Value::Str("x".into()), Value::Int(10), Value::Int(60), Value::Int(0)],
                vec![Value::Str("y".into()), Value::Int(60), Value::Int(0), Value::Int(70)],
                vec![Value::Str("z".into()), Value::Int(0), Value::Int(70), Value::Int(0)],
            ],
        );
        assert!(bag_equal(&out, &expect, false), "got {out:?}");
    }

    #[test]
    fn rule_over_empty_relation_is_empty() {
        let mut db = Database::new();
        db.insert("R", Relation::empty(vec!["a".into(), "b".into()]));
        let p = parse_program("R1(a) :- R(a, b), (a>10).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.columns, vec!["a"]);
    }

    #[test]
    fn global_aggregate_over_empty_input_yields_nulls_and_zero_count() {
        let mut db = Database::new();
        db.insert("R", Relation::empty(vec!["a".into()]));
        let p = parse_program("R1(s, n) :- R(a), (s=sum(a)), (n=count(a)).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(out.rows, vec![vec![Value::Null, Value::Int(0)]]);
    }

    #[test]
    fn uid_assigns_row_numbers_in_order() {
        let mut db = Database::new();
        db.insert(
            "R",
            Relation::new(
                vec!["a".into()],
                vec![ints(&[7]), ints(&[9]), ints(&[8])],
            ),
        );
        let p = parse_program("R1(ID, a) :- R(a), (ID=UID()).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(
            out.rows,
            vec![ints(&[1, 7]), ints(&[2, 9]), ints(&[3, 8])]
        );
    }

    #[test]
    fn sort_and_limit_take_top_rows_in_order() {
        let mut db = Database::new();
        db.insert(
            "R",
            Relation::new(
                vec!["a".into()],
                vec![ints(&[5]), ints(&[1]), ints(&[9]), ints(&[3])],
            ),
        );
        let p = parse_program("R1(a) sort([a], [False]) limit(2) :- R(a).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(out.rows, vec![ints(&[9]), ints(&[5])]);
    }

    #[test]
    fn left_outer_join_pads_missing_side_with_nulls() {
        let mut db = Database::new();
        db.insert(
            "L",
            Relation::new(
                vec!["a".into(), "b".into()],
                vec![vec![Value::Int(1), Value::Str("x".into())]],
            ),
        );
        db.insert("S", Relation::empty(vec!["a".into(), "c".into()]));
        let p =
            parse_program("R(a1, b1, a2, c2) :- L(a1, b1), S(a2, c2), outer_left(a1, a2).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(
            out.rows,
            vec![vec![
                Value::Int(1),
                Value::Str("x".into()),
                Value::Null,
                Value::Null
            ]]
        );
    }

    #[test]
    fn exists_acts_as_semi_join() {
        let mut db = Database::new();
        db.insert(
            "R",
            Relation::new(vec!["a".into()], vec![ints(&[1]), ints(&[2]), ints(&[3])]),
        );
        db.insert(
            "K",
            Relation::new(vec!["k".into()], vec![ints(&[2]), ints(&[3]), ints(&[3])]),
        );
        let p = parse_program("R1(a) :- R(a), exists(K(k), (k=a)).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(out.rows, vec![ints(&[2]), ints(&[3])]);
    }

    #[test]
    fn unique_marker_deduplicates() {
        let mut db = Database::new();
        db.insert(
            "R",
            Relation::new(
                vec!["a".into()],
                vec![ints(&[2]), ints(&[1]), ints(&[2]), ints(&[1])],
            ),
        );
        let p = parse_program("R1(a) :- R(a), unique(a).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(out.rows, vec![ints(&[2]), ints(&[1])]);
    }

    #[test]
    fn null_comparisons_filter_rows() {
        let mut db = Database::new();
        db.insert(
            "R",
            Relation::new(
                vec!["a".into()],
                vec![vec![Value::Int(1)], vec![Value::Null], vec![Value::Int(5)]],
            ),
        );
        let p = parse_program("R1(a) :- R(a), (a>0).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(out.rows, vec![ints(&[1]), ints(&[5])]);
    }

    #[test]
    fn division_by_zero_yields_null() {
        let mut db = Database::new();
        db.insert("R", Relation::new(vec!["a".into()], vec![ints(&[1])]));
        let p = parse_program("R1(x) :- R(a), (x=a/0).").unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(out.rows, vec![vec![Value::Null]]);
    }

    #[test]
    fn bag_equal_respects_ordering_flag() {
        let a = Relation::new(vec!["x".into()], vec![ints(&[1]), ints(&[2])]);
        let b = Relation::new(vec!["x".into()], vec![ints(&[2]), ints(&[1])]);
        assert!(bag_equal(&a, &b, false));
        assert!(!bag_equal(&a, &b, true));
        let c = Relation::new(vec!["x".into(), "y".into()], vec![]);
        assert!(!bag_equal(&a, &c, false));
    }

    #[test]
    fn bag_equal_uses_float_tolerance() {
        let a = Relation::new(vec!["x".into()], vec![vec![Value::Float(1.0)]]);
        let b = Relation::new(
            vec!["x".into()],
            vec![vec![Value::Float(1.0 + 1e-12)]],
        );
        assert!(bag_equal(&a, &b, false));
        let c = Relation::new(vec!["x".into()], vec![vec![Value::Float(1.1)]]);
        assert!(!bag_equal(&a, &c, false));
    }

    #[test]
    fn csv_roundtrip_with_nulls() {
        use crate::catalog::ScalarType as T;
        let rel = Relation::new(
            vec!["a".into(), "s".into()],
            vec![
                vec![Value::Int(1), Value::Str("hi, there".into())],
                vec![Value::Null, Value::Str("plain".into())],
            ],
        );
        let text = to_csv(&rel);
        let back = from_csv_typed(&text, &[T::Int64, T::String]).unwrap();
        assert_eq!(back, rel);
    }

    #[test]
    fn redefinition_visibility_in_programs() {
        let mut db = Database::new();
        db.insert(
            "df1",
            Relation::new(
                vec!["a".into(), "x".into(), "y".into()],
                vec![ints(&[10, 0, 0]), ints(&[20, 0, 0])],
            ),
        );
        db.insert(
            "df2",
            Relation::new(
                vec!["b".into(), "z".into()],
                vec![ints(&[5, 0]), ints(&[6, 0])],
            ),
        );
        let p = parse_program(
            r#"
            df3(a) :- df1(a, x, y).
            df3(ID, a) :- df3(a), (ID=UID()).
            df2(ID, b, z) :- df2(b, z), (ID=UID()).
            df3(a, b) :- df3(ID, a), df2(ID, b, z).
            "#,
        )
        .unwrap();
        let out = eval_program(&p, &db).unwrap();
        assert_eq!(out.columns, vec!["a", "b"]);
        assert_eq!(out.rows, vec![ints(&[10, 5]), ints(&[20, 6])]);
    }
}
