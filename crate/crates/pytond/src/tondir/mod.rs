//! TondIR: the Datalog-like intermediate representation at the center of
//! the compiler. Submodules cover the data model, concrete syntax,
//! validation and dependency analysis.

pub mod analysis;
pub mod ast;
pub mod parser;
pub mod printer;
pub mod validate;

pub use analysis::{dependency_graph, version_program, DepGraph};
pub use ast::*;
pub use parser::{parse_program, ParseError};
pub use printer::{print_program, surface_name};
pub use validate::{classify_compares, validate, CompareKind, Diagnostic, Severity};

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn parse(s: &str) -> Program {
        parse_program(s).expect("parse")
    }

    #[test]
    fn parses_aggregate_rule() {
        let p = parse("R1(a, s) :- R(a, b, c),(s=sum(b)).");
        assert_eq!(p.rules.len(), 1);
        let rule = &p.rules[0];
        assert_eq!(rule.head.rel.name, "R1");
        assert_eq!(rule.head.rel.vars, vec!["a", "s"]);
        assert_eq!(rule.body.len(), 2);
        assert_eq!(
            rule.body[0],
            Atom::Rel(RelationAccess::new("R", vec!["a".into(), "b".into(), "c".into()]))
        );
        match &rule.body[1] {
            Atom::Compare(c) => {
                assert_eq!(c.lhs, "s");
                assert_eq!(c.op, CmpOp::Eq);
                assert_eq!(c.rhs, Term::Agg(AggFn::Sum, Box::new(Term::var("b"))));
            }
            other => panic!("expected compare, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_program() {
        assert!(parse("").is_empty());
        assert!(parse("  // just a comment\n{ and a block }").is_empty());
    }

    #[test]
    fn parses_inlining_pipeline() {
        let src = r#"
            R2(b, c, d) :- R1(a, b, c, d), (a > 1000).
            R3(b, d) :- R2(b, c, d), (c != "A").
            R5(e, g) :- R4(e, f, g), (f > 100).
            R6(b, g) :- R3(b, x), R5(x, g).
            R7(b, m) group(b) :- R6(b, g), (m = max(g)).
        "#;
        let p = parse(src);
        assert_eq!(p.rules.len(), 5);
        assert_eq!(p.rules[4].head.group, Some(vec!["b".to_string()]));
    }

    #[test]
    fn dependency_graph_of_inlining_pipeline() {
        let src = r#"
            R2(b, c, d) :- R1(a, b, c, d), (a > 1000).
            R3(b, d) :- R2(b, c, d), (c != "A").
            R5(e, g) :- R4(e, f, g), (f > 100).
            R6(b, g) :- R3(b, x), R5(x, g).
            R7(b, m) group(b) :- R6(b, g), (m = max(g)).
        "#;
        let p = parse(src);
        let g = dependency_graph(&p, None).unwrap();
        // R2 -> R3, R3 -> R6, R5 -> R6, R6 -> R7 by rule index.
        assert_eq!(g.edges(), vec![(0, 1), (1, 3), (2, 3), (3, 4)]);
        assert_eq!(g.base_refs[0], vec!["R1"]);
        assert_eq!(g.base_refs[2], vec!["R4"]);
        assert_eq!(g.sinks(), vec![4]);
    }

    #[test]
    fn redefinition_resolves_to_most_recent() {
        let src = r#"
            df3(a) :- df1(a, x, y).
            df3(ID, a) :- df3(a), (ID=UID()).
            df2(ID, b, z) :- df2(b, z), (ID=UID()).
            df3(a, b) :- df3(ID, a), df2(ID, b, z).
        "#;
        let p = parse(src);
        let g = dependency_graph(&p, None).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 3), (2, 3)]);

        let base: HashSet<String> = ["df1".to_string(), "df2".to_string()].into();
        let v = version_program(&p, &base);
        assert_eq!(v.rules[0].head.rel.name, "df3$1");
        assert_eq!(v.rules[1].head.rel.name, "df3$2");
        match &v.rules[1].body[0] {
            Atom::Rel(rel) => assert_eq!(rel.name, "df3$1"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(v.rules[2].head.rel.name, "df2$1");
        match &v.rules[2].body[0] {
            Atom::Rel(rel) => assert_eq!(rel.name, "df2"),
            other => panic!("unexpected {other:?}"),
        }
        match &v.rules[3].body[1] {
            Atom::Rel(rel) => assert_eq!(rel.name, "df2$1"),
            other => panic!("unexpected {other:?}"),
        }
        // Printing restores surface names and round-trips.
        let printed = print_program(&v);
        assert_eq!(parse(&printed), p);
    }

    #[test]
    fn unbound_head_variable_is_an_error() {
        let p = parse("R1(z) :- R(a,b).");
        let diags = validate(&p);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Error);
        assert!(diags[0].message.contains("unbound head variable z"));
    }

    #[test]
    fn classification_depends_on_binding_order() {
        let p = parse("R1(a) :- R(a,b), (a=b).");
        assert!(!validate::has_errors(&validate(&p)));
        let kinds = classify_compares(&p.rules[0]);
        assert_eq!(kinds[1], Some(CompareKind::Equality));

        let p = parse("R1(x) :- R(a,b), (x=a*b).");
        assert!(!validate::has_errors(&validate(&p)));
        let kinds = classify_compares(&p.rules[0]);
        assert_eq!(kinds[1], Some(CompareKind::Assignment));
    }

    #[test]
    fn print_restores_uid_listing() {
        let src = "df3(ID, a) :- df3(a), (ID=UID()).";
        let p = parse(src);
        let printed = print_program(&p);
        assert!(printed.contains("(ID=UID())"), "printed: {printed}");
        assert_eq!(parse(&printed), p);
    }

    #[test]
    fn const_relation_roundtrip() {
        let p = parse("R(c0) :- (c0=[1, 2, 3]).");
        match &p.rules[0].body[0] {
            Atom::Const(c) => {
                assert_eq!(c.vars, vec!["c0"]);
                assert_eq!(c.rows.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse(&print_program(&p)), p);

        let p = parse(r#"R(a, b) :- ((a, b)=[(1, "x"), (2, "y")])."#);
        assert_eq!(parse(&print_program(&p)), p);
    }

    #[test]
    fn sort_limit_head_roundtrip() {
        let src = "R(a, b) sort([a, b], [True, False]) limit(10) :- S(a, b).";
        let p = parse(src);
        let head = &p.rules[0].head;
        assert_eq!(head.limit, Some(10));
        assert_eq!(
            head.sort,
            Some(SortSpec {
                vars: vec!["a".into(), "b".into()],
                ascending: vec![true, false],
            })
        );
        assert_eq!(parse(&print_program(&p)), p);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_program("R1(a) :- R(a@b).").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.col > 0);
    }

    #[test]
    fn alpha_renaming_validates_identically() {
        let p1 = parse("R1(s) group(a) :- R(a, b), (s=sum(b)).");
        let p2 = parse("R1(t) group(x) :- R(x, y), (t=sum(y)).");
        assert_eq!(validate(&p1).len(), validate(&p2).len());
    }
}
