//! Frontend behavior against the reference listings: discovery, ANF,
//! dataframe and tensor translation, implicit joins, pivot, and the
//! end-to-end covariance pipeline.

mod common;

use common::{alpha_equivalent, db, int_rows, rel};
use pytond::catalog::{Catalog, LayoutSpec, ScalarType, TableSchema};
use pytond::frontend::pyast::{PyStmt, PyTarget};
use pytond::frontend::{
    compile_function, discover_functions, infer_types, normalize_source, translate_function,
    VarType, DEFAULT_DECORATOR,
};
use pytond::oracle::{bag_equal, eval_program, Value};
use pytond::tondir::{parse_program, print_program};

fn discover_one(source: &str) -> pytond::frontend::SourceFunction {
    let fns = discover_functions(source, DEFAULT_DECORATOR).expect("discover");
    assert_eq!(fns.len(), 1, "expected exactly one decorated function");
    fns.into_iter().next().unwrap()
}

fn tpch_mini_catalog() -> Catalog {
    Catalog::new(vec![
        TableSchema::new(
            "df1",
            vec![
                ("a", ScalarType::Int64),
                ("b", ScalarType::Int64),
                ("c", ScalarType::Int64),
            ],
        ),
        TableSchema::new(
            "df2",
            vec![
                ("a", ScalarType::Int64),
                ("c", ScalarType::Int64),
                ("d", ScalarType::Int64),
            ],
        ),
    ])
}

#[test]
fn discovery_ignores_undecorated_functions() {
    let src = r#"
import pandas as pd

def helper(df):
    while True:
        pass

@pytond()
def q(df1):
    return df1
"#;
    let fns = discover_functions(src, DEFAULT_DECORATOR).unwrap();
    assert_eq!(fns.len(), 1);
    assert_eq!(fns[0].name, "q");
}

#[test]
fn loops_in_decorated_functions_are_rejected() {
    let src = r#"
@pytond()
def q(df1):
    while True:
        pass
"#;
    let err = discover_functions(src, DEFAULT_DECORATOR).unwrap_err();
    assert!(err.is_unsupported_construct());
    assert!(err.to_string().contains("unsupported statement: loop"), "{err}");
}

#[test]
fn anf_splits_nested_merge_into_seven_statements() {
    let src = r#"
@pytond()
def q(df1, df2):
    res = (df1[df1.b>10]['a']).merge((df2[df2.y=='r']['x']), left_on='a', right_on='x')
    return res
"#;
    let f = discover_one(src);
    let normalized = normalize_source(&f);
    let names: Vec<String> = normalized
        .body
        .iter()
        .filter_map(|s| match s {
            PyStmt::Assign {
                target: PyTarget::Name(n),
                ..
            } => Some(n.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(names, vec!["v1", "v2", "v3", "v4", "v5", "v6", "res"]);

    // Normalization is idempotent.
    let twice = normalize_source(&normalized);
    assert_eq!(twice.body, normalized.body);
}

#[test]
fn already_flat_function_is_unchanged_by_anf() {
    let src = r#"
@pytond()
def q(df1):
    v1 = df1.b
    return df1
"#;
    let f = discover_one(src);
    assert_eq!(normalize_source(&f).body, f.body);
}

#[test]
fn merge_applies_implicit_suffix_renaming() {
    let src = r#"
@pytond()
def q(df1, df2):
    df3 = df1.merge(df2, left_on='a', right_on='a')
    return df3
"#;
    let f = discover_one(src);
    let normalized = normalize_source(&f);
    let env = infer_types(&normalized, &tpch_mini_catalog()).unwrap();
    let schema = env.frame_schema("df3").expect("df3 typed");
    let names: Vec<&str> = schema.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, vec!["a", "b", "c_x", "c_y", "d"]);
}

#[test]
fn projection_types_single_column() {
    let src = r#"
@pytond()
def q(df1):
    v = df1[['a']]
    return v
"#;
    let f = discover_one(src);
    let env = infer_types(&normalize_source(&f), &tpch_mini_catalog()).unwrap();
    let schema = env.frame_schema("v").unwrap();
    assert_eq!(schema.len(), 1);
    assert_eq!(schema[0].0, "a");
}

#[test]
fn filter_translation_carries_condition_atom() {
    let src = r#"
@pytond()
def q(df1):
    v1 = df1.b > 10
    v2 = df1[v1]
    return v2
"#;
    let f = discover_one(src);
    let p = translate_function(&normalize_source(&f), &tpch_mini_catalog(), None).unwrap();
    let expected = parse_program("v2(a, b, c) :- df1(a, b, c), (b>10).").unwrap();
    alpha_equivalent(&p, &expected, &["df1"]).unwrap_or_else(|e| {
        panic!("not alpha-equivalent: {e}\ngot:\n{}", print_program(&p))
    });
}

#[test]
fn groupby_translates_to_group_rule() {
    let src = r#"
@pytond()
def q(df1):
    g = df1.groupby('a').sum()
    return g
"#;
    let f = discover_one(src);
    let p = translate_function(&normalize_source(&f), &tpch_mini_catalog(), None).unwrap();
    let expected = parse_program(
        "g(a, b, c) group(a) :- df1(a, b0, c0), (b=sum(b0)), (c=sum(c0)).",
    )
    .unwrap();
    alpha_equivalent(&p, &expected, &["df1"]).unwrap_or_else(|e| {
        panic!("not alpha-equivalent: {e}\ngot:\n{}", print_program(&p))
    });
}

#[test]
fn implicit_join_reproduces_uid_listing() {
    let src = r#"
@pytond()
def q(df1, df2):
    df3 = DataFrame()
    df3['a'] = df1['a']
    df3['b'] = df2['b']
    return df3
"#;
    let catalog = Catalog::new(vec![
        TableSchema::new(
            "df1",
            vec![
                ("a", ScalarType::Int64),
                ("x", ScalarType::Int64),
                ("y", ScalarType::Int64),
            ],
        ),
        TableSchema::new(
            "df2",
            vec![("b", ScalarType::Int64), ("z", ScalarType::Int64)],
        ),
    ]);
    let f = discover_one(src);
    let p = translate_function(&normalize_source(&f), &catalog, None).unwrap();
    let expected = parse_program(
        "df3(a) :- df1(a, x, y).\n\
         df3(ID, a) :- df3(a), (ID=UID()).\n\
         df2(ID, b, z) :- df2(b, z), (ID=UID()).\n\
         df3(a, b) :- df3(ID, a), df2(ID, b, z).",
    )
    .unwrap();
    alpha_equivalent(&p, &expected, &["df1", "df2"]).unwrap_or_else(|e| {
        panic!("not alpha-equivalent: {e}\ngot:\n{}", print_program(&p))
    });

    // Printed form carries the UID marker of the listing.
    assert!(print_program(&p).contains("(ID=UID())"));
}

#[test]
fn pivot_reproduces_grouped_conditional_sums() {
    let src = r#"
@pytond(distinct_values={'b': ['v1', 'v2', 'v3']})
def piv(r):
    out = r.pivot_table(index='a', columns='b', values='c', func='sum')
    return out
"#;
    let catalog = Catalog::new(vec![TableSchema::new(
        "r",
        vec![
            ("a", ScalarType::String),
            ("b", ScalarType::String),
            ("c", ScalarType::Int64),
        ],
    )]);
    let f = discover_one(src);
    let p = translate_function(&normalize_source(&f), &catalog, None).unwrap();
    let expected = parse_program(
        "out(a, v1, v2, v3) group(a) :- r(a, b, c), \
           (v1=sum(if(b=\"v1\", c, 0))), \
           (v2=sum(if(b=\"v2\", c, 0))), \
           (v3=sum(if(b=\"v3\", c, 0))).",
    )
    .unwrap();
    alpha_equivalent(&p, &expected, &["r"]).unwrap_or_else(|e| {
        panic!("not alpha-equivalent: {e}\ngot:\n{}", print_program(&p))
    });

    // Oracle evaluation over the 7-row example table.
    let data = rel(
        &["a", "b", "c"],
        [
            ("x", "v1", 10),
            ("y", "v3", 30),
            ("y", "v1", 60),
            ("z", "v2", 20),
            ("y", "v3", 40),
            ("x", "v2", 60),
            ("z", "v2", 50),
        ]
        .iter()
        .map(|(a, b, c)| {
            vec![
                Value::Str(a.to_string()),
                Value::Str(b.to_string()),
                Value::Int(*c),
            ]
        })
        .collect(),
    );
    let out = eval_program(&p, &db(vec![("r", data)])).unwrap();
    let expect = rel(
        &["a", "v1", "v2", "v3"],
        vec![
            vec![Value::Str("x".into()), Value::Int(10), Value::Int(60), Value::Int(0)],
            vec![Value::Str("y".into()), Value::Int(60), Value::Int(0), Value::Int(70)],
            vec![Value::Str("z".into()), Value::Int(0), Value::Int(70), Value::Int(0)],
        ],
    );
    assert!(bag_equal(&out, &expect, false), "got {out:?}");
}

#[test]
fn pivot_without_distinct_values_errors() {
    let src = r#"
@pytond()
def piv(r):
    out = r.pivot_table(index='a', columns='b', values='c')
    return out
"#;
    let catalog = Catalog::new(vec![TableSchema::new(
        "r",
        vec![
            ("a", ScalarType::String),
            ("b", ScalarType::String),
            ("c", ScalarType::Int64),
        ],
    )]);
    let f = discover_one(src);
    let err = translate_function(&normalize_source(&f), &catalog, None).unwrap_err();
    assert!(err.to_string().contains("distinct values"), "{err}");
}

fn fig6_catalog() -> Catalog {
    Catalog::new(vec![
        TableSchema::new(
            "x",
            vec![("id", ScalarType::Int64), ("xv", ScalarType::Float64)],
        )
        .with_primary_key(&["id"]),
        TableSchema::new(
            "y",
            vec![("id", ScalarType::Int64), ("yv", ScalarType::Float64)],
        )
        .with_primary_key(&["id"]),
    ])
}

const FIG6_SRC: &str = r#"
@pytond()
def covar(x, y):
    a = x.merge(y, on='id').drop('id', axis=1).to_numpy()
    b = np.einsum('ij,ik->jk', a, a)
    return b
"#;

#[test]
fn covariance_pipeline_matches_reference_shape() {
    let f = discover_one(FIG6_SRC);
    let normalized = normalize_source(&f);
    // ANF: merge, drop, to_numpy, einsum.
    assert_eq!(normalized.body.len(), 5);
    let p = translate_function(&normalized, &fig6_catalog(), None).unwrap();
    let expected = parse_program(
        "v1(ID, c0, c1) :- x(ID, c0), y(ID, c1).\n\
         b_1(s0, s1, s2, s3) :- v1(ID, a0, a1), v1(ID, b0, b1), \
           (s0=sum(a0*b0)), (s1=sum(a0*b1)), (s2=sum(a1*b0)), (s3=sum(a1*b1)).\n\
         b_2(c0) :- (c0=[0, 1]).\n\
         b_3(ID, c0, c1) :- b_1(s0, s1, s2, s3), b_2(i0), (ID=i0+1), \
           (c0=if(i0=0, s0, s2)), (c1=if(i0=0, s1, s3)).",
    )
    .unwrap();
    alpha_equivalent(&p, &expected, &["x", "y"]).unwrap_or_else(|e| {
        panic!("not alpha-equivalent: {e}\ngot:\n{}", print_program(&p))
    });
}

#[test]
fn covariance_pipeline_computes_gram_matrix() {
    let f = discover_one(FIG6_SRC);
    let p = compile_function(&f, &fig6_catalog(), None).unwrap();
    let database = db(vec![
        (
            "x",
            rel(
                &["id", "xv"],
                vec![
                    vec![Value::Int(1), Value::Float(2.0)],
                    vec![Value::Int(2), Value::Float(3.0)],
                ],
            ),
        ),
        (
            "y",
            rel(
                &["id", "yv"],
                vec![
                    vec![Value::Int(1), Value::Float(4.0)],
                    vec![Value::Int(2), Value::Float(5.0)],
                ],
            ),
        ),
    ]);
    let out = eval_program(&p, &database).unwrap();
    let expect = rel(
        &["ID", "c0", "c1"],
        vec![
            vec![Value::Int(1), Value::Float(13.0), Value::Float(23.0)],
            vec![Value::Int(2), Value::Float(23.0), Value::Float(41.0)],
        ],
    );
    assert!(bag_equal(&out, &expect, false), "got {out:?}");
}

#[test]
fn left_outer_merge_pads_with_nulls() {
    let src = r#"
@pytond()
def q(l, s):
    m = l.merge(s, how='left', left_on='a', right_on='k')
    return m
"#;
    let catalog = Catalog::new(vec![
        TableSchema::new(
            "l",
            vec![("a", ScalarType::Int64), ("b", ScalarType::String)],
        ),
        TableSchema::new(
            "s",
            vec![("k", ScalarType::Int64), ("c", ScalarType::Int64)],
        ),
    ]);
    let f = discover_one(src);
    let p = compile_function(&f, &catalog, None).unwrap();
    let database = db(vec![
        (
            "l",
            rel(
                &["a", "b"],
                vec![vec![Value::Int(1), Value::Str("x".into())]],
            ),
        ),
        ("s", rel(&["k", "c"], vec![])),
    ]);
    let out = eval_program(&p, &database).unwrap();
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
fn tensor_misc_kernels_translate_and_evaluate() {
    let src = r#"
@pytond()
def q(v):
    nz = v.nonzero()
    return nz
"#;
    let catalog = Catalog::new(vec![TableSchema::new(
        "v",
        vec![("id", ScalarType::Int64), ("c0", ScalarType::Int64)],
    )])
    .with_layout(
        "v",
        LayoutSpec::Dense {
            id_column: "id".into(),
            value_columns: vec!["c0".into()],
        },
    );
    let f = discover_one(src);
    let p = compile_function(&f, &catalog, None).unwrap();
    let database = db(vec![(
        "v",
        rel(&["id", "c0"], int_rows(&[&[1, 0], &[2, 5], &[3, 0], &[4, 7]])),
    )]);
    let out = eval_program(&p, &database).unwrap();
    assert!(bag_equal(
        &out,
        &rel(&["ID"], int_rows(&[&[2], &[4]])),
        false
    ));
}

#[test]
fn vector_all_uses_min_aggregate() {
    let src = r#"
@pytond()
def q(v):
    r = v.all(axis=1)
    return r
"#;
    let catalog = Catalog::new(vec![TableSchema::new(
        "v",
        vec![("id", ScalarType::Int64), ("c0", ScalarType::Int64)],
    )])
    .with_layout(
        "v",
        LayoutSpec::Dense {
            id_column: "id".into(),
            value_columns: vec!["c0".into()],
        },
    );
    let f = discover_one(src);
    let p = translate_function(&normalize_source(&f), &catalog, None).unwrap();
    let printed = print_program(&p);
    assert!(printed.contains("min("), "{printed}");
}

#[test]
fn matmul_matches_brute_force_product() {
    let src = r#"
@pytond()
def mm(m1, m2):
    r = np.einsum('ij,jk->ik', m1, m2)
    return r
"#;
    let dense3 = |name: &str| {
        TableSchema::new(
            name,
            vec![
                ("id", ScalarType::Int64),
                ("c0", ScalarType::Float64),
                ("c1", ScalarType::Float64),
                ("c2", ScalarType::Float64),
            ],
        )
        .with_primary_key(&["id"])
        .with_cardinality(3)
    };
    let layout = |cat: Catalog, name: &str| {
        cat.with_layout(
            name,
            LayoutSpec::Dense {
                id_column: "id".into(),
                value_columns: vec!["c0".into(), "c1".into(), "c2".into()],
            },
        )
    };
    let mut catalog = Catalog::new(vec![dense3("m1"), dense3("m2")]);
    catalog = layout(catalog, "m1");
    catalog = layout(catalog, "m2");

    let a = [[2.0, 1.0, 0.5], [0.0, 3.0, -1.0], [4.0, 0.25, 2.0]];
    let b = [[1.0, 0.0, 2.0], [0.5, -2.0, 1.0], [3.0, 1.0, 0.0]];
    let dense_rel = |m: &[[f64; 3]; 3]| {
        rel(
            &["id", "c0", "c1", "c2"],
            m.iter()
                .enumerate()
                .map(|(i, row)| {
                    let mut r = vec![Value::Int(i as i64 + 1)];
                    r.extend(row.iter().map(|v| Value::Float(*v)));
                    r
                })
                .collect(),
        )
    };
    let f = discover_one(src);
    let p = compile_function(&f, &catalog, None).unwrap();
    let database = db(vec![("m1", dense_rel(&a)), ("m2", dense_rel(&b))]);
    let out = eval_program(&p, &database).unwrap();

    // Brute-force index summation.
    let mut expect_rows = Vec::new();
    for i in 0..3 {
        let mut row = vec![Value::Int(i as i64 + 1)];
        for k in 0..3 {
            let mut sum = 0.0;
            for j in 0..3 {
                sum += a[i][j] * b[j][k];
            }
            row.push(Value::Float(sum));
        }
        expect_rows.push(row);
    }
    let expect = rel(&["ID", "c0", "c1", "c2"], expect_rows);
    assert!(bag_equal(&out, &expect, false), "got {out:?}");
}

#[test]
fn sparse_matmul_on_coo_relations() {
    let src = r#"
@pytond(layout='sparse')
def spmm(sa, sb):
    r = np.einsum('ij,jk->ik', sa, sb)
    return r
"#;
    let coo = |name: &str, shape: (u64, u64)| {
        (
            TableSchema::new(
                name,
                vec![
                    ("row_id", ScalarType::Int64),
                    ("col_id", ScalarType::Int64),
                    ("val", ScalarType::Float64),
                ],
            ),
            LayoutSpec::Coo {
                row: "row_id".into(),
                col: "col_id".into(),
                val: "val".into(),
                shape,
            },
        )
    };
    let (ta, la) = coo("sa", (1, 1));
    let (tb, lb) = coo("sb", (1, 2));
    let catalog = Catalog::new(vec![ta, tb])
        .with_layout("sa", la)
        .with_layout("sb", lb);
    let f = discover_one(src);
    let p = compile_function(&f, &catalog, None).unwrap();
    let database = db(vec![
        (
            "sa",
            rel(
                &["row_id", "col_id", "val"],
                vec![vec![Value::Int(0), Value::Int(0), Value::Float(2.0)]],
            ),
        ),
        (
            "sb",
            rel(
                &["row_id", "col_id", "val"],
                vec![vec![Value::Int(0), Value::Int(1), Value::Float(3.0)]],
            ),
        ),
    ]);
    let out = eval_program(&p, &database).unwrap();
    assert_eq!(
        out.rows,
        vec![vec![Value::Int(0), Value::Int(1), Value::Float(6.0)]]
    );
}

#[test]
fn scalar_aggregate_feeds_later_filter() {
    let src = r#"
@pytond()
def q(df1):
    thr = df1.b.mean()
    v1 = df1.b > thr
    out = df1[v1]
    return out
"#;
    let f = discover_one(src);
    let p = compile_function(&f, &tpch_mini_catalog(), None).unwrap();
    let database = db(vec![(
        "df1",
        rel(
            &["a", "b", "c"],
            int_rows(&[&[1, 10, 0], &[2, 20, 0], &[3, 30, 0]]),
        ),
    )]);
    let out = eval_program(&p, &database).unwrap();
    assert!(bag_equal(
        &out,
        &rel(&["a", "b", "c"], int_rows(&[&[3, 30, 0]])),
        false
    ));
}

#[test]
fn isin_translates_to_exists() {
    let src = r#"
@pytond()
def q(df1, df2):
    keys = df2[['a']]
    v1 = df1.a.isin(keys)
    out = df1[v1]
    return out
"#;
    let f = discover_one(src);
    let p = compile_function(&f, &tpch_mini_catalog(), None).unwrap();
    assert!(print_program(&p).contains("exists("), "{}", print_program(&p));
    let database = db(vec![
        (
            "df1",
            rel(&["a", "b", "c"], int_rows(&[&[1, 0, 0], &[2, 0, 0], &[3, 0, 0]])),
        ),
        (
            "df2",
            rel(&["a", "c", "d"], int_rows(&[&[2, 0, 0], &[3, 0, 0], &[3, 1, 1]])),
        ),
    ]);
    let out = eval_program(&p, &database).unwrap();
    assert!(bag_equal(
        &out,
        &rel(&["a", "b", "c"], int_rows(&[&[2, 0, 0], &[3, 0, 0]])),
        false
    ));
}

#[test]
fn apply_lambda_becomes_assignment_expression() {
    let src = r#"
@pytond()
def q(df1):
    df1['d'] = df1.b.apply(lambda x: x * 2 + 1 if x > 5 else 0)
    return df1
"#;
    let f = discover_one(src);
    let p = compile_function(&f, &tpch_mini_catalog(), None).unwrap();
    let database = db(vec![(
        "df1",
        rel(&["a", "b", "c"], int_rows(&[&[1, 10, 0], &[2, 3, 0]])),
    )]);
    let out = eval_program(&p, &database).unwrap();
    assert!(bag_equal(
        &out,
        &rel(
            &["a", "b", "c", "d"],
            int_rows(&[&[1, 10, 0, 21], &[2, 3, 0, 0]]),
        ),
        false
    ));
}

#[test]
fn unknown_merge_how_is_rejected() {
    let src = r#"
@pytond()
def q(df1, df2):
    m = df1.merge(df2, how='sideways', on='a')
    return m
"#;
    let f = discover_one(src);
    let err = compile_function(&f, &tpch_mini_catalog(), None).unwrap_err();
    assert!(err.to_string().contains("cross, inner, left, right, outer"), "{err}");
}

#[test]
fn to_numpy_types_tensor_with_value_columns() {
    let src = r#"
@pytond()
def q(df1):
    t = df1.to_numpy()
    return t
"#;
    let f = discover_one(src);
    let env = infer_types(&normalize_source(&f), &tpch_mini_catalog()).unwrap();
    match env.get("t") {
        Some(VarType::Tensor { order: 2, cols: 3, .. }) => {}
        other => panic!("unexpected type {other:?}"),
    }
}

#[test]
fn sort_then_head_fuse_through_coalescing() {
    let src = r#"
@pytond()
def q(df1):
    s = df1.sort_values(by='b', ascending=False)
    t = s.head(2)
    return t
"#;
    let f = discover_one(src);
    let p = compile_function(&f, &tpch_mini_catalog(), None).unwrap();
    let merged = pytond::sql::coalesce_sort_limit(&p).unwrap();
    let fused = merged
        .rules
        .iter()
        .find(|r| r.head.sort.is_some() && r.head.limit.is_some())
        .expect("fused sort+limit head");
    assert_eq!(fused.head.limit, Some(2));
    let database = db(vec![(
        "df1",
        rel(
            &["a", "b", "c"],
            int_rows(&[&[1, 10, 0], &[2, 40, 0], &[3, 20, 0], &[4, 30, 0]]),
        ),
    )]);
    let out = eval_program(&merged, &database).unwrap();
    assert_eq!(
        out.rows,
        int_rows(&[&[2, 40, 0], &[4, 30, 0]])
    );
}
