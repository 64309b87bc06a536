use proptest::prelude::*;

use super::ast::{ExprKind, FuncDecl, StmtKind, TypeExprKind};
use super::*;
use crate::testgen;

const CORPUS: &[(&str, &str)] = &[
    ("bar.qimp", include_str!("../../../../corpus/paper/bar.qimp")),
    ("bar_main.qimp", include_str!("../../../../corpus/paper/bar_main.qimp")),
    ("baz.qimp", include_str!("../../../../corpus/paper/baz.qimp")),
    ("baz_main.qimp", include_str!("../../../../corpus/paper/baz_main.qimp")),
    ("bell.qimp", include_str!("../../../../corpus/paper/bell.qimp")),
    ("bell_already_borrowed.qimp", include_str!("../../../../corpus/paper/bell_already_borrowed.qimp")),
    ("bell_main.qimp", include_str!("../../../../corpus/paper/bell_main.qimp")),
    ("empty.qimp", include_str!("../../../../corpus/paper/empty.qimp")),
    ("foo.qimp", include_str!("../../../../corpus/paper/foo.qimp")),
    ("foo_harness.qimp", include_str!("../../../../corpus/paper/foo_harness.qimp")),
    ("foo_imperative.qimp", include_str!("../../../../corpus/paper/foo_imperative.qimp")),
    ("foo_not_owned.qimp", include_str!("../../../../corpus/paper/foo_not_owned.qimp")),
    ("main_already_consumed.qimp", include_str!("../../../../corpus/paper/main_already_consumed.qimp")),
    ("struct_example.qimp", include_str!("../../../../corpus/paper/struct_example.qimp")),
    ("struct_example_small.qimp", include_str!("../../../../corpus/paper/struct_example_small.qimp")),
];

fn parse_ok(src: &str) -> Program {
    parse_source("t.qimp", src).unwrap_or_else(|d| panic!("{d:?}\n{src}"))
}

fn func<'a>(p: &'a Program, name: &str) -> &'a FuncDecl {
    p.functions().find(|f| f.name.name == name).expect("function")
}

fn assert_round_trip(src: &str) {
    let p = parse_ok(src);
    let printed = print_program(&p);
    let again = parse_source("t.qimp", &printed).unwrap_or_else(|d| panic!("reparse: {d:?}\n{printed}"));
    assert_eq!(p.without_spans(), again.without_spans(), "{printed}");
}

fn assert_spans_nested(p: &Program) {
    for (parent, child) in p.span_pairs() {
        assert!(parent.contains(child), "{parent} does not contain {child}");
    }
}

#[test]
fn corpus_parses() {
    for (name, src) in CORPUS {
        let p = parse_source(name, src).unwrap_or_else(|d| panic!("{name}: {d:?}"));
        assert_spans_nested(&p);
    }
}

#[test]
fn bell_listing_shape() {
    let p = parse_ok(CORPUS[4].1);
    let f = func(&p, "bell");
    assert!(f.params.is_empty());
    let rets: Vec<_> = f.returns.iter().map(|t| t.kind.clone()).collect();
    let qubit = TypeExprKind::Named { name: "qubit".into() };
    assert_eq!(rets, vec![qubit.clone(), qubit]);
    assert_eq!(f.body.stmts.len(), 4);
    let StmtKind::Assign { targets, value } = &f.body.stmts[0].kind else { panic!("assignment first") };
    assert_eq!(targets.len(), 2);
    assert!(matches!(&value.kind, ExprKind::Tuple { elems } if elems.len() == 2));
    assert!(matches!(&f.body.stmts[3].kind, StmtKind::Return { values } if values.len() == 2));
}

#[test]
fn empty_body_is_rejected() {
    for src in ["def f():\n", "def f():\n\n# nothing\n", "def f():\ndef g():\n   h(q)\n"] {
        let d = parse_source("t.qimp", src).expect_err(src);
        assert_eq!(d.code, crate::diagnostics::codes::PARSE, "{src}");
    }
    let d = parse_source("t.qimp", "def f():\n").unwrap_err();
    assert_eq!((d.span.start_line, d.span.start_col), (1, 10));
    assert!(d.message.contains("indented block"), "{}", d.message);
}

#[test]
fn struct_listing_shape() {
    let p = parse_ok(CORPUS[13].1);
    let s = p.structs().next().expect("struct");
    assert_eq!(s.name.name, "MyStruct");
    let fields: Vec<_> = s.fields.iter().map(|f| (f.name.name.as_str(), printer::type_expr(&f.ty))).collect();
    assert_eq!(fields, vec![("q", "qubit".into()), ("qs", "array[qubit, 42]".into()), ("x", "int".into())]);
    let f = func(&p, "example");
    assert!(matches!(&f.body.stmts[0].kind, StmtKind::For { var, .. } if var.name == "other"));
    assert!(matches!(&f.body.stmts[1].kind, StmtKind::AugAssign { op: ast::BinOp::Add, .. }));
}

#[test]
fn owned_marker_sets_mode() {
    let p = parse_ok(CORPUS[0].1);
    assert_eq!(func(&p, "bar").params[0].mode, OwnershipMode::Owned);
    let p = parse_ok(CORPUS[8].1);
    assert_eq!(func(&p, "foo").params[0].mode, OwnershipMode::Borrowed);
}

#[test]
fn control_flow_forms() {
    let src = "def f(c: bool, k: int) -> int:\n   if c:\n      k = 1\n   elif k > 2:\n      k = 2\n   else:\n      k *= 3\n   while k < 10:\n      k += 1\n   return k\n";
    let p = parse_ok(src);
    let f = func(&p, "f");
    let StmtKind::If { elifs, else_block, .. } = &f.body.stmts[0].kind else { panic!() };
    assert_eq!(elifs.len(), 1);
    assert!(else_block.is_some());
    assert!(matches!(f.body.stmts[1].kind, StmtKind::While { .. }));
    assert_round_trip(src);
}

#[test]
fn precedence() {
    let p = parse_ok("def f() -> bool:\n   return not 1 + 2 * 3 == 7 and True or False\n");
    let StmtKind::Return { values } = &func(&p, "f").body.stmts[0].kind else { panic!() };
    let ExprKind::Binary { op: ast::BinOp::Or, lhs, .. } = &values[0].kind else { panic!("or at top") };
    let ExprKind::Binary { op: ast::BinOp::And, lhs, .. } = &lhs.kind else { panic!("and below or") };
    assert!(matches!(&lhs.kind, ExprKind::Unary { op: ast::UnOp::Not, .. }));
}

#[test]
fn corpus_round_trips() {
    for (_, src) in CORPUS {
        assert_round_trip(src);
    }
}

#[test]
fn parse_errors_list_expectations() {
    let tokens = tokenize_file("t.qimp", "def f() -> :\n   h(q)\n").unwrap();
    let e = parse(&tokens).unwrap_err();
    assert!(!e.expected.is_empty());
    assert_eq!(e.span.start_line, 1);
}

#[test]
fn ast_json_is_tagged() {
    let v = ast_json(&parse_ok(CORPUS[4].1));
    assert_eq!(v["items"][0]["kind"], "Func");
    assert_eq!(v["items"][0]["name"]["name"], "bell");
    assert_eq!(v["items"][0]["body"]["stmts"][0]["kind"], "Assign");
    assert_eq!(ast_json(&parse_ok(CORPUS[4].1)), v);
}

fn expr_src() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..1000).prop_map(|i| i.to_string()),
        prop_oneof![Just("True"), Just("False")].prop_map(String::from),
        prop_oneof![Just("a"), Just("b"), Just("s.n"), Just("xs[1]")].prop_map(String::from),
        (0.0f64..100.0).prop_map(|f| format!("{f:?}")),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let ops = ["+", "-", "*", "==", "!=", "<", "<=", ">", ">=", "and", "or"];
        prop_oneof![
            (inner.clone(), 0..ops.len(), inner.clone()).prop_map(move |(a, o, b)| format!("({a} {} {b})", ops[o])),
            inner.clone().prop_map(|a| format!("(not {a})")),
            inner.clone().prop_map(|a| format!("(-{a})")),
            prop::collection::vec(inner, 0..3).prop_map(|args| format!("g({})", args.join(", "))),
        ]
    })
}

proptest! {
    #[test]
    fn expressions_round_trip(e in expr_src()) {
        assert_round_trip(&format!("def f():\n   r = {e}\n"));
    }

    #[test]
    fn generated_programs_round_trip(seed in any::<u64>()) {
        for g in [testgen::accepted_program(seed), testgen::rejected_program(seed)] {
            assert_round_trip(&g.source);
            assert_spans_nested(&parse_ok(&g.source));
        }
    }
}
