use super::*;
use crate::diagnostics::codes;
use crate::frontend::parse_source;
use crate::types::resolve_types;

macro_rules! corpus {
    ($name:literal) => {
        include_str!(concat!("../../../../corpus/paper/", $name))
    };
}

fn typed(src: &str) -> TypedProgram {
    let p = parse_source("t.qimp", src).expect("parses");
    resolve_types(&p).unwrap_or_else(|e| panic!("type errors: {e:?}"))
}

fn diags(src: &str) -> Vec<(&'static str, String, u32)> {
    check_program(&typed(src))
        .into_iter()
        .map(|d| (d.code, d.message, d.span.start_line))
        .collect()
}

#[test]
fn cfg_shapes() {
    let p = typed(corpus!("bell.qimp"));
    let cfg = build_cfg(&p.functions[0]);
    assert_eq!((cfg.blocks.len(), cfg.back_edges()), (1, 0));

    let p = typed(corpus!("struct_example.qimp"));
    let cfg = build_cfg(p.function("example").unwrap());
    assert_eq!(cfg.blocks.len(), 4);
    assert_eq!(cfg.back_edges(), 1);
    assert!(matches!(cfg.blocks[2].instrs[0], Instr::EnterLoop { var: "other", .. }));
    assert!(matches!(cfg.blocks[1].term, Terminator::Branch { then: 2, otherwise: 3 }));

    let p = typed("def f(c: bool, q: qubit):\n   if c:\n      h(q)\n   else:\n      x(q)\n");
    let cfg = build_cfg(&p.functions[0]);
    assert_eq!(cfg.blocks.len(), 4);
    assert_eq!(cfg.predecessors()[3], vec![1, 2]);
}

#[test]
fn accepted_listings() {
    for src in [
        corpus!("bell.qimp"),
        corpus!("bell_main.qimp"),
        corpus!("foo.qimp"),
        corpus!("bar.qimp"),
        corpus!("struct_example.qimp"),
        corpus!("struct_example_small.qimp"),
        corpus!("foo_imperative.qimp"),
        corpus!("foo_harness.qimp"),
        corpus!("bar_main.qimp"),
        corpus!("empty.qimp"),
    ] {
        assert_eq!(diags(src), vec![], "{src}");
    }
}

#[test]
fn already_borrowed() {
    assert_eq!(
        diags(corpus!("bell_already_borrowed.qimp")),
        vec![(codes::ALREADY_BORROWED, "q1 already borrowed".to_string(), 4)]
    );
    let d = &check_program(&typed(corpus!("bell_already_borrowed.qimp")))[0];
    assert_eq!((d.span.start_col, d.span.end_col), (11, 13), "second argument is blamed");
}

#[test]
fn already_consumed() {
    let ds = check_program(&typed(corpus!("main_already_consumed.qimp")));
    assert_eq!(ds.len(), 1);
    assert_eq!((ds[0].code, ds[0].message.as_str(), ds[0].span.start_line), (codes::ALREADY_CONSUMED, "q1 already consumed", 11));
    assert_eq!(ds[0].notes[0].span.as_ref().unwrap().start_line, 10);
}

#[test]
fn not_owned() {
    assert_eq!(
        diags(corpus!("foo_not_owned.qimp")),
        vec![(codes::NOT_OWNED, "Cannot measure qubit since it is not owned".to_string(), 5)]
    );
    assert_eq!(
        diags("def f(q: qubit):\n   discard(q)\n"),
        vec![(codes::NOT_OWNED, "Cannot consume qubit since it is not owned".to_string(), 2)]
    );
}

#[test]
fn leak_points_at_allocation() {
    let ds = check_program(&typed(corpus!("baz.qimp")));
    assert_eq!(ds.len(), 1);
    assert_eq!(ds[0].code, codes::NOT_CONSUMED);
    assert_eq!(ds[0].message, "Allocated qubit is not consumed");
    assert_eq!((ds[0].span.start_line, ds[0].span.start_col, ds[0].span.end_col), (2, 10, 17));
}

#[test]
fn conditional_consumption() {
    let src = "def f(c: bool):\n   q = qubit()\n   if c:\n      measure(q)\n";
    let ds = diags(src);
    assert_eq!(ds, vec![(codes::CONDITIONAL_CONSUME, "Qubit is conditionally consumed".to_string(), 3)]);
    // Consuming on both paths is fine.
    let ok = "def f(c: bool):\n   q = qubit()\n   if c:\n      measure(q)\n   else:\n      discard(q)\n";
    assert_eq!(diags(ok), vec![]);
}

#[test]
fn loop_back_edges_must_agree() {
    let consume_in_loop = "def f(n: int):\n   q = qubit()\n   i = 0\n   while i < n:\n      measure(q)\n      i += 1\n";
    assert_eq!(diags(consume_in_loop)[0].0, codes::CONDITIONAL_CONSUME);
    let fresh_each_time = "def f(n: int):\n   i = 0\n   while i < n:\n      q = qubit()\n      measure(q)\n      i += 1\n";
    assert_eq!(diags(fresh_each_time), vec![]);
    let leak_per_iteration = "def f(n: int):\n   i = 0\n   while i < n:\n      q = qubit()\n      i += 1\n";
    assert!(diags(leak_per_iteration).iter().any(|d| d.0 == codes::CONDITIONAL_CONSUME));
}

#[test]
fn for_loop_reborrow_region() {
    let src = "class S:\n   q: qubit\n   qs: array[qubit, 3]\n\n";
    let ok = format!("{src}def f(s: S):\n   for o in s.qs:\n      cx(s.q, o)\n      h(o)\n");
    assert_eq!(diags(&ok), vec![]);
    let whole = format!("{src}def f(s: S):\n   for o in s.qs:\n      cx(s.qs[0], o)\n");
    assert_eq!(diags(&whole), vec![(codes::ALREADY_BORROWED, "s.qs[0] already borrowed".into(), 7)]);
    let consume_var = format!("{src}def f(s: S):\n   for o in s.qs:\n      measure(o)\n");
    assert_eq!(diags(&consume_var)[0].0, codes::NOT_OWNED);
    let nested = format!("{src}def f(s: S):\n   for o in s.qs:\n      for p in s.qs:\n         cx(o, p)\n");
    assert_eq!(diags(&nested)[0].0, codes::ALREADY_BORROWED);
}

#[test]
fn partial_moves() {
    let decl = "class S:\n   a: qubit\n   b: qubit\n\n";
    let ok = format!("{decl}def f(s: S @owned) -> bool:\n   x = measure(s.a)\n   h(s.b)\n   return measure(s.b)\n");
    assert_eq!(diags(&ok), vec![]);
    let whole = format!("{decl}def g(s: S):\n   h(s.a)\n\ndef f(s: S @owned):\n   discard(s.a)\n   g(s)\n   discard(s.b)\n");
    assert_eq!(diags(&whole), vec![(codes::ALREADY_CONSUMED, "s already consumed".into(), 10)]);
    let refill = format!("{decl}def f(s: S @owned) -> S:\n   discard(s.a)\n   s.a = qubit()\n   return s\n");
    assert_eq!(diags(&refill), vec![]);
    let p = typed(&format!("{decl}def f(s: S @owned) -> bool:\n   return measure(s.a)\n"));
    let a = analyze(&p.functions[0]);
    assert!(matches!(a.state_at_exit(&Place::var("s")), Some(PlaceState::PartiallyMoved(v)) if v == vec![Place::var("s").field("a")]));
    assert_eq!(a.diagnostics[0].code, codes::NOT_CONSUMED);
}

#[test]
fn borrowed_struct_fields_cannot_be_consumed() {
    let src = "class S:\n   a: qubit\n\ndef f(s: S):\n   measure(s.a)\n";
    assert_eq!(diags(src)[0].0, codes::NOT_OWNED);
}

#[test]
fn reassignment_of_live_qubit_leaks() {
    let ds = check_program(&typed("def f():\n   q = qubit()\n   q = qubit()\n   discard(q)\n"));
    assert_eq!(ds.len(), 1);
    assert_eq!((ds[0].code, ds[0].span.start_line), (codes::NOT_CONSUMED, 3));
    assert_eq!(ds[0].notes[0].span.as_ref().unwrap().start_line, 2);
}

#[test]
fn temporaries() {
    assert_eq!(diags("def f():\n   h(qubit())\n")[0].0, codes::NOT_CONSUMED);
    assert_eq!(diags("def f() -> bool:\n   return measure(qubit())\n"), vec![]);
    let dropped = format!("{}\ndef main():\n   bell()\n", corpus!("bell.qimp"));
    assert_eq!(diags(&dropped), vec![(codes::NOT_CONSUMED, "Allocated qubit is not consumed".into(), 8)]);
}

#[test]
fn nested_calls_see_enclosing_borrows() {
    let src = "def g(a: qubit, b: bool):\n   h(a)\n\ndef f(q: qubit @owned):\n   g(q, measure(q))\n";
    assert_eq!(diags(src)[0], (codes::ALREADY_BORROWED, "q already borrowed".into(), 5));
}

#[test]
fn errors_do_not_cascade() {
    let src = "def main():\n   q = qubit()\n   discard(q)\n   h(q)\n   x(q)\n   discard(q)\n";
    assert_eq!(diags(src).len(), 1);
}

#[test]
fn program_diagnostics_are_position_ordered() {
    let src = format!("{}\n{}", corpus!("baz.qimp"), corpus!("foo_not_owned.qimp"));
    let ds = diags(&src);
    assert_eq!(ds.iter().map(|d| d.2).collect::<Vec<_>>(), vec![2, 9]);
    assert_eq!(check_program(&typed("")), vec![]);
}

#[test]
fn owned_parameters_must_be_consumed() {
    assert_eq!(diags("def f(q: qubit @owned):\n   h(q)\n")[0].0, codes::NOT_CONSUMED);
    assert_eq!(diags("def f(q: qubit):\n   h(q)\n"), vec![]);
}

#[test]
fn errors_inside_loops_are_reported() {
    let consumed = "def main():\n   q = qubit()\n   b = measure(q)\n   i = 0\n   while i < 3:\n      x(q)\n      y(q)\n      i += 1\n";
    assert_eq!(diags(consumed), vec![(codes::ALREADY_CONSUMED, "q already consumed".into(), 6)]);
    let not_owned = "def f(q: qubit, k: int):\n   while k > 0:\n      discard(q)\n      k += -1\n";
    assert_eq!(diags(not_owned).iter().map(|d| d.0).collect::<Vec<_>>(), vec![codes::NOT_OWNED]);
    let each_time = "def f(qs: array[qubit, 2]):\n   for e in qs:\n      for g in qs:\n         x(e)\n";
    assert_eq!(diags(each_time)[0].0, codes::ALREADY_BORROWED);
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(128))]
    #[test]
    fn generated_programs_are_classified(seed in proptest::prelude::any::<u64>()) {
        let ok = crate::testgen::accepted_program(seed);
        let t = typed(&ok.source);
        proptest::prop_assert_eq!(check_program(&t), vec![]);
        let bad = crate::testgen::rejected_program(seed);
        let t = typed(&bad.source);
        let first = check_program(&t);
        proptest::prop_assert!(first.iter().any(|d| d.code == bad.fault.unwrap().code()));
        proptest::prop_assert_eq!(first, check_program(&t));
    }

    /// Borrowed parameters may be left alone; owned ones must be used up.
    #[test]
    fn affine_borrowed_linear_owned(n in 1usize..4, owned in proptest::prelude::any::<bool>()) {
        let params: Vec<String> = (0..n).map(|i| format!("q{i}: qubit{}", if owned { " @owned" } else { "" })).collect();
        let src = format!("def f({}):\n   k = 0\n", params.join(", "));
        let codes: Vec<_> = diags(&src).into_iter().map(|d| d.0).collect();
        if owned {
            proptest::prop_assert_eq!(codes, vec![codes::NOT_CONSUMED; n]);
        } else {
            proptest::prop_assert!(codes.is_empty());
        }
    }
}
