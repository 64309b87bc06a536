use super::*;
use crate::frontend::parse_source;
use crate::ownership::check_program;
use crate::types::{resolve_types, FuncSig, OwnershipMode, Type, TypedProgram};

macro_rules! corpus {
    ($name:literal) => {
        include_str!(concat!("../../../../corpus/paper/", $name))
    };
}

fn accepted(src: &str) -> TypedProgram {
    let p = parse_source("t.qimp", src).expect("parses");
    let t = resolve_types(&p).unwrap_or_else(|e| panic!("type errors: {e:?}"));
    assert_eq!(check_program(&t), vec![], "checker rejected:\n{src}");
    t
}

fn lowered(src: &str) -> IrModule {
    let m = lower_program(&accepted(src)).expect("lowers");
    let v = verify_module(&m);
    assert!(v.is_empty(), "{}\n{}", v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n"), emit_ir_text(&m));
    m
}

fn ops(r: &Region) -> Vec<String> {
    r.nodes.iter().map(|n| n.op.name()).collect()
}

#[test]
fn signatures() {
    use OwnershipMode::*;
    let foo = FuncSig::new(vec![("q", Type::Qubit, Borrowed)], vec![]);
    assert_eq!(lower_signature(&foo).to_string(), "(qubit) -> (qubit)");
    let bar = FuncSig::new(vec![("q", Type::Qubit, Owned)], vec![Type::Bool]);
    assert_eq!(lower_signature(&bar).to_string(), "(qubit) -> (bool)");
    let f = FuncSig::new(
        vec![("a", Type::Qubit, Borrowed), ("b", Type::Qubit, Owned), ("x", Type::Int, Borrowed)],
        vec![Type::Bool],
    );
    assert_eq!(lower_signature(&f).to_string(), "(qubit, qubit, int) -> (bool, qubit)");
}

#[test]
fn hand_built_signature_cross_check() {
    // f borrows a, consumes b: the lowered body must hand `a` back after the bool.
    let m = lowered("def f(a: qubit, b: qubit @owned, x: int) -> bool:\n   cx(a, b)\n   return measure(b)\n");
    assert_eq!(m.functions[0].signature.to_string(), "(qubit, qubit, int) -> (bool, qubit)");
}

#[test]
fn foo_lowers_to_a_straight_line() {
    let m = lowered(corpus!("foo_imperative.qimp"));
    let f = &m.functions[0];
    assert_eq!(f.signature.to_string(), "(qubit) -> (qubit)");
    assert_eq!(ops(&f.body), ["input", "h", "z", "output"]);
    assert_eq!(function_text(f).lines().count(), 5);
}

#[test]
fn foo_golden() {
    let m = lowered(corpus!("foo_imperative.qimp"));
    assert_eq!(emit_ir_text(&m), include_str!("../../../../corpus/golden/foo_imperative.ir"));
}

#[test]
fn bell_structure() {
    let m = lowered(corpus!("bell.qimp"));
    let f = &m.functions[0];
    assert_eq!(f.signature.to_string(), "() -> (qubit, qubit)");
    assert_eq!(ops(&f.body), ["input", "alloc", "alloc", "h", "cx", "output"]);
    let text = emit_ir_text(&m);
    assert_eq!(text.matches("alloc").count(), 2);
    assert_eq!(text.matches(" h(").count(), 1);
    assert_eq!(text.matches(" cx(").count(), 1);
}

#[test]
fn empty_function() {
    let m = lowered("def f():\n   x = 1\n");
    let f = &m.functions[0];
    assert_eq!(f.signature.to_string(), "() -> ()");
    assert_eq!(ops(&f.body), ["input", "const", "output"]);
    let m = lowered(corpus!("empty.qimp"));
    assert!(m.functions.is_empty());
}

#[test]
fn conditional_threads_borrowed_qubit() {
    let m = lowered("def f(b: bool, q: qubit):\n   if b:\n      x(q)\n");
    let f = &m.functions[0];
    assert_eq!(ops(&f.body), ["input", "conditional", "output"]);
    let cond = &f.body.nodes[1];
    assert_eq!(cond.regions.len(), 2);
    assert!(cond.outputs.contains(&Type::Qubit));
    assert_eq!(ops(&cond.regions[0]), ["input", "x", "output"]);
    assert_eq!(ops(&cond.regions[1]), ["input", "output"], "else branch is the identity");
}

#[test]
fn loops_and_structs_verify() {
    for src in [
        corpus!("bell_main.qimp"),
        corpus!("bar_main.qimp"),
        corpus!("struct_example.qimp"),
        corpus!("struct_example_small.qimp"),
        corpus!("foo_harness.qimp"),
        "def f(n: int) -> int:\n   i = 0\n   t = 0\n   while i < n:\n      q = qubit()\n      h(q)\n      if measure(q):\n         t += 1\n      i += 1\n   return t\n",
        "def f() -> int:\n   xs = array(1, 2, 3)\n   t = 0\n   for v in xs:\n      t = t + v\n      xs[0] = 7\n   return t + xs[0]\n",
        "def f(qs: array[qubit, 3]):\n   h(qs[1])\n   ks = array(1, 2)\n   for q in qs:\n      for k in ks:\n         x(q)\n",
    ] {
        lowered(src);
    }
}

#[test]
fn struct_arguments_are_packed_at_calls() {
    let m = lowered(corpus!("struct_example_small.qimp"));
    let main = m.function("main").unwrap();
    let names = ops(&main.body);
    let call = names.iter().position(|n| n == "call").unwrap();
    assert_eq!(names[call - 1], "pack");
    assert_eq!(names[call + 1], "unpack");
    let example = m.function("example").unwrap();
    assert!(ops(&example.body).contains(&"loop".to_string()));
}

#[test]
fn lowering_is_deterministic() {
    let t = accepted(corpus!("struct_example.qimp"));
    let a = emit_ir_text(&lower_program(&t).unwrap());
    let b = emit_ir_text(&lower_program(&t).unwrap());
    assert_eq!(a, b);
    let j1 = module_json(&lower_program(&t).unwrap()).to_string();
    let j2 = module_json(&lower_program(&t).unwrap()).to_string();
    assert_eq!(j1, j2);
}

#[test]
fn signature_soundness() {
    let t = accepted(corpus!("struct_example.qimp"));
    for f in &t.functions {
        let sig = lower_signature(&f.sig);
        let quantum_out = sig.outputs.iter().filter(|t| t.is_quantum()).count();
        let declared = f.sig.returns.iter().filter(|t| t.is_quantum()).count();
        let borrowed = f.sig.params.iter().filter(|p| p.ty.is_quantum() && p.mode == OwnershipMode::Borrowed).count();
        assert_eq!(quantum_out, declared + borrowed);
    }
}

fn qubit_fn(nodes: Vec<(Op, Vec<Type>, Vec<Type>)>, wires: Vec<((usize, usize), (usize, usize))>) -> IrFunction {
    let body = Region {
        nodes: nodes
            .into_iter()
            .enumerate()
            .map(|(id, (op, inputs, outputs))| Node { id, op, inputs, outputs, regions: vec![] })
            .collect(),
        wires: wires
            .into_iter()
            .map(|((a, p), (b, q))| Wire { from: PortRef::new(a, p), to: PortRef::new(b, q), ty: Type::Qubit })
            .collect(),
    };
    IrFunction {
        name: "g".into(),
        signature: LoweredSig { inputs: body.input_types().to_vec(), outputs: body.output_types().to_vec() },
        body,
    }
}

#[test]
fn verifier_catches_fan_out() {
    let q = || vec![Type::Qubit];
    let f = qubit_fn(
        vec![
            (Op::Input, vec![], q()),
            (Op::Gate(crate::types::Builtin::H), q(), q()),
            (Op::Gate(crate::types::Builtin::X), q(), q()),
            (Op::Output, vec![Type::Qubit, Type::Qubit], vec![]),
        ],
        vec![((0, 0), (1, 0)), ((0, 0), (2, 0)), ((1, 0), (3, 0)), ((2, 0), (3, 1))],
    );
    let v = verify_ir(&f);
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0].kind, ViolationKind::Linearity);
    assert!(v[0].to_string().starts_with("[Linearity] g/n0.out0"));
}

#[test]
fn verifier_catches_dangling_output() {
    let f = qubit_fn(
        vec![(Op::Input, vec![], vec![]), (Op::Alloc, vec![], vec![Type::Qubit]), (Op::Output, vec![], vec![])],
        vec![],
    );
    let v = verify_ir(&f);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Linearity);
    assert!(v[0].detail.starts_with("unconsumed"));
}

#[test]
fn verifier_catches_cycles_and_type_errors() {
    let q = || vec![Type::Qubit];
    let mut f = qubit_fn(
        vec![
            (Op::Input, vec![], q()),
            (Op::Gate(crate::types::Builtin::H), q(), q()),
            (Op::Gate(crate::types::Builtin::X), q(), q()),
            (Op::Output, q(), vec![]),
        ],
        vec![((0, 0), (3, 0)), ((1, 0), (2, 0)), ((2, 0), (1, 0))],
    );
    assert!(verify_ir(&f).iter().any(|v| v.kind == ViolationKind::Cycle));
    f.body.wires[0].ty = Type::Bool;
    assert!(verify_ir(&f).iter().any(|v| v.kind == ViolationKind::TypeMismatch));
}

#[test]
fn verifier_checks_region_signatures() {
    let mut m = lowered("def f(b: bool, q: qubit):\n   if b:\n      x(q)\n");
    m.functions[0].body.nodes[1].regions[1].nodes[0].outputs.pop();
    let v = verify_module(&m);
    assert!(v.iter().any(|v| v.kind == ViolationKind::RegionSignature), "{v:?}");
}

#[test]
fn json_shape() {
    let m = lowered(corpus!("bell.qimp"));
    let j = module_json(&m);
    let f = &j["functions"][0];
    assert_eq!(f["name"], "bell");
    assert_eq!(f["outputs"], serde_json::json!(["qubit", "qubit"]));
    assert_eq!(f["nodes"][1]["op"], "alloc");
    assert_eq!(f["wires"][0]["type"], "qubit");
    assert!(f["wires"][0]["from"].is_array());
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(128))]
    #[test]
    fn generated_programs_lower_totally(seed in proptest::prelude::any::<u64>()) {
        let g = crate::testgen::accepted_program(seed);
        let m = lowered(&g.source);
        let t = accepted(&g.source);
        proptest::prop_assert_eq!(emit_ir_text(&m), emit_ir_text(&lower_program(&t).unwrap()));
        for (f, lf) in t.functions.iter().zip(&m.functions) {
            let quantum_out = lf.signature.outputs.iter().filter(|t| t.is_quantum()).count();
            let declared = f.sig.returns.iter().filter(|t| t.is_quantum()).count();
            let borrowed = f.sig.params.iter().filter(|p| p.ty.is_quantum() && p.mode == OwnershipMode::Borrowed).count();
            proptest::prop_assert_eq!(quantum_out, declared + borrowed);
            proptest::prop_assert_eq!(lf.body.output_types(), &lf.signature.outputs[..]);
        }
    }
}
