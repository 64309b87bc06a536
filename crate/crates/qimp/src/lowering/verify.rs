//! Structural checks on dataflow graphs: linear qubit wires, port types, region
//! boundaries and acyclicity.

use std::collections::BTreeMap;
use std::fmt;

use super::ir::*;
use crate::frontend::ast::{BinOp, UnOp};
use crate::types::{Builtin, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    /// A qubit port without exactly one wire.
    Linearity,
    TypeMismatch,
    RegionSignature,
    Cycle,
    /// A wire endpoint that does not exist, or an input port fed more than once.
    BadPort,
    /// Port types that do not fit the operation.
    OpSignature,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrViolation {
    pub kind: ViolationKind,
    /// `function/region path/node.port`, e.g. `main/n4.r0/n2.out0`.
    pub location: String,
    pub detail: String,
}

impl fmt::Display for IrViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}: {}", self.kind, self.location, self.detail)
    }
}

pub fn verify_module(m: &IrModule) -> Vec<IrViolation> {
    let sigs: BTreeMap<&str, &LoweredSig> = m.functions.iter().map(|f| (f.name.as_str(), &f.signature)).collect();
    m.functions.iter().flat_map(|f| verify_with(f, &sigs)).collect()
}

/// Verify a single function; calls are checked only for port linearity and types.
pub fn verify_ir(f: &IrFunction) -> Vec<IrViolation> {
    verify_with(f, &BTreeMap::new())
}

fn verify_with(f: &IrFunction, sigs: &BTreeMap<&str, &LoweredSig>) -> Vec<IrViolation> {
    let mut v = Verifier { sigs, out: Vec::new() };
    let loc = f.name.clone();
    if f.body.input_types() != f.signature.inputs.as_slice() || f.body.output_types() != f.signature.outputs.as_slice() {
        v.push(ViolationKind::RegionSignature, &loc, format!("body does not match signature {}", f.signature));
    }
    v.region(&f.body, &loc);
    v.out
}

struct Verifier<'s> {
    sigs: &'s BTreeMap<&'s str, &'s LoweredSig>,
    out: Vec<IrViolation>,
}

impl Verifier<'_> {
    fn push(&mut self, kind: ViolationKind, location: &str, detail: impl Into<String>) {
        self.out.push(IrViolation { kind, location: location.to_string(), detail: detail.into() });
    }

    fn region(&mut self, r: &Region, loc: &str) {
        use ViolationKind::*;
        let n = r.nodes.len();
        if n < 2 || r.nodes[0].op != Op::Input || r.nodes[n - 1].op != Op::Output {
            self.push(RegionSignature, loc, "region must start with input and end with output");
        }
        for (i, node) in r.nodes.iter().enumerate() {
            if node.id != i {
                self.push(BadPort, loc, format!("node at index {i} has id {}", node.id));
            }
            if (node.op == Op::Input && i != 0) || (node.op == Op::Output && i + 1 != n) {
                self.push(RegionSignature, loc, format!("misplaced {} node n{i}", node.op.name()));
            }
        }

        let mut fed: Vec<Vec<usize>> = r.nodes.iter().map(|n| vec![0; n.inputs.len()]).collect();
        let mut used: Vec<Vec<usize>> = r.nodes.iter().map(|n| vec![0; n.outputs.len()]).collect();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for w in &r.wires {
            let src = r.nodes.get(w.from.node).and_then(|n| n.outputs.get(w.from.port));
            let dst = r.nodes.get(w.to.node).and_then(|n| n.inputs.get(w.to.port));
            let (Some(src), Some(dst)) = (src, dst) else {
                self.push(BadPort, loc, format!("wire {} -> {} has a missing endpoint", w.from, w.to));
                continue;
            };
            used[w.from.node][w.from.port] += 1;
            fed[w.to.node][w.to.port] += 1;
            edges.push((w.from.node, w.to.node));
            if *src != w.ty || *dst != w.ty {
                self.push(
                    TypeMismatch,
                    loc,
                    format!("wire {} -> {} of type {} joins {src} to {dst}", w.from, w.to, w.ty),
                );
            }
        }
        for (id, node) in r.nodes.iter().enumerate() {
            for (p, ty) in node.inputs.iter().enumerate() {
                let k = fed[id][p];
                let at = format!("{loc}/n{id}.in{p}");
                match (k, ty.is_quantum()) {
                    (1, _) => {}
                    (0, true) => self.push(Linearity, &at, format!("{ty} input is not connected")),
                    (_, true) => self.push(Linearity, &at, format!("{ty} input has {k} wires")),
                    (0, false) => self.push(BadPort, &at, format!("{ty} input is not connected")),
                    (_, false) => self.push(BadPort, &at, format!("{ty} input has {k} wires")),
                }
            }
            for (p, ty) in node.outputs.iter().enumerate() {
                let k = used[id][p];
                if ty.is_quantum() && k != 1 {
                    let at = format!("{loc}/n{id}.out{p}");
                    if k == 0 {
                        self.push(Linearity, &at, format!("unconsumed: {ty} output has no consumer"));
                    } else {
                        self.push(Linearity, &at, format!("fan-out: {ty} output has {k} consumers"));
                    }
                }
            }
            self.node(node, &format!("{loc}/n{id}"));
        }
        if has_cycle(n, &edges) {
            self.push(Cycle, loc, "region graph has a cycle");
        }
    }

    fn node(&mut self, node: &Node, loc: &str) {
        use ViolationKind::*;
        let ins = &node.inputs;
        let outs = &node.outputs;
        let bad = |s: &mut Self, what: &str| {
            s.push(OpSignature, loc, format!("{} {what}: ({}) -> ({})", node.op.name(), list(ins), list(outs)))
        };
        let want_regions = match node.op {
            Op::Conditional => 2,
            Op::Loop => 1,
            _ => 0,
        };
        if node.regions.len() != want_regions {
            self.push(RegionSignature, loc, format!("{} has {} regions", node.op.name(), node.regions.len()));
        }
        match &node.op {
            Op::Input => {
                if !ins.is_empty() {
                    bad(self, "takes no inputs");
                }
            }
            Op::Output => {
                if !outs.is_empty() {
                    bad(self, "has no outputs");
                }
            }
            Op::Alloc => {
                if !ins.is_empty() || outs != &[Type::Qubit] {
                    bad(self, "expects () -> (qubit)");
                }
            }
            Op::Gate(g) => {
                let arity = match g {
                    Builtin::Cx | Builtin::Cz => 2,
                    _ => 1,
                };
                let mut want_in = vec![Type::Qubit; arity];
                if *g == Builtin::Rz {
                    want_in.push(Type::Float);
                }
                if !g.is_gate() || ins != &want_in || outs != &vec![Type::Qubit; arity] {
                    bad(self, "has the wrong arity");
                }
            }
            Op::Measure { .. } => {
                if ins != &[Type::Qubit] || outs != &[Type::Bool] {
                    bad(self, "expects (qubit) -> (bool)");
                }
            }
            Op::Discard => {
                if ins != &[Type::Qubit] || !outs.is_empty() {
                    bad(self, "expects (qubit) -> ()");
                }
            }
            Op::MeasureArray { .. } | Op::DiscardArray => {
                let ok = match (ins.as_slice(), outs.as_slice()) {
                    ([Type::Array(e, n)], [Type::Array(b, m)]) => {
                        matches!(node.op, Op::MeasureArray { .. }) && **e == Type::Qubit && **b == Type::Bool && n == m
                    }
                    ([Type::Array(e, _)], []) => node.op == Op::DiscardArray && **e == Type::Qubit,
                    _ => false,
                };
                if !ok {
                    bad(self, "has the wrong array types");
                }
            }
            Op::Const(c) => {
                if !ins.is_empty() || outs != &[c.ty()] {
                    bad(self, "has the wrong type");
                }
            }
            Op::Binary(op) => {
                let ok = match (ins.as_slice(), outs.as_slice()) {
                    ([a, b], [r]) if a == b => binary_result(*op, a).as_ref() == Some(r),
                    _ => false,
                };
                if !ok {
                    bad(self, "is ill-typed");
                }
            }
            Op::Unary(op) => {
                let ok = match (op, ins.as_slice(), outs.as_slice()) {
                    (UnOp::Neg, [a], [r]) => a == r && matches!(a, Type::Int | Type::Float),
                    (UnOp::Not, [Type::Bool], [Type::Bool]) => true,
                    _ => false,
                };
                if !ok {
                    bad(self, "is ill-typed");
                }
            }
            Op::Call { func } => {
                if let Some(sig) = self.sigs.get(func.as_str()) {
                    if ins != &sig.inputs || outs != &sig.outputs {
                        bad(self, &format!("does not match `{func}`{sig}"));
                    }
                } else if !self.sigs.is_empty() {
                    bad(self, &format!("calls unknown function `{func}`"));
                }
            }
            Op::Pack { name } | Op::Unpack { name } => {
                let (fields, whole) = if matches!(node.op, Op::Pack { .. }) { (ins, outs) } else { (outs, ins) };
                let ok = match whole.as_slice() {
                    [Type::Struct(st)] => {
                        &st.name == name && st.fields.iter().map(|f| &f.1).eq(fields.iter())
                    }
                    _ => false,
                };
                if !ok {
                    bad(self, "does not match the struct layout");
                }
            }
            Op::MakeArray => {
                let ok = match outs.as_slice() {
                    [Type::Array(e, n)] => *n == ins.len() && ins.iter().all(|t| t == &**e),
                    _ => false,
                };
                if !ok {
                    bad(self, "has the wrong element types");
                }
            }
            Op::ArrayGet | Op::ArraySet | Op::ArrayBorrow | Op::ArrayReturn => {
                let ok = match (&node.op, ins.as_slice(), outs.as_slice()) {
                    (Op::ArrayGet, [Type::Array(e, _), Type::Int], [r]) => **e == *r && !r.is_quantum(),
                    (Op::ArraySet, [a @ Type::Array(e, _), Type::Int, v], [r]) => **e == *v && a == r && !v.is_quantum(),
                    (Op::ArrayBorrow, [a @ Type::Array(e, _), Type::Int], [r, v]) => **e == *v && a == r,
                    (Op::ArrayReturn, [a @ Type::Array(e, _), Type::Int, v], [r]) => **e == *v && a == r,
                    _ => false,
                };
                if !ok {
                    bad(self, "has the wrong array types");
                }
            }
            Op::Assert { .. } => {
                if ins != &[Type::Bool] || !outs.is_empty() {
                    bad(self, "expects (bool) -> ()");
                }
            }
            Op::Conditional => {
                if ins.first() != Some(&Type::Bool) {
                    bad(self, "needs a bool predicate");
                }
                let carried = ins.get(1..).unwrap_or(&[]);
                for (i, r) in node.regions.iter().enumerate() {
                    if r.input_types() != carried || r.output_types() != outs.as_slice() {
                        self.push(RegionSignature, loc, format!("region {i} is ({}) -> ({})", list(r.input_types()), list(r.output_types())));
                    }
                }
            }
            Op::Loop => {
                if ins != outs {
                    bad(self, "must carry the same values it returns");
                }
                let mut want_out = vec![Type::Bool];
                want_out.extend(outs.iter().cloned());
                for (i, r) in node.regions.iter().enumerate() {
                    if r.input_types() != ins.as_slice() || r.output_types() != want_out.as_slice() {
                        self.push(RegionSignature, loc, format!("region {i} is ({}) -> ({})", list(r.input_types()), list(r.output_types())));
                    }
                }
            }
        }
        for (i, r) in node.regions.iter().enumerate() {
            self.region(r, &format!("{loc}.r{i}"));
        }
    }
}

fn binary_result(op: BinOp, operand: &Type) -> Option<Type> {
    use BinOp::*;
    match (op, operand) {
        (Add | Sub | Mul, Type::Int | Type::Float) => Some(operand.clone()),
        (Eq | Ne, t) if t.is_scalar() && !t.is_quantum() => Some(Type::Bool),
        (Lt | Le | Gt | Ge, Type::Int | Type::Float) => Some(Type::Bool),
        (And | Or, Type::Bool) => Some(Type::Bool),
        _ => None,
    }
}

fn list(ts: &[Type]) -> String {
    ts.iter().map(Type::to_string).collect::<Vec<_>>().join(", ")
}

fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in edges {
        succ[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &s in &succ[v] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    seen != n
}
