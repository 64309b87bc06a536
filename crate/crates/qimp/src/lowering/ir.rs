//! The dataflow-graph IR: nodes with typed ports, wires, and nested regions.

use std::fmt;

use serde::Serialize;

use crate::frontend::ast::{BinOp, UnOp};
use crate::types::{Builtin, Type};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PortRef {
    pub node: NodeId,
    pub port: usize,
}

impl PortRef {
    pub fn new(node: NodeId, port: usize) -> Self {
        PortRef { node, port }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}.{}", self.node, self.port)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ConstVal {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl ConstVal {
    pub fn ty(self) -> Type {
        match self {
            ConstVal::Int(_) => Type::Int,
            ConstVal::Float(_) => Type::Float,
            ConstVal::Bool(_) => Type::Bool,
        }
    }
}

impl fmt::Display for ConstVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstVal::Int(v) => write!(f, "{v}"),
            ConstVal::Float(v) => write!(f, "{v:?}"),
            ConstVal::Bool(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Input,
    Output,
    Alloc,
    Gate(Builtin),
    Measure { site: String },
    Discard,
    MeasureArray { site: String },
    DiscardArray,
    Const(ConstVal),
    Binary(BinOp),
    Unary(UnOp),
    Call { func: String },
    Pack { name: String },
    Unpack { name: String },
    MakeArray,
    ArrayGet,
    ArraySet,
    /// Lend out one element: `(array, index) -> (array, element)`.
    ArrayBorrow,
    /// Put a lent element back: `(array, index, element) -> array`.
    ArrayReturn,
    Assert { site: String },
    /// Input 0 selects the region: `true` runs region 0, `false` region 1.
    Conditional,
    /// The body maps the carried values to `(continue, carried values)`.
    Loop,
}

impl Op {
    pub fn name(&self) -> String {
        match self {
            Op::Input => "input".into(),
            Op::Output => "output".into(),
            Op::Alloc => "alloc".into(),
            Op::Gate(b) => b.name().into(),
            Op::Measure { .. } => "measure".into(),
            Op::Discard => "discard".into(),
            Op::MeasureArray { .. } => "measure_array".into(),
            Op::DiscardArray => "discard_array".into(),
            Op::Const(_) => "const".into(),
            Op::Binary(op) => binop_name(*op).into(),
            Op::Unary(UnOp::Neg) => "neg".into(),
            Op::Unary(UnOp::Not) => "not".into(),
            Op::Call { .. } => "call".into(),
            Op::Pack { .. } => "pack".into(),
            Op::Unpack { .. } => "unpack".into(),
            Op::MakeArray => "make_array".into(),
            Op::ArrayGet => "array_get".into(),
            Op::ArraySet => "array_set".into(),
            Op::ArrayBorrow => "array_borrow".into(),
            Op::ArrayReturn => "array_return".into(),
            Op::Assert { .. } => "assert".into(),
            Op::Conditional => "conditional".into(),
            Op::Loop => "loop".into(),
        }
    }

    pub fn params(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Op::Measure { site } | Op::MeasureArray { site } | Op::Assert { site } => json!({ "site": site }),
            Op::Const(v) => json!({ "value": v }),
            Op::Call { func } => json!({ "func": func }),
            Op::Pack { name } | Op::Unpack { name } => json!({ "struct": name }),
            _ => json!({}),
        }
    }

    fn text_params(&self) -> Option<String> {
        match self {
            Op::Const(v) => Some(v.to_string()),
            Op::Call { func } => Some(func.clone()),
            Op::Pack { name } | Op::Unpack { name } => Some(name.clone()),
            _ => None,
        }
    }

    fn site(&self) -> Option<&str> {
        match self {
            Op::Measure { site } | Op::MeasureArray { site } | Op::Assert { site } => Some(site),
            _ => None,
        }
    }
}

fn binop_name(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "add",
        BinOp::Sub => "sub",
        BinOp::Mul => "mul",
        BinOp::Eq => "eq",
        BinOp::Ne => "ne",
        BinOp::Lt => "lt",
        BinOp::Le => "le",
        BinOp::Gt => "gt",
        BinOp::Ge => "ge",
        BinOp::And => "and",
        BinOp::Or => "or",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub op: Op,
    pub inputs: Vec<Type>,
    pub outputs: Vec<Type>,
    pub regions: Vec<Region>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wire {
    pub from: PortRef,
    pub to: PortRef,
    pub ty: Type,
}

/// A dataflow graph. The first node is `Input` and the last is `Output`; ids are indices into `nodes`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    pub nodes: Vec<Node>,
    pub wires: Vec<Wire>,
}

impl Region {
    pub fn input_types(&self) -> &[Type] {
        self.nodes.first().map_or(&[], |n| &n.outputs)
    }

    pub fn output_types(&self) -> &[Type] {
        self.nodes.last().map_or(&[], |n| &n.inputs)
    }

    /// The wire feeding each input port, in node order.
    pub fn sources(&self) -> Vec<Vec<Option<PortRef>>> {
        let mut src: Vec<Vec<Option<PortRef>>> = self.nodes.iter().map(|n| vec![None; n.inputs.len()]).collect();
        for w in &self.wires {
            if let Some(slot) = src.get_mut(w.to.node).and_then(|s| s.get_mut(w.to.port)) {
                *slot = Some(w.from);
            }
        }
        src
    }

    /// Total node count, including nested regions.
    pub fn deep_node_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| 1 + n.regions.iter().map(Region::deep_node_count).sum::<usize>())
            .sum()
    }
}

/// Signature after threading borrowed arguments back to the caller.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoweredSig {
    pub inputs: Vec<Type>,
    pub outputs: Vec<Type>,
}

impl fmt::Display for LoweredSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) -> ({})", join_types(&self.inputs), join_types(&self.outputs))
    }
}

fn join_types(ts: &[Type]) -> String {
    ts.iter().map(Type::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrFunction {
    pub name: String,
    pub signature: LoweredSig,
    pub body: Region,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IrModule {
    pub functions: Vec<IrFunction>,
}

impl IrModule {
    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Deterministic text listing: one node per line, in id order, regions indented below their node.
pub fn emit_ir_text(module: &IrModule) -> String {
    let mut out = String::new();
    for (i, f) in module.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&function_text(f));
    }
    out
}

pub fn function_text(f: &IrFunction) -> String {
    let mut out = format!("fn {}{}\n", f.name, f.signature);
    region_text(&f.body, 1, &mut out);
    out
}

fn region_text(r: &Region, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let sources = r.sources();
    for n in &r.nodes {
        let args: Vec<String> = sources[n.id]
            .iter()
            .map(|s| s.map_or_else(|| "?".to_string(), |p| p.to_string()))
            .collect();
        let name = match n.op.text_params() {
            Some(p) => format!("{}[{p}]", n.op.name()),
            None => n.op.name(),
        };
        out.push_str(&format!("{pad}n{} = {name}({})", n.id, args.join(", ")));
        if !n.outputs.is_empty() || n.op == Op::Input {
            out.push_str(&format!(" -> ({})", join_types(&n.outputs)));
        }
        if let Some(site) = n.op.site() {
            out.push_str(&format!(" @ {site}"));
        }
        out.push('\n');
        for (i, sub) in n.regions.iter().enumerate() {
            out.push_str(&format!("{pad}  region {i}:\n"));
            region_text(sub, depth + 2, out);
        }
    }
}

pub fn module_json(module: &IrModule) -> serde_json::Value {
    use serde_json::json;
    json!({
        "functions": module.functions.iter().map(|f| {
            let mut v = region_json(&f.body);
            v["name"] = json!(f.name);
            v["inputs"] = json!(f.signature.inputs);
            v["outputs"] = json!(f.signature.outputs);
            v
        }).collect::<Vec<_>>()
    })
}

fn region_json(r: &Region) -> serde_json::Value {
    use serde_json::json;
    json!({
        "nodes": r.nodes.iter().map(|n| json!({
            "id": n.id,
            "op": n.op.name(),
            "params": n.op.params(),
            "in_ports": n.inputs,
            "out_ports": n.outputs,
            "regions": n.regions.iter().map(region_json).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "wires": r.wires.iter().map(|w| json!({
            "from": [w.from.node, w.from.port],
            "to": [w.to.node, w.to.port],
            "type": w.ty,
        })).collect::<Vec<_>>(),
    })
}
