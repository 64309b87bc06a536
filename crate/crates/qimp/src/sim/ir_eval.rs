//! Evaluator for verified dataflow graphs.

use std::collections::BTreeMap;

use super::state::{Gate, Handle, QuantumState};
use super::transcript::{AssertionRecord, Measurement, RuntimeError, RuntimeErrorKind, Shot};
use super::value::{eval_binary, eval_unary, Value};
use super::ITERATION_LIMIT;
use crate::lowering::{ConstVal, IrFunction, IrModule, Op, Region};

type R<T> = Result<T, RuntimeError>;

pub(super) struct IrInterp<'m> {
    funcs: BTreeMap<&'m str, &'m IrFunction>,
    pub state: QuantumState,
    pub shot: Shot,
    iterations: u64,
}

impl<'m> IrInterp<'m> {
    pub fn new(m: &'m IrModule, seed: u64) -> Self {
        IrInterp {
            funcs: m.functions.iter().map(|f| (f.name.as_str(), f)).collect(),
            state: QuantumState::new(seed),
            shot: Shot::default(),
            iterations: 0,
        }
    }

    pub fn call(&mut self, name: &str, args: Vec<Value>) -> R<Vec<Value>> {
        let f = self.funcs[name];
        self.region(&f.body, args, name)
    }

    /// Evaluate nodes in id order; every wire goes from a lower id to a higher one.
    fn region(&mut self, r: &'m Region, inputs: Vec<Value>, func: &str) -> R<Vec<Value>> {
        let sources = r.sources();
        let mut outs: Vec<Vec<Value>> = Vec::with_capacity(r.nodes.len());
        let mut inputs = Some(inputs);
        for node in &r.nodes {
            let ins: Vec<Value> = sources[node.id]
                .iter()
                .map(|s| {
                    let s = s.expect("verified graph");
                    outs[s.node][s.port].clone()
                })
                .collect();
            let site = || format!("{func}/n{}", node.id);
            let kind_err = |k: RuntimeErrorKind| RuntimeError::new(k, site(), format!("{} failed", node.op.name()));
            let qubit = |v: &Value| match v {
                Value::Qubit(h) => *h,
                other => panic!("expected qubit, found {other:?}"),
            };
            let result = match &node.op {
                Op::Input => inputs.take().expect("single input node"),
                Op::Output => return Ok(ins),
                Op::Alloc => vec![Value::Qubit(self.state.alloc().map_err(kind_err)?)],
                Op::Gate(b) => {
                    let targets: Vec<Handle> = ins.iter().filter(|v| matches!(v, Value::Qubit(_))).map(qubit).collect();
                    let angle = ins.iter().find_map(|v| match v {
                        Value::Float(f) => Some(*f),
                        _ => None,
                    });
                    let gate = Gate::from_builtin(*b, angle).expect("gate op");
                    self.state.apply_gate(gate, &targets).map_err(kind_err)?;
                    targets.into_iter().map(Value::Qubit).collect()
                }
                Op::Measure { site } => {
                    let bit = self.state.measure(qubit(&ins[0])).map_err(kind_err)?;
                    self.shot.measurements.push(Measurement { site: site.clone(), bit });
                    vec![Value::Bool(bit)]
                }
                Op::Discard => {
                    self.state.discard(qubit(&ins[0])).map_err(kind_err)?;
                    vec![]
                }
                Op::MeasureArray { .. } | Op::DiscardArray => {
                    let Value::Array(items) = &ins[0] else { panic!("expected array") };
                    let mut bits = Vec::new();
                    for v in items {
                        let bit = self.state.measure(qubit(v)).map_err(kind_err)?;
                        if let Op::MeasureArray { site } = &node.op {
                            self.shot.measurements.push(Measurement { site: site.clone(), bit });
                        }
                        bits.push(Value::Bool(bit));
                    }
                    if matches!(node.op, Op::MeasureArray { .. }) {
                        vec![Value::Array(bits)]
                    } else {
                        vec![]
                    }
                }
                Op::Const(c) => vec![match *c {
                    ConstVal::Int(i) => Value::Int(i),
                    ConstVal::Float(f) => Value::Float(f),
                    ConstVal::Bool(b) => Value::Bool(b),
                }],
                Op::Binary(op) => vec![eval_binary(*op, &ins[0], &ins[1])],
                Op::Unary(op) => vec![eval_unary(*op, &ins[0])],
                Op::Call { func } => self.call(func, ins)?,
                Op::Pack { .. } => vec![Value::Struct(ins)],
                Op::Unpack { .. } => match ins.into_iter().next() {
                    Some(Value::Struct(fields)) => fields,
                    other => panic!("unpack of {other:?}"),
                },
                Op::MakeArray => vec![Value::Array(ins)],
                Op::ArrayGet | Op::ArraySet | Op::ArrayBorrow | Op::ArrayReturn => {
                    let mut it = ins.into_iter();
                    let Some(Value::Array(mut items)) = it.next() else { panic!("expected array") };
                    let i = it.next().expect("index").as_int() as usize;
                    match node.op {
                        Op::ArrayGet => vec![items[i].clone()],
                        Op::ArrayBorrow => {
                            let e = std::mem::replace(&mut items[i], Value::Moved);
                            vec![Value::Array(items), e]
                        }
                        _ => {
                            items[i] = it.next().expect("element");
                            vec![Value::Array(items)]
                        }
                    }
                }
                Op::Assert { site } => {
                    let ok = ins[0].as_bool();
                    self.shot.assertions.push(AssertionRecord { site: site.clone(), ok });
                    if !ok {
                        return Err(RuntimeError::new(RuntimeErrorKind::AssertionFailed, site.clone(), "assertion failed"));
                    }
                    vec![]
                }
                Op::Conditional => {
                    let mut it = ins.into_iter();
                    let pick = if it.next().expect("predicate").as_bool() { 0 } else { 1 };
                    self.region(&node.regions[pick], it.collect(), func)?
                }
                Op::Loop => {
                    let mut vals = ins;
                    loop {
                        self.iterations += 1;
                        if self.iterations > ITERATION_LIMIT {
                            return Err(RuntimeError::new(RuntimeErrorKind::IterationLimit, site(), "loop iteration limit exceeded"));
                        }
                        let mut out = self.region(&node.regions[0], vals, func)?;
                        let again = out.remove(0).as_bool();
                        vals = out;
                        if !again {
                            break vals;
                        }
                    }
                }
            };
            outs.push(result);
        }
        panic!("region without output node")
    }
}
