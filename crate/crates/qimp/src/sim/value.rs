//! Runtime values shared by both interpreters.

use super::state::Handle;
use crate::frontend::ast::{BinOp, UnOp};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Qubit(Handle),
    /// A slot whose qubit has been moved out or consumed, or an element lent out of an array.
    Moved,
    Array(Vec<Value>),
    Struct(Vec<Value>),
}

impl Value {
    pub fn as_bool(&self) -> bool {
        matches!(self, Value::Bool(true))
    }

    pub fn as_int(&self) -> i64 {
        match self {
            Value::Int(i) => *i,
            other => panic!("expected int, found {other:?}"),
        }
    }

    pub fn as_float(&self) -> f64 {
        match self {
            Value::Float(f) => *f,
            other => panic!("expected float, found {other:?}"),
        }
    }

    /// Every qubit handle inside the value, in field and index order.
    pub fn handles(&self, out: &mut Vec<Handle>) {
        match self {
            Value::Qubit(h) => out.push(*h),
            Value::Array(vs) | Value::Struct(vs) => vs.iter().for_each(|v| v.handles(out)),
            _ => {}
        }
    }

    pub fn contains_moved(&self) -> bool {
        match self {
            Value::Moved => true,
            Value::Array(vs) | Value::Struct(vs) => vs.iter().any(Value::contains_moved),
            _ => false,
        }
    }

    /// Replace every qubit (and nothing classical) by `Moved`.
    pub fn mark_moved(&mut self) {
        match self {
            Value::Qubit(_) => *self = Value::Moved,
            Value::Array(vs) | Value::Struct(vs) => vs.iter_mut().for_each(Value::mark_moved),
            _ => {}
        }
    }
}

/// `and`/`or` evaluate both operands; integer arithmetic wraps.
pub fn eval_binary(op: BinOp, a: &Value, b: &Value) -> Value {
    use Value::*;
    match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => Int(x.wrapping_add(*y)),
        (BinOp::Sub, Int(x), Int(y)) => Int(x.wrapping_sub(*y)),
        (BinOp::Mul, Int(x), Int(y)) => Int(x.wrapping_mul(*y)),
        (BinOp::Add, Float(x), Float(y)) => Float(x + y),
        (BinOp::Sub, Float(x), Float(y)) => Float(x - y),
        (BinOp::Mul, Float(x), Float(y)) => Float(x * y),
        (BinOp::Eq, x, y) => Bool(x == y),
        (BinOp::Ne, x, y) => Bool(x != y),
        (BinOp::Lt, Int(x), Int(y)) => Bool(x < y),
        (BinOp::Le, Int(x), Int(y)) => Bool(x <= y),
        (BinOp::Gt, Int(x), Int(y)) => Bool(x > y),
        (BinOp::Ge, Int(x), Int(y)) => Bool(x >= y),
        (BinOp::Lt, Float(x), Float(y)) => Bool(x < y),
        (BinOp::Le, Float(x), Float(y)) => Bool(x <= y),
        (BinOp::Gt, Float(x), Float(y)) => Bool(x > y),
        (BinOp::Ge, Float(x), Float(y)) => Bool(x >= y),
        (BinOp::And, Bool(x), Bool(y)) => Bool(*x && *y),
        (BinOp::Or, Bool(x), Bool(y)) => Bool(*x || *y),
        _ => panic!("ill-typed operands for {op:?}: {a:?}, {b:?}"),
    }
}

pub fn eval_unary(op: UnOp, v: &Value) -> Value {
    match (op, v) {
        (UnOp::Neg, Value::Int(x)) => Value::Int(x.wrapping_neg()),
        (UnOp::Neg, Value::Float(x)) => Value::Float(-x),
        (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
        _ => panic!("ill-typed operand for {op:?}: {v:?}"),
    }
}
