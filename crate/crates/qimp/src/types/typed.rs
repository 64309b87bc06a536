//! The typed program consumed by the checker, the lowering and the interpreters.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::{Builtin, FuncSig, OwnershipMode, Place, StructType, Type};
use crate::frontend::ast::{BinOp, UnOp};
use crate::span::Span;

#[derive(Debug, Clone, Serialize)]
pub struct TypedProgram {
    #[serde(serialize_with = "ser_structs")]
    pub structs: Vec<Arc<StructType>>,
    pub functions: Vec<TypedFunction>,
}

fn ser_structs<S: serde::Serializer>(structs: &[Arc<StructType>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(structs.len()))?;
    for st in structs {
        let fields: Vec<(&str, &Type)> = st.fields.iter().map(|(n, t)| (n.as_str(), t)).collect();
        seq.serialize_element(&serde_json::json!({ "name": st.name, "fields": fields }))?;
    }
    seq.end()
}

impl TypedProgram {
    pub fn function(&self, name: &str) -> Option<&TypedFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn sig(&self, name: &str) -> Option<&FuncSig> {
        self.function(name).map(|f| &f.sig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Param(OwnershipMode),
    Local,
    LoopVar,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarInfo {
    pub ty: Type,
    pub kind: VarKind,
}

impl VarInfo {
    /// Whether this scope owns the qubits stored in the variable.
    pub fn is_local(&self) -> bool {
        matches!(self.kind, VarKind::Local | VarKind::Param(OwnershipMode::Owned))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TypedFunction {
    pub name: String,
    pub sig: FuncSig,
    pub param_spans: Vec<Span>,
    pub body: Vec<TStmt>,
    pub vars: BTreeMap<String, VarInfo>,
    pub span: Span,
}

impl TypedFunction {
    pub fn var(&self, name: &str) -> &VarInfo {
        &self.vars[name]
    }

    pub fn place_type(&self, place: &Place) -> Type {
        super::place_type(&self.vars[&place.root].ty, place).expect("typed place")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TStmt {
    #[serde(flatten)]
    pub kind: TStmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind")]
pub enum TStmtKind {
    /// One target per value component. Several targets means `value` is a tuple or a multi-return call.
    Assign { targets: Vec<TPlace>, value: TExpr },
    Expr { expr: TExpr },
    Return { values: Vec<TExpr> },
    Assert { cond: TExpr },
    If { cond: TExpr, then_body: Vec<TStmt>, else_body: Vec<TStmt> },
    While { cond: TExpr, body: Vec<TStmt> },
    For { var: String, var_span: Span, iter: TPlace, elem: Type, len: usize, body: Vec<TStmt> },
}

#[derive(Debug, Clone, Serialize)]
pub struct TPlace {
    pub place: Place,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, Serialize)]
pub struct TExpr {
    #[serde(flatten)]
    pub kind: TExprKind,
    pub ty: Type,
    pub span: Span,
}

/// How a call passes one argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArgMode {
    /// Quantum argument lent for the duration of the call.
    Borrow,
    /// Quantum argument whose ownership moves into the callee.
    Consume,
    /// Classical argument passed by value.
    Copy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "callee")]
pub enum Callee {
    Builtin { builtin: Builtin },
    Function { name: String },
    /// Constructor; argument `i` initializes field `slots[i]`.
    Struct { name: String, slots: Vec<usize> },
}

#[derive(Debug, Clone, Serialize)]
pub struct TArg {
    pub expr: TExpr,
    pub mode: ArgMode,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "expr")]
pub enum TExprKind {
    Int { value: i64 },
    Float { value: f64 },
    Bool { value: bool },
    Place { place: Place },
    Call { callee: Callee, args: Vec<TArg> },
    Tuple { elems: Vec<TExpr> },
    Binary { op: BinOp, lhs: Box<TExpr>, rhs: Box<TExpr> },
    Unary { op: UnOp, operand: Box<TExpr> },
}

impl TExpr {
    pub fn as_place(&self) -> Option<&Place> {
        match &self.kind {
            TExprKind::Place { place } => Some(place),
            _ => None,
        }
    }

    /// Whether evaluating this expression can call a function.
    pub fn has_call(&self) -> bool {
        match &self.kind {
            TExprKind::Call { .. } => true,
            TExprKind::Tuple { elems } => elems.iter().any(TExpr::has_call),
            TExprKind::Binary { lhs, rhs, .. } => lhs.has_call() || rhs.has_call(),
            TExprKind::Unary { operand, .. } => operand.has_call(),
            _ => false,
        }
    }
}
