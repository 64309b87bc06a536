//! Semantic types, places, builtin signatures and type resolution.

mod builtins;
mod resolve;
pub mod typed;

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

pub use crate::frontend::ast::OwnershipMode;
pub use builtins::Builtin;
pub use resolve::resolve_types;
pub use typed::*;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Qubit,
    Int,
    Float,
    Bool,
    Unit,
    Tuple(Vec<Type>),
    Array(Box<Type>, usize),
    Struct(Arc<StructType>),
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StructType {
    pub name: String,
    pub fields: Vec<(String, Type)>,
}

impl StructType {
    pub fn field(&self, name: &str) -> Option<(usize, &Type)> {
        self.fields
            .iter()
            .enumerate()
            .find(|(_, (n, _))| n == name)
            .map(|(i, (_, t))| (i, t))
    }
}

impl Type {
    /// Element types allowed inside arrays.
    pub fn is_scalar(&self) -> bool {
        matches!(self, Type::Qubit | Type::Int | Type::Float | Type::Bool)
    }

    /// Linear values are exactly the ones that transitively contain a qubit.
    pub fn is_quantum(&self) -> bool {
        is_quantum(self)
    }

    /// Leaves are the units stored by the flattened environments: scalars and whole arrays.
    pub fn is_leaf(&self) -> bool {
        !matches!(self, Type::Struct(_) | Type::Tuple(_))
    }

    /// Number of qubits a value of this type holds.
    pub fn qubit_count(&self) -> usize {
        match self {
            Type::Qubit => 1,
            Type::Int | Type::Float | Type::Bool | Type::Unit => 0,
            Type::Tuple(ts) => ts.iter().map(Type::qubit_count).sum(),
            Type::Array(t, n) => t.qubit_count() * n,
            Type::Struct(s) => s.fields.iter().map(|(_, t)| t.qubit_count()).sum(),
        }
    }
}

pub fn is_quantum(t: &Type) -> bool {
    match t {
        Type::Qubit => true,
        Type::Int | Type::Float | Type::Bool | Type::Unit => false,
        Type::Tuple(ts) => ts.iter().any(is_quantum),
        Type::Array(elem, _) => is_quantum(elem),
        Type::Struct(s) => s.fields.iter().any(|(_, t)| is_quantum(t)),
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Qubit => f.write_str("qubit"),
            Type::Int => f.write_str("int"),
            Type::Float => f.write_str("float"),
            Type::Bool => f.write_str("bool"),
            Type::Unit => f.write_str("()"),
            Type::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            Type::Array(t, n) => write!(f, "array[{t}, {n}]"),
            Type::Struct(s) => f.write_str(&s.name),
        }
    }
}

impl Serialize for Type {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSig {
    pub name: String,
    pub ty: Type,
    pub mode: OwnershipMode,
}

/// A function signature. Classical parameters are always `Owned` (passed by value).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuncSig {
    pub params: Vec<ParamSig>,
    pub returns: Vec<Type>,
}

impl FuncSig {
    pub fn new(params: Vec<(&str, Type, OwnershipMode)>, returns: Vec<Type>) -> Self {
        FuncSig {
            params: params
                .into_iter()
                .map(|(name, ty, mode)| {
                    let mode = if ty.is_quantum() { mode } else { OwnershipMode::Owned };
                    ParamSig { name: name.to_string(), ty, mode }
                })
                .collect(),
            returns,
        }
    }

    /// The type of a call expression: unit, the single return, or a tuple.
    pub fn result_type(&self) -> Type {
        match self.returns.len() {
            0 => Type::Unit,
            1 => self.returns[0].clone(),
            _ => Type::Tuple(self.returns.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Projection {
    Field(String),
    Index(usize),
}

/// A statically known storage location: a variable plus field and constant-index projections.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Place {
    pub root: String,
    pub projections: Vec<Projection>,
}

impl Place {
    pub fn var(root: impl Into<String>) -> Self {
        Place { root: root.into(), projections: Vec::new() }
    }

    pub fn field(&self, name: impl Into<String>) -> Self {
        let mut p = self.clone();
        p.projections.push(Projection::Field(name.into()));
        p
    }

    pub fn index(&self, i: usize) -> Self {
        let mut p = self.clone();
        p.projections.push(Projection::Index(i));
        p
    }

    pub fn is_prefix_of(&self, other: &Place) -> bool {
        self.root == other.root
            && self.projections.len() <= other.projections.len()
            && self.projections.iter().zip(&other.projections).all(|(a, b)| a == b)
    }

    pub fn has_index(&self) -> bool {
        self.projections.iter().any(|p| matches!(p, Projection::Index(_)))
    }

    /// Drop everything from the first index projection on, yielding the array place.
    pub fn without_index(&self) -> Place {
        let end = self
            .projections
            .iter()
            .position(|p| matches!(p, Projection::Index(_)))
            .unwrap_or(self.projections.len());
        Place { root: self.root.clone(), projections: self.projections[..end].to_vec() }
    }
}

pub fn places_overlap(a: &Place, b: &Place) -> bool {
    a.is_prefix_of(b) || b.is_prefix_of(a)
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root)?;
        for p in &self.projections {
            match p {
                Projection::Field(n) => write!(f, ".{n}")?,
                Projection::Index(i) => write!(f, "[{i}]")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// All leaves under `place`, whose type is `ty`, in field order.
pub fn leaves(place: &Place, ty: &Type) -> Vec<(Place, Type)> {
    let mut out = Vec::new();
    collect_leaves(place, ty, &mut out);
    out
}

fn collect_leaves(place: &Place, ty: &Type, out: &mut Vec<(Place, Type)>) {
    match ty {
        Type::Struct(s) => {
            for (name, fty) in &s.fields {
                collect_leaves(&place.field(name), fty, out);
            }
        }
        _ => out.push((place.clone(), ty.clone())),
    }
}

/// Leaves under `place` that hold qubits.
pub fn quantum_leaves(place: &Place, ty: &Type) -> Vec<Place> {
    leaves(place, ty)
        .into_iter()
        .filter(|(_, t)| t.is_quantum())
        .map(|(p, _)| p)
        .collect()
}

/// Type of `place` given the type of its root.
pub fn place_type(root_ty: &Type, place: &Place) -> Option<Type> {
    let mut ty = root_ty.clone();
    for proj in &place.projections {
        ty = match (proj, &ty) {
            (Projection::Field(n), Type::Struct(s)) => s.field(n)?.1.clone(),
            (Projection::Index(i), Type::Array(elem, len)) if i < len => (**elem).clone(),
            _ => return None,
        };
    }
    Some(ty)
}
