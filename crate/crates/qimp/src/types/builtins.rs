use serde::Serialize;

use super::{FuncSig, OwnershipMode, Type};

/// The closed set of builtin operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Builtin {
    Qubit,
    H,
    X,
    Y,
    Z,
    S,
    T,
    Rz,
    Cx,
    Cz,
    Measure,
    Discard,
    /// `array(e1, ..., en)` literal.
    Array,
    MeasureArray,
    DiscardArray,
}

const ALL: [Builtin; 15] = [
    Builtin::Qubit,
    Builtin::H,
    Builtin::X,
    Builtin::Y,
    Builtin::Z,
    Builtin::S,
    Builtin::T,
    Builtin::Rz,
    Builtin::Cx,
    Builtin::Cz,
    Builtin::Measure,
    Builtin::Discard,
    Builtin::Array,
    Builtin::MeasureArray,
    Builtin::DiscardArray,
];

impl Builtin {
    pub fn all() -> &'static [Builtin] {
        &ALL
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Qubit => "qubit",
            Builtin::H => "h",
            Builtin::X => "x",
            Builtin::Y => "y",
            Builtin::Z => "z",
            Builtin::S => "s",
            Builtin::T => "t",
            Builtin::Rz => "rz",
            Builtin::Cx => "cx",
            Builtin::Cz => "cz",
            Builtin::Measure => "measure",
            Builtin::Discard => "discard",
            Builtin::Array => "array",
            Builtin::MeasureArray => "measure_array",
            Builtin::DiscardArray => "discard_array",
        }
    }

    pub fn lookup(name: &str) -> Option<Builtin> {
        ALL.iter().copied().find(|b| b.name() == name)
    }

    pub fn is_gate(self) -> bool {
        matches!(
            self,
            Builtin::H
                | Builtin::X
                | Builtin::Y
                | Builtin::Z
                | Builtin::S
                | Builtin::T
                | Builtin::Rz
                | Builtin::Cx
                | Builtin::Cz
        )
    }

    /// Fixed signature, or `None` for the array builtins whose types depend on their arguments.
    pub fn sig(self) -> Option<FuncSig> {
        use OwnershipMode::{Borrowed, Owned};
        let one = |ret: Vec<Type>| FuncSig::new(vec![("q", Type::Qubit, Borrowed)], ret);
        Some(match self {
            Builtin::Qubit => FuncSig::new(vec![], vec![Type::Qubit]),
            Builtin::H | Builtin::X | Builtin::Y | Builtin::Z | Builtin::S | Builtin::T => one(vec![]),
            Builtin::Rz => FuncSig::new(
                vec![("q", Type::Qubit, Borrowed), ("angle", Type::Float, Owned)],
                vec![],
            ),
            Builtin::Cx | Builtin::Cz => FuncSig::new(
                vec![("a", Type::Qubit, Borrowed), ("b", Type::Qubit, Borrowed)],
                vec![],
            ),
            Builtin::Measure => FuncSig::new(vec![("q", Type::Qubit, Owned)], vec![Type::Bool]),
            Builtin::Discard => FuncSig::new(vec![("q", Type::Qubit, Owned)], vec![]),
            Builtin::Array | Builtin::MeasureArray | Builtin::DiscardArray => return None,
        })
    }

    /// Signature of a builtin once argument types are known.
    pub fn instantiate(self, arg_types: &[Type]) -> Option<FuncSig> {
        if let Some(sig) = self.sig() {
            return Some(sig);
        }
        match self {
            Builtin::Array => {
                let first = arg_types.first()?;
                if !first.is_scalar() {
                    return None;
                }
                let params = arg_types
                    .iter()
                    .map(|_| ("e", first.clone(), OwnershipMode::Owned))
                    .collect();
                Some(FuncSig::new(params, vec![Type::Array(Box::new(first.clone()), arg_types.len())]))
            }
            Builtin::MeasureArray | Builtin::DiscardArray => {
                let n = match arg_types {
                    [Type::Array(elem, n)] if **elem == Type::Qubit => *n,
                    _ => return None,
                };
                let arr = Type::Array(Box::new(Type::Qubit), n);
                let ret = if self == Builtin::MeasureArray {
                    vec![Type::Array(Box::new(Type::Bool), n)]
                } else {
                    vec![]
                };
                Some(FuncSig::new(vec![("qs", arr, OwnershipMode::Owned)], ret))
            }
            _ => None,
        }
    }
}
