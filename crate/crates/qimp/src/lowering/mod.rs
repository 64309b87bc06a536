//! Functional translation of accepted programs into a dataflow-graph IR.
//!
//! Borrowed arguments are threaded explicitly: a function that borrows `q` receives
//! it as an input and hands it back as an extra output after its declared returns.

mod ir;
mod lower;
mod verify;

pub use ir::*;
pub use lower::{lower_function, lower_program, lower_signature, LowerError};
pub use verify::{verify_ir, verify_module, IrViolation, ViolationKind};

#[cfg(test)]
mod tests;
