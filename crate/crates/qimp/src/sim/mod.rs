//! Statevector simulation of QImp programs, both as written and after lowering.

mod final_state;
mod imperative;
mod ir_eval;
mod state;
mod transcript;
mod value;

pub use final_state::{final_state_imperative, final_state_ir, FinalState};
pub use state::{Gate, Handle, QuantumState, MAX_QUBITS};
pub use transcript::{AssertionRecord, EntryError, Measurement, RuntimeError, RuntimeErrorKind, Shot, Transcript};
pub use value::Value;

use std::collections::BTreeSet;

use crate::lowering::IrModule;
use crate::types::TypedProgram;

/// Loop-header evaluations allowed per shot, counted identically by both interpreters.
pub const ITERATION_LIMIT: u64 = 100_000;

/// Seed of shot `i` in a run with base seed `seed`.
pub fn shot_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

fn check_entry<'a>(params: usize, outputs: impl IntoIterator<Item = &'a crate::types::Type>, entry: &str) -> Result<(), EntryError> {
    if params != 0 || outputs.into_iter().any(|t| t.is_quantum()) {
        return Err(EntryError::BadSignature(entry.to_string()));
    }
    Ok(())
}

fn run_shots(shots: usize, mut one: impl FnMut(usize) -> (Shot, Option<RuntimeError>)) -> Transcript {
    let mut t = Transcript::default();
    for i in 0..shots {
        let (shot, error) = one(i);
        t.shots.push(shot);
        if error.is_some() {
            t.error = error;
            break;
        }
    }
    t
}

/// Run `entry` on the typed program directly. The program need not have passed the ownership check.
pub fn run_imperative(p: &TypedProgram, entry: &str, seed: u64, shots: usize) -> Result<Transcript, EntryError> {
    let f = p.function(entry).ok_or_else(|| EntryError::Unknown(entry.to_string()))?;
    check_entry(f.sig.params.len(), &f.sig.returns, entry)?;
    Ok(run_shots(shots, |i| {
        let mut it = imperative::Interp::new(p, shot_seed(seed, i));
        let r = it.call_function(f, Vec::new(), BTreeSet::new());
        (it.shot, r.err())
    }))
}

/// Run `entry` on a verified lowered module.
pub fn run_ir(m: &IrModule, entry: &str, seed: u64, shots: usize) -> Result<Transcript, EntryError> {
    let f = m.function(entry).ok_or_else(|| EntryError::Unknown(entry.to_string()))?;
    check_entry(f.signature.inputs.len(), &f.signature.outputs, entry)?;
    Ok(run_shots(shots, |i| {
        let mut it = ir_eval::IrInterp::new(m, shot_seed(seed, i));
        let r = it.call(entry, Vec::new());
        (it.shot, r.err())
    }))
}
