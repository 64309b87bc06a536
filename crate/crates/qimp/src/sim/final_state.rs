//! Run one function, rather than an entry point, on prepared inputs and read back the
//! reduced state of the qubits it hands back to its caller.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::imperative::Interp;
use super::ir_eval::IrInterp;
use super::state::{Gate, Handle, QuantumState};
use super::transcript::{RuntimeError, Shot};
use super::value::Value;
use crate::lowering::IrModule;
use crate::types::{OwnershipMode, Type, TypedProgram};

#[derive(Debug, Clone, PartialEq)]
pub struct FinalState {
    pub shot: Shot,
    /// Amplitudes over the returned qubits; bit `k` of the index is the `k`-th returned qubit,
    /// counting declared returns first and then borrowed parameters.
    pub amplitudes: Vec<Complex64>,
}

impl FinalState {
    /// Equal transcripts and equal states up to a global phase.
    pub fn matches(&self, other: &FinalState, tol: f64) -> bool {
        if self.shot != other.shot || self.amplitudes.len() != other.amplitudes.len() {
            return false;
        }
        let Some(k) = self.amplitudes.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|p| p.0)
        else {
            return true;
        };
        if other.amplitudes[k].norm() < tol {
            return false;
        }
        let phase = self.amplitudes[k] / other.amplitudes[k];
        let phase = phase / phase.norm();
        self.amplitudes.iter().zip(&other.amplitudes).all(|(a, b)| (a - b * phase).norm() < tol)
    }
}

/// Build argument values for `params`; every qubit gets a seeded random single-qubit state.
fn prepare(state: &mut QuantumState, params: &[Type], rng: &mut ChaCha8Rng) -> Result<Vec<Value>, RuntimeError> {
    fn build(state: &mut QuantumState, t: &Type, rng: &mut ChaCha8Rng) -> Result<Value, RuntimeError> {
        Ok(match t {
            Type::Qubit => {
                let h = state.alloc().map_err(|k| RuntimeError::new(k, "<inputs>", "cannot prepare inputs"))?;
                for g in [Gate::Rz(rng.gen_range(-3.0..3.0)), Gate::H, Gate::Rz(rng.gen_range(-3.0..3.0))] {
                    state.apply_gate(g, &[h]).expect("fresh handle");
                }
                Value::Qubit(h)
            }
            Type::Int => Value::Int(rng.gen_range(0..4)),
            Type::Float => Value::Float(rng.gen_range(-2.0..2.0)),
            Type::Bool => Value::Bool(rng.gen()),
            Type::Array(e, n) => Value::Array((0..*n).map(|_| build(state, e, rng)).collect::<Result<_, _>>()?),
            Type::Struct(s) => {
                Value::Struct(s.fields.iter().map(|(_, t)| build(state, t, rng)).collect::<Result<_, _>>()?)
            }
            Type::Unit | Type::Tuple(_) => unreachable!("not a parameter type"),
        })
    }
    params.iter().map(|t| build(state, t, rng)).collect()
}

fn reduce(state: &QuantumState, outputs: &[Value]) -> Vec<Complex64> {
    let mut handles: Vec<Handle> = Vec::new();
    outputs.iter().for_each(|v| v.handles(&mut handles));
    assert_eq!(handles.len(), state.num_qubits(), "every live qubit is returned");
    let wires: Vec<usize> = handles.iter().map(|h| state.wire_of(*h).expect("returned qubit is live")).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes().len()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let j = wires.iter().enumerate().fold(0, |acc, (k, w)| acc | (((i >> w) & 1) << k));
        out[j] = *a;
    }
    out
}

fn prep_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15)
}

/// Run `func` directly on prepared inputs. `None` when there is no such function.
pub fn final_state_imperative(p: &TypedProgram, func: &str, seed: u64) -> Option<Result<FinalState, RuntimeError>> {
    let f = p.function(func)?;
    let mut it = Interp::new(p, seed);
    let types: Vec<Type> = f.sig.params.iter().map(|p| p.ty.clone()).collect();
    Some((|| {
        let args = prepare(&mut it.state, &types, &mut prep_rng(seed))?;
        let mut owned = BTreeSet::new();
        for (a, p) in args.iter().zip(&f.sig.params) {
            if p.mode == OwnershipMode::Owned {
                let mut hs = Vec::new();
                a.handles(&mut hs);
                owned.extend(hs);
            }
        }
        let (mut ret, params) = it.call_function(f, args, owned)?;
        for (v, p) in params.into_iter().zip(&f.sig.params) {
            if p.ty.is_quantum() && p.mode == OwnershipMode::Borrowed {
                ret.push(v);
            }
        }
        Ok(FinalState { amplitudes: reduce(&it.state, &ret), shot: std::mem::take(&mut it.shot) })
    })())
}

/// Run the lowered `func` on the same prepared inputs as [`final_state_imperative`].
pub fn final_state_ir(m: &IrModule, func: &str, seed: u64) -> Option<Result<FinalState, RuntimeError>> {
    let f = m.function(func)?;
    let mut it = IrInterp::new(m, seed);
    Some((|| {
        let args = prepare(&mut it.state, &f.signature.inputs, &mut prep_rng(seed))?;
        let out = it.call(func, args)?;
        Ok(FinalState { amplitudes: reduce(&it.state, &out), shot: std::mem::take(&mut it.shot) })
    })())
}
