//! Seeded statevector backend.
//!
//! Wire `k` is bit `k` of the basis-state index. Allocation appends a wire;
//! measurement projects, renormalizes and removes the wire, shifting later wires down.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::transcript::RuntimeErrorKind;
use crate::types::Builtin;

pub const MAX_QUBITS: usize = 16;

/// Opaque qubit handle; never reused within one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle(pub u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Rz(f64),
    Cx,
    Cz,
}

impl Gate {
    /// The gate for a builtin, with `angle` supplying the `rz` parameter.
    pub fn from_builtin(b: Builtin, angle: Option<f64>) -> Option<Gate> {
        Some(match b {
            Builtin::H => Gate::H,
            Builtin::X => Gate::X,
            Builtin::Y => Gate::Y,
            Builtin::Z => Gate::Z,
            Builtin::S => Gate::S,
            Builtin::T => Gate::T,
            Builtin::Rz => Gate::Rz(angle?),
            Builtin::Cx => Gate::Cx,
            Builtin::Cz => Gate::Cz,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Gate::Cx | Gate::Cz => 2,
            _ => 1,
        }
    }

    fn matrix(self) -> [[Complex64; 2]; 2] {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Gate::H => [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]],
            Gate::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            Gate::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
            Gate::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            Gate::S => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
            Gate::T => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
            Gate::Rz(theta) => [
                [Complex64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0)],
                [c(0.0, 0.0), Complex64::from_polar(1.0, theta / 2.0)],
            ],
            Gate::Cx | Gate::Cz => unreachable!("two-qubit gate"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantumState {
    amps: Vec<Complex64>,
    /// `wires[k]` is the handle stored on wire `k`.
    wires: Vec<Handle>,
    next: u32,
    rng: ChaCha8Rng,
}

impl QuantumState {
    pub fn new(seed: u64) -> Self {
        QuantumState { amps: vec![Complex64::new(1.0, 0.0)], wires: Vec::new(), next: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn num_qubits(&self) -> usize {
        self.wires.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn wire_of(&self, h: Handle) -> Option<usize> {
        self.wires.iter().position(|&w| w == h)
    }

    pub fn is_live(&self, h: Handle) -> bool {
        self.wire_of(h).is_some()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn alloc(&mut self) -> Result<Handle, RuntimeErrorKind> {
        if self.wires.len() >= MAX_QUBITS {
            return Err(RuntimeErrorKind::CapacityExceeded);
        }
        let h = Handle(self.next);
        self.next += 1;
        self.wires.push(h);
        let n = self.amps.len();
        self.amps.resize(2 * n, Complex64::new(0.0, 0.0));
        Ok(h)
    }

    fn wire(&self, h: Handle) -> Result<usize, RuntimeErrorKind> {
        self.wire_of(h).ok_or(RuntimeErrorKind::UseAfterFree)
    }

    pub fn apply_gate(&mut self, gate: Gate, targets: &[Handle]) -> Result<(), RuntimeErrorKind> {
        assert_eq!(targets.len(), gate.arity(), "gate arity");
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(RuntimeErrorKind::DoubleBorrowAlias);
        }
        let ws = targets.iter().map(|&h| self.wire(h)).collect::<Result<Vec<_>, _>>()?;
        match gate {
            Gate::Cx => {
                let (c, t) = (1usize << ws[0], 1usize << ws[1]);
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            Gate::Cz => {
                let mask = (1usize << ws[0]) | (1usize << ws[1]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
            _ => {
                let m = gate.matrix();
                let bit = 1usize << ws[0];
                for i in 0..self.amps.len() {
                    if i & bit == 0 {
                        let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                        self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                        self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
                    }
                }
            }
        }
        Ok(())
    }

    /// Probability that measuring `h` yields 1.
    pub fn prob_one(&self, h: Handle) -> Result<f64, RuntimeErrorKind> {
        let bit = 1usize << self.wire(h)?;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Destructive measurement: one draw `u` in [0, 1), outcome `u < p(1)`.
    pub fn measure(&mut self, h: Handle) -> Result<bool, RuntimeErrorKind> {
        let k = self.wire(h)?;
        let p1 = self.prob_one(h)?;
        let u: f64 = self.rng.gen();
        let outcome = u < p1;
        let p = if outcome { p1 } else { 1.0 - p1 };
        let scale = 1.0 / p.sqrt();
        let low = (1usize << k) - 1;
        let half = self.amps.len() / 2;
        let mut out = Vec::with_capacity(half);
        for j in 0..half {
            let i = ((j & !low) << 1) | (j & low) | ((outcome as usize) << k);
            out.push(self.amps[i] * scale);
        }
        self.amps = out;
        self.wires.remove(k);
        Ok(outcome)
    }

    /// Discarding is a measurement whose outcome is dropped.
    pub fn discard(&mut self, h: Handle) -> Result<(), RuntimeErrorKind> {
        self.measure(h).map(|_| ())
    }

    /// Raw access to the generator, for reference-sequence checks.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
