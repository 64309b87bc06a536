//! Flow-sensitive ownership and borrow checking.
//!
//! Every quantum leaf of every variable (a qubit, a qubit array, or a qubit field
//! reached through struct fields) carries a state at each program point. The facts
//! are propagated over the CFG to a fixpoint; merges require equal states.

pub mod cfg;
mod check;

use std::collections::BTreeMap;

pub use cfg::{build_cfg, BasicBlock, BlockId, Cfg, Instr, Terminator};

use crate::diagnostics::{sort, Diagnostic};
use crate::span::Span;
use crate::types::{places_overlap, quantum_leaves, Place, TypedFunction, TypedProgram};

/// Ownership state of a place, summarized over its quantum leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaceState {
    Unassigned,
    Owned,
    Consumed(Span),
    /// Reborrowed by an enclosing `for` loop.
    Frozen,
    /// Some quantum leaves are consumed while others are still owned.
    PartiallyMoved(Vec<Place>),
    /// A diagnostic was reported for this place.
    Error,
}

/// Result of checking one function.
pub struct Analysis<'f> {
    function: &'f TypedFunction,
    pub diagnostics: Vec<Diagnostic>,
    exit: Option<check::Fact>,
}

impl Analysis<'_> {
    /// The state of `place` when the function returns.
    pub fn state_at_exit(&self, place: &Place) -> Option<PlaceState> {
        let fact = self.exit.as_ref()?;
        if fact.frozen.iter().flatten().any(|f| places_overlap(f, place)) {
            return Some(PlaceState::Frozen);
        }
        let leaves = if place.has_index() {
            vec![place.without_index()]
        } else {
            quantum_leaves(place, &self.function.place_type(place))
        };
        let states: Vec<&check::Leaf> = leaves.iter().filter_map(|l| fact.leaves.get(l)).collect();
        if states.is_empty() {
            return None;
        }
        use check::Leaf;
        if states.iter().any(|s| matches!(s, Leaf::Poisoned(_))) {
            return Some(PlaceState::Error);
        }
        if states.iter().all(|s| matches!(s, Leaf::Owned(_))) {
            return Some(PlaceState::Owned);
        }
        if states.iter().all(|s| matches!(s, Leaf::Unassigned)) {
            return Some(PlaceState::Unassigned);
        }
        if states.iter().all(|s| !matches!(s, Leaf::Owned(_))) {
            let site = states.iter().find_map(|s| match s {
                Leaf::Consumed(at) => Some(at.clone()),
                _ => None,
            });
            return Some(PlaceState::Consumed(site.unwrap_or_else(Span::dummy)));
        }
        let consumed = leaves
            .iter()
            .filter(|l| !matches!(fact.leaves.get(*l), Some(Leaf::Owned(_))))
            .cloned()
            .collect();
        Some(PlaceState::PartiallyMoved(consumed))
    }
}

pub fn analyze(f: &TypedFunction) -> Analysis<'_> {
    let out = check::check(f);
    Analysis { function: f, diagnostics: out.diagnostics, exit: out.exit }
}

/// Check one function. An empty result means it is accepted.
pub fn check_function(f: &TypedFunction) -> Vec<Diagnostic> {
    analyze(f).diagnostics
}

/// Check every function, ordering diagnostics by source position.
pub fn check_program(p: &TypedProgram) -> Vec<Diagnostic> {
    let mut all: Vec<Diagnostic> = p.functions.iter().flat_map(check_function).collect();
    sort(&mut all);
    all
}

/// Exit states of every tracked root, for debugging output.
pub fn exit_summary(f: &TypedFunction) -> BTreeMap<String, PlaceState> {
    let a = analyze(f);
    f.vars
        .keys()
        .filter_map(|name| Some((name.clone(), a.state_at_exit(&Place::var(name))?)))
        .collect()
}

#[cfg(test)]
mod tests;
