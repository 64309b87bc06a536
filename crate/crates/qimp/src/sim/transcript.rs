use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RuntimeErrorKind {
    UseAfterFree,
    DoubleBorrowAlias,
    LeakAtScopeExit,
    AssertionFailed,
    /// More than [`super::MAX_QUBITS`] qubits live at once.
    CapacityExceeded,
    /// A shot evaluated more loop headers than [`super::ITERATION_LIMIT`].
    IterationLimit,
}

impl RuntimeErrorKind {
    /// The kinds that accepted programs can never raise.
    pub fn is_ownership(self) -> bool {
        matches!(self, Self::UseAfterFree | Self::DoubleBorrowAlias | Self::LeakAtScopeExit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
#[error("{kind:?} at {site}: {message}")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub site: String,
    pub message: String,
}

impl RuntimeError {
    pub fn new(kind: RuntimeErrorKind, site: impl Into<String>, message: impl Into<String>) -> Self {
        RuntimeError { kind, site: site.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Measurement {
    pub site: String,
    pub bit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssertionRecord {
    pub site: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Shot {
    pub measurements: Vec<Measurement>,
    pub assertions: Vec<AssertionRecord>,
}

/// Shots run in order with seeds `seed, seed + 1, ...`; the first runtime error ends the run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Transcript {
    pub shots: Vec<Shot>,
    pub error: Option<RuntimeError>,
}

impl Transcript {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("transcript serializes")
    }

    /// Compare shots bit for bit and errors by kind; describes the first difference.
    pub fn first_divergence(&self, other: &Transcript) -> Option<String> {
        for (i, (a, b)) in self.shots.iter().zip(&other.shots).enumerate() {
            if a != b {
                return Some(format!("shot {i}: {} vs {}", serde_json::to_string(a).unwrap(), serde_json::to_string(b).unwrap()));
            }
        }
        if self.shots.len() != other.shots.len() {
            return Some(format!("{} shots vs {} shots", self.shots.len(), other.shots.len()));
        }
        // Error sites name source positions in one form and graph nodes in the other.
        if self.error.as_ref().map(|e| e.kind) != other.error.as_ref().map(|e| e.kind) {
            return Some(format!("error {:?} vs {:?}", self.error, other.error));
        }
        None
    }
}

/// Why a run could not start.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntryError {
    #[error("no function named `{0}`")]
    Unknown(String),
    #[error("entry `{0}` must take no parameters and return only classical values")]
    BadSignature(String),
}
