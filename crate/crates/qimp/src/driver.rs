//! End-to-end pipeline used by the command-line tool and the acceptance tests.

use std::path::Path;

use thiserror::Error;

use crate::diagnostics::{self, Diagnostic, SourceMap};
use crate::frontend::{self, Program};
use crate::lowering::{lower_program, verify_module, IrModule, IrViolation, LowerError};
use crate::ownership::check_program;
use crate::sim::{self, EntryError, Transcript};
use crate::types::{resolve_types, TypedProgram};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitCode(pub u8);

impl ExitCode {
    pub const OK: ExitCode = ExitCode(0);
    pub const DIAGNOSTICS: ExitCode = ExitCode(1);
    pub const SYNTAX: ExitCode = ExitCode(2);
    pub const IO: ExitCode = ExitCode(3);
    pub const RUNTIME: ExitCode = ExitCode(4);
    pub const DIVERGENCE: ExitCode = ExitCode(5);
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// Parse or type errors.
    #[error("{} syntax or type error(s)", .0.len())]
    Syntax(Vec<Diagnostic>),
    /// Ownership diagnostics.
    #[error("{} ownership error(s)", .0.len())]
    Rejected(Vec<Diagnostic>),
    #[error(transparent)]
    Entry(#[from] EntryError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error("lowered graph is malformed: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Malformed(Vec<IrViolation>),
}

impl DriverError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            DriverError::Io { .. } => ExitCode::IO,
            DriverError::Rejected(_) => ExitCode::DIAGNOSTICS,
            DriverError::Syntax(_) | DriverError::Entry(_) | DriverError::Lower(_) | DriverError::Malformed(_) => {
                ExitCode::SYNTAX
            }
        }
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            DriverError::Syntax(d) | DriverError::Rejected(d) => d,
            _ => &[],
        }
    }
}

/// Read every path into a source map, keyed by the path as given.
pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<SourceMap, DriverError> {
    let mut sources = SourceMap::new();
    for p in paths {
        let p = p.as_ref();
        let text = std::fs::read_to_string(p).map_err(|source| DriverError::Io { path: p.display().to_string(), source })?;
        sources.add(&p.display().to_string(), text);
    }
    Ok(sources)
}

/// Parse every file and concatenate the items into one program.
pub fn parse(sources: &SourceMap) -> Result<Program, DriverError> {
    let mut program = Program::default();
    let mut errors = Vec::new();
    for (name, text) in sources.files() {
        match frontend::parse_source(name, text) {
            Ok(p) => program.items.extend(p.items),
            Err(d) => errors.push(d),
        }
    }
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(DriverError::Syntax(errors))
    }
}

pub fn typecheck(sources: &SourceMap) -> Result<(Program, TypedProgram), DriverError> {
    let program = parse(sources)?;
    let typed = resolve_types(&program).map_err(|mut d| {
        diagnostics::sort(&mut d);
        DriverError::Syntax(d)
    })?;
    Ok((program, typed))
}

/// Type-check and ownership-check; fails on any diagnostic.
pub fn accept(sources: &SourceMap) -> Result<TypedProgram, DriverError> {
    let (_, typed) = typecheck(sources)?;
    let diags = check_program(&typed);
    if diags.is_empty() {
        Ok(typed)
    } else {
        Err(DriverError::Rejected(diags))
    }
}

/// Lower an accepted program and verify the result.
pub fn lower(typed: &TypedProgram) -> Result<IrModule, DriverError> {
    let module = lower_program(typed)?;
    let violations = verify_module(&module);
    if violations.is_empty() {
        Ok(module)
    } else {
        Err(DriverError::Malformed(violations))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Imperative,
    Ir,
}

pub fn run(typed: &TypedProgram, mode: Mode, entry: &str, seed: u64, shots: usize) -> Result<Transcript, DriverError> {
    Ok(match mode {
        Mode::Imperative => sim::run_imperative(typed, entry, seed, shots)?,
        Mode::Ir => sim::run_ir(&lower(typed)?, entry, seed, shots)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub seed: u64,
    pub detail: String,
    pub imperative: Transcript,
    pub ir: Transcript,
}

/// Run both forms once per seed in `seed..seed + seeds` and report the first mismatch.
pub fn diff(typed: &TypedProgram, entry: &str, seed: u64, seeds: usize) -> Result<Option<Divergence>, DriverError> {
    let module = lower(typed)?;
    for i in 0..seeds {
        let s = sim::shot_seed(seed, i);
        let a = sim::run_imperative(typed, entry, s, 1)?;
        let b = sim::run_ir(&module, entry, s, 1)?;
        if let Some(detail) = a.first_divergence(&b) {
            return Ok(Some(Divergence { seed: s, detail, imperative: a, ir: b }));
        }
    }
    Ok(None)
}
