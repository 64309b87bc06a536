use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qimp::diagnostics::{self, Diagnostic, SourceMap};
use qimp::driver::{self, DriverError, ExitCode, Mode};
use qimp::lowering::{emit_ir_text, module_json};
use serde_json::json;

#[derive(Parser)]
#[command(name = "qimp", version, about = "Check, lower and simulate QImp programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report ownership diagnostics.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Translate an accepted program into the dataflow IR.
    Lower {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Emit::Ir)]
        emit: Emit,
    },
    /// Simulate an entry function and print its transcript.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "main")]
        entry: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        shots: usize,
        #[arg(long, value_enum, default_value_t = RunMode::Imperative)]
        mode: RunMode,
    },
    /// Compare the imperative and lowered forms across many seeds.
    Diff {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "main")]
        entry: String,
        /// First seed; seeds `seed..seed + seeds` are tried.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
}

#[derive(Args)]
struct Common {
    /// Source files, concatenated into one program.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Json,
    Ast,
    TypedAst,
    Ir,
    IrJson,
}

#[derive(Clone, Copy, ValueEnum)]
enum RunMode {
    Imperative,
    Ir,
}

struct Session {
    sources: SourceMap,
    json_errors: bool,
    output: Option<PathBuf>,
}

impl Session {
    fn color() -> bool {
        match std::env::var("QIMP_COLOR").as_deref() {
            Ok("always") => true,
            Ok("never") => false,
            _ => std::io::stderr().is_terminal(),
        }
    }

    fn emit(&self, text: &str) -> Result<(), ExitCode> {
        match &self.output {
            Some(path) => std::fs::write(path, text).map_err(|e| {
                eprintln!("error: cannot write {}: {e}", path.display());
                ExitCode::IO
            }),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|_| ExitCode::IO)
            }
        }
    }

    fn emit_json(&self, v: &serde_json::Value) -> Result<(), ExitCode> {
        self.emit(&format!("{}\n", serde_json::to_string_pretty(v).expect("json")))
    }

    fn report(&self, diags: &[Diagnostic]) -> Result<(), ExitCode> {
        if self.json_errors {
            self.emit_json(&json!({ "diagnostics": diagnostics::to_json_array(diags) }))
        } else {
            eprint!("{}", diagnostics::render(diags, &self.sources, Self::color()));
            Ok(())
        }
    }

    /// Print a pipeline failure and map it to its exit code.
    fn fail(&self, e: DriverError) -> ExitCode {
        match &e {
            DriverError::Syntax(d) | DriverError::Rejected(d) => {
                if let Err(code) = self.report(d) {
                    return code;
                }
            }
            other => eprintln!("error: {other}"),
        }
        e.exit_code()
    }
}

fn load(common: &Common, json_errors: bool) -> Result<Session, ExitCode> {
    let sources = driver::load(&common.files).map_err(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })?;
    Ok(Session { sources, json_errors, output: common.output.clone() })
}

fn check(common: &Common, emit: Emit) -> Result<(), ExitCode> {
    let s = load(common, emit == Emit::Json)?;
    match emit {
        Emit::Ast => {
            let program = driver::parse(&s.sources).map_err(|e| s.fail(e))?;
            return s.emit_json(&qimp::frontend::ast_json(&program));
        }
        Emit::TypedAst => {
            let (_, typed) = driver::typecheck(&s.sources).map_err(|e| s.fail(e))?;
            return s.emit_json(&serde_json::to_value(&typed).expect("typed program serializes"));
        }
        _ => {}
    }
    match driver::accept(&s.sources) {
        Ok(_) if emit == Emit::Json => s.emit_json(&json!({ "diagnostics": [] })),
        Ok(_) => Ok(()),
        Err(e) => Err(s.fail(e)),
    }
}

fn lower(common: &Common, emit: Emit) -> Result<(), ExitCode> {
    let s = load(common, emit == Emit::Json)?;
    let typed = driver::accept(&s.sources).map_err(|e| s.fail(e))?;
    let module = driver::lower(&typed).map_err(|e| s.fail(e))?;
    match emit {
        Emit::IrJson | Emit::Json => s.emit_json(&module_json(&module)),
        _ => s.emit(&emit_ir_text(&module)),
    }
}

fn run(common: &Common, entry: &str, seed: u64, shots: usize, mode: RunMode) -> Result<(), ExitCode> {
    let s = load(common, false)?;
    let mode = match mode {
        RunMode::Imperative => Mode::Imperative,
        RunMode::Ir => Mode::Ir,
    };
    // The imperative interpreter checks ownership dynamically, so rejected programs still run.
    let typed = match mode {
        Mode::Imperative => {
            let (_, typed) = driver::typecheck(&s.sources).map_err(|e| s.fail(e))?;
            s.report(&qimp::ownership::check_program(&typed))?;
            typed
        }
        Mode::Ir => driver::accept(&s.sources).map_err(|e| s.fail(e))?,
    };
    let transcript = driver::run(&typed, mode, entry, seed, shots).map_err(|e| s.fail(e))?;
    s.emit_json(&transcript.to_json())?;
    match &transcript.error {
        Some(err) => {
            eprintln!("runtime error: {err}");
            Err(ExitCode::RUNTIME)
        }
        None => Ok(()),
    }
}

fn diff(common: &Common, entry: &str, seed: u64, seeds: usize, emit: Emit) -> Result<(), ExitCode> {
    let s = load(common, emit == Emit::Json)?;
    let typed = driver::accept(&s.sources).map_err(|e| s.fail(e))?;
    let found = driver::diff(&typed, entry, seed, seeds).map_err(|e| s.fail(e))?;
    if emit == Emit::Json {
        let divergence = found.as_ref().map(|d| {
            json!({ "seed": d.seed, "detail": d.detail, "imperative": d.imperative.to_json(), "ir": d.ir.to_json() })
        });
        s.emit_json(&json!({ "entry": entry, "seed": seed, "seeds": seeds, "divergence": divergence }))?;
    } else {
        match &found {
            None => s.emit(&format!("{seeds} seeds: transcripts identical\n"))?,
            Some(d) => s.emit(&format!("divergence at seed {}: {}\n", d.seed, d.detail))?,
        }
    }
    match found {
        Some(_) => Err(ExitCode::DIVERGENCE),
        None => Ok(()),
    }
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { common, emit } => check(common, *emit),
        Command::Lower { common, emit } => lower(common, *emit),
        Command::Run { common, entry, seed, shots, mode } => run(common, entry, *seed, *shots, *mode),
        Command::Diff { common, entry, seed, seeds, emit } => diff(common, entry, *seed, *seeds, *emit),
    };
    ProcessExit::from(result.err().unwrap_or(ExitCode::OK).0)
}
