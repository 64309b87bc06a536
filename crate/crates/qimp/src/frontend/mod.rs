//! Lexing, parsing and printing of QImp source text.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use ast::{OwnershipMode, Program};
pub use lexer::{tokenize, tokenize_file, LexError, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use printer::print_program;

use crate::diagnostics::Diagnostic;

/// Tokenize and parse one source file.
pub fn parse_source(file: &str, source: &str) -> Result<Program, Diagnostic> {
    let tokens = tokenize_file(file, source)?;
    Ok(parse(&tokens)?)
}

/// Deterministic JSON form of the syntax tree.
pub fn ast_json(program: &Program) -> serde_json::Value {
    serde_json::to_value(program).expect("AST serialization is infallible")
}

#[cfg(test)]
mod tests;
