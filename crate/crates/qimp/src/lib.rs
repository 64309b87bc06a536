//! QImp: an imperative quantum mini-language with qubit ownership and borrowing.
//!
//! The pipeline is split into the following stages:
//!
//! - [`frontend`]: lexing and parsing of `.qimp` sources into an [`frontend::ast::Program`].
//! - [`types`]: the semantic type universe, places, builtins and type resolution.
//! - [`ownership`]: the flow-sensitive ownership and borrow checker.
//! - [`lowering`]: translation of accepted programs into a pure dataflow graph IR.
//! - [`sim`]: a seeded statevector backend with an imperative interpreter and an IR evaluator.
//!
//! [`driver`] glues the stages together and [`testgen`] produces random programs for
//! differential and soundness testing.

pub mod diagnostics;
pub mod driver;
pub mod frontend;
pub mod lowering;
pub mod ownership;
pub mod sim;
pub mod span;
pub mod testgen;
pub mod types;

pub use diagnostics::Diagnostic;
pub use span::Span;
