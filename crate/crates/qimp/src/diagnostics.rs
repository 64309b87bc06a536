//! Structured diagnostics with stable codes, JSON encoding and a caret renderer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::span::Span;

/// Stable diagnostic codes.
pub mod codes {
    /// Lexical error.
    pub const LEX: &str = "QS001";
    /// Syntax error.
    pub const PARSE: &str = "QS002";

    pub const UNKNOWN_NAME: &str = "QT001";
    pub const ARITY: &str = "QT002";
    pub const TYPE_MISMATCH: &str = "QT003";
    pub const DYNAMIC_INDEX: &str = "QT004";
    pub const OWNED_CLASSICAL: &str = "QT005";
    pub const DUPLICATE: &str = "QT006";
    pub const UNDEFINED_VAR: &str = "QT007";
    pub const BAD_RETURN: &str = "QT008";
    pub const BAD_LOOP: &str = "QT009";
    pub const ELEMENT_CONSUME: &str = "QT010";
    pub const UNSUPPORTED: &str = "QT011";

    pub const ALREADY_BORROWED: &str = "QB001";
    pub const ALREADY_CONSUMED: &str = "QB002";
    pub const NOT_OWNED: &str = "QB003";
    pub const NOT_CONSUMED: &str = "QB004";
    pub const CONDITIONAL_CONSUME: &str = "QB005";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Note {
    pub message: String,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    pub span: Span,
    pub notes: Vec<Note>,
    pub severity: Severity,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>, span: Span) -> Self {
        Diagnostic {
            code,
            message: message.into(),
            span,
            notes: Vec::new(),
            severity: Severity::Error,
        }
    }

    pub fn with_note(mut self, message: impl Into<String>, span: Option<Span>) -> Self {
        self.notes.push(Note {
            message: message.into(),
            span,
        });
        self
    }

    /// True for the ownership-checker codes (`QB...`).
    pub fn is_ownership(&self) -> bool {
        self.code.starts_with("QB")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "code": self.code,
            "message": self.message,
            "span": span_json(&self.span),
            "notes": self
                .notes
                .iter()
                .map(|n| json!({
                    "message": n.message,
                    "span": n.span.as_ref().map(span_json),
                }))
                .collect::<Vec<_>>(),
        })
    }
}

fn span_json(span: &Span) -> Value {
    json!({
        "file": &*span.file,
        "line": span.start_line,
        "col": span.start_col,
        "end_line": span.end_line,
        "end_col": span.end_col,
    })
}

/// Sort by position, as reported to users.
pub fn sort(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (&a.span.file, a.span.start(), a.code).cmp(&(&b.span.file, b.span.start(), b.code))
    });
}

pub fn to_json_array(diags: &[Diagnostic]) -> Value {
    Value::Array(diags.iter().map(Diagnostic::to_json).collect())
}

/// Source texts by file name, used to render excerpts.
#[derive(Debug, Default, Clone)]
pub struct SourceMap {
    files: BTreeMap<Arc<str>, String>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, text: impl Into<String>) -> Arc<str> {
        let name: Arc<str> = Arc::from(name);
        self.files.insert(name.clone(), text.into());
        name
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.get(name).map(String::as_str)
    }

    pub fn files(&self) -> impl Iterator<Item = (&Arc<str>, &String)> {
        self.files.iter()
    }

    fn line(&self, file: &str, line: u32) -> Option<&str> {
        let text = self.get(file)?;
        text.lines()
            .nth(line.checked_sub(1)? as usize)
            .map(|l| l.trim_end_matches('\r'))
    }
}

const RED_BOLD: &str = "\x1b[1;31m";
const BLUE_BOLD: &str = "\x1b[1;34m";
const BOLD: &str = "\x1b[1m";
const RESET: &str = "\x1b[0m";

/// Render diagnostics as human-readable text with caret-annotated excerpts.
pub fn render(diags: &[Diagnostic], sources: &SourceMap, color: bool) -> String {
    let mut out = String::new();
    for d in diags {
        render_one(&mut out, d, sources, color);
        out.push('\n');
    }
    out
}

fn render_one(out: &mut String, d: &Diagnostic, sources: &SourceMap, color: bool) {
    let (err, blue, bold, reset) = if color {
        (RED_BOLD, BLUE_BOLD, BOLD, RESET)
    } else {
        ("", "", "", "")
    };
    let _ = writeln!(out, "{err}error[{}]{reset}{bold}: {}{reset}", d.code, d.message);
    excerpt(out, &d.span, '^', sources, (err, blue, reset));
    for note in &d.notes {
        match &note.span {
            Some(span) => {
                let _ = writeln!(out, "{blue}note{reset}: {}", note.message);
                excerpt(out, span, '-', sources, (blue, blue, reset));
            }
            None => {
                let _ = writeln!(out, "  {blue}={reset} note: {}", note.message);
            }
        }
    }
}

fn excerpt(out: &mut String, span: &Span, mark: char, sources: &SourceMap, c: (&str, &str, &str)) {
    let (mark_color, gutter, reset) = c;
    let width = span.start_line.to_string().len();
    let pad = " ".repeat(width);
    let _ = writeln!(out, "{pad}{gutter}-->{reset} {span}");
    let Some(line) = sources.line(&span.file, span.start_line) else {
        return;
    };
    let _ = writeln!(out, "{pad} {gutter}|{reset}");
    let _ = writeln!(out, "{gutter}{}{reset} {gutter}|{reset} {line}", span.start_line);
    let line_len = line.chars().count() as u32;
    let start = span.start_col.max(1);
    let end = if span.end_line == span.start_line {
        span.end_col.max(start + 1)
    } else {
        line_len + 1
    };
    let lead: String = line
        .chars()
        .take(start as usize - 1)
        .map(|ch| if ch == '\t' { '\t' } else { ' ' })
        .collect();
    let marks: String = std::iter::repeat_n(mark, (end - start) as usize).collect();
    let _ = writeln!(out, "{pad} {gutter}|{reset} {lead}{mark_color}{marks}{reset}");
}
