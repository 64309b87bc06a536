use std::fmt;
use std::sync::Arc;

use serde::Serialize;

/// A region of source text. Lines and columns are 1-based; `end_col` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub file: Arc<str>,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(file: Arc<str>, start: (u32, u32), end: (u32, u32)) -> Self {
        Span {
            file,
            start_line: start.0,
            start_col: start.1,
            end_line: end.0,
            end_col: end.1,
        }
    }

    /// Placeholder span used for synthesized nodes.
    pub fn dummy() -> Self {
        Span::new(Arc::from(""), (0, 0), (0, 0))
    }

    pub fn start(&self) -> (u32, u32) {
        (self.start_line, self.start_col)
    }

    pub fn end(&self) -> (u32, u32) {
        (self.end_line, self.end_col)
    }

    /// The smallest span covering both `self` and `other`.
    pub fn to(&self, other: &Span) -> Span {
        Span {
            file: self.file.clone(),
            start_line: self.start().min(other.start()).0,
            start_col: self.start().min(other.start()).1,
            end_line: self.end().max(other.end()).0,
            end_col: self.end().max(other.end()).1,
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.file == other.file && self.start() <= other.start() && other.end() <= self.end()
    }

    /// Short `file:line:col` label used for measurement and assertion sites.
    pub fn site(&self) -> String {
        format!("{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}
