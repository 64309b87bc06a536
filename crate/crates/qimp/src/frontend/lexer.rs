//! Indentation-aware tokenizer.
//!
//! Leading whitespace is turned into `Indent`/`Dedent` tokens the way Python does it.
//! Blank and comment-only lines produce nothing, and newlines inside brackets are
//! ignored. A `Newline` token is emitted for every logical line that is terminated by a
//! line break; the final line of a file without a trailing newline just ends at EOF.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::diagnostics::{codes, Diagnostic};
use crate::span::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),

    Def,
    Class,
    If,
    Elif,
    Else,
    While,
    For,
    In,
    Return,
    Assert,
    And,
    Or,
    Not,
    True,
    False,

    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Arrow,
    Equals,
    PlusEq,
    MinusEq,
    StarEq,
    Plus,
    Minus,
    Star,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AtOwned,

    Newline,
    Indent,
    Dedent,
}

impl TokenKind {
    fn keyword(word: &str) -> Option<TokenKind> {
        Some(match word {
            "def" => TokenKind::Def,
            "class" => TokenKind::Class,
            "if" => TokenKind::If,
            "elif" => TokenKind::Elif,
            "else" => TokenKind::Else,
            "while" => TokenKind::While,
            "for" => TokenKind::For,
            "in" => TokenKind::In,
            "return" => TokenKind::Return,
            "assert" => TokenKind::Assert,
            "and" => TokenKind::And,
            "or" => TokenKind::Or,
            "not" => TokenKind::Not,
            "True" => TokenKind::True,
            "False" => TokenKind::False,
            _ => return None,
        })
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Ident(name) => return write!(f, "identifier `{name}`"),
            TokenKind::Int(v) => return write!(f, "integer `{v}`"),
            TokenKind::Float(v) => return write!(f, "float `{v:?}`"),
            TokenKind::Def => "`def`",
            TokenKind::Class => "`class`",
            TokenKind::If => "`if`",
            TokenKind::Elif => "`elif`",
            TokenKind::Else => "`else`",
            TokenKind::While => "`while`",
            TokenKind::For => "`for`",
            TokenKind::In => "`in`",
            TokenKind::Return => "`return`",
            TokenKind::Assert => "`assert`",
            TokenKind::And => "`and`",
            TokenKind::Or => "`or`",
            TokenKind::Not => "`not`",
            TokenKind::True => "`True`",
            TokenKind::False => "`False`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBracket => "`[`",
            TokenKind::RBracket => "`]`",
            TokenKind::Comma => "`,`",
            TokenKind::Colon => "`:`",
            TokenKind::Dot => "`.`",
            TokenKind::Arrow => "`->`",
            TokenKind::Equals => "`=`",
            TokenKind::PlusEq => "`+=`",
            TokenKind::MinusEq => "`-=`",
            TokenKind::StarEq => "`*=`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::EqEq => "`==`",
            TokenKind::NotEq => "`!=`",
            TokenKind::Lt => "`<`",
            TokenKind::Le => "`<=`",
            TokenKind::Gt => "`>`",
            TokenKind::Ge => "`>=`",
            TokenKind::AtOwned => "`@owned`",
            TokenKind::Newline => "newline",
            TokenKind::Indent => "indent",
            TokenKind::Dedent => "dedent",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{span}: {message}")]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

impl From<LexError> for Diagnostic {
    fn from(e: LexError) -> Self {
        Diagnostic::error(codes::LEX, e.message, e.span)
    }
}

/// Tokenize source text attributed to the anonymous file `<input>`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    tokenize_file("<input>", source)
}

pub fn tokenize_file(file: &str, source: &str) -> Result<Vec<Token>, LexError> {
    Lexer {
        file: Arc::from(file),
        tokens: Vec::new(),
        indents: vec![0],
        depth: 0,
    }
    .run(source)
}

struct Lexer {
    file: Arc<str>,
    tokens: Vec<Token>,
    indents: Vec<u32>,
    depth: u32,
}

impl Lexer {
    fn span(&self, line: u32, start: u32, end: u32) -> Span {
        Span::new(self.file.clone(), (line, start), (line, end))
    }

    fn err(&self, line: u32, col: u32, message: impl Into<String>) -> LexError {
        LexError {
            message: message.into(),
            span: self.span(line, col, col + 1),
        }
    }

    fn push(&mut self, kind: TokenKind, line: u32, start: u32, end: u32) {
        let span = self.span(line, start, end);
        self.tokens.push(Token { kind, span });
    }

    fn run(mut self, source: &str) -> Result<Vec<Token>, LexError> {
        let mut last_line = 1;
        for (idx, raw) in source.split_inclusive('\n').enumerate() {
            let line_no = idx as u32 + 1;
            last_line = line_no;
            let terminated = raw.ends_with('\n');
            let text = raw.trim_end_matches('\n').trim_end_matches('\r');
            let chars: Vec<char> = text.chars().collect();
            let mut i = 0;

            if self.depth == 0 {
                let mut width = 0u32;
                while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                    if chars[i] == '\t' {
                        return Err(self.err(line_no, i as u32 + 1, "tabs are not allowed in indentation"));
                    }
                    width += 1;
                    i += 1;
                }
                if i == chars.len() || chars[i] == '#' {
                    continue;
                }
                self.indent_to(width, line_no)?;
            }

            let before = self.tokens.len();
            self.lex_line(&chars, i, line_no)?;
            let produced = self.tokens.len() > before;
            if terminated && self.depth == 0 && produced {
                let col = chars.len() as u32 + 1;
                self.push(TokenKind::Newline, line_no, col, col + 1);
            }
        }
        if self.depth > 0 {
            return Err(self.err(last_line, 1, "unclosed bracket at end of input"));
        }
        let end_col = source.lines().last().map(|l| l.chars().count() as u32 + 1).unwrap_or(1);
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokenKind::Dedent, last_line, end_col, end_col);
        }
        Ok(self.tokens)
    }

    fn indent_to(&mut self, width: u32, line: u32) -> Result<(), LexError> {
        let top = *self.indents.last().unwrap();
        if width > top {
            self.indents.push(width);
            self.push(TokenKind::Indent, line, 1, width + 1);
        } else if width < top {
            while *self.indents.last().unwrap() > width {
                self.indents.pop();
                self.push(TokenKind::Dedent, line, 1, width + 1);
            }
            if *self.indents.last().unwrap() != width {
                return Err(self.err(line, 1, "inconsistent indentation: dedent does not match any outer level"));
            }
        }
        Ok(())
    }

    fn lex_line(&mut self, chars: &[char], mut i: usize, line: u32) -> Result<(), LexError> {
        while i < chars.len() {
            let c = chars[i];
            let col = i as u32 + 1;
            if c == ' ' || c == '\t' {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let kind = TokenKind::keyword(&word).unwrap_or(TokenKind::Ident(word));
                self.push(kind, line, col, i as u32 + 1);
                continue;
            }
            if c.is_ascii_digit() {
                let (kind, end) = self.number(chars, i, line)?;
                self.push(kind, line, col, end as u32 + 1);
                i = end;
                continue;
            }
            if c == '@' {
                let start = i + 1;
                let mut end = start;
                while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '_') {
                    end += 1;
                }
                let word: String = chars[start..end].iter().collect();
                if word != "owned" {
                    return Err(self.err(line, col, "`@` must be followed by `owned`"));
                }
                self.push(TokenKind::AtOwned, line, col, end as u32 + 1);
                i = end;
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (kind, len) = match (c, next) {
                ('-', Some('>')) => (TokenKind::Arrow, 2),
                ('+', Some('=')) => (TokenKind::PlusEq, 2),
                ('-', Some('=')) => (TokenKind::MinusEq, 2),
                ('*', Some('=')) => (TokenKind::StarEq, 2),
                ('=', Some('=')) => (TokenKind::EqEq, 2),
                ('!', Some('=')) => (TokenKind::NotEq, 2),
                ('<', Some('=')) => (TokenKind::Le, 2),
                ('>', Some('=')) => (TokenKind::Ge, 2),
                ('<', _) => (TokenKind::Lt, 1),
                ('>', _) => (TokenKind::Gt, 1),
                ('+', _) => (TokenKind::Plus, 1),
                ('-', _) => (TokenKind::Minus, 1),
                ('*', _) => (TokenKind::Star, 1),
                ('=', _) => (TokenKind::Equals, 1),
                ('(', _) => (TokenKind::LParen, 1),
                (')', _) => (TokenKind::RParen, 1),
                ('[', _) => (TokenKind::LBracket, 1),
                (']', _) => (TokenKind::RBracket, 1),
                (',', _) => (TokenKind::Comma, 1),
                (':', _) => (TokenKind::Colon, 1),
                ('.', _) => (TokenKind::Dot, 1),
                _ => return Err(self.err(line, col, format!("illegal character `{c}`"))),
            };
            match kind {
                TokenKind::LParen | TokenKind::LBracket => self.depth += 1,
                TokenKind::RParen | TokenKind::RBracket => {
                    if self.depth == 0 {
                        return Err(self.err(line, col, format!("unmatched `{c}`")));
                    }
                    self.depth -= 1;
                }
                _ => {}
            }
            self.push(kind, line, col, col + len);
            i += len as usize;
        }
        Ok(())
    }

    fn number(&self, chars: &[char], start: usize, line: u32) -> Result<(TokenKind, usize), LexError> {
        let mut i = start;
        let digits = |i: &mut usize| {
            while *i < chars.len() && chars[*i].is_ascii_digit() {
                *i += 1;
            }
        };
        digits(&mut i);
        let mut is_float = false;
        if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
            is_float = true;
            i += 1;
            digits(&mut i);
        }
        if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
            let mut j = i + 1;
            if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                j += 1;
            }
            if j < chars.len() && chars[j].is_ascii_digit() {
                is_float = true;
                i = j;
                digits(&mut i);
            }
        }
        let text: String = chars[start..i].iter().collect();
        let col = start as u32 + 1;
        let kind = if is_float {
            TokenKind::Float(text.parse().map_err(|_| self.err(line, col, "malformed float literal"))?)
        } else {
            TokenKind::Int(
                text.parse()
                    .map_err(|_| self.err(line, col, "integer literal out of range"))?,
            )
        };
        Ok((kind, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn id(s: &str) -> TokenKind {
        Ident(s.to_string())
    }

    #[test]
    fn tuple_allocation_line() {
        assert_eq!(
            kinds("q1, q2 = qubit(), qubit()"),
            vec![id("q1"), Comma, id("q2"), Equals, id("qubit"), LParen, RParen, Comma, id("qubit"), LParen, RParen]
        );
    }

    #[test]
    fn empty_input() {
        assert!(kinds("").is_empty());
    }

    #[test]
    fn owned_marker() {
        assert_eq!(kinds("q @owned"), vec![id("q"), AtOwned]);
    }

    #[test]
    fn indentation_and_comments() {
        let src = "def f():\n   # note\n   h(q)  # gate\n\n   x(q)\n";
        assert_eq!(
            kinds(src),
            vec![
                Def, id("f"), LParen, RParen, Colon, Newline,
                Indent, id("h"), LParen, id("q"), RParen, Newline,
                id("x"), LParen, id("q"), RParen, Newline,
                Dedent,
            ]
        );
    }

    #[test]
    fn newlines_inside_brackets_are_joined() {
        let src = "f(a,\n  b)\n";
        assert_eq!(kinds(src), vec![id("f"), LParen, id("a"), Comma, id("b"), RParen, Newline]);
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("1 2.5 1e-3 3.0e2"), vec![Int(1), Float(2.5), Float(1e-3), Float(300.0)]);
    }

    #[test]
    fn spans_are_one_based() {
        let toks = tokenize("ab  cd").unwrap();
        assert_eq!(toks[1].span.start(), (1, 5));
        assert_eq!(toks[1].span.end(), (1, 7));
    }

    #[test]
    fn illegal_character() {
        let err = tokenize("a $ b").unwrap_err();
        assert_eq!(err.span.start(), (1, 3));
        assert!(err.message.contains("illegal character"));
    }

    #[test]
    fn inconsistent_dedent() {
        let err = tokenize("def f():\n    a\n  b\n").unwrap_err();
        assert!(err.message.contains("inconsistent indentation"));
        assert_eq!(err.span.start_line, 3);
    }

    #[test]
    fn bad_decorator() {
        assert!(tokenize("q @borrowed").is_err());
    }

    #[test]
    fn dedents_flushed_at_eof() {
        let k = kinds("def f():\n  if c:\n    h(q)");
        assert_eq!(k.iter().filter(|t| **t == Dedent).count(), 2);
        assert_eq!(k.last(), Some(&Dedent));
    }
}
