//! Recursive-descent parser over the token stream produced by the lexer.

use thiserror::Error;

use super::ast::*;
use super::lexer::{Token, TokenKind};
use crate::diagnostics::{codes, Diagnostic};
use crate::span::Span;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
    pub expected: Vec<String>,
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        let d = Diagnostic::error(codes::PARSE, e.message, e.span);
        if e.expected.is_empty() {
            d
        } else {
            d.with_note(format!("expected one of: {}", e.expected.join(", ")), None)
        }
    }
}

type PResult<T> = Result<T, ParseError>;

pub fn parse(tokens: &[Token]) -> PResult<Program> {
    Parser { tokens, pos: 0 }.program()
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn here(&self) -> Span {
        match self.tokens.get(self.pos) {
            Some(t) => t.span.clone(),
            None => match self.tokens.last() {
                Some(t) => {
                    let (l, c) = t.span.end();
                    Span::new(t.span.file.clone(), (l, c), (l, c))
                }
                None => Span::dummy(),
            },
        }
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos - 1].span.clone()
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, what: &[&str]) -> PResult<T> {
        let found = match self.peek() {
            Some(k) => k.to_string(),
            None => "end of input".to_string(),
        };
        Err(ParseError {
            message: format!("expected {}, found {found}", what.join(" or ")),
            span: self.here(),
            expected: what.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Span> {
        if self.at(&kind) {
            Ok(self.bump().span.clone())
        } else {
            self.error(&[&kind.to_string()])
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                let span = self.bump().span.clone();
                Ok(Ident { name, span })
            }
            _ => self.error(&["identifier"]),
        }
    }

    /// Accepts the end of a simple statement: a newline, or an implicit one before a
    /// dedent or the end of input.
    fn end_of_line(&mut self) -> PResult<()> {
        match self.peek() {
            Some(TokenKind::Newline) => {
                self.pos += 1;
                Ok(())
            }
            Some(TokenKind::Dedent) | None => Ok(()),
            _ => self.error(&["newline"]),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut items = Vec::new();
        while let Some(kind) = self.peek() {
            match kind {
                TokenKind::Newline => {
                    self.pos += 1;
                }
                TokenKind::Def => items.push(Item::Func(self.func()?)),
                TokenKind::Class => items.push(Item::Struct(self.class()?)),
                _ => return self.error(&["`def`", "`class`"]),
            }
        }
        Ok(Program { items })
    }

    fn class(&mut self) -> PResult<StructDecl> {
        let start = self.expect(TokenKind::Class)?;
        let name = self.ident()?;
        self.expect(TokenKind::Colon)?;
        self.expect(TokenKind::Newline)?;
        self.expect(TokenKind::Indent)?;
        let mut fields = Vec::new();
        loop {
            let fname = self.ident()?;
            self.expect(TokenKind::Colon)?;
            let ty = self.type_expr()?;
            let span = fname.span.to(&ty.span);
            fields.push(FieldDecl { name: fname, ty, span });
            self.end_of_line()?;
            if self.eat(&TokenKind::Dedent) || self.peek().is_none() {
                break;
            }
        }
        let span = start.to(&fields.last().unwrap().span);
        Ok(StructDecl { name, fields, span })
    }

    fn func(&mut self) -> PResult<FuncDecl> {
        let start = self.expect(TokenKind::Def)?;
        let name = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut params = Vec::new();
        while !self.at(&TokenKind::RParen) {
            let pname = self.ident()?;
            self.expect(TokenKind::Colon)?;
            let ty = self.type_expr()?;
            let mut span = pname.span.to(&ty.span);
            let mode = if self.eat(&TokenKind::AtOwned) {
                span = span.to(&self.prev_span());
                OwnershipMode::Owned
            } else {
                OwnershipMode::Borrowed
            };
            params.push(Param { name: pname, ty, mode, span });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(TokenKind::RParen)?;
        let mut returns = Vec::new();
        if self.eat(&TokenKind::Arrow) {
            if self.eat(&TokenKind::LParen) {
                loop {
                    returns.push(self.type_expr()?);
                    if !self.eat(&TokenKind::Comma) || self.at(&TokenKind::RParen) {
                        break;
                    }
                }
                self.expect(TokenKind::RParen)?;
            } else {
                returns.push(self.type_expr()?);
            }
        }
        self.expect(TokenKind::Colon)?;
        let body = self.block()?;
        let span = start.to(&body.span);
        Ok(FuncDecl { name, params, returns, body, span })
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let name = self.ident()?;
        if name.name == "array" && self.at(&TokenKind::LBracket) {
            self.bump();
            let elem = self.type_expr()?;
            self.expect(TokenKind::Comma)?;
            let len = match self.peek() {
                Some(TokenKind::Int(n)) => *n,
                _ => return self.error(&["array length"]),
            };
            self.bump();
            let end = self.expect(TokenKind::RBracket)?;
            return Ok(TypeExpr {
                kind: TypeExprKind::Array { elem: Box::new(elem), len },
                span: name.span.to(&end),
            });
        }
        Ok(TypeExpr {
            span: name.span.clone(),
            kind: TypeExprKind::Named { name: name.name },
        })
    }

    /// `NEWLINE INDENT stmt+ DEDENT`
    fn block(&mut self) -> PResult<Block> {
        if !self.at(&TokenKind::Newline) {
            return self.error(&["newline followed by an indented block"]);
        }
        self.bump();
        if !self.at(&TokenKind::Indent) {
            return self.error(&["indented block"]);
        }
        self.bump();
        let mut stmts = Vec::new();
        while !self.eat(&TokenKind::Dedent) {
            if self.peek().is_none() {
                break;
            }
            stmts.push(self.stmt()?);
        }
        if stmts.is_empty() {
            return self.error(&["statement"]);
        }
        let span = stmts[0].span.to(&stmts.last().unwrap().span);
        Ok(Block { stmts, span })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek() {
            Some(TokenKind::If) => self.if_stmt(),
            Some(TokenKind::While) => {
                let start = self.bump().span.clone();
                let cond = self.expr()?;
                self.expect(TokenKind::Colon)?;
                let body = self.block()?;
                let span = start.to(&body.span);
                Ok(Stmt { kind: StmtKind::While { cond, body }, span })
            }
            Some(TokenKind::For) => {
                let start = self.bump().span.clone();
                let var = self.ident()?;
                self.expect(TokenKind::In)?;
                let iter = self.expr()?;
                self.expect(TokenKind::Colon)?;
                let body = self.block()?;
                let span = start.to(&body.span);
                Ok(Stmt { kind: StmtKind::For { var, iter, body }, span })
            }
            Some(TokenKind::Return) => {
                let start = self.bump().span.clone();
                let mut values = Vec::new();
                if !matches!(self.peek(), Some(TokenKind::Newline) | Some(TokenKind::Dedent) | None) {
                    values = self.expr_list()?;
                }
                let span = values.last().map_or(start.clone(), |v| start.to(&v.span));
                self.end_of_line()?;
                Ok(Stmt { kind: StmtKind::Return { values }, span })
            }
            Some(TokenKind::Assert) => {
                let start = self.bump().span.clone();
                let cond = self.expr()?;
                let span = start.to(&cond.span);
                self.end_of_line()?;
                Ok(Stmt { kind: StmtKind::Assert { cond }, span })
            }
            Some(TokenKind::Def) | Some(TokenKind::Class) => {
                self.error(&["statement (nested definitions are not supported)"])
            }
            _ => self.simple_stmt(),
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect(TokenKind::If)?;
        let cond = self.expr()?;
        self.expect(TokenKind::Colon)?;
        let then_block = self.block()?;
        let mut end = then_block.span.clone();
        let mut elifs = Vec::new();
        while self.at(&TokenKind::Elif) {
            self.bump();
            let c = self.expr()?;
            self.expect(TokenKind::Colon)?;
            let b = self.block()?;
            end = b.span.clone();
            elifs.push((c, b));
        }
        let mut else_block = None;
        if self.eat(&TokenKind::Else) {
            self.expect(TokenKind::Colon)?;
            let b = self.block()?;
            end = b.span.clone();
            else_block = Some(b);
        }
        Ok(Stmt {
            kind: StmtKind::If { cond, then_block, elifs, else_block },
            span: start.to(&end),
        })
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let lhs = self.expr_list()?;
        let start = lhs[0].span.clone();
        let aug = match self.peek() {
            Some(TokenKind::PlusEq) => Some(BinOp::Add),
            Some(TokenKind::MinusEq) => Some(BinOp::Sub),
            Some(TokenKind::StarEq) => Some(BinOp::Mul),
            _ => None,
        };
        let stmt = if let Some(op) = aug {
            if lhs.len() != 1 {
                return Err(ParseError {
                    message: "augmented assignment needs a single target".into(),
                    span: start.to(&lhs.last().unwrap().span),
                    expected: vec![],
                });
            }
            self.bump();
            let value = self.expr()?;
            let span = start.to(&value.span);
            let target = lhs.into_iter().next().unwrap();
            Stmt { kind: StmtKind::AugAssign { target, op, value }, span }
        } else if self.eat(&TokenKind::Equals) {
            let values = self.expr_list()?;
            let value = tuple_or_single(values);
            let span = start.to(&value.span);
            Stmt { kind: StmtKind::Assign { targets: lhs, value }, span }
        } else {
            let expr = tuple_or_single(lhs);
            Stmt { span: expr.span.clone(), kind: StmtKind::Expr { expr } }
        };
        self.end_of_line()?;
        Ok(stmt)
    }

    fn expr_list(&mut self) -> PResult<Vec<Expr>> {
        let mut out = vec![self.expr()?];
        while self.eat(&TokenKind::Comma) {
            out.push(self.expr()?);
        }
        Ok(out)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = if min_prec <= 3 && self.at(&TokenKind::Not) {
            let start = self.bump().span.clone();
            let operand = self.binary(3)?;
            let span = start.to(&operand.span);
            Expr { kind: ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) }, span }
        } else {
            self.unary()?
        };
        while let Some(op) = self.peek().and_then(binop_of) {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            if op.is_comparison() {
                if let Some(next) = self.peek().and_then(binop_of) {
                    if next.is_comparison() {
                        return Err(ParseError {
                            message: "chained comparisons are not supported".into(),
                            span: self.here(),
                            expected: vec![],
                        });
                    }
                }
            }
            let span = lhs.span.to(&rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at(&TokenKind::Minus) {
            let start = self.bump().span.clone();
            let operand = self.unary()?;
            let span = start.to(&operand.span);
            return Ok(Expr { kind: ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand) }, span });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat(&TokenKind::Dot) {
                let field = self.ident()?;
                let span = e.span.to(&field.span);
                e = Expr { kind: ExprKind::Field { base: Box::new(e), field }, span };
            } else if self.eat(&TokenKind::LBracket) {
                let index = self.expr()?;
                let end = self.expect(TokenKind::RBracket)?;
                let span = e.span.to(&end);
                e = Expr { kind: ExprKind::Index { base: Box::new(e), index: Box::new(index) }, span };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let span = self.here();
        let kind = match self.peek() {
            Some(TokenKind::Int(v)) => ExprKind::Int { value: *v },
            Some(TokenKind::Float(v)) => ExprKind::Float { value: *v },
            Some(TokenKind::True) => ExprKind::Bool { value: true },
            Some(TokenKind::False) => ExprKind::Bool { value: false },
            Some(TokenKind::Ident(_)) => {
                if self.peek_at(1) == Some(&TokenKind::LParen) {
                    return self.call();
                }
                let id = self.ident()?;
                return Ok(Expr { kind: ExprKind::Name { name: id.name }, span: id.span });
            }
            Some(TokenKind::LParen) => {
                self.bump();
                let mut elems = vec![self.expr()?];
                let mut trailing = false;
                while self.eat(&TokenKind::Comma) {
                    if self.at(&TokenKind::RParen) {
                        trailing = true;
                        break;
                    }
                    elems.push(self.expr()?);
                }
                let end = self.expect(TokenKind::RParen)?;
                let span = span.to(&end);
                if elems.len() == 1 && !trailing {
                    let mut inner = elems.pop().unwrap();
                    inner.span = span;
                    return Ok(inner);
                }
                return Ok(Expr { kind: ExprKind::Tuple { elems }, span });
            }
            _ => return self.error(&["expression"]),
        };
        self.bump();
        Ok(Expr { kind, span })
    }

    fn call(&mut self) -> PResult<Expr> {
        let func = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        while !self.at(&TokenKind::RParen) {
            let name = if matches!(self.peek(), Some(TokenKind::Ident(_))) && self.peek_at(1) == Some(&TokenKind::Equals) {
                let n = self.ident()?;
                self.bump();
                Some(n)
            } else {
                None
            };
            let value = self.expr()?;
            args.push(Arg { name, value });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        let end = self.expect(TokenKind::RParen)?;
        let span = func.span.to(&end);
        Ok(Expr { kind: ExprKind::Call { func, args }, span })
    }
}

fn binop_of(kind: &TokenKind) -> Option<BinOp> {
    Some(match kind {
        TokenKind::Plus => BinOp::Add,
        TokenKind::Minus => BinOp::Sub,
        TokenKind::Star => BinOp::Mul,
        TokenKind::EqEq => BinOp::Eq,
        TokenKind::NotEq => BinOp::Ne,
        TokenKind::Lt => BinOp::Lt,
        TokenKind::Le => BinOp::Le,
        TokenKind::Gt => BinOp::Gt,
        TokenKind::Ge => BinOp::Ge,
        TokenKind::And => BinOp::And,
        TokenKind::Or => BinOp::Or,
        _ => return None,
    })
}

fn tuple_or_single(mut exprs: Vec<Expr>) -> Expr {
    if exprs.len() == 1 {
        return exprs.pop().unwrap();
    }
    let span = exprs[0].span.to(&exprs.last().unwrap().span);
    Expr { kind: ExprKind::Tuple { elems: exprs }, span }
}
