//! Untyped syntax tree. Every node carries exactly one [`Span`].

use std::fmt;

use serde::Serialize;

use crate::span::Span;

/// How a parameter receives a quantum argument. Borrowing is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Default)]
pub enum OwnershipMode {
    #[default]
    Borrowed,
    Owned,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn structs(&self) -> impl Iterator<Item = &StructDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Struct(s) => Some(s),
            Item::Func(_) => None,
        })
    }

    pub fn functions(&self) -> impl Iterator<Item = &FuncDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Func(f) => Some(f),
            Item::Struct(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Item {
    Struct(StructDecl),
    Func(FuncDecl),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructDecl {
    pub name: Ident,
    pub fields: Vec<FieldDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDecl {
    pub name: Ident,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuncDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub returns: Vec<TypeExpr>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: Ident,
    pub ty: TypeExpr,
    pub mode: OwnershipMode,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeExpr {
    #[serde(flatten)]
    pub kind: TypeExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum TypeExprKind {
    Named { name: String },
    Array { elem: Box<TypeExpr>, len: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stmt {
    #[serde(flatten)]
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum StmtKind {
    /// `a, b = e1, e2`; a multi-valued right-hand side is a [`ExprKind::Tuple`].
    Assign { targets: Vec<Expr>, value: Expr },
    AugAssign { target: Expr, op: BinOp, value: Expr },
    Expr { expr: Expr },
    Return { values: Vec<Expr> },
    Assert { cond: Expr },
    If {
        cond: Expr,
        then_block: Block,
        elifs: Vec<(Expr, Block)>,
        else_block: Option<Block>,
    },
    While { cond: Expr, body: Block },
    For { var: Ident, iter: Expr, body: Block },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expr {
    #[serde(flatten)]
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum ExprKind {
    Int { value: i64 },
    Float { value: f64 },
    Bool { value: bool },
    Name { name: String },
    Field { base: Box<Expr>, field: Ident },
    Index { base: Box<Expr>, index: Box<Expr> },
    Call { func: Ident, args: Vec<Arg> },
    Tuple { elems: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arg {
    pub name: Option<Ident>,
    pub value: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnOp {
    Neg,
    Not,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "not",
        }
    }
}

impl Expr {
    /// Re-anchor every span of the subtree to the dummy span.
    fn strip(&mut self) {
        self.span = Span::dummy();
        match &mut self.kind {
            ExprKind::Int { .. } | ExprKind::Float { .. } | ExprKind::Bool { .. } | ExprKind::Name { .. } => {}
            ExprKind::Field { base, field } => {
                base.strip();
                field.span = Span::dummy();
            }
            ExprKind::Index { base, index } => {
                base.strip();
                index.strip();
            }
            ExprKind::Call { func, args } => {
                func.span = Span::dummy();
                for a in args {
                    if let Some(n) = &mut a.name {
                        n.span = Span::dummy();
                    }
                    a.value.strip();
                }
            }
            ExprKind::Tuple { elems } => elems.iter_mut().for_each(Expr::strip),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.strip();
                rhs.strip();
            }
            ExprKind::Unary { operand, .. } => operand.strip(),
        }
    }

    /// Visit this expression and all sub-expressions, parents first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Int { .. } | ExprKind::Float { .. } | ExprKind::Bool { .. } | ExprKind::Name { .. } => {}
            ExprKind::Field { base, .. } => base.walk(f),
            ExprKind::Index { base, index } => {
                base.walk(f);
                index.walk(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.value.walk(f)),
            ExprKind::Tuple { elems } => elems.iter().for_each(|e| e.walk(f)),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Unary { operand, .. } => operand.walk(f),
        }
    }
}

impl TypeExpr {
    fn strip(&mut self) {
        self.span = Span::dummy();
        if let TypeExprKind::Array { elem, .. } = &mut self.kind {
            elem.strip();
        }
    }
}

impl Block {
    fn strip(&mut self) {
        self.span = Span::dummy();
        for s in &mut self.stmts {
            s.strip();
        }
    }
}

impl Stmt {
    fn strip(&mut self) {
        self.span = Span::dummy();
        match &mut self.kind {
            StmtKind::Assign { targets, value } => {
                targets.iter_mut().for_each(Expr::strip);
                value.strip();
            }
            StmtKind::AugAssign { target, value, .. } => {
                target.strip();
                value.strip();
            }
            StmtKind::Expr { expr } => expr.strip(),
            StmtKind::Return { values } => values.iter_mut().for_each(Expr::strip),
            StmtKind::Assert { cond } => cond.strip(),
            StmtKind::If { cond, then_block, elifs, else_block } => {
                cond.strip();
                then_block.strip();
                for (c, b) in elifs {
                    c.strip();
                    b.strip();
                }
                if let Some(b) = else_block {
                    b.strip();
                }
            }
            StmtKind::While { cond, body } => {
                cond.strip();
                body.strip();
            }
            StmtKind::For { var, iter, body } => {
                var.span = Span::dummy();
                iter.strip();
                body.strip();
            }
        }
    }

    /// All spans directly or transitively owned by this statement, paired with the
    /// span of their immediate parent node.
    pub fn span_pairs<'a>(&'a self, out: &mut Vec<(&'a Span, &'a Span)>) {
        let parent = &self.span;
        let expr = |e: &'a Expr, out: &mut Vec<(&'a Span, &'a Span)>| {
            out.push((parent, &e.span));
            expr_span_pairs(e, out);
        };
        match &self.kind {
            StmtKind::Assign { targets, value } => {
                targets.iter().for_each(|t| expr(t, out));
                expr(value, out);
            }
            StmtKind::AugAssign { target, value, .. } => {
                expr(target, out);
                expr(value, out);
            }
            StmtKind::Expr { expr: e } => expr(e, out),
            StmtKind::Return { values } => values.iter().for_each(|v| expr(v, out)),
            StmtKind::Assert { cond } => expr(cond, out),
            StmtKind::If { cond, then_block, elifs, else_block } => {
                expr(cond, out);
                block_span_pairs(parent, then_block, out);
                for (c, b) in elifs {
                    expr(c, out);
                    block_span_pairs(parent, b, out);
                }
                if let Some(b) = else_block {
                    block_span_pairs(parent, b, out);
                }
            }
            StmtKind::While { cond, body } => {
                expr(cond, out);
                block_span_pairs(parent, body, out);
            }
            StmtKind::For { var, iter, body } => {
                out.push((parent, &var.span));
                expr(iter, out);
                block_span_pairs(parent, body, out);
            }
        }
    }
}

fn block_span_pairs<'a>(parent: &'a Span, block: &'a Block, out: &mut Vec<(&'a Span, &'a Span)>) {
    out.push((parent, &block.span));
    for s in &block.stmts {
        out.push((&block.span, &s.span));
        s.span_pairs(out);
    }
}

fn expr_span_pairs<'a>(e: &'a Expr, out: &mut Vec<(&'a Span, &'a Span)>) {
    let parent = &e.span;
    let child = |c: &'a Expr, out: &mut Vec<(&'a Span, &'a Span)>| {
        out.push((parent, &c.span));
        expr_span_pairs(c, out);
    };
    match &e.kind {
        ExprKind::Int { .. } | ExprKind::Float { .. } | ExprKind::Bool { .. } | ExprKind::Name { .. } => {}
        ExprKind::Field { base, field } => {
            child(base, out);
            out.push((parent, &field.span));
        }
        ExprKind::Index { base, index } => {
            child(base, out);
            child(index, out);
        }
        ExprKind::Call { func, args } => {
            out.push((parent, &func.span));
            args.iter().for_each(|a| child(&a.value, out));
        }
        ExprKind::Tuple { elems } => elems.iter().for_each(|c| child(c, out)),
        ExprKind::Binary { lhs, rhs, .. } => {
            child(lhs, out);
            child(rhs, out);
        }
        ExprKind::Unary { operand, .. } => child(operand, out),
    }
}

impl Program {
    /// Copy of the tree with every span replaced by the dummy span, for structural
    /// comparison.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        for item in &mut p.items {
            match item {
                Item::Struct(s) => {
                    s.span = Span::dummy();
                    s.name.span = Span::dummy();
                    for f in &mut s.fields {
                        f.span = Span::dummy();
                        f.name.span = Span::dummy();
                        f.ty.strip();
                    }
                }
                Item::Func(f) => {
                    f.span = Span::dummy();
                    f.name.span = Span::dummy();
                    for p in &mut f.params {
                        p.span = Span::dummy();
                        p.name.span = Span::dummy();
                        p.ty.strip();
                    }
                    f.returns.iter_mut().for_each(TypeExpr::strip);
                    f.body.strip();
                }
            }
        }
        p
    }

    /// Every (parent, child) span pair in the tree.
    pub fn span_pairs(&self) -> Vec<(&Span, &Span)> {
        let mut out = Vec::new();
        for item in &self.items {
            match item {
                Item::Struct(s) => {
                    out.push((&s.span, &s.name.span));
                    for f in &s.fields {
                        out.push((&s.span, &f.span));
                        out.push((&f.span, &f.name.span));
                        out.push((&f.span, &f.ty.span));
                    }
                }
                Item::Func(f) => {
                    out.push((&f.span, &f.name.span));
                    for p in &f.params {
                        out.push((&f.span, &p.span));
                        out.push((&p.span, &p.name.span));
                        out.push((&p.span, &p.ty.span));
                    }
                    for r in &f.returns {
                        out.push((&f.span, &r.span));
                    }
                    block_span_pairs(&f.span, &f.body, &mut out);
                }
            }
        }
        out
    }
}
