//! Control-flow graphs over typed function bodies.

use crate::span::Span;
use crate::types::{TExpr, TPlace, TStmt, TStmtKind, Type, TypedFunction};

pub type BlockId = usize;

#[derive(Debug, Clone)]
pub enum Instr<'a> {
    /// A simple statement: assignment, expression, return or assert.
    Stmt(&'a TStmt),
    /// A branch or loop condition.
    Eval(&'a TExpr),
    /// Start of one iteration of a `for` body: `var` reborrows an element of `iter`.
    EnterLoop { var: &'a str, var_span: &'a Span, iter: &'a TPlace, elem: &'a Type },
    ExitLoop { var: &'a str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    Goto(BlockId),
    Branch { then: BlockId, otherwise: BlockId },
    Exit,
}

#[derive(Debug, Clone)]
pub struct BasicBlock<'a> {
    pub instrs: Vec<Instr<'a>>,
    pub term: Terminator,
    /// For merge points, the statement whose paths meet here.
    pub join: Option<&'a Span>,
}

#[derive(Debug, Clone)]
pub struct Cfg<'a> {
    pub blocks: Vec<BasicBlock<'a>>,
    pub exit: BlockId,
}

impl<'a> Cfg<'a> {
    pub fn successors(&self, b: BlockId) -> Vec<BlockId> {
        match self.blocks[b].term {
            Terminator::Goto(t) => vec![t],
            Terminator::Branch { then, otherwise } => vec![then, otherwise],
            Terminator::Exit => vec![],
        }
    }

    pub fn predecessors(&self) -> Vec<Vec<BlockId>> {
        let mut preds = vec![Vec::new(); self.blocks.len()];
        for b in 0..self.blocks.len() {
            for s in self.successors(b) {
                preds[s].push(b);
            }
        }
        preds
    }

    /// Edges into a block created no later than their source. Loop headers precede their bodies.
    pub fn back_edges(&self) -> usize {
        (0..self.blocks.len())
            .map(|b| self.successors(b).into_iter().filter(|&s| s <= b).count())
            .sum()
    }

    fn new_block(&mut self, join: Option<&'a Span>) -> BlockId {
        self.blocks.push(BasicBlock { instrs: Vec::new(), term: Terminator::Exit, join });
        self.blocks.len() - 1
    }

    fn lower(&mut self, stmts: &'a [TStmt], mut cur: BlockId) -> BlockId {
        for s in stmts {
            match &s.kind {
                TStmtKind::Assign { .. } | TStmtKind::Expr { .. } | TStmtKind::Return { .. } | TStmtKind::Assert { .. } => {
                    self.blocks[cur].instrs.push(Instr::Stmt(s));
                }
                TStmtKind::If { cond, then_body, else_body } => {
                    self.blocks[cur].instrs.push(Instr::Eval(cond));
                    let then = self.new_block(None);
                    let otherwise = self.new_block(None);
                    let join = self.new_block(Some(&s.span));
                    self.blocks[cur].term = Terminator::Branch { then, otherwise };
                    let t_end = self.lower(then_body, then);
                    self.blocks[t_end].term = Terminator::Goto(join);
                    let e_end = self.lower(else_body, otherwise);
                    self.blocks[e_end].term = Terminator::Goto(join);
                    cur = join;
                }
                TStmtKind::While { cond, body } => {
                    let header = self.new_block(Some(&s.span));
                    self.blocks[cur].term = Terminator::Goto(header);
                    self.blocks[header].instrs.push(Instr::Eval(cond));
                    let b = self.new_block(None);
                    let exit = self.new_block(None);
                    self.blocks[header].term = Terminator::Branch { then: b, otherwise: exit };
                    let end = self.lower(body, b);
                    self.blocks[end].term = Terminator::Goto(header);
                    cur = exit;
                }
                TStmtKind::For { var, var_span, iter, elem, body, .. } => {
                    let header = self.new_block(Some(&s.span));
                    self.blocks[cur].term = Terminator::Goto(header);
                    let b = self.new_block(None);
                    self.blocks[b].instrs.push(Instr::EnterLoop { var, var_span, iter, elem });
                    let exit = self.new_block(None);
                    self.blocks[header].term = Terminator::Branch { then: b, otherwise: exit };
                    let end = self.lower(body, b);
                    self.blocks[end].instrs.push(Instr::ExitLoop { var });
                    self.blocks[end].term = Terminator::Goto(header);
                    cur = exit;
                }
            }
        }
        cur
    }
}

/// Build the CFG of a function. `for` loops get a header, a body that opens the
/// reborrow region, and an exit block; `if` statements form a diamond.
pub fn build_cfg(f: &TypedFunction) -> Cfg<'_> {
    let mut cfg = Cfg { blocks: Vec::new(), exit: 0 };
    let entry = cfg.new_block(None);
    let exit = cfg.lower(&f.body, entry);
    cfg.blocks[exit].term = Terminator::Exit;
    cfg.exit = exit;
    cfg
}
