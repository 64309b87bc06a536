use std::collections::{BTreeMap, BTreeSet};

use super::cfg::{build_cfg, Cfg, Instr};
use crate::diagnostics::{codes, Diagnostic};
use crate::span::Span;
use crate::types::{
    places_overlap, quantum_leaves, ArgMode, Builtin, Callee, Place, TExpr, TExprKind, TPlace, TStmtKind,
    TypedFunction, VarKind,
};

/// Ownership state of one quantum leaf.
#[derive(Debug, Clone)]
pub(crate) enum Leaf {
    Unassigned,
    Owned(Span),
    Consumed(Span),
    /// An error was already reported for this leaf. Records the use that reported it and the
    /// state it replaced, so the same use can report again when the poison flows back around a loop.
    Poisoned(Option<Box<(Span, Leaf)>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Unassigned,
    Owned,
    Consumed,
    Poisoned,
}

impl Leaf {
    fn kind(&self) -> Kind {
        match self {
            Leaf::Unassigned => Kind::Unassigned,
            Leaf::Owned(_) => Kind::Owned,
            Leaf::Consumed(_) => Kind::Consumed,
            Leaf::Poisoned(_) => Kind::Poisoned,
        }
    }

    fn join(&self, other: &Leaf) -> Leaf {
        match (self.kind(), other.kind()) {
            (a, b) if a == b => self.clone(),
            (Kind::Unassigned, Kind::Consumed) => other.clone(),
            (Kind::Consumed, Kind::Unassigned) => self.clone(),
            (Kind::Poisoned, _) => self.clone(),
            (_, Kind::Poisoned) => other.clone(),
            _ => Leaf::Poisoned(None),
        }
    }
}

/// The dataflow fact: a state for every quantum leaf in scope plus the active reborrow regions.
#[derive(Debug, Clone)]
pub(crate) struct Fact {
    pub(crate) leaves: BTreeMap<Place, Leaf>,
    /// One entry per enclosing `for` loop; `Some` when it iterates over qubits.
    pub(crate) frozen: Vec<Option<Place>>,
}

impl Fact {
    fn same_kinds(&self, other: &Fact) -> bool {
        self.leaves.len() == other.leaves.len()
            && self.leaves.iter().zip(&other.leaves).all(|((p, a), (q, b))| p == q && a.kind() == b.kind())
    }

    /// Join two facts, collecting the leaves whose states conflict.
    fn join(&self, other: &Fact, conflicts: &mut BTreeSet<Place>) -> Fact {
        let mut leaves = self.leaves.clone();
        for (p, b) in &other.leaves {
            let j = match leaves.get(p) {
                Some(a) => {
                    let j = a.join(b);
                    if j.kind() == Kind::Poisoned && a.kind() != Kind::Poisoned && b.kind() != Kind::Poisoned {
                        conflicts.insert(p.clone());
                    }
                    j
                }
                None => b.clone(),
            };
            leaves.insert(p.clone(), j);
        }
        Fact { leaves, frozen: self.frozen.clone() }
    }

    fn frozen_overlap(&self, p: &Place) -> bool {
        self.frozen.iter().flatten().any(|f| places_overlap(f, p))
    }
}

pub(crate) struct Outcome {
    pub(crate) diagnostics: Vec<Diagnostic>,
    pub(crate) exit: Option<Fact>,
}

pub(crate) fn check(f: &TypedFunction) -> Outcome {
    let cfg = build_cfg(f);
    let preds = cfg.predecessors();
    let entry = entry_fact(f);

    // Phase 1: silent fixpoint. In-facts only grow, over a lattice of height 3 per leaf.
    let mut ins: Vec<Option<Fact>> = vec![None; cfg.blocks.len()];
    let mut outs: Vec<Option<Fact>> = vec![None; cfg.blocks.len()];
    ins[0] = Some(entry);
    let mut silent = Checker::new(f, false);
    let mut conflicts: BTreeMap<usize, BTreeSet<Place>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for b in 0..cfg.blocks.len() {
            let incoming = if b == 0 {
                ins[0].clone()
            } else {
                let found = conflicts.entry(b).or_default();
                preds[b]
                    .iter()
                    .filter_map(|&p| outs[p].as_ref())
                    .fold(None, |acc: Option<Fact>, o| Some(acc.map_or_else(|| o.clone(), |a| a.join(o, found))))
            };
            let Some(incoming) = incoming else { continue };
            let new_in = match &ins[b] {
                Some(old) if b != 0 => old.join(&incoming, &mut BTreeSet::new()),
                _ => incoming,
            };
            if ins[b].as_ref().is_some_and(|old| old.same_kinds(&new_in)) && outs[b].is_some() {
                continue;
            }
            let mut fact = new_in.clone();
            ins[b] = Some(new_in);
            silent.block(&cfg, b, &mut fact);
            outs[b] = Some(fact);
            changed = true;
        }
        if !changed {
            break;
        }
    }

    // Phase 2: replay each block once from its final in-fact, reporting diagnostics.
    let mut loud = Checker::new(f, true);
    for (b, block) in cfg.blocks.iter().enumerate() {
        if let (Some(places), Some(span)) = (conflicts.get(&b), block.join) {
            loud.report_conflicts(span, places);
        }
        if let Some(fact) = &ins[b] {
            let mut fact = fact.clone();
            loud.block(&cfg, b, &mut fact);
        }
    }
    let exit = outs[cfg.exit].clone();
    if let Some(fact) = &exit {
        loud.check_leaks(fact);
    }
    Outcome { diagnostics: loud.finish(), exit }
}

fn entry_fact(f: &TypedFunction) -> Fact {
    let mut leaves = BTreeMap::new();
    let params: BTreeMap<&str, &Span> =
        f.sig.params.iter().map(|p| p.name.as_str()).zip(&f.param_spans).collect();
    for (name, info) in &f.vars {
        let state = match info.kind {
            VarKind::LoopVar => continue,
            VarKind::Param(_) => Leaf::Owned(params[name.as_str()].clone()),
            VarKind::Local => Leaf::Unassigned,
        };
        for l in quantum_leaves(&Place::var(name), &info.ty) {
            leaves.insert(l, state.clone());
        }
    }
    Fact { leaves, frozen: Vec::new() }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Use {
    Borrow,
    /// Consumed by an `@owned` parameter of the named callee.
    Consume(Option<Builtin>),
    /// Moved by assignment, return, or into a constructor.
    Move,
}

struct Checker<'f> {
    f: &'f TypedFunction,
    report: bool,
    diags: Vec<Diagnostic>,
    seen: BTreeSet<(String, Span, String)>,
    /// Quantum places borrowed by enclosing calls whose arguments are still being evaluated.
    active: Vec<Place>,
}

impl<'f> Checker<'f> {
    fn new(f: &'f TypedFunction, report: bool) -> Self {
        Checker { f, report, diags: Vec::new(), seen: BTreeSet::new(), active: Vec::new() }
    }

    fn emit(&mut self, d: Diagnostic) {
        if self.report && self.seen.insert((d.code.to_string(), d.span.clone(), d.message.clone())) {
            self.diags.push(d);
        }
    }

    fn finish(mut self) -> Vec<Diagnostic> {
        crate::diagnostics::sort(&mut self.diags);
        self.diags
    }

    /// Quantum leaves covering `p`. Array elements are tracked through their array.
    fn leaves_of(&self, p: &Place) -> Vec<Place> {
        if p.has_index() {
            return vec![p.without_index()];
        }
        quantum_leaves(p, &self.f.place_type(p))
    }

    fn is_local(&self, p: &Place) -> bool {
        self.f.var(&p.root).is_local()
    }

    fn block(&mut self, cfg: &Cfg<'_>, b: usize, fact: &mut Fact) {
        for instr in &cfg.blocks[b].instrs {
            match instr {
                Instr::Stmt(s) => match &s.kind {
                    TStmtKind::Assign { targets, value } => self.assign(targets, value, fact),
                    TStmtKind::Expr { expr } => {
                        self.eval(expr, fact);
                        if expr.ty.is_quantum() {
                            self.emit(Diagnostic::error(codes::NOT_CONSUMED, NOT_CONSUMED_MSG, expr.span.clone()));
                        }
                    }
                    TStmtKind::Return { values } => {
                        for v in values {
                            self.move_value(v, fact);
                        }
                    }
                    TStmtKind::Assert { cond } => self.eval(cond, fact),
                    _ => unreachable!("control flow is split into blocks"),
                },
                Instr::Eval(e) => self.eval(e, fact),
                Instr::EnterLoop { var, var_span, iter, elem } => {
                    if iter.ty.is_quantum() {
                        self.use_place(&iter.place, &iter.span, Use::Borrow, &iter.span, fact);
                        fact.frozen.push(Some(iter.place.clone()));
                    } else {
                        fact.frozen.push(None);
                    }
                    for l in quantum_leaves(&Place::var(*var), elem) {
                        fact.leaves.insert(l, Leaf::Owned((*var_span).clone()));
                    }
                }
                Instr::ExitLoop { var } => {
                    fact.frozen.pop();
                    fact.leaves.retain(|p, _| p.root != *var);
                }
            }
        }
    }

    fn report_conflicts(&mut self, span: &Span, places: &BTreeSet<Place>) {
        let mut roots = BTreeSet::new();
        for place in places {
            if roots.insert(&place.root) {
                self.emit(
                    Diagnostic::error(codes::CONDITIONAL_CONSUME, "Qubit is conditionally consumed", span.clone())
                        .with_note(format!("`{place}` is consumed on some paths but not on others"), None),
                );
            }
        }
    }

    fn check_leaks(&mut self, fact: &Fact) {
        let mut origins = BTreeSet::new();
        for (p, leaf) in &fact.leaves {
            if let Leaf::Owned(origin) = leaf {
                if self.is_local(p) && origins.insert(origin.clone()) {
                    self.emit(Diagnostic::error(codes::NOT_CONSUMED, NOT_CONSUMED_MSG, origin.clone()));
                }
            }
        }
    }

    fn assign(&mut self, targets: &[TPlace], value: &TExpr, fact: &mut Fact) {
        let origins: Vec<Span> = match (&value.kind, targets.len()) {
            (TExprKind::Tuple { elems }, n) if n > 1 => {
                for e in elems {
                    self.move_value(e, fact);
                }
                elems.iter().map(|e| e.span.clone()).collect()
            }
            _ => {
                self.move_value(value, fact);
                vec![value.span.clone(); targets.len()]
            }
        };
        for (t, origin) in targets.iter().zip(origins) {
            self.store(t, origin, fact);
        }
    }

    fn store(&mut self, t: &TPlace, origin: Span, fact: &mut Fact) {
        if !t.ty.is_quantum() {
            return;
        }
        if fact.frozen_overlap(&t.place) {
            self.emit(Diagnostic::error(codes::ALREADY_BORROWED, format!("{} already borrowed", t.place), t.span.clone()));
            return;
        }
        if !self.is_local(&t.place) {
            self.emit(Diagnostic::error(codes::NOT_OWNED, CONSUME_MSG, t.span.clone()));
            return;
        }
        let leaves = self.leaves_of(&t.place);
        let live = leaves.iter().find_map(|l| match fact.leaves.get(l) {
            Some(Leaf::Owned(o)) => Some(o.clone()),
            _ => None,
        });
        if let Some(old) = live {
            self.emit(
                Diagnostic::error(codes::NOT_CONSUMED, NOT_CONSUMED_MSG, t.span.clone())
                    .with_note("the overwritten qubit was allocated here", Some(old)),
            );
        }
        for l in leaves {
            fact.leaves.insert(l, Leaf::Owned(origin.clone()));
        }
    }

    fn move_value(&mut self, e: &TExpr, fact: &mut Fact) {
        match e.as_place() {
            Some(p) if e.ty.is_quantum() => {
                if self.active.iter().any(|a| places_overlap(a, p)) {
                    self.emit(Diagnostic::error(codes::ALREADY_BORROWED, format!("{p} already borrowed"), e.span.clone()));
                    self.poison(p, &e.span, fact);
                    return;
                }
                self.use_place(p, &e.span, Use::Move, &e.span, fact)
            }
            _ => self.eval(e, fact),
        }
    }

    /// Evaluate an expression for its effects; quantum place reads only happen through calls and moves.
    fn eval(&mut self, e: &TExpr, fact: &mut Fact) {
        match &e.kind {
            TExprKind::Call { .. } => self.call(e, fact),
            TExprKind::Binary { lhs, rhs, .. } => {
                self.eval(lhs, fact);
                self.eval(rhs, fact);
            }
            TExprKind::Unary { operand, .. } => self.eval(operand, fact),
            TExprKind::Tuple { elems } => {
                for x in elems {
                    self.move_value(x, fact);
                }
            }
            TExprKind::Int { .. } | TExprKind::Float { .. } | TExprKind::Bool { .. } | TExprKind::Place { .. } => {}
        }
    }

    fn call(&mut self, e: &TExpr, fact: &mut Fact) {
        let TExprKind::Call { callee, args } = &e.kind else { unreachable!() };
        let builtin = match callee {
            Callee::Builtin { builtin } => Some(*builtin),
            _ => None,
        };
        let mut direct: Vec<(usize, &Place)> = Vec::new();
        let mut clash = vec![false; args.len()];
        for (i, a) in args.iter().enumerate() {
            let Some(p) = a.expr.as_place() else { continue };
            if !a.expr.ty.is_quantum() {
                continue;
            }
            if direct.iter().any(|(_, q)| places_overlap(p, q)) || self.active.iter().any(|q| places_overlap(p, q)) {
                self.emit(Diagnostic::error(
                    codes::ALREADY_BORROWED,
                    format!("{p} already borrowed"),
                    a.expr.span.clone(),
                ));
                clash[i] = true;
                self.poison(p, &a.expr.span, fact);
            }
            direct.push((i, p));
        }
        let mark = self.active.len();
        self.active.extend(direct.iter().map(|(_, p)| (*p).clone()));
        for (i, a) in args.iter().enumerate() {
            if direct.iter().any(|(j, _)| *j == i) {
                continue;
            }
            self.eval(&a.expr, fact);
            if a.mode == ArgMode::Borrow && matches!(a.expr.kind, TExprKind::Call { .. }) {
                self.emit(Diagnostic::error(codes::NOT_CONSUMED, NOT_CONSUMED_MSG, a.expr.span.clone()));
            }
        }
        self.active.truncate(mark);
        for (i, p) in direct {
            if clash[i] {
                continue;
            }
            let a = &args[i];
            let usage = match a.mode {
                ArgMode::Borrow => Use::Borrow,
                ArgMode::Consume if matches!(callee, Callee::Struct { .. }) || builtin == Some(Builtin::Array) => Use::Move,
                _ => Use::Consume(builtin),
            };
            self.use_place(p, &a.expr.span, usage, &e.span, fact);
        }
    }

    fn poison(&self, p: &Place, at: &Span, fact: &mut Fact) {
        for l in self.leaves_of(p) {
            let prior = fact.leaves.get(&l).cloned().unwrap_or(Leaf::Unassigned);
            fact.leaves.insert(l, poisoned(at, prior));
        }
    }

    /// Check a use of quantum place `p` and apply its effect. `at` is recorded as the consumption site.
    fn use_place(&mut self, p: &Place, span: &Span, usage: Use, at: &Span, fact: &mut Fact) {
        if fact.frozen_overlap(p) {
            self.emit(Diagnostic::error(codes::ALREADY_BORROWED, format!("{p} already borrowed"), span.clone()));
            self.poison(p, span, fact);
            return;
        }
        let leaves = self.leaves_of(p);
        for l in &leaves {
            let mut state = fact.leaves.get(l);
            if let Some(Leaf::Poisoned(Some(b))) = state {
                if b.0 == *span {
                    state = Some(&b.1);
                }
            }
            match state {
                Some(Leaf::Owned(_)) => {}
                Some(Leaf::Poisoned(_)) => return,
                other => {
                    let mut d = Diagnostic::error(codes::ALREADY_CONSUMED, format!("{p} already consumed"), span.clone());
                    if let Some(Leaf::Consumed(site)) = other {
                        d = d.with_note(format!("`{l}` was consumed here"), Some(site.clone()));
                    }
                    self.emit(d);
                    self.poison(p, span, fact);
                    return;
                }
            }
        }
        if usage == Use::Borrow {
            return;
        }
        if !self.is_local(p) {
            let msg = match usage {
                Use::Consume(Some(Builtin::Measure | Builtin::MeasureArray)) => MEASURE_MSG,
                _ => CONSUME_MSG,
            };
            self.emit(Diagnostic::error(codes::NOT_OWNED, msg, span.clone()));
            self.poison(p, span, fact);
            return;
        }
        for l in leaves {
            fact.leaves.insert(l, Leaf::Consumed(at.clone()));
        }
    }
}

fn poisoned(at: &Span, prior: Leaf) -> Leaf {
    // Keep the earliest record so a chain of errors unwinds to a real state.
    match prior {
        Leaf::Poisoned(_) => prior,
        _ => Leaf::Poisoned(Some(Box::new((at.clone(), prior)))),
    }
}

const NOT_CONSUMED_MSG: &str = "Allocated qubit is not consumed";
const MEASURE_MSG: &str = "Cannot measure qubit since it is not owned";
const CONSUME_MSG: &str = "Cannot consume qubit since it is not owned";
