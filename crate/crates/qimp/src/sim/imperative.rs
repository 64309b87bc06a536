//! Reference interpreter over the typed AST. Qubits are opaque handles; every frame
//! records the handles it is responsible for consuming.

use std::collections::{BTreeSet, HashMap};

use super::state::{Gate, Handle, QuantumState};
use super::transcript::{AssertionRecord, Measurement, RuntimeError, RuntimeErrorKind, Shot};
use super::value::{eval_binary, eval_unary, Value};
use super::ITERATION_LIMIT;
use crate::span::Span;
use crate::types::{
    places_overlap, ArgMode, Builtin, Callee, Place, Projection, TArg, TExpr, TExprKind, TStmt, TStmtKind, Type,
    TypedFunction, TypedProgram,
};

type R<T> = Result<T, RuntimeError>;

pub(super) struct Interp<'p> {
    prog: &'p TypedProgram,
    pub state: QuantumState,
    pub shot: Shot,
    iterations: u64,
    alloc_sites: HashMap<Handle, String>,
}

struct Frame<'p> {
    f: &'p TypedFunction,
    vars: HashMap<String, Value>,
    /// Handles this frame must consume or return.
    owned: BTreeSet<Handle>,
    /// Arrays reborrowed by enclosing `for` loops.
    frozen: Vec<Place>,
    /// Direct place arguments of calls whose other arguments are being evaluated.
    pending: Vec<Place>,
}

fn err(kind: RuntimeErrorKind, span: &Span, msg: impl Into<String>) -> RuntimeError {
    RuntimeError::new(kind, span.site(), msg)
}

impl<'p> Interp<'p> {
    pub fn new(prog: &'p TypedProgram, seed: u64) -> Self {
        Interp { prog, state: QuantumState::new(seed), shot: Shot::default(), iterations: 0, alloc_sites: HashMap::new() }
    }

    /// Call `f`; returns its results and the final values of its parameters.
    pub fn call_function(&mut self, f: &'p TypedFunction, args: Vec<Value>, owned: BTreeSet<Handle>) -> R<(Vec<Value>, Vec<Value>)> {
        let vars = f.sig.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let mut fr = Frame { f, vars, owned, frozen: Vec::new(), pending: Vec::new() };
        let ret = self.block(&mut fr, &f.body)?.unwrap_or_default();
        let mut returned = Vec::new();
        ret.iter().for_each(|v| v.handles(&mut returned));
        for h in &fr.owned {
            if self.state.is_live(*h) && !returned.contains(h) {
                let site = self.alloc_sites.get(h).cloned().unwrap_or_else(|| f.span.site());
                return Err(RuntimeError::new(
                    RuntimeErrorKind::LeakAtScopeExit,
                    site,
                    format!("qubit is still live when `{}` returns", f.name),
                ));
            }
        }
        let params = f.sig.params.iter().map(|p| fr.vars.remove(&p.name).unwrap_or(Value::Moved)).collect();
        Ok((ret, params))
    }

    fn tick(&mut self, span: &Span) -> R<()> {
        self.iterations += 1;
        if self.iterations > ITERATION_LIMIT {
            return Err(err(RuntimeErrorKind::IterationLimit, span, "loop iteration limit exceeded"));
        }
        Ok(())
    }

    fn block(&mut self, fr: &mut Frame<'p>, stmts: &'p [TStmt]) -> R<Option<Vec<Value>>> {
        for s in stmts {
            if let Some(ret) = self.stmt(fr, s)? {
                return Ok(Some(ret));
            }
        }
        Ok(None)
    }

    fn stmt(&mut self, fr: &mut Frame<'p>, s: &'p TStmt) -> R<Option<Vec<Value>>> {
        match &s.kind {
            TStmtKind::Assign { targets, value } => {
                let vals = self.values(fr, value)?;
                for (t, v) in targets.iter().zip(vals) {
                    if t.ty.is_quantum() {
                        check_access(fr, &t.place, &t.span)?;
                    }
                    store(fr, &t.place, v);
                }
            }
            TStmtKind::Expr { expr } => {
                self.values(fr, expr)?;
            }
            TStmtKind::Return { values } => {
                let mut out = Vec::new();
                for v in values {
                    out.push(self.value(fr, v)?);
                }
                return Ok(Some(out));
            }
            TStmtKind::Assert { cond } => {
                let ok = self.value(fr, cond)?.as_bool();
                self.shot.assertions.push(AssertionRecord { site: s.span.site(), ok });
                if !ok {
                    return Err(err(RuntimeErrorKind::AssertionFailed, &s.span, "assertion failed"));
                }
            }
            TStmtKind::If { cond, then_body, else_body } => {
                let body = if self.value(fr, cond)?.as_bool() { then_body } else { else_body };
                return self.block(fr, body);
            }
            TStmtKind::While { cond, body } => loop {
                self.tick(&s.span)?;
                if !self.value(fr, cond)?.as_bool() {
                    break;
                }
                if let Some(r) = self.block(fr, body)? {
                    return Ok(Some(r));
                }
            },
            TStmtKind::For { var, iter, elem, len, body, .. } => {
                if elem.is_quantum() {
                    check_access(fr, &iter.place, &iter.span)?;
                    if read(fr, &iter.place).contains_moved() {
                        return Err(err(RuntimeErrorKind::UseAfterFree, &iter.span, format!("{} already consumed", iter.place)));
                    }
                    fr.frozen.push(iter.place.clone());
                    for i in 0..*len {
                        self.tick(&s.span)?;
                        let slot = iter.place.index(i);
                        fr.vars.insert(var.clone(), read(fr, &slot).clone());
                        self.block(fr, body)?;
                        let v = fr.vars.remove(var).unwrap_or(Value::Moved);
                        store(fr, &slot, v);
                    }
                    self.tick(&s.span)?;
                    fr.frozen.pop();
                } else {
                    let Value::Array(items) = read(fr, &iter.place).clone() else { panic!("iterating a non-array") };
                    for v in items {
                        self.tick(&s.span)?;
                        fr.vars.insert(var.clone(), v);
                        self.block(fr, body)?;
                        fr.vars.remove(var);
                    }
                    self.tick(&s.span)?;
                }
            }
        }
        Ok(None)
    }

    fn value(&mut self, fr: &mut Frame<'p>, e: &'p TExpr) -> R<Value> {
        let mut vs = self.values(fr, e)?;
        assert_eq!(vs.len(), 1, "single-valued expression");
        Ok(vs.remove(0))
    }

    fn values(&mut self, fr: &mut Frame<'p>, e: &'p TExpr) -> R<Vec<Value>> {
        Ok(match &e.kind {
            TExprKind::Int { value } => vec![Value::Int(*value)],
            TExprKind::Float { value } => vec![Value::Float(*value)],
            TExprKind::Bool { value } => vec![Value::Bool(*value)],
            TExprKind::Place { place } => {
                if e.ty.is_quantum() {
                    check_access(fr, place, &e.span)?;
                    let v = take(fr, place, &e.span)?;
                    vec![v]
                } else {
                    vec![read(fr, place).clone()]
                }
            }
            TExprKind::Call { callee, args } => self.call(fr, callee, args, e)?,
            TExprKind::Tuple { elems } => {
                let mut out = Vec::new();
                for el in elems {
                    out.push(self.value(fr, el)?);
                }
                out
            }
            TExprKind::Binary { op, lhs, rhs } => {
                let l = self.value(fr, lhs)?;
                let r = self.value(fr, rhs)?;
                vec![eval_binary(*op, &l, &r)]
            }
            TExprKind::Unary { op, operand } => {
                let v = self.value(fr, operand)?;
                vec![eval_unary(*op, &v)]
            }
        })
    }

    fn call(&mut self, fr: &mut Frame<'p>, callee: &'p Callee, args: &'p [TArg], e: &'p TExpr) -> R<Vec<Value>> {
        // Direct quantum place arguments are lent for the whole call, including the evaluation of the others.
        let mut direct: Vec<(usize, &Place)> = Vec::new();
        for (i, a) in args.iter().enumerate() {
            let (Some(p), true) = (a.expr.as_place(), a.expr.ty.is_quantum()) else { continue };
            check_access(fr, p, &a.expr.span)?;
            if direct.iter().any(|(_, q)| places_overlap(p, q)) {
                return Err(err(RuntimeErrorKind::DoubleBorrowAlias, &a.expr.span, format!("{p} already borrowed")));
            }
            direct.push((i, p));
        }
        let mark = fr.pending.len();
        fr.pending.extend(direct.iter().map(|(_, p)| (*p).clone()));
        let mut vals: Vec<Option<Value>> = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            if direct.iter().any(|(j, _)| *j == i) {
                vals.push(None);
            } else {
                let v = self.value(fr, &a.expr);
                if v.is_err() {
                    fr.pending.truncate(mark);
                }
                vals.push(Some(v?));
            }
        }
        fr.pending.truncate(mark);
        for &(i, p) in &direct {
            let v = read(fr, p);
            if v.contains_moved() {
                return Err(err(RuntimeErrorKind::UseAfterFree, &args[i].expr.span, format!("{p} already consumed")));
            }
            vals[i] = Some(v.clone());
        }
        let vals: Vec<Value> = vals.into_iter().map(|v| v.expect("argument evaluated")).collect();
        let mut seen = BTreeSet::new();
        for (v, a) in vals.iter().zip(args) {
            let mut hs = Vec::new();
            v.handles(&mut hs);
            if hs.iter().any(|h| !seen.insert(*h)) {
                return Err(err(RuntimeErrorKind::DoubleBorrowAlias, &a.expr.span, "qubit passed twice"));
            }
        }
        for &(i, p) in &direct {
            if args[i].mode == ArgMode::Consume {
                mark_moved(fr, p);
            }
        }

        match callee {
            Callee::Struct { slots, .. } => {
                let mut fields = vec![Value::Moved; slots.len()];
                for (v, &s) in vals.into_iter().zip(slots) {
                    fields[s] = v;
                }
                Ok(vec![Value::Struct(fields)])
            }
            Callee::Builtin { builtin } => self.builtin(fr, *builtin, vals, e),
            Callee::Function { name } => {
                let f = self.prog.function(name).expect("resolved callee");
                let mut owned_in = BTreeSet::new();
                for (v, a) in vals.iter().zip(args) {
                    if a.mode == ArgMode::Consume {
                        let mut hs = Vec::new();
                        v.handles(&mut hs);
                        for h in hs {
                            fr.owned.remove(&h);
                            owned_in.insert(h);
                        }
                    }
                }
                let mut lent = Vec::new();
                for (v, a) in vals.iter().zip(args) {
                    if a.mode == ArgMode::Borrow {
                        v.handles(&mut lent);
                    }
                }
                let (ret, params) = self.call_function(f, vals, owned_in)?;
                // A borrowed qubit must still be alive when the callee returns.
                if lent.iter().any(|h| !self.state.is_live(*h)) {
                    return Err(err(RuntimeErrorKind::UseAfterFree, &e.span, format!("`{name}` consumed a borrowed qubit")));
                }
                for v in &ret {
                    let mut hs = Vec::new();
                    v.handles(&mut hs);
                    fr.owned.extend(hs);
                }
                for &(i, p) in &direct {
                    if args[i].mode == ArgMode::Borrow {
                        store(fr, p, params[i].clone());
                    }
                }
                Ok(ret)
            }
        }
    }

    fn builtin(&mut self, fr: &mut Frame<'p>, b: Builtin, vals: Vec<Value>, e: &TExpr) -> R<Vec<Value>> {
        let at = |k: RuntimeErrorKind| err(k, &e.span, format!("`{}` on an unusable qubit", b.name()));
        Ok(match b {
            Builtin::Qubit => {
                let h = self.state.alloc().map_err(at)?;
                fr.owned.insert(h);
                self.alloc_sites.insert(h, e.span.site());
                vec![Value::Qubit(h)]
            }
            Builtin::Measure | Builtin::Discard => {
                let Value::Qubit(h) = vals[0] else { panic!("measure of non-qubit") };
                fr.owned.remove(&h);
                if b == Builtin::Measure {
                    let bit = self.state.measure(h).map_err(at)?;
                    self.shot.measurements.push(Measurement { site: e.span.site(), bit });
                    vec![Value::Bool(bit)]
                } else {
                    self.state.discard(h).map_err(at)?;
                    vec![]
                }
            }
            Builtin::MeasureArray | Builtin::DiscardArray => {
                let Value::Array(items) = &vals[0] else { panic!("measure_array of non-array") };
                let mut bits = Vec::new();
                for v in items {
                    let Value::Qubit(h) = *v else { panic!("array element is not a qubit") };
                    fr.owned.remove(&h);
                    let bit = self.state.measure(h).map_err(at)?;
                    if b == Builtin::MeasureArray {
                        self.shot.measurements.push(Measurement { site: e.span.site(), bit });
                    }
                    bits.push(Value::Bool(bit));
                }
                if b == Builtin::MeasureArray {
                    vec![Value::Array(bits)]
                } else {
                    vec![]
                }
            }
            Builtin::Array => vec![Value::Array(vals)],
            g => {
                let targets: Vec<Handle> = vals
                    .iter()
                    .filter_map(|v| match v {
                        Value::Qubit(h) => Some(*h),
                        _ => None,
                    })
                    .collect();
                let angle = vals.iter().find_map(|v| match v {
                    Value::Float(f) => Some(*f),
                    _ => None,
                });
                let gate = Gate::from_builtin(g, angle).expect("gate builtin");
                self.state.apply_gate(gate, &targets).map_err(at)?;
                vec![]
            }
        })
    }
}

fn check_access(fr: &Frame, p: &Place, span: &Span) -> R<()> {
    if fr.frozen.iter().chain(&fr.pending).any(|q| places_overlap(p, q)) {
        return Err(err(RuntimeErrorKind::DoubleBorrowAlias, span, format!("{p} already borrowed")));
    }
    Ok(())
}

fn resolve<'v>(root: &'v Value, mut ty: &Type, place: &Place) -> &'v Value {
    let mut v = root;
    for proj in &place.projections {
        match (proj, ty, v) {
            (Projection::Field(n), Type::Struct(st), Value::Struct(fs)) => {
                let (i, fty) = st.field(n).expect("field");
                v = &fs[i];
                ty = fty;
            }
            (Projection::Index(i), Type::Array(elem, _), Value::Array(items)) => {
                v = &items[*i];
                ty = elem;
            }
            _ => panic!("malformed place {place}"),
        }
    }
    v
}

fn read<'a>(fr: &'a Frame, p: &Place) -> &'a Value {
    let root = fr.vars.get(&p.root).unwrap_or_else(|| panic!("`{}` is unassigned", p.root));
    resolve(root, &fr.f.var(&p.root).ty, p)
}

fn slot<'a>(fr: &'a mut Frame, p: &Place) -> &'a mut Value {
    let mut ty = &fr.f.var(&p.root).ty;
    let mut v = fr.vars.entry(p.root.clone()).or_insert(Value::Moved);
    for proj in &p.projections {
        match (proj, ty, v) {
            (Projection::Field(n), Type::Struct(st), Value::Struct(fs)) => {
                let (i, fty) = st.field(n).expect("field");
                v = &mut fs[i];
                ty = fty;
            }
            (Projection::Index(i), Type::Array(elem, _), Value::Array(items)) => {
                v = &mut items[*i];
                ty = elem;
            }
            _ => panic!("malformed place {p}"),
        }
    }
    v
}

fn store(fr: &mut Frame, p: &Place, v: Value) {
    *slot(fr, p) = v;
}

fn mark_moved(fr: &mut Frame, p: &Place) {
    slot(fr, p).mark_moved();
}

/// Move a quantum value out of `p`.
fn take(fr: &mut Frame, p: &Place, span: &Span) -> R<Value> {
    let v = read(fr, p).clone();
    if v.contains_moved() {
        return Err(err(RuntimeErrorKind::UseAfterFree, span, format!("{p} already consumed")));
    }
    mark_moved(fr, p);
    Ok(v)
}
