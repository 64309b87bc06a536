//! Translation of accepted functions into value-threading dataflow graphs.
//!
//! Every leaf of every variable (fields of structs are flattened) is bound to the
//! wire currently carrying its value. A borrowing call takes the wire and rebinds
//! the place to the call's extra output; a consuming call takes it for good.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::ir::*;
use crate::frontend::ast::BinOp;
use crate::types::{
    ArgMode, Builtin, Callee, FuncSig, OwnershipMode, Place, Projection, StructType, TExpr, TExprKind, TStmt,
    TStmtKind, Type, TypedFunction, TypedProgram,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("internal lowering error in `{func}`: {msg}")]
    Internal { func: String, msg: String },
}

/// Parameters in order; declared returns followed by each borrowed quantum parameter.
pub fn lower_signature(sig: &FuncSig) -> LoweredSig {
    LoweredSig {
        inputs: sig.params.iter().map(|p| p.ty.clone()).collect(),
        outputs: sig
            .returns
            .iter()
            .cloned()
            .chain(
                sig.params
                    .iter()
                    .filter(|p| p.ty.is_quantum() && p.mode == OwnershipMode::Borrowed)
                    .map(|p| p.ty.clone()),
            )
            .collect(),
    }
}

pub fn lower_program(p: &TypedProgram) -> Result<IrModule, LowerError> {
    let functions = p.functions.iter().map(|f| lower_function(p, f)).collect::<Result<_, _>>()?;
    Ok(IrModule { functions })
}

pub fn lower_function(p: &TypedProgram, f: &TypedFunction) -> Result<IrFunction, LowerError> {
    let cx = Lower { prog: p, f };
    let signature = lower_signature(&f.sig);
    let (mut b, ins) = Builder::with_inputs(signature.inputs.clone());
    let mut env = Env::new();
    for (param, port) in f.sig.params.iter().zip(ins) {
        cx.bind(&mut b, &mut env, &Place::var(&param.name), &param.ty, Val::Wire(port))?;
    }
    let mut ret = None;
    cx.block(&mut b, &mut env, &f.body, &mut ret)?;
    let mut outs = Vec::new();
    for v in ret.unwrap_or_default() {
        outs.push(b.materialize(v));
    }
    for param in &f.sig.params {
        if param.ty.is_quantum() && param.mode == OwnershipMode::Borrowed {
            let v = cx.read_place(&mut b, &mut env, &Place::var(&param.name), &param.ty)?;
            outs.push(b.materialize(v));
        }
    }
    if let Some((place, _)) = env.iter().find(|(_, p)| p.ty.is_quantum()) {
        return Err(cx.internal(format!("`{place}` is still live at return")));
    }
    Ok(IrFunction { name: f.name.clone(), signature, body: b.finish(&outs) })
}

#[derive(Debug, Clone)]
struct Port {
    at: PortRef,
    ty: Type,
}

#[derive(Debug, Clone)]
enum Val {
    Wire(Port),
    Struct(Arc<StructType>, Vec<Val>),
}

type Env = BTreeMap<Place, Port>;

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    wires: Vec<Wire>,
}

impl Builder {
    fn with_inputs(tys: Vec<Type>) -> (Builder, Vec<Port>) {
        let mut b = Builder::default();
        let id = b.add(Op::Input, &[], tys, vec![]);
        let outs = b.outs(id);
        (b, outs)
    }

    fn add(&mut self, op: Op, ins: &[Port], outputs: Vec<Type>, regions: Vec<Region>) -> NodeId {
        let id = self.nodes.len();
        for (k, p) in ins.iter().enumerate() {
            self.wires.push(Wire { from: p.at, to: PortRef::new(id, k), ty: p.ty.clone() });
        }
        let inputs = ins.iter().map(|p| p.ty.clone()).collect();
        self.nodes.push(Node { id, op, inputs, outputs, regions });
        id
    }

    fn outs(&self, id: NodeId) -> Vec<Port> {
        self.nodes[id]
            .outputs
            .iter()
            .enumerate()
            .map(|(k, ty)| Port { at: PortRef::new(id, k), ty: ty.clone() })
            .collect()
    }

    fn add1(&mut self, op: Op, ins: &[Port], out: Type) -> Port {
        let id = self.add(op, ins, vec![out], vec![]);
        self.outs(id).remove(0)
    }

    fn constant(&mut self, v: ConstVal) -> Port {
        self.add1(Op::Const(v), &[], v.ty())
    }

    fn materialize(&mut self, v: Val) -> Port {
        match v {
            Val::Wire(p) => p,
            Val::Struct(st, fields) => {
                let ins: Vec<Port> = fields.into_iter().map(|f| self.materialize(f)).collect();
                self.add1(Op::Pack { name: st.name.clone() }, &ins, Type::Struct(st))
            }
        }
    }

    fn finish(mut self, outs: &[Port]) -> Region {
        self.add(Op::Output, outs, vec![], vec![]);
        Region { nodes: self.nodes, wires: self.wires }
    }
}

/// Split `a.b[3]` into the array place `a.b` and the index 3.
fn split_index(place: &Place) -> Option<(Place, i64)> {
    let arr = place.without_index();
    match place.projections.get(arr.projections.len()) {
        Some(Projection::Index(i)) => Some((arr, *i as i64)),
        _ => None,
    }
}

enum Lent {
    Place(Place, Type),
    Element(Place, Port),
}

enum Slot<'e> {
    Ready(Val),
    Deferred(&'e Place, &'e Type),
}

struct Lower<'a> {
    prog: &'a TypedProgram,
    f: &'a TypedFunction,
}

impl Lower<'_> {
    fn internal(&self, msg: impl Into<String>) -> LowerError {
        LowerError::Internal { func: self.f.name.clone(), msg: msg.into() }
    }

    fn take(&self, env: &mut Env, place: &Place) -> Result<Port, LowerError> {
        env.remove(place).ok_or_else(|| self.internal(format!("no value for `{place}`")))
    }

    fn read_place(&self, b: &mut Builder, env: &mut Env, place: &Place, ty: &Type) -> Result<Val, LowerError> {
        if let Some((arr, i)) = split_index(place) {
            if ty.is_quantum() {
                return Err(self.internal(format!("move out of array element `{place}`")));
            }
            let a = env.get(&arr).cloned().ok_or_else(|| self.internal(format!("no value for `{arr}`")))?;
            let idx = b.constant(ConstVal::Int(i));
            return Ok(Val::Wire(b.add1(Op::ArrayGet, &[a, idx], ty.clone())));
        }
        match ty {
            Type::Struct(st) => {
                let fields = st
                    .fields
                    .iter()
                    .map(|(n, t)| self.read_place(b, env, &place.field(n), t))
                    .collect::<Result<_, _>>()?;
                Ok(Val::Struct(st.clone(), fields))
            }
            t if t.is_quantum() => Ok(Val::Wire(self.take(env, place)?)),
            _ => env
                .get(place)
                .cloned()
                .map(Val::Wire)
                .ok_or_else(|| self.internal(format!("no value for `{place}`"))),
        }
    }

    fn bind(&self, b: &mut Builder, env: &mut Env, place: &Place, ty: &Type, v: Val) -> Result<(), LowerError> {
        if let Some((arr, i)) = split_index(place) {
            let a = self.take(env, &arr)?;
            let idx = b.constant(ConstVal::Int(i));
            let e = b.materialize(v);
            let ty = a.ty.clone();
            let out = b.add1(Op::ArraySet, &[a, idx, e], ty);
            env.insert(arr, out);
            return Ok(());
        }
        match (ty, v) {
            (Type::Struct(st), Val::Struct(_, vals)) => {
                for ((n, t), v) in st.fields.iter().zip(vals) {
                    self.bind(b, env, &place.field(n), t, v)?;
                }
                Ok(())
            }
            (Type::Struct(st), Val::Wire(p)) => {
                let id = b.add(Op::Unpack { name: st.name.clone() }, &[p], st.fields.iter().map(|f| f.1.clone()).collect(), vec![]);
                for ((n, t), port) in st.fields.iter().zip(b.outs(id)) {
                    self.bind(b, env, &place.field(n), t, Val::Wire(port))?;
                }
                Ok(())
            }
            (_, v) => {
                let p = b.materialize(v);
                match env.insert(place.clone(), p) {
                    Some(old) if old.ty.is_quantum() => Err(self.internal(format!("`{place}` overwritten while live"))),
                    _ => Ok(()),
                }
            }
        }
    }

    fn block(&self, b: &mut Builder, env: &mut Env, stmts: &[TStmt], ret: &mut Option<Vec<Val>>) -> Result<(), LowerError> {
        for s in stmts {
            self.stmt(b, env, s, ret)?;
        }
        Ok(())
    }

    fn stmt(&self, b: &mut Builder, env: &mut Env, s: &TStmt, ret: &mut Option<Vec<Val>>) -> Result<(), LowerError> {
        match &s.kind {
            TStmtKind::Assign { targets, value } => {
                let vals = self.values(b, env, value)?;
                if vals.len() != targets.len() {
                    return Err(self.internal("assignment arity"));
                }
                for (t, v) in targets.iter().zip(vals) {
                    self.bind(b, env, &t.place, &t.ty, v)?;
                }
            }
            TStmtKind::Expr { expr } => {
                let vals = self.values(b, env, expr)?;
                if vals.iter().any(|v| matches!(v, Val::Wire(p) if p.ty.is_quantum()) || matches!(v, Val::Struct(..))) {
                    return Err(self.internal("quantum value dropped"));
                }
            }
            TStmtKind::Return { values } => {
                let mut out = Vec::new();
                for v in values {
                    out.push(self.value(b, env, v)?);
                }
                *ret = Some(out);
            }
            TStmtKind::Assert { cond } => {
                let c = self.value(b, env, cond)?;
                let c = b.materialize(c);
                b.add(Op::Assert { site: s.span.site() }, &[c], vec![], vec![]);
            }
            TStmtKind::If { cond, then_body, else_body } => {
                let c = self.value(b, env, cond)?;
                let c = b.materialize(c);
                let keys: Vec<Place> = env.keys().cloned().collect();
                let ports: Vec<Port> = env.values().cloned().collect();
                let tys: Vec<Type> = ports.iter().map(|p| p.ty.clone()).collect();

                let mut branches = Vec::new();
                for body in [then_body, else_body] {
                    let (mut rb, rin) = Builder::with_inputs(tys.clone());
                    let mut renv: Env = keys.iter().cloned().zip(rin).collect();
                    self.block(&mut rb, &mut renv, body, ret)?;
                    branches.push((rb, renv));
                }
                let quantum = |e: &Env| e.iter().filter(|(_, p)| p.ty.is_quantum()).map(|(k, _)| k.clone()).collect::<Vec<_>>();
                if quantum(&branches[0].1) != quantum(&branches[1].1) {
                    return Err(self.internal("branches disagree on live qubits"));
                }
                let out_keys: Vec<Place> =
                    branches[0].1.keys().filter(|k| branches[1].1.contains_key(*k)).cloned().collect();
                let out_tys: Vec<Type> = out_keys.iter().map(|k| branches[0].1[k].ty.clone()).collect();
                let regions = branches
                    .into_iter()
                    .map(|(rb, renv)| {
                        let outs: Vec<Port> = out_keys.iter().map(|k| renv[k].clone()).collect();
                        rb.finish(&outs)
                    })
                    .collect();
                let mut ins = vec![c];
                ins.extend(ports);
                let id = b.add(Op::Conditional, &ins, out_tys, regions);
                *env = out_keys.into_iter().zip(b.outs(id)).collect();
            }
            TStmtKind::While { cond, body } => {
                self.lower_loop(b, env, Vec::new(), |this, lb, lenv, _| {
                    let c = this.value(lb, lenv, cond)?;
                    Ok(lb.materialize(c))
                }, |this, tb, tenv, _| this.block(tb, tenv, body, ret))?;
            }
            TStmtKind::For { var, iter, elem, len, body, .. } => {
                let quantum = elem.is_quantum();
                let mut pre = vec![b.constant(ConstVal::Int(0))];
                if !quantum {
                    let snap = self.read_place(b, env, &iter.place, &iter.ty)?;
                    pre.push(b.materialize(snap));
                }
                let var_place = Place::var(var);
                self.lower_loop(b, env, pre, |_, lb, _, extra| {
                    let n = lb.constant(ConstVal::Int(*len as i64));
                    Ok(lb.add1(Op::Binary(BinOp::Lt), &[extra[0].clone(), n], Type::Bool))
                }, |this, tb, tenv, extra| {
                    let i = extra[0].clone();
                    if quantum {
                        let arr = this.take(tenv, &iter.place)?;
                        let aty = arr.ty.clone();
                        let id = tb.add(Op::ArrayBorrow, &[arr, i.clone()], vec![aty, elem.clone()], vec![]);
                        let outs = tb.outs(id);
                        tenv.insert(iter.place.clone(), outs[0].clone());
                        tenv.insert(var_place.clone(), outs[1].clone());
                    } else {
                        let e = tb.add1(Op::ArrayGet, &[extra[1].clone(), i.clone()], elem.clone());
                        tenv.insert(var_place.clone(), e);
                    }
                    this.block(tb, tenv, body, ret)?;
                    let v = this.take(tenv, &var_place)?;
                    if quantum {
                        let arr = this.take(tenv, &iter.place)?;
                        let aty = arr.ty.clone();
                        let back = tb.add1(Op::ArrayReturn, &[arr, i.clone(), v], aty);
                        tenv.insert(iter.place.clone(), back);
                    }
                    let one = tb.constant(ConstVal::Int(1));
                    extra[0] = tb.add1(Op::Binary(BinOp::Add), &[i, one], Type::Int);
                    Ok(())
                })?;
            }
        }
        Ok(())
    }

    /// Build `Loop { c = cond; Conditional(c)[body; identity]; Output(c, ...) }`.
    ///
    /// `pre` are extra carried values (loop counters, snapshots) placed before the
    /// environment; the body may replace them through its `extra` argument.
    fn lower_loop<C, B>(&self, b: &mut Builder, env: &mut Env, pre: Vec<Port>, cond: C, body: B) -> Result<(), LowerError>
    where
        C: FnOnce(&Self, &mut Builder, &mut Env, &[Port]) -> Result<Port, LowerError>,
        B: FnOnce(&Self, &mut Builder, &mut Env, &mut Vec<Port>) -> Result<(), LowerError>,
    {
        let npre = pre.len();
        let keys: Vec<Place> = env.keys().cloned().collect();
        let mut carried = pre;
        carried.extend(env.values().cloned());
        let tys: Vec<Type> = carried.iter().map(|p| p.ty.clone()).collect();

        let (mut lb, lin) = Builder::with_inputs(tys.clone());
        let mut lenv: Env = keys.iter().cloned().zip(lin[npre..].iter().cloned()).collect();
        let c = cond(self, &mut lb, &mut lenv, &lin[..npre])?;
        let mut cin = vec![c.clone()];
        cin.extend(lin[..npre].iter().cloned());
        cin.extend(keys.iter().map(|k| lenv[k].clone()));

        let (mut tb, tin) = Builder::with_inputs(tys.clone());
        let mut tenv: Env = keys.iter().cloned().zip(tin[npre..].iter().cloned()).collect();
        let mut extra = tin[..npre].to_vec();
        body(self, &mut tb, &mut tenv, &mut extra)?;
        let mut touts = extra;
        for k in &keys {
            touts.push(tenv.remove(k).ok_or_else(|| self.internal(format!("`{k}` not live at end of loop body")))?);
        }
        if let Some((k, _)) = tenv.iter().find(|(_, p)| p.ty.is_quantum()) {
            return Err(self.internal(format!("`{k}` allocated in loop body escapes")));
        }
        let then = tb.finish(&touts);
        let (eb, ein) = Builder::with_inputs(tys.clone());
        let otherwise = eb.finish(&ein);
        let cid = lb.add(Op::Conditional, &cin, tys.clone(), vec![then, otherwise]);
        let mut louts = vec![c];
        louts.extend(lb.outs(cid));
        let region = lb.finish(&louts);

        let id = b.add(Op::Loop, &carried, tys, vec![region]);
        *env = keys.into_iter().zip(b.outs(id).into_iter().skip(npre)).collect();
        Ok(())
    }

    fn value(&self, b: &mut Builder, env: &mut Env, e: &TExpr) -> Result<Val, LowerError> {
        let mut vals = self.values(b, env, e)?;
        if vals.len() != 1 {
            return Err(self.internal(format!("expected one value, found {}", vals.len())));
        }
        Ok(vals.remove(0))
    }

    /// The components of `e`: one per tuple element or declared return.
    fn values(&self, b: &mut Builder, env: &mut Env, e: &TExpr) -> Result<Vec<Val>, LowerError> {
        Ok(match &e.kind {
            TExprKind::Int { value } => vec![Val::Wire(b.constant(ConstVal::Int(*value)))],
            TExprKind::Float { value } => vec![Val::Wire(b.constant(ConstVal::Float(*value)))],
            TExprKind::Bool { value } => vec![Val::Wire(b.constant(ConstVal::Bool(*value)))],
            TExprKind::Place { place } => vec![self.read_place(b, env, place, &e.ty)?],
            TExprKind::Call { callee, args } => self.call(b, env, callee, args, e)?,
            TExprKind::Tuple { elems } => {
                let mut out = Vec::new();
                for el in elems {
                    out.push(self.value(b, env, el)?);
                }
                out
            }
            TExprKind::Binary { op, lhs, rhs } => {
                let l = self.value(b, env, lhs)?;
                let l = b.materialize(l);
                let r = self.value(b, env, rhs)?;
                let r = b.materialize(r);
                vec![Val::Wire(b.add1(Op::Binary(*op), &[l, r], e.ty.clone()))]
            }
            TExprKind::Unary { op, operand } => {
                let v = self.value(b, env, operand)?;
                let v = b.materialize(v);
                vec![Val::Wire(b.add1(Op::Unary(*op), &[v], e.ty.clone()))]
            }
        })
    }

    fn call(&self, b: &mut Builder, env: &mut Env, callee: &Callee, args: &[crate::types::TArg], e: &TExpr) -> Result<Vec<Val>, LowerError> {
        // Nested calls run in argument order; borrowed places are taken only once all of them are done.
        let mut slots = Vec::new();
        for a in args {
            if a.mode == ArgMode::Borrow {
                let place = a.expr.as_place().ok_or_else(|| self.internal("borrow of a temporary"))?;
                slots.push(Slot::Deferred(place, &a.expr.ty));
            } else {
                slots.push(Slot::Ready(self.value(b, env, &a.expr)?));
            }
        }

        if let Callee::Struct { name, slots: order } = callee {
            let st = self
                .prog
                .structs
                .iter()
                .find(|s| &s.name == name)
                .ok_or_else(|| self.internal(format!("unknown struct `{name}`")))?;
            let mut fields: Vec<Option<Val>> = vec![None; st.fields.len()];
            for (slot, field) in slots.into_iter().zip(order) {
                let Slot::Ready(v) = slot else { return Err(self.internal("borrowed constructor argument")) };
                fields[*field] = Some(v);
            }
            let fields = fields.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| self.internal("missing field"))?;
            return Ok(vec![Val::Struct(st.clone(), fields)]);
        }

        let mut ins = Vec::new();
        let mut lent = Vec::new();
        for slot in slots {
            match slot {
                Slot::Ready(v) => ins.push(b.materialize(v)),
                Slot::Deferred(place, ty) => {
                    if let Some((arr, i)) = split_index(place) {
                        let a = self.take(env, &arr)?;
                        let idx = b.constant(ConstVal::Int(i));
                        let aty = a.ty.clone();
                        let id = b.add(Op::ArrayBorrow, &[a, idx.clone()], vec![aty, ty.clone()], vec![]);
                        let outs = b.outs(id);
                        env.insert(arr.clone(), outs[0].clone());
                        ins.push(outs[1].clone());
                        lent.push(Lent::Element(arr, idx));
                    } else {
                        let v = self.read_place(b, env, place, ty)?;
                        ins.push(b.materialize(v));
                        lent.push(Lent::Place(place.clone(), ty.clone()));
                    }
                }
            }
        }

        let site = e.span.site();
        let lent_tys: Vec<Type> = ins
            .iter()
            .zip(args)
            .filter(|(_, a)| a.mode == ArgMode::Borrow)
            .map(|(p, _)| p.ty.clone())
            .collect();
        let (op, outs) = match callee {
            Callee::Builtin { builtin } => match builtin {
                Builtin::Qubit => (Op::Alloc, vec![Type::Qubit]),
                Builtin::Measure => (Op::Measure { site }, vec![Type::Bool]),
                Builtin::Discard => (Op::Discard, vec![]),
                Builtin::Array => (Op::MakeArray, vec![e.ty.clone()]),
                Builtin::MeasureArray => (Op::MeasureArray { site }, vec![e.ty.clone()]),
                Builtin::DiscardArray => (Op::DiscardArray, vec![]),
                g => (Op::Gate(*g), lent_tys),
            },
            Callee::Function { name } => {
                let sig = self.prog.sig(name).ok_or_else(|| self.internal(format!("unknown function `{name}`")))?;
                (Op::Call { func: name.clone() }, lower_signature(sig).outputs)
            }
            Callee::Struct { .. } => unreachable!("handled above"),
        };
        let id = b.add(op, &ins, outs, vec![]);
        let outs = b.outs(id);
        let nret = outs
            .len()
            .checked_sub(lent.len())
            .ok_or_else(|| self.internal("call returns fewer values than it borrows"))?;
        for (l, port) in lent.into_iter().zip(outs[nret..].iter().cloned()) {
            match l {
                Lent::Element(arr, idx) => {
                    let a = self.take(env, &arr)?;
                    let aty = a.ty.clone();
                    let back = b.add1(Op::ArrayReturn, &[a, idx, port], aty);
                    env.insert(arr, back);
                }
                Lent::Place(place, ty) => self.bind(b, env, &place, &ty, Val::Wire(port))?,
            }
        }
        Ok(outs[..nret].iter().cloned().map(Val::Wire).collect())
    }
}
