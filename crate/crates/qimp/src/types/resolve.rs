//! Name resolution, type checking and desugaring into the typed program.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::typed::*;
use super::{places_overlap, Builtin, FuncSig, OwnershipMode, ParamSig, Place, StructType, Type};
use crate::diagnostics::{codes, sort, Diagnostic};
use crate::frontend::ast::{self, BinOp, ExprKind, StmtKind, TypeExprKind, UnOp};
use crate::span::Span;

const TYPE_NAMES: [&str; 5] = ["qubit", "int", "float", "bool", "array"];

/// Type-check a parsed program. All errors are collected and returned sorted by position.
pub fn resolve_types(program: &ast::Program) -> Result<TypedProgram, Vec<Diagnostic>> {
    let mut r = Resolver::default();
    r.collect_structs(program);
    r.collect_sigs(program);
    let mut functions = Vec::new();
    for f in program.functions() {
        if let Some(sig) = r.sigs.get(&f.name.name).cloned() {
            if let Some(tf) = r.function(f, sig) {
                functions.push(tf);
            }
        }
    }
    if r.diags.is_empty() {
        Ok(TypedProgram { structs: r.struct_order, functions })
    } else {
        sort(&mut r.diags);
        Err(r.diags)
    }
}

#[derive(Default)]
struct Resolver {
    structs: BTreeMap<String, Arc<StructType>>,
    struct_order: Vec<Arc<StructType>>,
    /// Struct names whose declaration failed; uses of them stay silent.
    bad_structs: BTreeSet<String>,
    sigs: BTreeMap<String, FuncSig>,
    diags: Vec<Diagnostic>,
}

fn err(code: &'static str, msg: impl Into<String>, span: &Span) -> Diagnostic {
    Diagnostic::error(code, msg, span.clone())
}

impl Resolver {
    fn error(&mut self, code: &'static str, msg: impl Into<String>, span: &Span) {
        self.diags.push(err(code, msg, span));
    }

    fn collect_structs(&mut self, program: &ast::Program) {
        let mut decls: BTreeMap<String, &ast::StructDecl> = BTreeMap::new();
        for s in program.structs() {
            let name = &s.name.name;
            if TYPE_NAMES.contains(&name.as_str()) || Builtin::lookup(name).is_some() {
                self.error(codes::DUPLICATE, format!("`{name}` is a reserved name"), &s.name.span);
                self.bad_structs.insert(name.clone());
            } else if decls.insert(name.clone(), s).is_some() {
                self.error(codes::DUPLICATE, format!("struct `{name}` is defined more than once"), &s.name.span);
            }
        }
        for s in program.structs() {
            if decls.get(&s.name.name).is_some_and(|d| std::ptr::eq(*d, s)) {
                self.resolve_struct(&s.name.name, &decls, &mut Vec::new());
            }
        }
    }

    fn resolve_struct(
        &mut self,
        name: &str,
        decls: &BTreeMap<String, &ast::StructDecl>,
        visiting: &mut Vec<String>,
    ) -> Option<Arc<StructType>> {
        if let Some(s) = self.structs.get(name) {
            return Some(s.clone());
        }
        if self.bad_structs.contains(name) {
            return None;
        }
        let decl = *decls.get(name)?;
        if visiting.iter().any(|v| v == name) {
            self.error(codes::UNSUPPORTED, format!("struct `{name}` contains itself"), &decl.name.span);
            self.bad_structs.insert(name.to_string());
            return None;
        }
        visiting.push(name.to_string());
        let mut fields: Vec<(String, Type)> = Vec::new();
        let mut ok = true;
        for f in &decl.fields {
            if fields.iter().any(|(n, _)| *n == f.name.name) {
                self.error(codes::DUPLICATE, format!("field `{}` is declared more than once", f.name.name), &f.name.span);
                ok = false;
                continue;
            }
            match self.type_expr_in(&f.ty, decls, visiting) {
                Some(t) => fields.push((f.name.name.clone(), t)),
                None => ok = false,
            }
        }
        visiting.pop();
        if !ok {
            self.bad_structs.insert(name.to_string());
            return None;
        }
        let st = Arc::new(StructType { name: name.to_string(), fields });
        self.structs.insert(name.to_string(), st.clone());
        self.struct_order.push(st.clone());
        Some(st)
    }

    fn type_expr_in(
        &mut self,
        te: &ast::TypeExpr,
        decls: &BTreeMap<String, &ast::StructDecl>,
        visiting: &mut Vec<String>,
    ) -> Option<Type> {
        match &te.kind {
            TypeExprKind::Named { name } => match name.as_str() {
                "qubit" => Some(Type::Qubit),
                "int" => Some(Type::Int),
                "float" => Some(Type::Float),
                "bool" => Some(Type::Bool),
                "array" => {
                    self.error(codes::TYPE_MISMATCH, "`array` needs an element type and a length", &te.span);
                    None
                }
                _ if decls.contains_key(name) || self.structs.contains_key(name) => {
                    self.resolve_struct(name, decls, visiting).map(Type::Struct)
                }
                _ if self.bad_structs.contains(name) => None,
                _ => {
                    self.error(codes::UNKNOWN_NAME, format!("unknown type `{name}`"), &te.span);
                    None
                }
            },
            TypeExprKind::Array { elem, len } => {
                let elem_ty = self.type_expr_in(elem, decls, visiting)?;
                if !elem_ty.is_scalar() {
                    self.error(
                        codes::UNSUPPORTED,
                        format!("arrays of `{elem_ty}` are not supported; elements must be qubit, int, float or bool"),
                        &elem.span,
                    );
                    return None;
                }
                if *len < 0 {
                    self.error(codes::TYPE_MISMATCH, "array length must not be negative", &te.span);
                    return None;
                }
                Some(Type::Array(Box::new(elem_ty), *len as usize))
            }
        }
    }

    fn type_expr(&mut self, te: &ast::TypeExpr) -> Option<Type> {
        self.type_expr_in(te, &BTreeMap::new(), &mut Vec::new())
    }

    fn collect_sigs(&mut self, program: &ast::Program) {
        let mut seen = BTreeSet::new();
        for f in program.functions() {
            let name = &f.name.name;
            if Builtin::lookup(name).is_some() || TYPE_NAMES.contains(&name.as_str()) {
                self.error(codes::DUPLICATE, format!("`{name}` is a reserved name"), &f.name.span);
                continue;
            }
            if self.structs.contains_key(name) || self.bad_structs.contains(name) {
                self.error(codes::DUPLICATE, format!("`{name}` is already defined as a struct"), &f.name.span);
                continue;
            }
            if !seen.insert(name.clone()) {
                self.error(codes::DUPLICATE, format!("function `{name}` is defined more than once"), &f.name.span);
                continue;
            }
            let mut ok = true;
            let mut params: Vec<ParamSig> = Vec::new();
            for p in &f.params {
                if params.iter().any(|q| q.name == p.name.name) {
                    self.error(codes::DUPLICATE, format!("parameter `{}` is declared more than once", p.name.name), &p.name.span);
                    ok = false;
                    continue;
                }
                let Some(ty) = self.type_expr(&p.ty) else {
                    ok = false;
                    continue;
                };
                let mode = if ty.is_quantum() {
                    p.mode
                } else {
                    if p.mode == OwnershipMode::Owned {
                        self.error(
                            codes::OWNED_CLASSICAL,
                            format!("`@owned` has no meaning on the classical parameter `{}`", p.name.name),
                            &p.span,
                        );
                        ok = false;
                    }
                    OwnershipMode::Owned
                };
                params.push(ParamSig { name: p.name.name.clone(), ty, mode });
            }
            let mut returns = Vec::new();
            for r in &f.returns {
                match self.type_expr(r) {
                    Some(t) => returns.push(t),
                    None => ok = false,
                }
            }
            if ok {
                self.sigs.insert(name.clone(), FuncSig { params, returns });
            }
        }
    }

    fn function(&mut self, f: &ast::FuncDecl, sig: FuncSig) -> Option<TypedFunction> {
        let mut cx = FnCx {
            r: self,
            vars: BTreeMap::new(),
            assigned: BTreeSet::new(),
            poisoned: BTreeSet::new(),
            assigned_names: BTreeSet::new(),
            loop_stack: Vec::new(),
            returns: sig.returns.clone(),
            diags: Vec::new(),
        };
        for p in &sig.params {
            let kind = VarKind::Param(p.mode);
            cx.vars.insert(p.name.clone(), VarInfo { ty: p.ty.clone(), kind });
            cx.assigned.insert(p.name.clone());
            cx.assigned_names.insert(p.name.clone());
        }
        collect_assigned_names(&f.body.stmts, &mut cx.assigned_names);
        let body = cx.block(&f.body.stmts, true);
        match f.body.stmts.last().map(|s| &s.kind) {
            Some(StmtKind::Return { .. }) => {}
            _ if !sig.returns.is_empty() => cx.diags.push(err(
                codes::BAD_RETURN,
                format!("`{}` must end with a `return` statement", f.name.name),
                &f.name.span,
            )),
            _ => {}
        }
        let FnCx { vars, diags, .. } = cx;
        let failed = !diags.is_empty();
        self.diags.extend(diags);
        if failed {
            return None;
        }
        Some(TypedFunction {
            name: f.name.name.clone(),
            sig,
            param_spans: f.params.iter().map(|p| p.span.clone()).collect(),
            body,
            vars,
            span: f.span.clone(),
        })
    }
}

fn collect_assigned_names(stmts: &[ast::Stmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Assign { targets, .. } => {
                for t in targets {
                    if let ExprKind::Name { name } = &t.kind {
                        out.insert(name.clone());
                    }
                }
            }
            StmtKind::AugAssign { target, .. } => {
                if let ExprKind::Name { name } = &target.kind {
                    out.insert(name.clone());
                }
            }
            StmtKind::If { then_block, elifs, else_block, .. } => {
                collect_assigned_names(&then_block.stmts, out);
                for (_, b) in elifs {
                    collect_assigned_names(&b.stmts, out);
                }
                if let Some(b) = else_block {
                    collect_assigned_names(&b.stmts, out);
                }
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => collect_assigned_names(&body.stmts, out),
            StmtKind::Expr { .. } | StmtKind::Return { .. } | StmtKind::Assert { .. } => {}
        }
    }
}

fn is_place_syntax(e: &ast::Expr) -> bool {
    match &e.kind {
        ExprKind::Name { .. } => true,
        ExprKind::Field { base, .. } | ExprKind::Index { base, .. } => is_place_syntax(base),
        _ => false,
    }
}

struct FnCx<'r> {
    r: &'r Resolver,
    vars: BTreeMap<String, VarInfo>,
    /// Variables definitely assigned at the current point.
    assigned: BTreeSet<String>,
    /// Variables whose definition failed; reading them reports nothing further.
    poisoned: BTreeSet<String>,
    /// Parameters and every plain name assigned anywhere in the body.
    assigned_names: BTreeSet<String>,
    loop_stack: Vec<String>,
    returns: Vec<Type>,
    diags: Vec<Diagnostic>,
}

impl FnCx<'_> {
    fn error(&mut self, code: &'static str, msg: impl Into<String>, span: &Span) {
        self.diags.push(err(code, msg, span));
    }

    fn block(&mut self, stmts: &[ast::Stmt], top_level: bool) -> Vec<TStmt> {
        let mut out = Vec::new();
        for (i, s) in stmts.iter().enumerate() {
            if matches!(s.kind, StmtKind::Return { .. }) && !(top_level && i + 1 == stmts.len()) {
                self.error(
                    codes::BAD_RETURN,
                    "`return` is only supported as the last statement of a function body",
                    &s.span,
                );
                continue;
            }
            if let Some(t) = self.stmt(s) {
                out.push(t);
            }
        }
        out
    }

    fn stmt(&mut self, s: &ast::Stmt) -> Option<TStmt> {
        let kind = match &s.kind {
            StmtKind::Assign { targets, value } => self.assign(targets, value, &s.span)?,
            StmtKind::AugAssign { target, op, value } => self.aug_assign(target, *op, value)?,
            StmtKind::Expr { expr } => {
                let e = self.expr(expr)?;
                if !matches!(e.kind, TExprKind::Call { .. }) && e.ty.is_quantum() {
                    self.error(codes::UNSUPPORTED, "this statement drops a quantum value", &expr.span);
                    return None;
                }
                TStmtKind::Expr { expr: e }
            }
            StmtKind::Return { values } => self.ret(values, &s.span)?,
            StmtKind::Assert { cond } => TStmtKind::Assert { cond: self.cond(cond)? },
            StmtKind::If { cond, then_block, elifs, else_block } => {
                return self.if_chain(cond, then_block, elifs, else_block.as_ref(), &s.span);
            }
            StmtKind::While { cond, body } => {
                let c = self.cond(cond);
                if c.as_ref().is_some_and(TExpr::has_call) {
                    self.error(codes::UNSUPPORTED, "calls are not allowed in `while` conditions", &cond.span);
                }
                let saved = self.assigned.clone();
                let body = self.block(&body.stmts, false);
                self.assigned = saved;
                TStmtKind::While { cond: c?, body }
            }
            StmtKind::For { var, iter, body } => self.for_loop(var, iter, body)?,
        };
        Some(TStmt { kind, span: s.span.clone() })
    }

    fn if_chain(
        &mut self,
        cond: &ast::Expr,
        then_block: &ast::Block,
        elifs: &[(ast::Expr, ast::Block)],
        else_block: Option<&ast::Block>,
        span: &Span,
    ) -> Option<TStmt> {
        let c = self.cond(cond);
        let before = self.assigned.clone();
        let then_body = self.block(&then_block.stmts, false);
        let after_then = std::mem::replace(&mut self.assigned, before);
        let else_body = match elifs.split_first() {
            Some(((c2, b2), rest)) => {
                let span = c2.span.to(&b2.span);
                self.if_chain(c2, b2, rest, else_block, &span).into_iter().collect()
            }
            None => match else_block {
                Some(b) => self.block(&b.stmts, false),
                None => Vec::new(),
            },
        };
        self.assigned = self.assigned.intersection(&after_then).cloned().collect();
        Some(TStmt {
            kind: TStmtKind::If { cond: c?, then_body, else_body },
            span: span.clone(),
        })
    }

    fn cond(&mut self, e: &ast::Expr) -> Option<TExpr> {
        let t = self.expr(e)?;
        if t.ty != Type::Bool {
            self.error(codes::TYPE_MISMATCH, format!("expected `bool`, found `{}`", t.ty), &e.span);
            return None;
        }
        Some(t)
    }

    fn for_loop(&mut self, var: &ast::Ident, iter: &ast::Expr, body: &ast::Block) -> Option<TStmtKind> {
        if !is_place_syntax(iter) {
            self.error(codes::BAD_LOOP, "`for` loops iterate over an array variable or field", &iter.span);
            return None;
        }
        let it = self.place(iter)?;
        let Type::Array(elem, len) = it.ty.clone() else {
            self.error(codes::BAD_LOOP, format!("cannot iterate over a value of type `{}`", it.ty), &iter.span);
            return None;
        };
        let name = &var.name;
        if self.assigned_names.contains(name) || self.loop_stack.contains(name) {
            self.error(codes::BAD_LOOP, format!("loop variable `{name}` must be a fresh name"), &var.span);
            return None;
        }
        match self.vars.get(name) {
            Some(v) if v.ty != *elem => {
                self.error(
                    codes::BAD_LOOP,
                    format!("loop variable `{name}` was already used with type `{}`", v.ty),
                    &var.span,
                );
                return None;
            }
            Some(_) => {}
            None => {
                self.vars.insert(name.clone(), VarInfo { ty: (*elem).clone(), kind: VarKind::LoopVar });
            }
        }
        self.loop_stack.push(name.clone());
        let saved = self.assigned.clone();
        self.assigned.insert(name.clone());
        let body = self.block(&body.stmts, false);
        self.assigned = saved;
        self.loop_stack.pop();
        Some(TStmtKind::For {
            var: name.clone(),
            var_span: var.span.clone(),
            iter: it,
            elem: *elem,
            len,
            body,
        })
    }

    fn ret(&mut self, values: &[ast::Expr], span: &Span) -> Option<TStmtKind> {
        let mut out = Vec::new();
        let mut ok = true;
        for v in values {
            match self.moved_value(v) {
                Some(t) => out.push(t),
                None => ok = false,
            }
        }
        if !ok {
            return None;
        }
        if let Some(t) = out.iter().find(|t| matches!(t.ty, Type::Tuple(_))) {
            let span = t.span.clone();
            self.error(codes::UNSUPPORTED, "multi-value results must be unpacked before returning them", &span);
            return None;
        }
        if out.len() != self.returns.len() {
            self.error(
                codes::BAD_RETURN,
                format!("expected {} return value(s), found {}", self.returns.len(), out.len()),
                span,
            );
            return None;
        }
        for (t, want) in out.iter().zip(self.returns.clone()) {
            if t.ty != want {
                self.error(
                    codes::BAD_RETURN,
                    format!("expected return type `{want}`, found `{}`", t.ty),
                    &t.span,
                );
                return None;
            }
        }
        Some(TStmtKind::Return { values: out })
    }

    /// An expression whose value is moved somewhere: a return value, an assignment source or a constructor field.
    fn moved_value(&mut self, e: &ast::Expr) -> Option<TExpr> {
        if let ExprKind::Tuple { .. } = e.kind {
            self.error(codes::UNSUPPORTED, "tuples are only supported in destructuring assignments", &e.span);
            return None;
        }
        let t = self.expr(e)?;
        self.check_not_element_move(&t)?;
        Some(t)
    }

    fn check_not_element_move(&mut self, t: &TExpr) -> Option<()> {
        if let Some(p) = t.as_place() {
            if t.ty.is_quantum() && p.has_index() {
                self.error(
                    codes::ELEMENT_CONSUME,
                    format!("cannot move `{p}` out of its array; individual array elements can only be borrowed"),
                    &t.span,
                );
                return None;
            }
        }
        Some(())
    }

    fn assign(&mut self, targets: &[ast::Expr], value: &ast::Expr, span: &Span) -> Option<TStmtKind> {
        let (value, comps): (TExpr, Vec<Type>) = if targets.len() == 1 {
            let v = self.moved_value(value)?;
            match &v.ty {
                Type::Tuple(_) => {
                    self.error(codes::UNSUPPORTED, "multi-value results must be unpacked into separate variables", &value.span);
                    return None;
                }
                Type::Unit => {
                    self.error(codes::TYPE_MISMATCH, "this expression does not produce a value", &value.span);
                    return None;
                }
                _ => {}
            }
            let ty = v.ty.clone();
            (v, vec![ty])
        } else {
            let v = match &value.kind {
                ExprKind::Tuple { elems } => {
                    let mut ts = Vec::new();
                    let mut ok = true;
                    for e in elems {
                        match self.moved_value(e) {
                            Some(t) => ts.push(t),
                            None => ok = false,
                        }
                    }
                    if !ok {
                        return None;
                    }
                    if let Some(bad) = ts.iter().find(|t| matches!(t.ty, Type::Tuple(_) | Type::Unit)) {
                        let s = bad.span.clone();
                        self.error(codes::TYPE_MISMATCH, "this expression does not produce a single value", &s);
                        return None;
                    }
                    let ty = Type::Tuple(ts.iter().map(|t| t.ty.clone()).collect());
                    TExpr { kind: TExprKind::Tuple { elems: ts }, ty, span: value.span.clone() }
                }
                _ => self.expr(value)?,
            };
            let Type::Tuple(comps) = v.ty.clone() else {
                self.error(
                    codes::TYPE_MISMATCH,
                    format!("cannot unpack a value of type `{}` into {} targets", v.ty, targets.len()),
                    &value.span,
                );
                return None;
            };
            if comps.len() != targets.len() {
                self.error(
                    codes::TYPE_MISMATCH,
                    format!("cannot unpack {} values into {} targets", comps.len(), targets.len()),
                    span,
                );
                return None;
            }
            (v, comps)
        };
        let mut out: Vec<TPlace> = Vec::new();
        let mut ok = true;
        for (t, ty) in targets.iter().zip(comps) {
            match self.target(t, ty) {
                Some(tp) => {
                    if out.iter().any(|o| places_overlap(&o.place, &tp.place)) {
                        self.error(codes::DUPLICATE, format!("`{}` is assigned twice in one statement", tp.place), &tp.span);
                        ok = false;
                    }
                    out.push(tp);
                }
                None => ok = false,
            }
        }
        for t in targets {
            if let ExprKind::Name { name } = &t.kind {
                if ok {
                    self.assigned.insert(name.clone());
                } else if !self.assigned.contains(name) {
                    self.poisoned.insert(name.clone());
                }
            }
        }
        ok.then_some(TStmtKind::Assign { targets: out, value })
    }

    fn target(&mut self, t: &ast::Expr, ty: Type) -> Option<TPlace> {
        if let ExprKind::Name { name } = &t.kind {
            match self.vars.get(name) {
                Some(v) if v.kind == VarKind::LoopVar => {
                    self.error(codes::BAD_LOOP, format!("cannot assign to loop variable `{name}`"), &t.span);
                    return None;
                }
                Some(v) if v.ty != ty => {
                    let msg = format!("cannot assign a value of type `{ty}` to `{name}` of type `{}`", v.ty);
                    self.error(codes::TYPE_MISMATCH, msg, &t.span);
                    return None;
                }
                Some(_) => {}
                None => {
                    self.vars.insert(name.clone(), VarInfo { ty: ty.clone(), kind: VarKind::Local });
                }
            }
            return Some(TPlace { place: Place::var(name), ty, span: t.span.clone() });
        }
        if !is_place_syntax(t) {
            self.error(codes::UNSUPPORTED, "cannot assign to this expression", &t.span);
            return None;
        }
        let tp = self.place(t)?;
        if self.vars[&tp.place.root].kind == VarKind::LoopVar {
            self.error(codes::BAD_LOOP, format!("cannot assign to loop variable `{}`", tp.place.root), &t.span);
            return None;
        }
        if tp.ty != ty {
            let msg = format!("cannot assign a value of type `{ty}` to `{}` of type `{}`", tp.place, tp.ty);
            self.error(codes::TYPE_MISMATCH, msg, &t.span);
            return None;
        }
        if ty.is_quantum() && tp.place.has_index() {
            self.error(
                codes::ELEMENT_CONSUME,
                format!("cannot move a qubit into `{}`; individual array elements can only be borrowed", tp.place),
                &t.span,
            );
            return None;
        }
        Some(tp)
    }

    fn aug_assign(&mut self, target: &ast::Expr, op: BinOp, value: &ast::Expr) -> Option<TStmtKind> {
        if !is_place_syntax(target) {
            self.error(codes::UNSUPPORTED, "cannot assign to this expression", &target.span);
            return None;
        }
        let tp = self.place(target)?;
        if self.vars[&tp.place.root].kind == VarKind::LoopVar {
            self.error(codes::BAD_LOOP, format!("cannot assign to loop variable `{}`", tp.place.root), &target.span);
            return None;
        }
        let rhs = self.expr(value)?;
        let lhs = TExpr { kind: TExprKind::Place { place: tp.place.clone() }, ty: tp.ty.clone(), span: tp.span.clone() };
        let span = target.span.to(&value.span);
        let sum = self.binary(op, lhs, rhs, &span)?;
        Some(TStmtKind::Assign { targets: vec![tp], value: sum })
    }

    fn place(&mut self, e: &ast::Expr) -> Option<TPlace> {
        match &e.kind {
            ExprKind::Name { name } => {
                let ty = self.read_var(name, &e.span)?;
                Some(TPlace { place: Place::var(name), ty, span: e.span.clone() })
            }
            ExprKind::Field { base, field } => {
                let b = self.place(base)?;
                let Type::Struct(st) = &b.ty else {
                    self.error(codes::UNKNOWN_NAME, format!("`{}` of type `{}` has no fields", b.place, b.ty), &field.span);
                    return None;
                };
                let Some((_, fty)) = st.field(&field.name) else {
                    self.error(
                        codes::UNKNOWN_NAME,
                        format!("struct `{}` has no field `{}`", st.name, field.name),
                        &field.span,
                    );
                    return None;
                };
                Some(TPlace { place: b.place.field(&field.name), ty: fty.clone(), span: e.span.clone() })
            }
            ExprKind::Index { base, index } => {
                let b = self.place(base)?;
                let Type::Array(elem, len) = &b.ty else {
                    self.error(codes::TYPE_MISMATCH, format!("cannot index into a value of type `{}`", b.ty), &base.span);
                    return None;
                };
                let ExprKind::Int { value } = index.kind else {
                    self.error(codes::DYNAMIC_INDEX, "array indices must be integer constants", &index.span);
                    return None;
                };
                if value < 0 || value as u64 >= *len as u64 {
                    self.error(
                        codes::DYNAMIC_INDEX,
                        format!("index {value} is out of bounds for `{}`", b.ty),
                        &index.span,
                    );
                    return None;
                }
                Some(TPlace { place: b.place.index(value as usize), ty: (**elem).clone(), span: e.span.clone() })
            }
            _ => unreachable!("caller checks place syntax"),
        }
    }

    fn read_var(&mut self, name: &str, span: &Span) -> Option<Type> {
        if let Some(v) = self.vars.get(name) {
            if self.assigned.contains(name) {
                return Some(v.ty.clone());
            }
        }
        if self.poisoned.contains(name) {
            return None;
        }
        let msg = if self.vars.contains_key(name) || self.assigned_names.contains(name) {
            format!("`{name}` might be used before it is assigned")
        } else if self.r.sigs.contains_key(name) || self.r.structs.contains_key(name) || Builtin::lookup(name).is_some() {
            format!("`{name}` is not a value")
        } else {
            format!("`{name}` is not defined")
        };
        self.error(codes::UNDEFINED_VAR, msg, span);
        None
    }

    fn expr(&mut self, e: &ast::Expr) -> Option<TExpr> {
        let (kind, ty) = match &e.kind {
            ExprKind::Int { value } => (TExprKind::Int { value: *value }, Type::Int),
            ExprKind::Float { value } => (TExprKind::Float { value: *value }, Type::Float),
            ExprKind::Bool { value } => (TExprKind::Bool { value: *value }, Type::Bool),
            ExprKind::Name { .. } | ExprKind::Field { .. } | ExprKind::Index { .. } => {
                if !is_place_syntax(e) {
                    self.error(codes::UNSUPPORTED, "fields and elements can only be read from variables", &e.span);
                    return None;
                }
                let p = self.place(e)?;
                (TExprKind::Place { place: p.place }, p.ty)
            }
            ExprKind::Call { func, args } => return self.call(e, func, args),
            ExprKind::Tuple { .. } => {
                self.error(codes::UNSUPPORTED, "tuples are only supported in destructuring assignments", &e.span);
                return None;
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs);
                let r = self.expr(rhs);
                return self.binary(*op, l?, r?, &e.span);
            }
            ExprKind::Unary { op, operand } => {
                let t = self.expr(operand)?;
                let ok = match op {
                    UnOp::Neg => matches!(t.ty, Type::Int | Type::Float),
                    UnOp::Not => t.ty == Type::Bool,
                };
                if !ok {
                    self.error(
                        codes::TYPE_MISMATCH,
                        format!("operator `{}` cannot be applied to `{}`", op.symbol(), t.ty),
                        &e.span,
                    );
                    return None;
                }
                let ty = t.ty.clone();
                (TExprKind::Unary { op: *op, operand: Box::new(t) }, ty)
            }
        };
        Some(TExpr { kind, ty, span: e.span.clone() })
    }

    fn binary(&mut self, op: BinOp, l: TExpr, r: TExpr, span: &Span) -> Option<TExpr> {
        use BinOp::*;
        let ty = match (op, &l.ty, &r.ty) {
            (Add | Sub | Mul, Type::Int, Type::Int) => Some(Type::Int),
            (Add | Sub | Mul, Type::Float, Type::Float) => Some(Type::Float),
            (Eq | Ne, a, b) if a == b && matches!(a, Type::Int | Type::Float | Type::Bool) => Some(Type::Bool),
            (Lt | Le | Gt | Ge, a, b) if a == b && matches!(a, Type::Int | Type::Float) => Some(Type::Bool),
            (And | Or, Type::Bool, Type::Bool) => Some(Type::Bool),
            _ => None,
        };
        let Some(ty) = ty else {
            self.error(
                codes::TYPE_MISMATCH,
                format!("operator `{}` cannot be applied to `{}` and `{}`", op.symbol(), l.ty, r.ty),
                span,
            );
            return None;
        };
        Some(TExpr { kind: TExprKind::Binary { op, lhs: Box::new(l), rhs: Box::new(r) }, ty, span: span.clone() })
    }

    fn call(&mut self, e: &ast::Expr, func: &ast::Ident, args: &[ast::Arg]) -> Option<TExpr> {
        let name = func.name.as_str();
        if let Some(st) = self.r.structs.get(name).cloned() {
            return self.construct(e, st, args);
        }
        if self.r.bad_structs.contains(name) {
            return None;
        }
        let builtin = Builtin::lookup(name);
        let user_sig = self.r.sigs.get(name).cloned();
        if builtin.is_none() && user_sig.is_none() {
            self.error(codes::UNKNOWN_NAME, format!("unknown function `{name}`"), &func.span);
            return None;
        }
        if let Some(a) = args.iter().find_map(|a| a.name.as_ref()) {
            self.error(codes::UNSUPPORTED, "keyword arguments are only supported by struct constructors", &a.span);
            return None;
        }
        let mut targs = Vec::new();
        let mut ok = true;
        for a in args {
            match self.expr(&a.value) {
                Some(t) => targs.push(t),
                None => ok = false,
            }
        }
        if !ok {
            return None;
        }
        let sig = match (builtin, user_sig) {
            (Some(b), _) => {
                let types: Vec<Type> = targs.iter().map(|t| t.ty.clone()).collect();
                match b.instantiate(&types) {
                    Some(sig) => sig,
                    None => {
                        let msg = match b {
                            Builtin::Array if types.is_empty() => "`array` needs at least one element".to_string(),
                            Builtin::Array => format!("`array` elements must be scalars, found `{}`", types[0]),
                            _ => format!("`{name}` expects an array of qubits"),
                        };
                        let code = if types.is_empty() { codes::ARITY } else { codes::TYPE_MISMATCH };
                        self.error(code, msg, &e.span);
                        return None;
                    }
                }
            }
            (None, Some(sig)) => sig,
            (None, None) => unreachable!(),
        };
        if sig.params.len() != targs.len() {
            self.error(
                codes::ARITY,
                format!("`{name}` takes {} argument(s) but {} were given", sig.params.len(), targs.len()),
                &e.span,
            );
            return None;
        }
        let mut out = Vec::new();
        for (t, p) in targs.into_iter().zip(&sig.params) {
            if t.ty != p.ty {
                self.error(
                    codes::TYPE_MISMATCH,
                    format!("expected `{}` for parameter `{}` of `{name}`, found `{}`", p.ty, p.name, t.ty),
                    &t.span,
                );
                ok = false;
                continue;
            }
            let mode = arg_mode(&p.ty, p.mode);
            if mode == ArgMode::Consume && self.check_not_element_move(&t).is_none() {
                ok = false;
                continue;
            }
            out.push(TArg { expr: t, mode });
        }
        if !ok {
            return None;
        }
        let callee = match builtin {
            Some(b) => Callee::Builtin { builtin: b },
            None => Callee::Function { name: name.to_string() },
        };
        Some(TExpr {
            kind: TExprKind::Call { callee, args: out },
            ty: sig.result_type(),
            span: e.span.clone(),
        })
    }

    fn construct(&mut self, e: &ast::Expr, st: Arc<StructType>, args: &[ast::Arg]) -> Option<TExpr> {
        let mut slots = Vec::new();
        let mut out = Vec::new();
        let mut ok = true;
        let mut seen_keyword = false;
        for (i, a) in args.iter().enumerate() {
            let slot = match &a.name {
                None if seen_keyword => {
                    self.error(codes::UNSUPPORTED, "positional arguments must come before keyword arguments", &a.value.span);
                    ok = false;
                    continue;
                }
                None if i >= st.fields.len() => {
                    self.error(
                        codes::ARITY,
                        format!("`{}` has {} field(s) but {} arguments were given", st.name, st.fields.len(), args.len()),
                        &a.value.span,
                    );
                    ok = false;
                    continue;
                }
                None => i,
                Some(n) => {
                    seen_keyword = true;
                    match st.field(&n.name) {
                        Some((idx, _)) => idx,
                        None => {
                            self.error(codes::UNKNOWN_NAME, format!("struct `{}` has no field `{}`", st.name, n.name), &n.span);
                            ok = false;
                            continue;
                        }
                    }
                }
            };
            if slots.contains(&slot) {
                self.error(
                    codes::DUPLICATE,
                    format!("field `{}` is initialized more than once", st.fields[slot].0),
                    &a.value.span,
                );
                ok = false;
                continue;
            }
            slots.push(slot);
            let Some(t) = self.moved_value(&a.value) else {
                ok = false;
                continue;
            };
            let want = &st.fields[slot].1;
            if t.ty != *want {
                self.error(
                    codes::TYPE_MISMATCH,
                    format!("expected `{want}` for field `{}`, found `{}`", st.fields[slot].0, t.ty),
                    &t.span,
                );
                ok = false;
                continue;
            }
            let mode = if want.is_quantum() { ArgMode::Consume } else { ArgMode::Copy };
            out.push(TArg { expr: t, mode });
        }
        if !ok {
            return None;
        }
        let missing: Vec<&str> = (0..st.fields.len())
            .filter(|i| !slots.contains(i))
            .map(|i| st.fields[i].0.as_str())
            .collect();
        if !missing.is_empty() {
            self.error(
                codes::ARITY,
                format!("missing field(s) for `{}`: {}", st.name, missing.join(", ")),
                &e.span,
            );
            return None;
        }
        Some(TExpr {
            kind: TExprKind::Call { callee: Callee::Struct { name: st.name.clone(), slots }, args: out },
            ty: Type::Struct(st),
            span: e.span.clone(),
        })
    }
}

pub(crate) fn arg_mode(ty: &Type, mode: OwnershipMode) -> ArgMode {
    match (ty.is_quantum(), mode) {
        (false, _) => ArgMode::Copy,
        (true, OwnershipMode::Borrowed) => ArgMode::Borrow,
        (true, OwnershipMode::Owned) => ArgMode::Consume,
    }
}
