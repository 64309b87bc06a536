//! Canonical source printer. `parse(print(p))` is structurally equal to `p`.

use std::fmt::Write as _;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, item) in program.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            Item::Struct(s) => print_struct(&mut out, s),
            Item::Func(f) => print_func(&mut out, f),
        }
    }
    out
}

fn print_struct(out: &mut String, s: &StructDecl) {
    let _ = writeln!(out, "class {}:", s.name.name);
    for f in &s.fields {
        let _ = writeln!(out, "{INDENT}{}: {}", f.name.name, type_expr(&f.ty));
    }
}

fn print_func(out: &mut String, f: &FuncDecl) {
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| {
            let owned = if p.mode == OwnershipMode::Owned { " @owned" } else { "" };
            format!("{}: {}{owned}", p.name.name, type_expr(&p.ty))
        })
        .collect();
    let _ = write!(out, "def {}({})", f.name.name, params.join(", "));
    match f.returns.len() {
        0 => {}
        1 => {
            let _ = write!(out, " -> {}", type_expr(&f.returns[0]));
        }
        _ => {
            let rs: Vec<String> = f.returns.iter().map(type_expr).collect();
            let _ = write!(out, " -> ({})", rs.join(", "));
        }
    }
    out.push_str(":\n");
    print_block(out, &f.body, 1);
}

pub fn type_expr(t: &TypeExpr) -> String {
    match &t.kind {
        TypeExprKind::Named { name } => name.clone(),
        TypeExprKind::Array { elem, len } => format!("array[{}, {len}]", type_expr(elem)),
    }
}

fn print_block(out: &mut String, b: &Block, depth: usize) {
    for s in &b.stmts {
        print_stmt(out, s, depth);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match &s.kind {
        StmtKind::Assign { targets, value } => {
            let ts: Vec<String> = targets.iter().map(|t| expr(t, 0)).collect();
            let _ = writeln!(out, "{pad}{} = {}", ts.join(", "), expr_list(value));
        }
        StmtKind::AugAssign { target, op, value } => {
            let _ = writeln!(out, "{pad}{} {}= {}", expr(target, 0), op.symbol(), expr(value, 0));
        }
        StmtKind::Expr { expr: e } => {
            let _ = writeln!(out, "{pad}{}", expr_list(e));
        }
        StmtKind::Return { values } => {
            if values.is_empty() {
                let _ = writeln!(out, "{pad}return");
            } else {
                let vs: Vec<String> = values.iter().map(|v| expr(v, 0)).collect();
                let _ = writeln!(out, "{pad}return {}", vs.join(", "));
            }
        }
        StmtKind::Assert { cond } => {
            let _ = writeln!(out, "{pad}assert {}", expr(cond, 0));
        }
        StmtKind::If { cond, then_block, elifs, else_block } => {
            let _ = writeln!(out, "{pad}if {}:", expr(cond, 0));
            print_block(out, then_block, depth + 1);
            for (c, b) in elifs {
                let _ = writeln!(out, "{pad}elif {}:", expr(c, 0));
                print_block(out, b, depth + 1);
            }
            if let Some(b) = else_block {
                let _ = writeln!(out, "{pad}else:");
                print_block(out, b, depth + 1);
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "{pad}while {}:", expr(cond, 0));
            print_block(out, body, depth + 1);
        }
        StmtKind::For { var, iter, body } => {
            let _ = writeln!(out, "{pad}for {} in {}:", var.name, expr(iter, 0));
            print_block(out, body, depth + 1);
        }
    }
}

/// A top-level tuple prints without parentheses.
fn expr_list(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Tuple { elems } if elems.len() > 1 => {
            elems.iter().map(|x| expr(x, 0)).collect::<Vec<_>>().join(", ")
        }
        _ => expr(e, 0),
    }
}

const NOT_PREC: u8 = 3;
const UNARY_PREC: u8 = 7;

/// Print `e`, parenthesizing when its precedence is below `ctx`.
pub fn expr(e: &Expr, ctx: u8) -> String {
    let (s, prec) = match &e.kind {
        ExprKind::Int { value } => (value.to_string(), 9),
        ExprKind::Float { value } => (format!("{value:?}"), 9),
        ExprKind::Bool { value } => ((if *value { "True" } else { "False" }).to_string(), 9),
        ExprKind::Name { name } => (name.clone(), 9),
        ExprKind::Field { base, field } => (format!("{}.{}", expr(base, 8), field.name), 8),
        ExprKind::Index { base, index } => (format!("{}[{}]", expr(base, 8), expr(index, 0)), 8),
        ExprKind::Call { func, args } => {
            let args: Vec<String> = args
                .iter()
                .map(|a| match &a.name {
                    Some(n) => format!("{}={}", n.name, expr(&a.value, 0)),
                    None => expr(&a.value, 0),
                })
                .collect();
            (format!("{}({})", func.name, args.join(", ")), 8)
        }
        ExprKind::Tuple { elems } => {
            let inner: Vec<String> = elems.iter().map(|x| expr(x, 0)).collect();
            let s = if inner.len() == 1 {
                format!("({},)", inner[0])
            } else {
                format!("({})", inner.join(", "))
            };
            (s, 9)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // comparisons are non-associative, arithmetic and logic are left-associative
            let lp = if op.is_comparison() { p + 1 } else { p };
            (format!("{} {} {}", expr(lhs, lp), op.symbol(), expr(rhs, p + 1)), p)
        }
        ExprKind::Unary { op: UnOp::Not, operand } => (format!("not {}", expr(operand, NOT_PREC)), NOT_PREC),
        ExprKind::Unary { op: UnOp::Neg, operand } => {
            let inner = expr(operand, UNARY_PREC);
            // keep `- -x` from lexing as a single token sequence ambiguity
            let s = if inner.starts_with('-') { format!("-({inner})") } else { format!("-{inner}") };
            (s, UNARY_PREC)
        }
    };
    if prec < ctx {
        format!("({s})")
    } else {
        s
    }
}
