use std::fmt::Write as _;

use super::ast::*;
use crate::rational::Rational;

fn num(r: &Rational) -> String {
    if r.is_integer() && !r.is_negative() {
        r.to_string()
    } else {
        format!("({r})")
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 5,
        Expr::Pow(..) => 4,
        Expr::Num(_) | Expr::Var(_) => 5,
    }
}

fn expr_at(e: &Expr, min: u8) -> String {
    let s = expr(e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Num(r) => num(r),
        Expr::Var(v) => v.clone(),
        Expr::Add(a, b) => format!("{} + {}", expr_at(a, 1), expr_at(b, 2)),
        Expr::Sub(a, b) => format!("{} - {}", expr_at(a, 1), expr_at(b, 2)),
        Expr::Mul(a, b) => format!("{} * {}", expr_at(a, 2), expr_at(b, 3)),
        Expr::Div(a, b) => format!("{} / {}", expr_at(a, 2), expr_at(b, 3)),
        Expr::Neg(a) => format!("(-{})", expr_at(a, 3)),
        Expr::Pow(a, k) => format!("{}^{k}", expr_at(a, 5)),
    }
}

fn pred_prec(p: &Pred) -> u8 {
    match p {
        Pred::Or(..) => 1,
        Pred::And(..) => 2,
        Pred::Not(..) => 3,
        Pred::Bool(_) | Pred::Cmp(..) => 4,
    }
}

fn pred_at(p: &Pred, min: u8) -> String {
    let s = pred(p);
    if pred_prec(p) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn pred(p: &Pred) -> String {
    match p {
        Pred::Bool(b) => b.to_string(),
        Pred::Cmp(a, op, b) => format!("{} {} {}", expr(a), op.symbol(), expr(b)),
        Pred::And(a, b) => format!("{} and {}", pred_at(a, 2), pred_at(b, 3)),
        Pred::Or(a, b) => format!("{} or {}", pred_at(a, 1), pred_at(b, 2)),
        Pred::Not(a) => format!("not {}", pred_at(a, 3)),
    }
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match &s.kind {
        StmtKind::Assign(v, e) => {
            let _ = writeln!(out, "{pad}{v} := {}", expr(e));
        }
        StmtKind::Sample(v, d) => {
            let _ = writeln!(out, "{pad}{v} := sample({d})");
        }
        StmtKind::Skip => {
            let _ = writeln!(out, "{pad}skip");
        }
        StmtKind::ProbIf(p, a, b) => {
            let _ = writeln!(out, "{pad}if prob({p}) {{");
            branches(out, a, b.as_deref(), depth);
        }
        StmtKind::If(p, a, b) => {
            let _ = writeln!(out, "{pad}if {} {{", pred(p));
            branches(out, a, b.as_deref(), depth);
        }
        StmtKind::While(p, body) => {
            let _ = writeln!(out, "{pad}while {} {{", pred(p));
            block(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

fn branches(out: &mut String, a: &[Stmt], b: Option<&[Stmt]>, depth: usize) {
    let pad = "    ".repeat(depth);
    block(out, a, depth + 1);
    match b {
        Some(b) => {
            let _ = writeln!(out, "{pad}}} else {{");
            block(out, b, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        None => {
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// Renders a program in concrete syntax accepted by the parser.
pub fn pretty_print(ast: &ProgramAst) -> String {
    let mut out = String::new();
    for (v, c) in &ast.initial_assignments {
        let _ = writeln!(out, "{v} := {}", num(c));
    }
    block(&mut out, &ast.statements, 0);
    let _ = writeln!(out, "return {}", ast.return_vars.join(", "));
    out
}
