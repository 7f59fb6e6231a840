//! Surface language: parsing, pretty-printing, lowering to a pCFG, and a
//! reference AST interpreter.

pub mod ast;
pub mod interp;
mod lexer;
mod lower;
mod parser;
mod pretty;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::dist::DistError;
use crate::pcfg::Pcfg;
use crate::poly::{Polynomial, Var};
use crate::rational::Rational;
use ast::*;

pub use lower::lower_to_pcfg;
pub use pretty::pretty_print;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: expression is not a polynomial: {message}")]
    NonPolynomial { span: SourceSpan, message: String },
    #[error("{span}: guard atom is not linear")]
    NonlinearGuard { span: SourceSpan },
    #[error("{span}: unknown distribution `{name}`")]
    UnknownDistribution { span: SourceSpan, name: String },
    #[error("{span}: probability {value} outside [0,1]")]
    ProbabilityRange { span: SourceSpan, value: Rational },
    #[error("{span}: invalid distribution: {source}")]
    BadDistribution { span: SourceSpan, source: DistError },
    #[error("{span}: variable `{var}` may be read before it is initialized")]
    Uninitialized { span: SourceSpan, var: String },
    #[error("program has no `return` statement")]
    MissingReturn,
    #[error("{span}: returned variable `{var}` is not a program variable")]
    UnknownReturn { span: SourceSpan, var: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("output variables differ: {left:?} vs {right:?}")]
pub struct OutputMismatch {
    pub left: Vec<String>,
    pub right: Vec<String>,
}

/// Converts an expression to a polynomial, resolving variables through `var`.
/// Division is only allowed by nonzero constants.
pub fn expr_to_poly(e: &Expr, var: &mut dyn FnMut(&str) -> Var) -> Result<Polynomial, String> {
    Ok(match e {
        Expr::Num(r) => Polynomial::from_rational(r.clone()),
        Expr::Var(v) => Polynomial::var(var(v)),
        Expr::Add(a, b) => expr_to_poly(a, var)?.add(&expr_to_poly(b, var)?),
        Expr::Sub(a, b) => expr_to_poly(a, var)?.sub(&expr_to_poly(b, var)?),
        Expr::Mul(a, b) => expr_to_poly(a, var)?.mul(&expr_to_poly(b, var)?),
        Expr::Neg(a) => expr_to_poly(a, var)?.neg(),
        Expr::Pow(a, k) => expr_to_poly(a, var)?.pow(*k),
        Expr::Div(a, b) => {
            let num = expr_to_poly(a, var)?;
            let den = expr_to_poly(b, var)?;
            if den.degree() > 0 || !den.vars().is_empty() {
                return Err("division by a non-constant expression".into());
            }
            let d = den.constant_term();
            if d.is_zero() {
                return Err("division by zero".into());
            }
            num.scale(&d.recip())
        }
    })
}

fn expr_vars(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Num(_) => {}
        Expr::Var(v) => out.push(v.clone()),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Expr::Neg(a) | Expr::Pow(a, _) => expr_vars(a, out),
    }
}

fn pred_vars(p: &Pred, out: &mut Vec<String>) {
    match p {
        Pred::Bool(_) => {}
        Pred::Cmp(a, _, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Pred::And(a, b) | Pred::Or(a, b) => {
            pred_vars(a, out);
            pred_vars(b, out);
        }
        Pred::Not(a) => pred_vars(a, out),
    }
}

/// Definite-assignment analysis: every read must be preceded by a write on
/// every path. Returns the set of definitely assigned variables afterwards.
fn check_init(stmts: &[Stmt], mut defined: BTreeSet<String>) -> Result<BTreeSet<String>, ParseError> {
    let read = |vars: Vec<String>, defined: &BTreeSet<String>, span: SourceSpan| {
        for v in vars {
            if !defined.contains(&v) {
                return Err(ParseError::Uninitialized { span, var: v });
            }
        }
        Ok(())
    };
    for s in stmts {
        match &s.kind {
            StmtKind::Assign(v, e) => {
                let mut vs = Vec::new();
                expr_vars(e, &mut vs);
                read(vs, &defined, s.span)?;
                defined.insert(v.clone());
            }
            StmtKind::Sample(v, _) => {
                defined.insert(v.clone());
            }
            StmtKind::Skip => {}
            StmtKind::ProbIf(_, a, b) => {
                let da = check_init(a, defined.clone())?;
                let db = match b {
                    Some(b) => check_init(b, defined.clone())?,
                    None => defined.clone(),
                };
                defined = da.intersection(&db).cloned().collect();
            }
            StmtKind::If(p, a, b) => {
                let mut vs = Vec::new();
                pred_vars(p, &mut vs);
                read(vs, &defined, s.span)?;
                let da = check_init(a, defined.clone())?;
                let db = match b {
                    Some(b) => check_init(b, defined.clone())?,
                    None => defined.clone(),
                };
                defined = da.intersection(&db).cloned().collect();
            }
            StmtKind::While(p, body) => {
                let mut vs = Vec::new();
                pred_vars(p, &mut vs);
                read(vs, &defined, s.span)?;
                check_init(body, defined.clone())?;
            }
        }
    }
    Ok(defined)
}

/// Parses and validates a program.
pub fn parse_program(src: &str) -> Result<ProgramAst, ParseError> {
    let (stmts, return_vars, ret_span) = parser::parse_raw(src)?;
    let mut initial_assignments: Vec<(String, Rational)> = Vec::new();
    let mut split = 0;
    for s in &stmts {
        match &s.kind {
            StmtKind::Assign(v, e) if !initial_assignments.iter().any(|(w, _)| w == v) => {
                match parser::const_value(e) {
                    Some(c) => initial_assignments.push((v.clone(), c)),
                    None => break,
                }
            }
            _ => break,
        }
        split += 1;
    }
    let statements = stmts[split..].to_vec();
    let defined: BTreeSet<String> = initial_assignments.iter().map(|(v, _)| v.clone()).collect();
    let after = check_init(&statements, defined)?;
    let mut ast = ProgramAst { initial_assignments, statements, return_vars: Vec::new() };
    let all = ast.variables();
    ast.return_vars = return_vars;
    for v in &ast.return_vars {
        if !all.contains(v) || !after.contains(v) {
            return Err(if all.contains(v) {
                ParseError::Uninitialized { span: ret_span, var: v.clone() }
            } else {
                ParseError::UnknownReturn { span: ret_span, var: v.clone() }
            });
        }
    }
    Ok(ast)
}

/// Parses and lowers in one step.
pub fn compile(src: &str) -> Result<Pcfg, ParseError> {
    Ok(lower_to_pcfg(&parse_program(src)?))
}

/// The shared output variable list; order is significant.
pub fn check_output_compatibility(p1: &Pcfg, p2: &Pcfg) -> Result<Vec<String>, OutputMismatch> {
    let a = p1.out_var_names();
    let b = p2.out_var_names();
    if a == b {
        Ok(a)
    } else {
        Err(OutputMismatch { left: a, right: b })
    }
}
