use std::fmt;

use crate::dist::DistributionSpec;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pred {
    Bool(bool),
    Cmp(Expr, CmpOp, Expr),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign(String, Expr),
    Sample(String, DistributionSpec),
    ProbIf(Rational, Vec<Stmt>, Option<Vec<Stmt>>),
    If(Pred, Vec<Stmt>, Option<Vec<Stmt>>),
    While(Pred, Vec<Stmt>),
    Skip,
}

/// Spans are ignored by equality so reparsed programs compare structurally.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// A parsed program. Leading constant assignments form
/// `initial_assignments`; `statements` holds everything after them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramAst {
    pub initial_assignments: Vec<(String, Rational)>,
    pub statements: Vec<Stmt>,
    pub return_vars: Vec<String>,
}

impl ProgramAst {
    /// Variables in order of first appearance (initial assignments first).
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |v: &str| {
            if !out.iter().any(|w| w == v) {
                out.push(v.to_string());
            }
        };
        for (v, _) in &self.initial_assignments {
            push(v);
        }
        fn walk_expr(e: &Expr, push: &mut dyn FnMut(&str)) {
            match e {
                Expr::Num(_) => {}
                Expr::Var(v) => push(v),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    walk_expr(a, push);
                    walk_expr(b, push);
                }
                Expr::Neg(a) | Expr::Pow(a, _) => walk_expr(a, push),
            }
        }
        fn walk_pred(p: &Pred, push: &mut dyn FnMut(&str)) {
            match p {
                Pred::Bool(_) => {}
                Pred::Cmp(a, _, b) => {
                    walk_expr(a, push);
                    walk_expr(b, push);
                }
                Pred::And(a, b) | Pred::Or(a, b) => {
                    walk_pred(a, push);
                    walk_pred(b, push);
                }
                Pred::Not(a) => walk_pred(a, push),
            }
        }
        fn walk(stmts: &[Stmt], push: &mut dyn FnMut(&str)) {
            for s in stmts {
                match &s.kind {
                    StmtKind::Assign(v, e) => {
                        push(v);
                        walk_expr(e, push);
                    }
                    StmtKind::Sample(v, _) => push(v),
                    StmtKind::ProbIf(_, a, b) => {
                        walk(a, push);
                        if let Some(b) = b {
                            walk(b, push);
                        }
                    }
                    StmtKind::If(p, a, b) => {
                        walk_pred(p, push);
                        walk(a, push);
                        if let Some(b) = b {
                            walk(b, push);
                        }
                    }
                    StmtKind::While(p, body) => {
                        walk_pred(p, push);
                        walk(body, push);
                    }
                    StmtKind::Skip => {}
                }
            }
        }
        walk(&self.statements, &mut push);
        for v in &self.return_vars {
            push(v);
        }
        out
    }
}
