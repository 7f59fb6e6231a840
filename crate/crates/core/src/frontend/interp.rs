//! Reference interpreter over the AST, used to cross-check lowering.
//!
//! Randomness is consumed exactly as in the pCFG sampler: one uniform draw
//! per probabilistic branch and the distribution's own draws per sample.

use rand::Rng;

use super::ast::*;
use super::expr_to_poly;
use super::lower::pred_to_dnf;
use crate::dist::DistributionSpec;
use crate::pcfg::sample::{CGuard, CPoly};
use crate::pcfg::Censored;
use crate::rational::Rational;

enum IStmt {
    Assign(usize, CPoly),
    Sample(usize, DistributionSpec),
    Skip,
    Prob(f64, Vec<IStmt>, Vec<IStmt>),
    If(CGuard, Vec<IStmt>, Vec<IStmt>),
    While(CGuard, Vec<IStmt>),
}

pub struct AstInterpreter {
    init: Vec<f64>,
    body: Vec<IStmt>,
    out: Vec<usize>,
}

enum Flow {
    Done,
    Budget,
}

impl AstInterpreter {
    pub fn new(ast: &ProgramAst) -> Self {
        let vars = ast.variables();
        let idx = |n: &str| vars.iter().position(|v| v == n).expect("known variable") as u32;
        fn conv(stmts: &[Stmt], idx: &dyn Fn(&str) -> u32) -> Vec<IStmt> {
            stmts
                .iter()
                .map(|s| match &s.kind {
                    StmtKind::Assign(v, e) => {
                        let p = expr_to_poly(e, &mut |n| idx(n)).expect("validated expression");
                        IStmt::Assign(idx(v) as usize, CPoly::compile(&p))
                    }
                    StmtKind::Sample(v, d) => IStmt::Sample(idx(v) as usize, d.clone()),
                    StmtKind::Skip => IStmt::Skip,
                    StmtKind::ProbIf(p, a, b) => {
                        IStmt::Prob(p.to_f64(), conv(a, idx), b.as_deref().map_or_else(Vec::new, |b| conv(b, idx)))
                    }
                    StmtKind::If(p, a, b) => IStmt::If(
                        CGuard::compile(&pred_to_dnf(p, idx)),
                        conv(a, idx),
                        b.as_deref().map_or_else(Vec::new, |b| conv(b, idx)),
                    ),
                    StmtKind::While(p, body) => IStmt::While(CGuard::compile(&pred_to_dnf(p, idx)), conv(body, idx)),
                })
                .collect()
        }
        let mut init = vec![0.0; vars.len()];
        for (v, c) in &ast.initial_assignments {
            init[idx(v) as usize] = Rational::to_f64(c);
        }
        AstInterpreter {
            body: conv(&ast.statements, &idx),
            out: ast.return_vars.iter().map(|v| idx(v) as usize).collect(),
            init,
        }
    }

    /// Executes the program; `max_steps` bounds the number of executed
    /// statements and loop tests.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, max_steps: u64) -> Result<Vec<f64>, Censored> {
        let mut x = self.init.clone();
        let mut steps = 0u64;
        match exec(&self.body, &mut x, rng, &mut steps, max_steps) {
            Flow::Done => Ok(self.out.iter().map(|i| x[*i]).collect()),
            Flow::Budget => Err(Censored { steps }),
        }
    }
}

fn exec<R: Rng + ?Sized>(stmts: &[IStmt], x: &mut [f64], rng: &mut R, steps: &mut u64, max: u64) -> Flow {
    for s in stmts {
        *steps += 1;
        if *steps > max {
            return Flow::Budget;
        }
        let flow = match s {
            IStmt::Assign(v, p) => {
                x[*v] = p.eval(x);
                Flow::Done
            }
            IStmt::Sample(v, d) => {
                x[*v] = d.sample(rng);
                Flow::Done
            }
            IStmt::Skip => Flow::Done,
            IStmt::Prob(p, a, b) => {
                let u: f64 = rng.random();
                exec(if u < *p { a } else { b }, x, rng, steps, max)
            }
            IStmt::If(g, a, b) => exec(if g.holds(x) { a } else { b }, x, rng, steps, max),
            IStmt::While(g, body) => loop {
                if !g.holds(x) {
                    break Flow::Done;
                }
                if let Flow::Budget = exec(body, x, rng, steps, max) {
                    break Flow::Budget;
                }
                *steps += 1;
                if *steps > max {
                    break Flow::Budget;
                }
            },
        };
        if let Flow::Budget = flow {
            return Flow::Budget;
        }
    }
    Flow::Done
}
