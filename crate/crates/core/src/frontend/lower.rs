use std::collections::BTreeMap;

use super::ast::*;
use super::expr_to_poly;
use crate::dist::DistributionSpec;
use crate::linear::{affine_of, Atom, Dnf};
use crate::pcfg::{Effect, LocId, LoopSummary, Pcfg, Transition, Update};
use crate::poly::{Polynomial, Var};
use crate::rational::Rational;

const MAX_LOOP_PATHS: usize = 256;

enum Node {
    Assign { loc: LocId, var: Var, expr: Polynomial },
    Sample { loc: LocId, var: Var, dist: DistributionSpec },
    Skip { loc: LocId },
    Branch { loc: LocId, kind: BranchKind, then: Vec<Node>, else_loc: Option<LocId>, els: Vec<Node> },
    While { loc: LocId, guard: Dnf, body: Vec<Node> },
}

enum BranchKind {
    Prob(Rational),
    Guard(Dnf),
}

impl Node {
    fn loc(&self) -> LocId {
        match self {
            Node::Assign { loc, .. }
            | Node::Sample { loc, .. }
            | Node::Skip { loc }
            | Node::Branch { loc, .. }
            | Node::While { loc, .. } => *loc,
        }
    }
}

/// Guard predicate in disjunctive normal form.
pub(super) fn pred_to_dnf(p: &Pred, var: &dyn Fn(&str) -> Var) -> Dnf {
    let poly = |e: &Expr| expr_to_poly(e, &mut |n| var(n)).expect("expression validated by the parser");
    match p {
        Pred::Bool(true) => Dnf::tt(),
        Pred::Bool(false) => Dnf::ff(),
        Pred::Cmp(a, op, b) => {
            let d = affine_of(&poly(a).sub(&poly(b))).expect("guard validated as linear");
            match op {
                CmpOp::Ge => Dnf::atom(Atom::ge(d)),
                CmpOp::Gt => Dnf::atom(Atom::gt(d)),
                CmpOp::Le => Dnf::atom(Atom::ge(d.neg())),
                CmpOp::Lt => Dnf::atom(Atom::gt(d.neg())),
                CmpOp::Eq => Dnf(vec![vec![Atom::ge(d.clone()), Atom::ge(d.neg())]]),
            }
            .simplify()
        }
        Pred::And(a, b) => pred_to_dnf(a, var).and(&pred_to_dnf(b, var)),
        Pred::Or(a, b) => pred_to_dnf(a, var).or(pred_to_dnf(b, var)),
        Pred::Not(a) => pred_to_dnf(a, var).negate(),
    }
}

fn entry(nodes: &[Node], cont: LocId) -> LocId {
    nodes.first().map_or(cont, Node::loc)
}

struct Lowerer {
    vars: Vec<String>,
    labels: Vec<String>,
    transitions: Vec<Transition>,
    loops: Vec<LoopSummary>,
}

impl Lowerer {
    fn var(&self, name: &str) -> Var {
        self.vars.iter().position(|v| v == name).expect("variable collected from the AST") as Var
    }

    fn poly(&self, e: &Expr) -> Polynomial {
        expr_to_poly(e, &mut |n| self.var(n)).expect("expression validated by the parser")
    }

    fn new_loc(&mut self) -> LocId {
        let id = self.labels.len();
        self.labels.push(if id == 0 { "l_init".to_string() } else { format!("l_{id}") });
        id
    }

    fn pred(&self, p: &Pred) -> Dnf {
        pred_to_dnf(p, &|n| self.var(n))
    }

    /// Allocates locations in program order.
    fn build(&mut self, stmts: &[Stmt]) -> Vec<Node> {
        let mut out = Vec::new();
        for s in stmts {
            let loc = self.new_loc();
            let node = match &s.kind {
                StmtKind::Assign(v, e) => Node::Assign { loc, var: self.var(v), expr: self.poly(e) },
                StmtKind::Sample(v, d) => Node::Sample { loc, var: self.var(v), dist: d.clone() },
                StmtKind::Skip => Node::Skip { loc },
                StmtKind::ProbIf(p, a, b) => self.branch(loc, BranchKind::Prob(p.clone()), a, b.as_deref()),
                StmtKind::If(p, a, b) => {
                    let g = self.pred(p);
                    self.branch(loc, BranchKind::Guard(g), a, b.as_deref())
                }
                StmtKind::While(p, body) => {
                    let guard = self.pred(p);
                    Node::While { loc, guard, body: self.build(body) }
                }
            };
            out.push(node);
        }
        out
    }

    fn branch(&mut self, loc: LocId, kind: BranchKind, a: &[Stmt], b: Option<&[Stmt]>) -> Node {
        let then = self.build(a);
        let (else_loc, els) = match b {
            Some(b) => {
                let l = self.new_loc();
                (Some(l), self.build(b))
            }
            None => (None, Vec::new()),
        };
        Node::Branch { loc, kind, then, else_loc, els }
    }

    fn push(&mut self, source: LocId, succ: Vec<(LocId, Rational)>, guard: Dnf, update: Update) {
        if guard.cells().is_empty() {
            return;
        }
        self.transitions.push(Transition { source, succ, guard, update });
    }

    fn emit(&mut self, nodes: &[Node], next: LocId) {
        for (i, n) in nodes.iter().enumerate() {
            let cont = nodes.get(i + 1).map_or(next, Node::loc);
            let one = Rational::one();
            match n {
                Node::Assign { loc, var, expr } => {
                    self.push(*loc, vec![(cont, one)], Dnf::tt(), Update::Assign { var: *var, expr: expr.clone() })
                }
                Node::Sample { loc, var, dist } => {
                    self.push(*loc, vec![(cont, one)], Dnf::tt(), Update::Sample { var: *var, dist: dist.clone() })
                }
                Node::Skip { loc } => self.push(*loc, vec![(cont, one)], Dnf::tt(), Update::None),
                Node::Branch { loc, kind, then, else_loc, els } => {
                    let t_entry = entry(then, cont);
                    let e_entry = else_loc.unwrap_or(cont);
                    match kind {
                        BranchKind::Prob(p) => {
                            let succ = vec![(t_entry, p.clone()), (e_entry, one - p)];
                            self.push(*loc, succ, Dnf::tt(), Update::None);
                        }
                        BranchKind::Guard(g) => {
                            self.push(*loc, vec![(t_entry, one.clone())], g.clone(), Update::None);
                            self.push(*loc, vec![(e_entry, one)], g.negate(), Update::None);
                        }
                    }
                    self.emit(then, cont);
                    if let Some(el) = else_loc {
                        self.push(*el, vec![(entry(els, cont), Rational::one())], Dnf::tt(), Update::None);
                        self.emit(els, cont);
                    }
                }
                Node::While { loc, guard, body } => {
                    self.push(*loc, vec![(entry(body, *loc), one.clone())], guard.clone(), Update::None);
                    self.push(*loc, vec![(cont, one)], guard.negate(), Update::None);
                    self.loops.push(LoopSummary {
                        head: *loc,
                        guard: guard.clone(),
                        paths: paths(body, vec![BTreeMap::new()]),
                    });
                    self.emit(body, *loc);
                }
            }
        }
    }
}

fn assigned(nodes: &[Node], out: &mut Vec<Var>) {
    for n in nodes {
        match n {
            Node::Assign { var, .. } | Node::Sample { var, .. } => out.push(*var),
            Node::Skip { .. } => {}
            Node::Branch { then, els, .. } => {
                assigned(then, out);
                assigned(els, out);
            }
            Node::While { body, .. } => assigned(body, out),
        }
    }
}

fn assign_effect(var: Var, expr: &Polynomial, path: &BTreeMap<Var, Effect>) -> Effect {
    let Some((c0, coeffs)) = expr.as_affine() else { return Effect::Other };
    let mut k = c0;
    let mut self_coeff = Rational::zero();
    for (v, c) in &coeffs {
        if *v == var {
            self_coeff = c.clone();
            continue;
        }
        match path.get(v) {
            Some(Effect::Set(val)) => k += c * val,
            _ => return Effect::Other,
        }
    }
    if self_coeff.is_zero() {
        return Effect::Set(k);
    }
    if !self_coeff.is_one() {
        return Effect::Other;
    }
    match path.get(&var).cloned().unwrap_or(Effect::Add(Rational::zero())) {
        Effect::Add(a) => Effect::Add(a + k),
        Effect::Set(c) => Effect::Set(c + k),
        Effect::Other => Effect::Other,
    }
}

/// Enumerates the net per-variable effects of every path through `nodes`.
fn paths(nodes: &[Node], mut cur: Vec<BTreeMap<Var, Effect>>) -> Option<Vec<BTreeMap<Var, Effect>>> {
    for n in nodes {
        match n {
            Node::Assign { var, expr, .. } => {
                for p in &mut cur {
                    let e = assign_effect(*var, expr, p);
                    p.insert(*var, e);
                }
            }
            Node::Sample { var, .. } => {
                for p in &mut cur {
                    p.insert(*var, Effect::Other);
                }
            }
            Node::Skip { .. } => {}
            Node::Branch { then, els, .. } => {
                let mut a = paths(then, cur.clone())?;
                a.extend(paths(els, cur)?);
                if a.len() > MAX_LOOP_PATHS {
                    return None;
                }
                cur = a;
            }
            Node::While { body, .. } => {
                let mut vs = Vec::new();
                assigned(body, &mut vs);
                for p in &mut cur {
                    for v in &vs {
                        p.insert(*v, Effect::Other);
                    }
                }
            }
        }
    }
    Some(cur)
}

/// Lowers a validated program to a pCFG with one location per statement.
///
/// Locations are labelled `l_init`, `l_1`, `l_2`, ... in program order and
/// `l_out` for the terminal location. An explicit `else` branch gets its
/// own location before its body. Leading constant assignments become the
/// initial valuation; variables first written later start at 0.
pub fn lower_to_pcfg(ast: &ProgramAst) -> Pcfg {
    let vars = ast.variables();
    let mut lw = Lowerer { vars, labels: Vec::new(), transitions: Vec::new(), loops: Vec::new() };
    let nodes = if ast.statements.is_empty() {
        let loc = lw.new_loc();
        vec![Node::Skip { loc }]
    } else {
        lw.build(&ast.statements)
    };
    let out = lw.labels.len();
    lw.labels.push("l_out".to_string());
    lw.emit(&nodes, out);
    lw.push(out, vec![(out, Rational::one())], Dnf::tt(), Update::None);
    lw.transitions.sort_by_key(|t| t.source);

    let mut init_valuation = vec![Rational::zero(); lw.vars.len()];
    for (v, c) in &ast.initial_assignments {
        init_valuation[lw.var(v) as usize] = c.clone();
    }
    let out_vars = ast.return_vars.iter().map(|v| lw.var(v)).collect();
    Pcfg {
        labels: lw.labels,
        vars: lw.vars,
        out_vars,
        init_valuation,
        init: 0,
        out,
        transitions: lw.transitions,
        loops: Some(lw.loops),
    }
}
