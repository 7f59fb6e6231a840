//! Affine expressions, linear atoms and guards in disjunctive normal form.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::lp::{self, LpInstance, LpStatus, Sense, VarKind};
use crate::poly::{Monomial, Polynomial, Var};
use crate::rational::Rational;

/// `constant + Σ coeff·x`.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Var, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn constant(c: Rational) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        let mut e = Self::default();
        e.add_term(v, &Rational::one());
        e
    }

    pub fn from_terms(constant: Rational, terms: impl IntoIterator<Item = (Var, Rational)>) -> Self {
        let mut e = Self::constant(constant);
        for (v, c) in terms {
            e.add_term(v, &c);
        }
        e
    }

    pub fn add_term(&mut self, v: Var, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(v).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn coeff(&self, v: Var) -> Rational {
        self.coeffs.get(&v).cloned().unwrap_or_default()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (v, c) in &other.coeffs {
            out.add_term(*v, c);
        }
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LinExpr {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, r: &Rational) -> LinExpr {
        if r.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * r)).collect(),
            constant: &self.constant * r,
        }
    }

    pub fn evaluate(&self, point: &[Rational]) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * &point[*v as usize];
        }
        acc
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> f64 {
        let mut acc = self.constant.to_f64();
        for (v, c) in &self.coeffs {
            acc += c.to_f64() * point[*v as usize];
        }
        acc
    }

    pub fn to_poly(&self) -> Polynomial {
        Polynomial::affine(self.constant.clone(), self.coeffs.iter().map(|(v, c)| (*v, c.clone())))
    }

    /// Converts a polynomial of degree at most one.
    pub fn from_poly(p: &Polynomial) -> Option<LinExpr> {
        let (c0, lin) = p.as_affine()?;
        Some(LinExpr { coeffs: lin, constant: c0 })
    }

    pub fn rename(&self, f: impl Fn(Var) -> Var) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            out.add_term(f(*v), c);
        }
        out
    }

    /// Substitutes `v := value`.
    pub fn fix_var(&self, v: Var, value: &Rational) -> LinExpr {
        let mut out = self.clone();
        if let Some(c) = out.coeffs.remove(&v) {
            out.constant += c * value;
        }
        out
    }

    /// Substitutes `v := e`.
    pub fn substitute(&self, v: Var, e: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        match out.coeffs.remove(&v) {
            Some(c) => out.add(&e.scale(&c)),
            None => out,
        }
    }

    pub fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: &dyn Fn(Var) -> String) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (v, c) in &self.coeffs {
            write!(f, " + {}*{}", c, names(*v))?;
        }
        Ok(())
    }
}

impl fmt::Debug for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, &|v| format!("x{v}"))
    }
}

/// `expr >= 0`, or `expr > 0` when strict.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub expr: LinExpr,
    pub strict: bool,
}

impl Atom {
    pub fn ge(expr: LinExpr) -> Self {
        Atom { expr, strict: false }
    }

    pub fn gt(expr: LinExpr) -> Self {
        Atom { expr, strict: true }
    }

    pub fn negate(&self) -> Atom {
        Atom { expr: self.expr.neg(), strict: !self.strict }
    }

    pub fn holds(&self, point: &[Rational]) -> bool {
        let v = self.expr.evaluate(point);
        if self.strict {
            v.is_positive()
        } else {
            !v.is_negative()
        }
    }

    pub fn holds_f64(&self, point: &[f64]) -> bool {
        let v = self.expr.evaluate_f64(point);
        if self.strict {
            v > 0.0
        } else {
            v >= 0.0
        }
    }

    /// Constant truth value when the atom mentions no variable.
    pub fn constant_truth(&self) -> Option<bool> {
        if !self.expr.is_constant() {
            return None;
        }
        let c = &self.expr.constant;
        Some(if self.strict { c.is_positive() } else { !c.is_negative() })
    }

    /// Tightens the atom assuming every variable in it takes integer values:
    /// scales to coprime integer coefficients and rounds the constant so the
    /// result is a non-strict atom with the same integer solutions.
    pub fn tighten_integer(&self) -> Atom {
        if self.expr.is_constant() {
            return self.clone();
        }
        let den_lcm = self
            .expr
            .coeffs
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(&c.denom()));
        let scaled: Vec<(Var, BigInt)> = self
            .expr
            .coeffs
            .iter()
            .map(|(v, c)| (*v, c.numer() * (&den_lcm / c.denom())))
            .collect();
        let g = scaled.iter().fold(BigInt::zero(), |acc, (_, k)| acc.gcd(k));
        let g = if g.is_zero() { BigInt::one() } else { g.abs() };
        let scale = Rational::from_bigints(den_lcm, g);
        // Σ k_i x_i + c >= 0 (or > 0) with integral k_i
        let c = &self.expr.constant * &scale;
        let c_new = if self.strict {
            // Σ k x > -c  <=>  Σ k x >= floor(-c) + 1
            -((-&c).floor() + Rational::one())
        } else {
            // Σ k x >= -c  <=>  Σ k x >= ceil(-c)
            -((-&c).ceil())
        };
        let mut expr = self.expr.scale(&scale);
        expr.constant = c_new;
        Atom::ge(expr)
    }

    pub fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: &dyn Fn(Var) -> String) -> fmt::Result {
        self.expr.fmt_with(f, names)?;
        write!(f, "{}", if self.strict { " > 0" } else { " >= 0" })
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, &|v| format!("x{v}"))
    }
}

pub type Conj = Vec<Atom>;

/// Disjunction of conjunctions. The empty disjunction is `false`; a single
/// empty conjunction is `true`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Dnf(pub Vec<Conj>);

impl Dnf {
    pub fn tt() -> Self {
        Dnf(vec![Vec::new()])
    }

    pub fn ff() -> Self {
        Dnf(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Dnf(vec![vec![a]])
    }

    pub fn cells(&self) -> &[Conj] {
        &self.0
    }

    pub fn is_trivially_true(&self) -> bool {
        self.0.iter().any(|c| c.is_empty())
    }

    pub fn or(mut self, other: Dnf) -> Dnf {
        self.0.extend(other.0);
        self.simplify()
    }

    pub fn and(&self, other: &Dnf) -> Dnf {
        let mut out = Vec::new();
        for a in &self.0 {
            for b in &other.0 {
                let mut c = a.clone();
                c.extend(b.iter().cloned());
                out.push(c);
            }
        }
        Dnf(out).simplify()
    }

    /// Negation via De Morgan, re-normalized to DNF.
    pub fn negate(&self) -> Dnf {
        let mut acc = Dnf::tt();
        for cell in &self.0 {
            let alt = Dnf(cell.iter().map(|a| vec![a.negate()]).collect());
            acc = acc.and(&alt);
        }
        acc
    }

    /// Drops constant-true atoms, constant-false cells and duplicates.
    pub fn simplify(self) -> Dnf {
        let mut cells: Vec<Conj> = Vec::new();
        'cells: for cell in self.0 {
            let mut kept: Conj = Vec::new();
            for a in cell {
                match a.constant_truth() {
                    Some(true) => continue,
                    Some(false) => continue 'cells,
                    None => {
                        if !kept.contains(&a) {
                            kept.push(a);
                        }
                    }
                }
            }
            if kept.is_empty() {
                return Dnf::tt();
            }
            if !cells.contains(&kept) {
                cells.push(kept);
            }
        }
        Dnf(cells)
    }

    pub fn holds(&self, point: &[Rational]) -> bool {
        self.0.iter().any(|c| c.iter().all(|a| a.holds(point)))
    }

    pub fn holds_f64(&self, point: &[f64]) -> bool {
        self.0.iter().any(|c| c.iter().all(|a| a.holds_f64(point)))
    }

    pub fn vars(&self) -> std::collections::BTreeSet<Var> {
        self.0.iter().flatten().flat_map(|a| a.expr.coeffs.keys().copied()).collect()
    }
}

impl fmt::Debug for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "false");
        }
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " or ")?;
            }
            if c.is_empty() {
                write!(f, "true")?;
            }
            for (j, a) in c.iter().enumerate() {
                if j > 0 {
                    write!(f, " and ")?;
                }
                write!(f, "({a:?})")?;
            }
        }
        Ok(())
    }
}

/// Decides exact rational satisfiability of a conjunction over `nvars`
/// real variables. Strict atoms are handled with a common positive slack.
/// Returns a witness point when satisfiable.
pub fn conj_witness(atoms: &[Atom], nvars: usize) -> Option<Vec<Rational>> {
    if atoms.is_empty() {
        return Some(vec![Rational::zero(); nvars]);
    }
    if atoms.iter().any(|a| a.constant_truth() == Some(false)) {
        return None;
    }
    let t = nvars;
    let mut inst = LpInstance::new();
    for v in 0..nvars {
        inst.add_var(format!("x{v}"), VarKind::Free);
    }
    inst.add_var("t", VarKind::NonNeg);
    let any_strict = atoms.iter().any(|a| a.strict);
    for a in atoms {
        if a.expr.is_constant() {
            continue;
        }
        let mut coeffs: Vec<(usize, Rational)> =
            a.expr.coeffs.iter().map(|(v, c)| (*v as usize, c.clone())).collect();
        if a.strict {
            coeffs.push((t, -Rational::one()));
        }
        inst.add_row(coeffs, Sense::Ge, -a.expr.constant.clone(), "atom");
    }
    if any_strict {
        inst.add_row(vec![(t, Rational::one())], Sense::Le, Rational::one(), "slack cap");
        inst.set_objective(vec![(t, Rational::one())]);
    }
    let sol = lp::solve(&inst, &lp::SolveOptions::default()).ok()?;
    match sol.status {
        LpStatus::Optimal | LpStatus::Feasible => {
            if any_strict && !sol.values[t].is_positive() {
                return None;
            }
            let mut pt = sol.values;
            pt.truncate(nvars);
            Some(pt)
        }
        _ => None,
    }
}

pub fn conj_feasible(atoms: &[Atom], nvars: usize) -> bool {
    conj_witness(atoms, nvars).is_some()
}

/// Polynomial of degree <= 1 as an affine expression, else `None`.
pub fn affine_of(p: &Polynomial) -> Option<LinExpr> {
    if p.terms().any(|(m, _)| m.degree() > 1) {
        return None;
    }
    let mut e = LinExpr::constant(p.coeff(&Monomial::one()));
    for (m, c) in p.terms() {
        if let [(v, 1)] = m.pairs() {
            e.add_term(*v, c);
        }
    }
    Some(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn x_minus(c: i64) -> LinExpr {
        LinExpr::from_terms(Rational::from(-c), [(0, Rational::one())])
    }

    #[test]
    fn strict_feasibility() {
        // x >= 0 and -x > 0 is infeasible, x >= 0 and -x >= 0 is feasible
        let a = Atom::ge(x_minus(0));
        assert!(!conj_feasible(&[a.clone(), Atom::gt(x_minus(0).neg())], 1));
        assert!(conj_feasible(&[a.clone(), Atom::ge(x_minus(0).neg())], 1));
        let w = conj_witness(&[Atom::gt(x_minus(3))], 1).unwrap();
        assert!(w[0] > Rational::from(3));
    }

    #[test]
    fn integer_tightening() {
        // x > 8000000  ->  x - 8000001 >= 0
        let a = Atom::gt(x_minus(8_000_000)).tighten_integer();
        assert_eq!(a, Atom::ge(x_minus(8_000_001)));
        // 2x + 3y >= 1/2  -> 2x + 3y - 1 >= 0
        let e = LinExpr::from_terms(rat(-1, 2), [(0, rat(2, 1)), (1, rat(3, 1))]);
        let t = Atom::ge(e).tighten_integer();
        assert_eq!(t.expr.constant, Rational::from(-1));
        // (1/2)x > 1/3  ->  x >= 1
        let e = LinExpr::from_terms(rat(-1, 3), [(0, rat(1, 2))]);
        assert_eq!(Atom::gt(e).tighten_integer(), Atom::ge(x_minus(1)));
    }

    #[test]
    fn dnf_negation_roundtrip_semantics() {
        let a = Atom::ge(x_minus(1));
        let b = Atom::ge(LinExpr::var(1));
        let d = Dnf(vec![vec![a.clone(), b.clone()]]);
        let n = d.negate();
        assert_eq!(n.0.len(), 2);
        for xv in -3..4 {
            for yv in -3..4 {
                let pt = [Rational::from(xv), Rational::from(yv)];
                assert_ne!(d.holds(&pt), n.holds(&pt));
            }
        }
    }
}
