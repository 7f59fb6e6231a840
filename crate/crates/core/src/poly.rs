//! Sparse multivariate polynomials.
//!
//! A [`Poly`] is generic over its coefficient ring so the same code serves
//! concrete polynomials (`Poly<Rational>`) and template polynomials whose
//! coefficients are affine expressions in unknowns (`Poly<AffineExpr>`).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rational::Rational;

/// Index of a variable inside whatever universe the polynomial lives in.
pub type Var = u32;

/// A monomial as a sparse exponent vector, sorted by variable, no zero exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn var_pow(v: Var, e: u32) -> Self {
        if e == 0 {
            Self::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    /// Builds from arbitrary `(var, exp)` pairs, merging duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_default() += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn pairs(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Splits off the power of `v`: returns `(self / v^e, e)`.
    pub fn split_var(&self, v: Var) -> (Monomial, u32) {
        match self.0.binary_search_by_key(&v, |&(w, _)| w) {
            Ok(i) => {
                let mut rest = self.0.clone();
                let (_, e) = rest.remove(i);
                (Monomial(rest), e)
            }
            Err(_) => (self.clone(), 0),
        }
    }

    pub fn rename(&self, f: impl Fn(Var) -> Var) -> Monomial {
        Monomial::from_pairs(self.0.iter().map(|&(v, e)| (f(v), e)))
    }

    pub fn evaluate(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::one();
        for &(v, e) in &self.0 {
            acc *= point[v as usize].pow(e);
        }
        acc
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|&(v, e)| point[v as usize].powi(e as i32))
            .product()
    }

    pub fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: &dyn Fn(Var) -> String) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, &(v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "{}", names(v))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Graded lexicographic order: lower total degree first; within a degree a
/// larger exponent on a lower-indexed variable comes first (x² < xy < y²).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_degree = self.degree().cmp(&other.degree());
        if by_degree != Ordering::Equal {
            return by_degree;
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some(&(va, ea)), Some(&(vb, eb))) => {
                    if va < vb {
                        return Ordering::Less;
                    }
                    if va > vb {
                        return Ordering::Greater;
                    }
                    if ea != eb {
                        return eb.cmp(&ea);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, &|v| format!("x{v}"))
    }
}

/// All monomials over `vars` of total degree at most `d`, in graded-lex order.
pub fn monomials_up_to(vars: &[Var], d: u32) -> Vec<Monomial> {
    let mut vars = vars.to_vec();
    vars.sort_unstable();
    vars.dedup();
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![(Monomial::one(), 0usize)];
    for _ in 0..d {
        let mut next = Vec::new();
        for (m, start) in &frontier {
            for (k, &v) in vars.iter().enumerate().skip(*start) {
                let nm = m.mul(&Monomial::var(v));
                out.push(nm.clone());
                next.push((nm, k));
            }
        }
        frontier = next;
    }
    out.sort();
    out
}

/// Coefficient ring of a [`Poly`]: a module over the rationals.
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign_ref(&mut self, other: &Self);
    fn scaled(&self, r: &Rational) -> Self;
    fn from_rational(r: Rational) -> Self;

    fn add_scaled(&mut self, other: &Self, r: &Rational) {
        self.add_assign_ref(&other.scaled(r));
    }
}

impl Coeff for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn scaled(&self, r: &Rational) -> Self {
        self * r
    }
    fn from_rational(r: Rational) -> Self {
        r
    }
    fn add_scaled(&mut self, other: &Self, r: &Rational) {
        *self += other * r;
    }
}

/// Identifier of an unknown appearing in template coefficients.
pub type TVar = u32;

/// `constant + Σ coeff·t` over template unknowns `t`.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct AffineExpr {
    pub terms: BTreeMap<TVar, Rational>,
    pub constant: Rational,
}

impl AffineExpr {
    pub fn constant(c: Rational) -> Self {
        AffineExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(t: TVar) -> Self {
        Self::term(t, Rational::one())
    }

    pub fn term(t: TVar, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(t, c);
        }
        AffineExpr { terms, constant: Rational::zero() }
    }

    pub fn add_term(&mut self, t: TVar, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(t).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&t);
        }
    }

    pub fn coeff(&self, t: TVar) -> Rational {
        self.terms.get(&t).cloned().unwrap_or_default()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, value: &dyn Fn(TVar) -> Rational) -> Rational {
        let mut acc = self.constant.clone();
        for (t, c) in &self.terms {
            acc += c * value(*t);
        }
        acc
    }

    pub fn neg(&self) -> Self {
        self.scaled(&-Rational::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }
}

impl Coeff for AffineExpr {
    fn zero() -> Self {
        AffineExpr::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }
    fn add_assign_ref(&mut self, other: &Self) {
        self.constant += &other.constant;
        for (t, c) in &other.terms {
            self.add_term(*t, c);
        }
    }
    fn scaled(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        AffineExpr {
            terms: self.terms.iter().map(|(t, c)| (*t, c * r)).collect(),
            constant: &self.constant * r,
        }
    }
    fn from_rational(r: Rational) -> Self {
        AffineExpr::constant(r)
    }
    fn add_scaled(&mut self, other: &Self, r: &Rational) {
        if r.is_zero() {
            return;
        }
        self.constant += &other.constant * r;
        for (t, c) in &other.terms {
            self.add_term(*t, &(c * r));
        }
    }
}

impl fmt::Debug for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (t, c) in &self.terms {
            write!(f, " + {c}*t{t}")?;
        }
        Ok(())
    }
}

/// A polynomial with coefficients in `C`; zero coefficients are never stored.
#[derive(Clone, PartialEq)]
pub struct Poly<C: Coeff> {
    terms: BTreeMap<Monomial, C>,
}

pub type Polynomial = Poly<Rational>;
pub type TemplatePoly = Poly<AffineExpr>;

impl<C: Coeff> Default for Poly<C> {
    fn default() -> Self {
        Poly { terms: BTreeMap::new() }
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(m, &c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, C)> {
        self.terms.into_iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&Monomial::one())
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn add_term(&mut self, m: Monomial, c: &C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                slot.add_assign_ref(c);
                if slot.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    fn add_term_scaled(&mut self, m: Monomial, c: &C, r: &Rational) {
        if r.is_zero() || c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                slot.add_scaled(c, r);
                if slot.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                let v = c.scaled(r);
                if !v.is_zero() {
                    self.terms.insert(m, v);
                }
            }
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, r: &Rational) {
        for (m, c) in &other.terms {
            self.add_term_scaled(m.clone(), c, r);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_scaled(other, &Rational::one());
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign_scaled(other, &-Rational::one());
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.scaled(r))).collect() }
    }

    /// Product with a concrete polynomial.
    pub fn mul_poly(&self, other: &Polynomial) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term_scaled(m1.mul(m2), c1, c2);
            }
        }
        out
    }

    /// Replaces `v` by `p` everywhere.
    pub fn substitute(&self, v: Var, p: &Polynomial) -> Self {
        if !self.terms.keys().any(|m| m.exponent(v) > 0) {
            return self.clone();
        }
        let mut powers: Vec<Polynomial> = vec![Polynomial::one()];
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let (rest, e) = m.split_var(v);
            while powers.len() <= e as usize {
                let next = powers.last().unwrap().mul(p);
                powers.push(next);
            }
            for (pm, pc) in powers[e as usize].terms() {
                out.add_term_scaled(rest.mul(pm), c, pc);
            }
        }
        out
    }

    /// Replaces each power `v^k` by `moment(k)`, i.e. takes the expectation
    /// over `v` distributed independently of all other variables.
    pub fn expect_var(&self, v: Var, moment: &dyn Fn(u32) -> Rational) -> Self {
        let mut cache: BTreeMap<u32, Rational> = BTreeMap::new();
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let (rest, e) = m.split_var(v);
            if e == 0 {
                out.add_term(rest, c);
                continue;
            }
            let mk = cache.entry(e).or_insert_with(|| moment(e)).clone();
            out.add_term_scaled(rest, c, &mk);
        }
        out
    }

    pub fn rename(&self, f: impl Fn(Var) -> Var) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.rename(&f), c);
        }
        out
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut out = Poly::<D>::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &f(c));
        }
        out
    }

    pub fn fmt_with(&self, f: &mut fmt::Formatter<'_>, names: &dyn Fn(Var) -> String) -> fmt::Result
    where
        C: fmt::Display,
    {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*")?;
                m.fmt_with(f, names)?;
            }
        }
        Ok(())
    }
}

impl Polynomial {
    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn from_rational(r: Rational) -> Self {
        Self::constant(r)
    }

    pub fn var(v: Var) -> Self {
        Self::term(Monomial::var(v), Rational::one())
    }

    /// `c0 + Σ ci·x_i` from `(var, coeff)` pairs.
    pub fn affine(c0: Rational, coeffs: impl IntoIterator<Item = (Var, Rational)>) -> Self {
        let mut p = Self::constant(c0);
        for (v, c) in coeffs {
            p.add_term(Monomial::var(v), &c);
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.mul_poly(other)
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn evaluate(&self, point: &[Rational]) -> Rational {
        self.terms.iter().map(|(m, c)| c * m.evaluate(point)).sum()
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c.to_f64() * m.evaluate_f64(point)).sum()
    }

    pub fn to_template(&self) -> TemplatePoly {
        self.map_coeffs(|c| AffineExpr::constant(c.clone()))
    }

    /// Coefficient of `v` when the polynomial is affine; `None` otherwise.
    pub fn as_affine(&self) -> Option<(Rational, BTreeMap<Var, Rational>)> {
        if self.degree() > 1 {
            return None;
        }
        let mut lin = BTreeMap::new();
        let mut c0 = Rational::zero();
        for (m, c) in &self.terms {
            match m.pairs() {
                [] => c0 = c.clone(),
                [(v, 1)] => {
                    lin.insert(*v, c.clone());
                }
                _ => return None,
            }
        }
        Some((c0, lin))
    }

    /// Display using the given variable names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Polynomial, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_with(f, &|v| {
                    self.1.get(v as usize).cloned().unwrap_or_else(|| format!("x{v}"))
                })
            }
        }
        D(self, names)
    }
}

impl TemplatePoly {
    /// Substitutes concrete values for every template unknown.
    pub fn instantiate(&self, value: &dyn Fn(TVar) -> Rational) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &c.evaluate(value));
        }
        out
    }

    /// Evaluates the program variables at `point`, leaving an affine
    /// expression over the template unknowns.
    pub fn evaluate_at(&self, point: &[Rational]) -> AffineExpr {
        let mut out = AffineExpr::default();
        for (m, c) in &self.terms {
            out.add_scaled(c, &m.evaluate(point));
        }
        out
    }

    pub fn template_vars(&self) -> BTreeSet<TVar> {
        self.terms.values().flat_map(|c| c.terms.keys().copied()).collect()
    }
}

impl<C: Coeff> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, &|v| format!("x{v}"))
    }
}
