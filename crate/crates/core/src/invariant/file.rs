use std::fmt::Write as _;

use thiserror::Error;

use super::Invariant;
use crate::linear::{Atom, LinExpr};
use crate::pcfg::Pcfg;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown location `{label}`")]
    UnknownLocation { line: usize, label: String },
    #[error("line {line}: unknown variable `{name}`")]
    UnknownVariable { line: usize, name: String },
    #[error("line {line}: atom is not linear")]
    Nonlinear { line: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Rel(&'static str),
}

fn lex(s: &str, line: usize) -> Result<Vec<Tok>, InvariantFileError> {
    let err = |m: String| InvariantFileError::Syntax { line, message: m };
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let st = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.' || cs[i] == '/') {
                i += 1;
            }
            let t: String = cs[st..i].iter().collect();
            out.push(Tok::Num(t.parse().map_err(|_| err(format!("bad number `{t}`")))?));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[st..i].iter().collect()));
        } else {
            let two: String = cs[i..(i + 2).min(cs.len())].iter().collect();
            let (t, n) = match (c, two.as_str()) {
                (_, ">=") => (Tok::Rel(">="), 2),
                (_, "<=") => (Tok::Rel("<="), 2),
                (_, "==") => (Tok::Rel("=="), 2),
                ('>', _) => (Tok::Rel(">"), 1),
                ('<', _) => (Tok::Rel("<"), 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                _ => return Err(err(format!("unexpected character `{c}`"))),
            };
            out.push(t);
            i += n;
        }
    }
    Ok(out)
}

fn linexpr(toks: &[Tok], p: &Pcfg, line: usize) -> Result<LinExpr, InvariantFileError> {
    let err = |m: &str| InvariantFileError::Syntax { line, message: m.to_string() };
    let mut e = LinExpr::constant(Rational::zero());
    let mut i = 0;
    let mut first = true;
    while i < toks.len() {
        let mut sign = Rational::one();
        match &toks[i] {
            Tok::Plus => i += 1,
            Tok::Minus => {
                sign = -sign;
                i += 1;
            }
            _ if first => {}
            _ => return Err(err("expected `+` or `-`")),
        }
        first = false;
        // optional further unary minus, e.g. "+ -3*x"
        if let Some(Tok::Minus) = toks.get(i) {
            sign = -sign;
            i += 1;
        }
        let mut coeff = sign;
        let mut var: Option<u32> = None;
        let mut factor_expected = true;
        while factor_expected {
            match toks.get(i) {
                Some(Tok::Num(r)) => coeff *= r,
                Some(Tok::Ident(n)) => {
                    if var.is_some() {
                        return Err(InvariantFileError::Nonlinear { line });
                    }
                    var = Some(p.var(n).ok_or_else(|| InvariantFileError::UnknownVariable { line, name: n.clone() })?);
                }
                _ => return Err(err("expected a number or a variable")),
            }
            i += 1;
            factor_expected = matches!(toks.get(i), Some(Tok::Star));
            if factor_expected {
                i += 1;
            }
        }
        match var {
            Some(v) => e.add_term(v, &coeff),
            None => e.constant += coeff,
        }
    }
    Ok(e)
}

/// Parses `loc <label>: <linexpr> <rel> <linexpr>` lines. `#` starts a comment.
pub fn parse_invariant_file(text: &str, p: &Pcfg) -> Result<Invariant, InvariantFileError> {
    let mut inv = Invariant::trivial(p);
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let err = |m: &str| InvariantFileError::Syntax { line, message: m.to_string() };
        let rest = s.strip_prefix("loc").filter(|r| r.starts_with(char::is_whitespace)).ok_or_else(|| err("expected `loc`"))?;
        let (label, body) = rest.split_once(':').ok_or_else(|| err("expected `:` after the location"))?;
        let label = label.trim();
        let loc = p
            .location(label)
            .ok_or_else(|| InvariantFileError::UnknownLocation { line, label: label.to_string() })?;
        let toks = lex(body, line)?;
        let rel = toks.iter().position(|t| matches!(t, Tok::Rel(_))).ok_or_else(|| err("missing comparison"))?;
        let Tok::Rel(op) = toks[rel] else { unreachable!() };
        let lhs = linexpr(&toks[..rel], p, line)?;
        let rhs = linexpr(&toks[rel + 1..], p, line)?;
        let d = lhs.sub(&rhs);
        let atoms = match op {
            ">=" => vec![Atom::ge(d)],
            ">" => vec![Atom::gt(d)],
            "<=" => vec![Atom::ge(d.neg())],
            "<" => vec![Atom::gt(d.neg())],
            _ => vec![Atom::ge(d.clone()), Atom::ge(d.neg())],
        };
        inv.per_loc[loc].extend(atoms);
    }
    Ok(inv)
}

/// Normalized text form: one atom per line, constant first, then the
/// nonzero variable terms in variable order.
pub fn emit_invariant_file(inv: &Invariant, p: &Pcfg) -> String {
    let mut out = String::new();
    for (loc, atoms) in inv.per_loc.iter().enumerate() {
        for a in atoms {
            let _ = write!(out, "loc {}: {}", p.labels[loc], a.expr.constant);
            for (v, c) in &a.expr.coeffs {
                let name = &p.vars[*v as usize];
                if c.is_negative() {
                    let _ = write!(out, " - {}*{name}", -c.clone());
                } else {
                    let _ = write!(out, " + {c}*{name}");
                }
            }
            let _ = writeln!(out, " {} 0", if a.strict { ">" } else { ">=" });
        }
    }
    out
}
