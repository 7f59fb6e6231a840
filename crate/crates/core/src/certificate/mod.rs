//! Refutation certificates: JSON format, exact verification and the
//! Monte-Carlo consistency oracle.

mod mc;
mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pcfg::Pcfg;
use crate::poly::{Monomial, Polynomial, Var};
use crate::rational::Rational;

pub use mc::{mc_consistency, mc_expectation, McEstimate, McReport, McVerdict, DEFAULT_CHUNK};
pub use verify::{verify_certificate, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertMode {
    #[serde(rename = "equivalence-refuted")]
    EquivalenceRefuted,
    #[serde(rename = "similarity-refuted")]
    SimilarityRefuted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub monomial: BTreeMap<String, u32>,
    pub coeff: Rational,
}

pub type PolyJson = Vec<TermJson>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocPoly {
    pub location: String,
    pub polynomial: PolyJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplierJson {
    pub entailment: String,
    pub lambda: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsmJson {
    pub degree_d: u32,
    #[serde(rename = "degree_D")]
    pub degree_big_d: u32,
    pub r: Vec<LocPoly>,
    pub multipliers: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OstJson {
    pub condition: String,
    pub reason: String,
    /// Value of the bound `C` for C2 and C3.
    pub bound: Option<Rational>,
    pub rsm_a: Option<RsmJson>,
    pub rsm_b: Option<RsmJson>,
}

/// Invariant files of both programs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantsJson {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub timestamp: u64,
    pub gamma_min: Rational,
    pub program_a: String,
    pub program_b: String,
    pub assumed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub mode: CertMode,
    pub metric: Option<String>,
    pub epsilon: Option<Rational>,
    pub degree_d: u32,
    #[serde(rename = "degree_D")]
    pub degree_big_d: u32,
    pub f: PolyJson,
    pub uesm: Vec<LocPoly>,
    pub lesm: Vec<LocPoly>,
    pub multipliers: Vec<MultiplierJson>,
    pub ost: OstJson,
    pub invariants: InvariantsJson,
    pub meta: Meta,
}

pub fn poly_to_json(p: &Polynomial, names: &[String]) -> PolyJson {
    p.terms()
        .map(|(m, c)| TermJson {
            monomial: m.pairs().iter().map(|(v, e)| (names[*v as usize].clone(), *e)).collect(),
            coeff: c.clone(),
        })
        .collect()
}

pub fn poly_from_json(p: &PolyJson, names: &[String]) -> Result<Polynomial, VerifyError> {
    let mut out = Polynomial::zero();
    for t in p {
        let mut pairs = Vec::new();
        for (n, e) in &t.monomial {
            let v = names
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| VerifyError::Malformed(format!("unknown variable `{n}`")))?;
            pairs.push((v as Var, *e));
        }
        out.add_term(Monomial::from_pairs(pairs), &t.coeff);
    }
    Ok(out)
}

pub fn locpolys_to_json(ps: &[Polynomial], p: &Pcfg) -> Vec<LocPoly> {
    ps.iter()
        .enumerate()
        .map(|(l, q)| LocPoly { location: p.labels[l].clone(), polynomial: poly_to_json(q, &p.vars) })
        .collect()
}

/// One polynomial per location of `p`, in location order.
pub fn locpolys_from_json(js: &[LocPoly], p: &Pcfg) -> Result<Vec<Polynomial>, VerifyError> {
    let mut out = vec![None; p.num_locations()];
    for j in js {
        let l = p
            .location(&j.location)
            .ok_or_else(|| VerifyError::Malformed(format!("unknown location `{}`", j.location)))?;
        if out[l].is_some() {
            return Err(VerifyError::Malformed(format!("location `{}` listed twice", j.location)));
        }
        out[l] = Some(poly_from_json(&j.polynomial, &p.vars)?);
    }
    out.into_iter()
        .enumerate()
        .map(|(l, q)| q.ok_or_else(|| VerifyError::Malformed(format!("missing location `{}`", p.labels[l]))))
        .collect()
}

/// Concrete `f`, UESM and LESM of a certificate.
#[derive(Debug, Clone)]
pub struct CertPolys {
    /// Over output coordinates.
    pub f: Polynomial,
    pub u: Vec<Polynomial>,
    pub l: Vec<Polynomial>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, VerifyError> {
        serde_json::from_str(s).map_err(|e| VerifyError::Malformed(e.to_string()))
    }

    pub fn polys(&self, p1: &Pcfg, p2: &Pcfg) -> Result<CertPolys, VerifyError> {
        Ok(CertPolys {
            f: poly_from_json(&self.f, &p1.out_var_names())?,
            u: locpolys_from_json(&self.uesm, p1)?,
            l: locpolys_from_json(&self.lesm, p2)?,
        })
    }

    /// `U(init₁) + f(init₁)` and `L(init₂) + f(init₂)`.
    pub fn bounds(&self, p1: &Pcfg, p2: &Pcfg) -> Result<(Rational, Rational), VerifyError> {
        let c = self.polys(p1, p2)?;
        let f1 = c.f.rename(|j| p1.out_vars[j as usize]);
        let f2 = c.f.rename(|j| p2.out_vars[j as usize]);
        let up = c.u[p1.init].add(&f1).evaluate(&p1.init_valuation);
        let lo = c.l[p2.init].add(&f2).evaluate(&p2.init_valuation);
        Ok((up, lo))
    }
}

#[cfg(test)]
mod tests;
