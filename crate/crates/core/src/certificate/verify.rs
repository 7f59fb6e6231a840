use thiserror::Error;

use super::{locpolys_from_json, CertMode, Certificate, RsmJson};
use crate::handelman::exact_recheck;
use crate::invariant::{check_inductive, parse_invariant_file, Invariant};
use crate::pcfg::{check_bounded_updates_with, check_statically_bounded_with, Pcfg};
use crate::poly::{Polynomial, TemplatePoly};
use crate::rational::Rational;
use crate::synth::{
    build_constraints, rsm_constraints, EpsilonSpec, Metric, Mode, OstCondition, SynthConfig, TemplateVarKind,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("constraint check failed: {0}")]
    Constraint(String),
    #[error("optional-stopping evidence rejected: {0}")]
    Ost(String),
}

fn malformed(s: impl Into<String>) -> VerifyError {
    VerifyError::Malformed(s.into())
}

/// Checks that `given` is an instance of `template` and returns the value
/// of each of its unknowns through `set`.
fn match_template(
    template: &TemplatePoly,
    given: &Polynomial,
    what: &str,
    set: &mut dyn FnMut(u32, Rational),
) -> Result<(), VerifyError> {
    for (m, _) in given.terms() {
        if template.coeff(m).terms.is_empty() && template.coeff(m).constant.is_zero() {
            return Err(malformed(format!("{what} has monomial {m:?} outside its template")));
        }
    }
    for (m, c) in template.terms() {
        let [(t, k)] = c.terms.iter().collect::<Vec<_>>()[..] else {
            return Err(malformed(format!("{what}: template coefficient is not a single unknown")));
        };
        set(*t, given.coeff(m) / k.clone());
    }
    Ok(())
}

fn check_rsm(p: &Pcfg, inv: &Invariant, rsm: Option<&RsmJson>, which: &str) -> Result<(), VerifyError> {
    let rsm = rsm.ok_or_else(|| VerifyError::Ost(format!("missing ranking supermartingale for program {which}")))?;
    let (cs, tmpl) = rsm_constraints(p, inv, rsm.degree_d);
    let r = locpolys_from_json(&rsm.r, p)?;
    if !r[p.out].is_zero() {
        return Err(VerifyError::Ost(format!("ranking supermartingale of program {which} is nonzero at the exit")));
    }
    let mut values = vec![Rational::zero(); cs.registry.len()];
    for (l, t) in tmpl.iter().enumerate() {
        if l != p.out {
            match_template(t, &r[l], &format!("rsm {which}"), &mut |v, x| values[v as usize] = x)?;
        }
    }
    exact_recheck(&cs, rsm.degree_big_d, &values, &rsm.multipliers)
        .map_err(|e| VerifyError::Ost(format!("ranking supermartingale of program {which}: {e}")))
}

/// Re-derives every constraint from the embedded invariants and settings
/// and checks the certificate's polynomials and multipliers against them
/// exactly, together with the optional-stopping evidence.
pub fn verify_certificate(cert: &Certificate, p1: &Pcfg, p2: &Pcfg) -> Result<(), VerifyError> {
    let inv1 = parse_invariant_file(&cert.invariants.a, p1).map_err(|e| malformed(format!("invariant a: {e}")))?;
    let inv2 = parse_invariant_file(&cert.invariants.b, p2).map_err(|e| malformed(format!("invariant b: {e}")))?;
    for (which, p, inv) in [("a", p1, &inv1), ("b", p2, &inv2)] {
        if let Some(v) = check_inductive(p, inv, 0, 0).violations.first() {
            return Err(VerifyError::Constraint(format!("invariant {which} is not inductive at {}: {}", v.location, v.atom)));
        }
    }
    let (mode, metric, epsilon) = match cert.mode {
        CertMode::EquivalenceRefuted => (Mode::Equivalence, Metric::L1, EpsilonSpec::Maximize),
        CertMode::SimilarityRefuted => {
            let m = cert.metric.as_deref().and_then(Metric::parse).ok_or_else(|| malformed("similarity needs a metric"))?;
            let e = cert.epsilon.clone().ok_or_else(|| malformed("similarity needs epsilon"))?;
            if !e.is_positive() {
                return Err(malformed("epsilon must be positive"));
            }
            (Mode::Similarity, m, EpsilonSpec::Fixed(e))
        }
    };
    let ost = OstCondition::parse(&cert.ost.condition).ok_or_else(|| malformed("unknown optional-stopping condition"))?;
    let cfg = SynthConfig { mode, metric, epsilon, degree: cert.degree_d, ost };
    let prob = build_constraints(p1, &inv1, p2, &inv2, &cfg).map_err(|e| malformed(e.to_string()))?;
    let cs = &prob.constraints;
    let polys = cert.polys(p1, p2)?;

    let mut values: Vec<Option<Rational>> = vec![None; cs.registry.len()];
    {
        let mut set = |t: u32, x: Rational| values[t as usize] = Some(x);
        match_template(&prob.templates.f, &polys.f, "f", &mut set)?;
        for (l, t) in prob.templates.u.iter().enumerate() {
            match_template(t, &polys.u[l], &format!("uesm {}", p1.labels[l]), &mut set)?;
        }
        for (l, t) in prob.templates.l.iter().enumerate() {
            match_template(t, &polys.l[l], &format!("lesm {}", p2.labels[l]), &mut set)?;
        }
    }
    for (i, v) in cs.registry.vars.iter().enumerate() {
        match v.kind {
            TemplateVarKind::BoundC => {
                values[i] = Some(cert.ost.bound.clone().ok_or_else(|| malformed("missing bound C"))?);
            }
            TemplateVarKind::Epsilon => values[i] = cert.epsilon.clone(),
            _ => {}
        }
    }
    let values: Vec<Rational> = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| malformed(format!("no value for {}", cs.registry.vars[i].name))))
        .collect::<Result<_, _>>()?;

    if cert.multipliers.len() != cs.entailments.len() {
        return Err(malformed(format!(
            "expected {} multiplier vectors, found {}",
            cs.entailments.len(),
            cert.multipliers.len()
        )));
    }
    for (m, e) in cert.multipliers.iter().zip(&cs.entailments) {
        if m.entailment != e.label {
            return Err(malformed(format!("multiplier vector `{}` does not match `{}`", m.entailment, e.label)));
        }
    }
    let lambdas: Vec<Vec<Rational>> = cert.multipliers.iter().map(|m| m.lambda.clone()).collect();
    exact_recheck(cs, cert.degree_big_d, &values, &lambdas).map_err(VerifyError::Constraint)?;

    match ost {
        OstCondition::C1 => {
            if !(check_statically_bounded_with(p1, &inv1) && check_statically_bounded_with(p2, &inv2)) {
                return Err(VerifyError::Ost("C1 requires both programs to be statically bounded".into()));
            }
        }
        OstCondition::C4 => {
            if !(check_bounded_updates_with(p1, &inv1) && check_bounded_updates_with(p2, &inv2)) {
                return Err(VerifyError::Ost("C4 requires bounded updates in both programs".into()));
            }
            check_rsm(p1, &inv1, cert.ost.rsm_a.as_ref(), "a")?;
            check_rsm(p2, &inv2, cert.ost.rsm_b.as_ref(), "b")?;
        }
        OstCondition::C3 => {
            check_rsm(p1, &inv1, cert.ost.rsm_a.as_ref(), "a")?;
            check_rsm(p2, &inv2, cert.ost.rsm_b.as_ref(), "b")?;
        }
        OstCondition::C2 => {}
    }
    Ok(())
}
