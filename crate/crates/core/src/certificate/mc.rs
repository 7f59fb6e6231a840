use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Certificate, CertMode, VerifyError};
use crate::invariant::interval::eval_poly;
use crate::invariant::{output_bounds, parse_invariant_file};
use crate::pcfg::{run_to_termination, CompiledPcfg, Pcfg};
use crate::poly::Polynomial;

/// Runs per independently seeded chunk.
pub const DEFAULT_CHUNK: u64 = 1000;

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;

/// Censoring rate above which a report is inconclusive.
const MAX_CENSORED_RATE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub samples: u64,
    pub censored: u64,
    pub mean: f64,
    pub std_dev: f64,
    /// 99% confidence half-width.
    pub half_width: f64,
}

impl McEstimate {
    pub fn censored_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.censored as f64 / self.samples as f64
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    censored: u64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return Moments { censored: self.censored + o.censored, ..o };
        }
        if o.n == 0 {
            return Moments { censored: self.censored + o.censored, ..self };
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64,
            censored: self.censored + o.censored,
        }
    }
}

/// Estimates `E[f(outputs)]` from `n` runs. Chunk `i` of [`DEFAULT_CHUNK`]
/// runs uses the seed `seed + i`, so results do not depend on scheduling.
/// `range`, when known, enables a Hoeffding half-width, used if tighter
/// than the CLT one.
pub fn mc_expectation(p: &Pcfg, f: &Polynomial, n: u64, seed: u64, max_steps: u64, range: Option<f64>) -> McEstimate {
    let cp = CompiledPcfg::new(p);
    let chunks = n.div_ceil(DEFAULT_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let mut m = Moments::default();
            let runs = DEFAULT_CHUNK.min(n - i * DEFAULT_CHUNK);
            for _ in 0..runs {
                match run_to_termination(&cp, &mut rng, max_steps) {
                    Ok(out) => m.push(f.evaluate_f64(&out)),
                    Err(_) => m.censored += 1,
                }
            }
            m
        })
        .collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let var = if m.n > 1 { m.m2 / (m.n - 1) as f64 } else { 0.0 };
    let std_dev = var.sqrt();
    let mut half_width = if m.n > 0 { Z99 * std_dev / (m.n as f64).sqrt() } else { f64::INFINITY };
    if let Some(w) = range {
        if m.n > 0 {
            let hoeffding = w * ((2.0f64 / 0.01).ln() / (2.0 * m.n as f64)).sqrt();
            half_width = half_width.min(hoeffding);
        }
    }
    McEstimate { samples: n, censored: m.censored, mean: m.mean, std_dev, half_width }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McVerdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub a: McEstimate,
    pub b: McEstimate,
    /// `U(init₁) + f(init₁)`.
    pub upper: f64,
    /// `L(init₂) + f(init₂)`.
    pub lower: f64,
    pub epsilon: Option<f64>,
    pub verdict: McVerdict,
}

/// Width of `f` over the invariant's output box, if bounded.
fn f_range(p: &Pcfg, inv_text: &str, f: &Polynomial) -> Option<f64> {
    let inv = parse_invariant_file(inv_text, p).ok()?;
    let bx = output_bounds(p, &inv)?;
    let iv = eval_poly(f, &bx);
    Some((iv.hi? - iv.lo?).to_f64())
}

/// Compares the certificate's bounds with Monte-Carlo estimates of
/// `E[f]` under both programs, allowing the confidence half-widths as slack.
pub fn mc_consistency(
    cert: &Certificate,
    p1: &Pcfg,
    p2: &Pcfg,
    n: u64,
    seed: u64,
    max_steps: u64,
) -> Result<McReport, VerifyError> {
    let polys = cert.polys(p1, p2)?;
    let (upper, lower) = cert.bounds(p1, p2)?;
    let a = mc_expectation(p1, &polys.f, n, seed, max_steps, f_range(p1, &cert.invariants.a, &polys.f));
    let b = mc_expectation(p2, &polys.f, n, seed.wrapping_add(1 << 32), max_steps, f_range(p2, &cert.invariants.b, &polys.f));
    let (upper, lower) = (upper.to_f64(), lower.to_f64());
    let epsilon = match cert.mode {
        CertMode::SimilarityRefuted => cert.epsilon.as_ref().map(|e| e.to_f64()),
        CertMode::EquivalenceRefuted => None,
    };
    let verdict = if a.censored_rate() > MAX_CENSORED_RATE || b.censored_rate() > MAX_CENSORED_RATE {
        McVerdict::Inconclusive
    } else {
        let tol = 1e-9 * (1.0 + upper.abs().max(lower.abs()));
        let ok_a = a.mean <= upper + a.half_width + tol;
        let ok_b = b.mean >= lower - b.half_width - tol;
        let ok_eps = epsilon.is_none_or(|e| b.mean - a.mean >= e - a.half_width - b.half_width - tol);
        if ok_a && ok_b && ok_eps {
            McVerdict::Consistent
        } else {
            McVerdict::Inconsistent
        }
    };
    Ok(McReport { a, b, upper, lower, epsilon, verdict })
}
