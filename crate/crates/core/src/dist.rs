//! Sampling distributions and their exact raw moments.

use std::fmt;

use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    Bernoulli { p: Rational },
    Uniform { a: Rational, b: Rational },
    UniformInt { a: i64, b: i64 },
    /// Mean and variance.
    Normal { mean: Rational, variance: Rational },
    Discrete { outcomes: Vec<(Rational, Rational)> },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("bernoulli parameter {0} outside [0,1]")]
    BadBernoulli(Rational),
    #[error("uniform requires a < b, got [{0}, {1}]")]
    EmptyUniform(String, String),
    #[error("normal variance {0} is negative")]
    NegativeVariance(Rational),
    #[error("discrete probabilities must be in [0,1] and sum to 1 (sum is {0})")]
    BadDiscrete(Rational),
    #[error("discrete distribution has no outcomes")]
    EmptyDiscrete,
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), DistError> {
        use DistributionSpec::*;
        match self {
            Bernoulli { p } => {
                if p.is_negative() || *p > Rational::one() {
                    return Err(DistError::BadBernoulli(p.clone()));
                }
            }
            Uniform { a, b } => {
                if a >= b {
                    return Err(DistError::EmptyUniform(a.to_string(), b.to_string()));
                }
            }
            UniformInt { a, b } => {
                if a > b {
                    return Err(DistError::EmptyUniform(a.to_string(), b.to_string()));
                }
            }
            Normal { variance, .. } => {
                if variance.is_negative() {
                    return Err(DistError::NegativeVariance(variance.clone()));
                }
            }
            Discrete { outcomes } => {
                if outcomes.is_empty() {
                    return Err(DistError::EmptyDiscrete);
                }
                let sum: Rational = outcomes.iter().map(|(_, p)| p.clone()).sum();
                let bad = outcomes.iter().any(|(_, p)| p.is_negative() || *p > Rational::one());
                if bad || !sum.is_one() {
                    return Err(DistError::BadDiscrete(sum));
                }
            }
        }
        Ok(())
    }

    /// Exact `E[X^p]`.
    pub fn raw_moment(&self, p: u32) -> Rational {
        use DistributionSpec::*;
        if p == 0 {
            return Rational::one();
        }
        match self {
            Bernoulli { p: q } => q.clone(),
            Uniform { a, b } => {
                let num = b.pow(p + 1) - a.pow(p + 1);
                let den = Rational::from((p + 1) as i64) * (b - a);
                num / den
            }
            UniformInt { a, b } => {
                let sum: Rational = (*a..=*b).map(|k| Rational::from(k).pow(p)).sum();
                sum / Rational::from(b - a + 1)
            }
            Discrete { outcomes } => outcomes.iter().map(|(v, q)| v.pow(p) * q).sum(),
            Normal { mean, variance } => {
                let mut prev = Rational::one();
                let mut cur = mean.clone();
                for k in 2..=p {
                    let next = mean * &cur + Rational::from((k - 1) as i64) * variance * &prev;
                    prev = cur;
                    cur = next;
                }
                cur
            }
        }
    }

    /// Closed support hull `[lo, hi]`; `None` for an unbounded side.
    pub fn support_hull(&self) -> (Option<Rational>, Option<Rational>) {
        use DistributionSpec::*;
        match self {
            Bernoulli { p } => {
                let lo = if p.is_one() { Rational::one() } else { Rational::zero() };
                let hi = if p.is_zero() { Rational::zero() } else { Rational::one() };
                (Some(lo), Some(hi))
            }
            Uniform { a, b } => (Some(a.clone()), Some(b.clone())),
            UniformInt { a, b } => (Some(Rational::from(*a)), Some(Rational::from(*b))),
            Discrete { outcomes } => {
                let vals = outcomes.iter().filter(|(_, p)| !p.is_zero()).map(|(v, _)| v.clone());
                let lo = vals.clone().min();
                let hi = vals.max();
                (lo, hi)
            }
            Normal { mean, variance } if variance.is_zero() => {
                (Some(mean.clone()), Some(mean.clone()))
            }
            Normal { .. } => (None, None),
        }
    }

    pub fn has_bounded_support(&self) -> bool {
        matches!(self.support_hull(), (Some(_), Some(_)))
    }

    /// Finite support points with positive probability, if the support is finite.
    pub fn finite_support(&self) -> Option<Vec<Rational>> {
        use DistributionSpec::*;
        match self {
            Bernoulli { p } => {
                let mut pts = Vec::new();
                if !p.is_one() {
                    pts.push(Rational::zero());
                }
                if !p.is_zero() {
                    pts.push(Rational::one());
                }
                Some(pts)
            }
            UniformInt { a, b } => Some((*a..=*b).map(Rational::from).collect()),
            Discrete { outcomes } => {
                let mut pts: Vec<Rational> =
                    outcomes.iter().filter(|(_, p)| !p.is_zero()).map(|(v, _)| v.clone()).collect();
                pts.sort();
                pts.dedup();
                Some(pts)
            }
            Normal { mean, variance } if variance.is_zero() => Some(vec![mean.clone()]),
            Uniform { .. } | Normal { .. } => None,
        }
    }

    /// True when every sample is an integer.
    pub fn is_integer_valued(&self) -> bool {
        match self.finite_support() {
            Some(pts) => pts.iter().all(Rational::is_integer),
            None => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use DistributionSpec::*;
        match self {
            Bernoulli { p } => {
                if rng.random::<f64>() < p.to_f64() {
                    1.0
                } else {
                    0.0
                }
            }
            Uniform { a, b } => {
                let (a, b) = (a.to_f64(), b.to_f64());
                a + (b - a) * rng.random::<f64>()
            }
            UniformInt { a, b } => rng.random_range(*a..=*b) as f64,
            Normal { mean, variance } => {
                let sd = variance.to_f64().sqrt();
                rand_distr::Normal::new(mean.to_f64(), sd).expect("validated variance").sample(rng)
            }
            Discrete { outcomes } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in outcomes {
                    acc += p.to_f64();
                    if u < acc {
                        return v.to_f64();
                    }
                }
                outcomes.last().map(|(v, _)| v.to_f64()).unwrap_or(0.0)
            }
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DistributionSpec::*;
        match self {
            Bernoulli { p } => write!(f, "bernoulli({p})"),
            Uniform { a, b } => write!(f, "uniform({a}, {b})"),
            UniformInt { a, b } => write!(f, "uniformint({a}, {b})"),
            Normal { mean, variance } => write!(f, "normal({mean}, {variance})"),
            Discrete { outcomes } => {
                write!(f, "discrete(")?;
                for (i, (v, p)) in outcomes.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}:{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}
