//! Empirical level-of-distribution sums: theta over arithmetic
//! progressions and the summed maximal errors over moduli q <= Q, with a
//! decay table across x.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::sieve::{Sieve, SieveError};
use crate::util::Kahan;
use crate::{Classify, ErrorClass};

#[derive(Debug, Error)]
pub enum DistError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

impl Classify for DistError {
    fn class(&self) -> ErrorClass {
        match self {
            DistError::Precondition(_) => ErrorClass::Precondition,
            DistError::Budget(_) => ErrorClass::Budget,
            DistError::Sieve(e) => e.class(),
        }
    }
}

/// theta(x; q, a) for the reduced residues a mod q.
#[derive(Clone, Debug, Serialize)]
pub struct ProgressionTheta {
    pub x: u64,
    pub q: u64,
    /// (a, theta(x; q, a)) for 1 <= a <= q with gcd(a, q) = 1, ascending.
    pub values: Vec<(u64, f64)>,
    /// Sum of log p over primes p | q, p <= x; these primes fall outside
    /// the reduced classes.
    pub ramified: f64,
}

impl ProgressionTheta {
    pub fn value(&self, a: u64) -> Option<f64> {
        self.values
            .iter()
            .find(|(res, _)| *res == a % self.q.max(1))
            .map(|(_, v)| *v)
    }

    pub fn phi(&self) -> u64 {
        self.values.len() as u64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Accumulates log p into residue classes for one q over an ascending prime
/// list; per-class order is ascending p, so results are reproducible.
fn theta_classes(primes: &[u64], log_primes: &[f64], q: u64) -> Vec<Kahan> {
    let mut acc = vec![Kahan::new(); q as usize];
    for (&p, &lp) in primes.iter().zip(log_primes) {
        acc[(p % q) as usize].add(lp);
    }
    acc
}

/// Exact theta sums per reduced residue class mod q, one ascending pass.
pub fn theta_progressions(x: u64, q: u64) -> Result<ProgressionTheta, DistError> {
    if q < 1 {
        return Err(DistError::Precondition("q must be >= 1".into()));
    }
    if x < q {
        return Err(DistError::Precondition(format!(
            "x = {x} must be at least q = {q}"
        )));
    }
    let sv = Sieve::new();
    let primes = sv.primes_in(2, x + 1)?;
    let log_primes: Vec<f64> = primes.iter().map(|&p| (p as f64).ln()).collect();
    let acc = theta_classes(&primes, &log_primes, q.max(1));
    let mut values = Vec::new();
    let mut ramified = Kahan::new();
    if q == 1 {
        // single class a = 1 collects everything
        let mut total = Kahan::new();
        for &lp in &log_primes {
            total.add(lp);
        }
        values.push((1, total.value()));
    } else {
        for a in 1..=q {
            if gcd(a, q) == 1 {
                values.push((a, acc[(a % q) as usize].value()));
            }
        }
        for (&p, &lp) in primes.iter().zip(&log_primes) {
            if q % p == 0 {
                ramified.add(lp);
            }
        }
    }
    Ok(ProgressionTheta {
        x,
        q,
        values,
        ramified: ramified.value(),
    })
}

fn phi_of(q: u64, small_primes: &[u64]) -> u64 {
    let mut phi = q;
    let mut rest = q;
    for &p in small_primes {
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            phi -= phi / p;
            while rest % p == 0 {
                rest /= p;
            }
        }
    }
    if rest > 1 {
        phi -= phi / rest;
    }
    phi
}

/// max over reduced a of |theta(x; q, a) - x/phi(q)| for one q.
fn max_error_for_q(primes: &[u64], log_primes: &[f64], q: u64, x: u64, small: &[u64]) -> f64 {
    let acc = theta_classes(primes, log_primes, q);
    let phi = phi_of(q, small);
    let expect = x as f64 / phi as f64;
    let mut worst = 0.0f64;
    if q == 1 {
        let mut total = Kahan::new();
        for &lp in log_primes {
            total.add(lp);
        }
        return (total.value() - expect).abs();
    }
    for a in 1..=q {
        if gcd(a, q) == 1 {
            let err = (acc[(a % q) as usize].value() - expect).abs();
            if err > worst {
                worst = err;
            }
        }
    }
    worst
}

/// Sum over q <= Q of the maximal reduced-class error
/// |theta(x; q, a) - x/phi(q)|. The max is exact, never sampled.
pub fn bv_sum(x: u64, q_max: u64) -> Result<f64, DistError> {
    if q_max < 1 {
        return Err(DistError::Precondition("Q must be >= 1".into()));
    }
    let budget = (x as f64).powf(2.0 / 3.0);
    if q_max as f64 > budget {
        return Err(DistError::Budget(format!(
            "Q = {q_max} exceeds x^(2/3) = {budget:.0}"
        )));
    }
    let sv = Sieve::new();
    let primes = sv.primes_in(2, x + 1)?;
    let log_primes: Vec<f64> = primes.iter().map(|&p| (p as f64).ln()).collect();
    let small = crate::sieve::simple_primes(q_max.isqrt() + 1);
    // parallel over q; per-q accumulation is independent and internally
    // ordered, final sum merges in ascending q
    let errors: Vec<f64> = (1..=q_max)
        .into_par_iter()
        .map(|q| max_error_for_q(&primes, &log_primes, q, x, &small))
        .collect();
    let mut total = Kahan::new();
    for e in errors {
        total.add(e);
    }
    Ok(total.value())
}

/// Q(x) = floor(x^exponent / (log x)^log_power), clamped up to 1.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QRule {
    pub exponent: f64,
    pub log_power: f64,
}

impl QRule {
    pub fn q_for(&self, x: u64) -> u64 {
        let q = (x as f64).powf(self.exponent) / (x as f64).ln().powf(self.log_power);
        (q.floor() as u64).max(1)
    }
}

/// One row of the decay table.
#[derive(Clone, Debug, Serialize)]
pub struct BvRow {
    pub x: u64,
    pub q: u64,
    pub bv_sum: f64,
    /// bv_sum * (log x)^A / x for each configured A.
    pub normalized: Vec<f64>,
}

/// Evaluates the summed error at Q given by the rule for each x, with
/// normalized columns exhibiting the decay.
pub fn bv_decay_table(xs: &[u64], rule: QRule, a_values: &[f64]) -> Result<Vec<BvRow>, DistError> {
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DistError::Precondition("xs must be ascending".into()));
    }
    if rule.exponent > 0.5 {
        return Err(DistError::Precondition(format!(
            "Q rule must keep Q <= sqrt(x); exponent {} too large",
            rule.exponent
        )));
    }
    xs.iter()
        .map(|&x| {
            let q = rule.q_for(x);
            let bv = bv_sum(x, q)?;
            let lx = (x as f64).ln();
            let normalized = a_values
                .iter()
                .map(|&a| bv * lx.powf(a) / x as f64)
                .collect();
            Ok(BvRow {
                x,
                q,
                bv_sum: bv,
                normalized,
            })
        })
        .collect()
}
