//! Prime k-tuple machinery: residue counts, admissibility, the singular
//! series Euler product, Gallagher-style averages, and tuple enumeration.

use serde::Serialize;
use thiserror::Error;

use crate::sieve::{is_prime_u64, simple_primes};
use crate::util::{binomial_u128, factorial_f64, Kahan};
use crate::{Classify, ErrorClass};

/// Truncation point used when callers do not pick their own.
pub const DEFAULT_SINGULAR_P: u64 = 1_000_000;

/// Largest k accepted by [`gallagher_sum`].
pub const GALLAGHER_MAX_K: usize = 3;

/// Cap on C(h, k) for tuple enumeration.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum TupleError {
    #[error("tuple needs at least one offset")]
    Empty,
    #[error("offsets must be distinct")]
    DuplicateOffsets,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("truncation bound {p} below required minimum {required}")]
    TruncationTooSmall { p: u64, required: u64 },
    #[error("h = {h} must be at least k = {k}")]
    HBelowK { h: u64, k: usize },
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
}

impl Classify for TupleError {
    fn class(&self) -> ErrorClass {
        match self {
            TupleError::Budget(_) => ErrorClass::Budget,
            _ => ErrorClass::Precondition,
        }
    }
}

/// A sorted set of distinct non-negative offsets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Tuple {
    offsets: Vec<u64>,
}

impl Tuple {
    /// Sorts the offsets; rejects duplicates and empty sets.
    pub fn new(mut offsets: Vec<u64>) -> Result<Self, TupleError> {
        if offsets.is_empty() {
            return Err(TupleError::Empty);
        }
        offsets.sort_unstable();
        if offsets.windows(2).any(|w| w[0] == w[1]) {
            return Err(TupleError::DuplicateOffsets);
        }
        Ok(Tuple { offsets })
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn k(&self) -> usize {
        self.offsets.len()
    }

    pub fn span(&self) -> u64 {
        self.offsets[self.k() - 1] - self.offsets[0]
    }

    pub fn max_offset(&self) -> u64 {
        self.offsets[self.k() - 1]
    }

    pub fn contains(&self, h: u64) -> bool {
        self.offsets.binary_search(&h).is_ok()
    }

    /// The tuple with `c` added to every offset.
    pub fn translated(&self, c: u64) -> Tuple {
        Tuple {
            offsets: self.offsets.iter().map(|h| h + c).collect(),
        }
    }

    /// This tuple with `h0` adjoined (unchanged if already present).
    pub fn with_offset(&self, h0: u64) -> Tuple {
        if self.contains(h0) {
            self.clone()
        } else {
            let mut offsets = self.offsets.clone();
            offsets.push(h0);
            offsets.sort_unstable();
            Tuple { offsets }
        }
    }

    /// Distinct residues of the offsets mod p, ascending.
    pub fn residues_mod(&self, p: u64) -> Vec<u64> {
        let mut r: Vec<u64> = self.offsets.iter().map(|h| h % p).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Distinct values of (-h) mod p, ascending; the residue classes of n
    /// for which p divides some n + h.
    pub fn residues_neg_mod(&self, p: u64) -> Vec<u64> {
        let mut r: Vec<u64> = self.offsets.iter().map(|h| (p - h % p) % p).collect();
        r.sort_unstable();
        r.dedup();
        r
    }
}

/// Number of distinct residue classes mod p occupied by the tuple.
pub fn nu_p(tuple: &Tuple, p: u64) -> Result<u64, TupleError> {
    if !is_prime_u64(p) {
        return Err(TupleError::NotPrime(p));
    }
    Ok(tuple.residues_mod(p).len() as u64)
}

/// True iff no prime has all of its residue classes covered. Only primes
/// p <= k need checking: for p > k the k offsets occupy at most k < p
/// classes.
pub fn is_admissible(tuple: &Tuple) -> bool {
    let k = tuple.k() as u64;
    simple_primes(k)
        .into_iter()
        .all(|p| (tuple.residues_mod(p).len() as u64) < p)
}

/// A truncated singular-series value together with its tail bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SingularSeriesValue {
    /// Product of the Euler factors over p <= truncation_bound.
    pub value: f64,
    pub truncation_bound: u64,
    /// Bound on |sum of log of the omitted factors|: k^2 / (P - 1), from
    /// |log factor(p)| <= k^2/p^2 and sum_{p > P} p^-2 <= 1/(P-1).
    pub tail_log_bound: f64,
    /// Set when some prime covers every class; the value is then exactly 0.
    pub exact_zero: bool,
}

fn singular_series_with_primes(
    tuple: &Tuple,
    primes: &[u64],
    p_limit: u64,
) -> SingularSeriesValue {
    let k = tuple.k();
    let kf = k as f64;
    let tail_log_bound = kf * kf / (p_limit - 1) as f64;
    // Individual factors while nu_p can differ from k; for p beyond every
    // offset the offsets are distinct mod p, so nu_p = k and the factor is
    // accumulated in log space.
    let cutoff = tuple.max_offset().max(k as u64);
    let mut value = 1.0f64;
    let mut tail = Kahan::new();
    for &p in primes {
        if p > p_limit {
            break;
        }
        let pf = p as f64;
        if p <= cutoff {
            let nu = tuple.residues_mod(p).len() as u64;
            if nu == p {
                return SingularSeriesValue {
                    value: 0.0,
                    truncation_bound: p_limit,
                    tail_log_bound,
                    exact_zero: true,
                };
            }
            // num/den keeps the k = 1 factors exactly 1
            let num = 1.0 - nu as f64 / pf;
            let den = (1.0 - 1.0 / pf).powi(k as i32);
            value *= num / den;
        } else {
            let a = (1.0 - 1.0 / pf).ln();
            let b = (1.0 - kf / pf).ln();
            tail.add(b - kf * a);
        }
    }
    SingularSeriesValue {
        value: value * tail.value().exp(),
        truncation_bound: p_limit,
        tail_log_bound,
        exact_zero: false,
    }
}

/// Truncated Euler product for the tuple's singular series.
///
/// `p_limit` must be at least max(k, max offset) and at least 100.
pub fn singular_series(tuple: &Tuple, p_limit: u64) -> Result<SingularSeriesValue, TupleError> {
    let required = tuple.max_offset().max(tuple.k() as u64).max(100);
    if p_limit < required {
        return Err(TupleError::TruncationTooSmall {
            p: p_limit,
            required,
        });
    }
    let primes = simple_primes(p_limit);
    Ok(singular_series_with_primes(tuple, &primes, p_limit))
}

/// 2 C_2 as the truncated product for {0, 2} at the default bound, computed
/// once.
fn twin_constant() -> f64 {
    use std::sync::OnceLock;
    static TWIN: OnceLock<f64> = OnceLock::new();
    *TWIN.get_or_init(|| {
        let pair = Tuple::new(vec![0, 2]).unwrap();
        singular_series(&pair, DEFAULT_SINGULAR_P).unwrap().value
    })
}

/// Closed form of the pair singular series: 0 for odd d, otherwise
/// 2 C_2 times prod_{p | d, p > 2} (p-1)/(p-2).
pub fn twin_singular(d: u64) -> f64 {
    assert!(d >= 1, "twin_singular needs d >= 1");
    if d % 2 == 1 {
        return 0.0;
    }
    let mut value = twin_constant();
    let mut rest = d;
    let mut p = 3u64;
    while rest % 2 == 0 {
        rest /= 2;
    }
    while p * p <= rest {
        if rest % p == 0 {
            value *= (p - 1) as f64 / (p - 2) as f64;
            while rest % p == 0 {
                rest /= p;
            }
        }
        p += 2;
    }
    if rest > 1 {
        value *= (rest - 1) as f64 / (rest - 2) as f64;
    }
    value
}

/// Sum of singular-series values over k-subsets of [1, h], in the ordered
/// counting convention (each set weighted k!), and its ratio to h^k.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GallagherSum {
    pub k: usize,
    pub h: u64,
    pub p_limit: u64,
    pub sum: f64,
    pub ratio: f64,
}

/// Enumerates the unordered k-subsets of [1, h], sums their singular series
/// (inadmissible sets contribute their exact 0) and multiplies by k!.
pub fn gallagher_sum(k: usize, h: u64, p_limit: u64) -> Result<GallagherSum, TupleError> {
    if k == 0 || k > GALLAGHER_MAX_K {
        return Err(TupleError::Budget(format!(
            "gallagher enumeration is limited to 1 <= k <= {GALLAGHER_MAX_K}, got {k}"
        )));
    }
    if h < k as u64 {
        return Err(TupleError::HBelowK { h, k });
    }
    let required = h.max(k as u64).max(100);
    if p_limit < required {
        return Err(TupleError::TruncationTooSmall {
            p: p_limit,
            required,
        });
    }
    check_enum_budget(k, h)?;

    let primes = simple_primes(p_limit);
    // The factors for p beyond every offset depend only on k, so their log
    // sum over (cutoff, p_limit] is shared across all subsets.
    let kf = k as f64;
    let cutoff = h.max(k as u64);
    let mut shared_tail = Kahan::new();
    for &p in &primes {
        if p <= cutoff || p > p_limit {
            continue;
        }
        let pf = p as f64;
        let a = (1.0 - 1.0 / pf).ln();
        let b = (1.0 - kf / pf).ln();
        shared_tail.add(b - kf * a);
    }
    let tail_factor = shared_tail.value().exp();
    let head: Vec<u64> = primes.iter().copied().take_while(|&p| p <= cutoff).collect();

    let mut sum = Kahan::new();
    let tuple_value = |offsets: &[u64]| {
        let mut value = 1.0f64;
        for &p in &head {
            let mut res: Vec<u64> = offsets.iter().map(|h| h % p).collect();
            res.sort_unstable();
            res.dedup();
            let nu = res.len() as u64;
            if nu == p {
                return 0.0;
            }
            let pf = p as f64;
            value *= (1.0 - nu as f64 / pf) / (1.0 - 1.0 / pf).powi(k as i32);
        }
        value * tail_factor
    };
    for_each_subset(k, h, &mut |offsets| {
        sum.add(tuple_value(offsets));
    });
    let sum = sum.value() * factorial_f64(k);
    Ok(GallagherSum {
        k,
        h,
        p_limit,
        sum,
        ratio: sum / (h as f64).powi(k as i32),
    })
}

fn check_enum_budget(k: usize, h: u64) -> Result<(), TupleError> {
    match binomial_u128(h, k as u64) {
        Some(c) if c <= ENUMERATION_BUDGET => Ok(()),
        _ => Err(TupleError::Budget(format!(
            "C({h}, {k}) exceeds the enumeration budget {ENUMERATION_BUDGET}"
        ))),
    }
}

/// Visits the k-subsets of [1, h] in lexicographic order.
fn for_each_subset(k: usize, h: u64, f: &mut impl FnMut(&[u64])) {
    let mut current = Vec::with_capacity(k);
    fn rec(current: &mut Vec<u64>, k: usize, h: u64, next: u64, f: &mut impl FnMut(&[u64])) {
        if current.len() == k {
            f(current);
            return;
        }
        let remaining = (k - current.len()) as u64;
        let mut v = next;
        while v + remaining - 1 <= h {
            current.push(v);
            rec(current, k, h, v + 1, f);
            current.pop();
            v += 1;
        }
    }
    rec(&mut current, k, h, 1, f);
}

/// All admissible k-subsets of [1, h], lexicographic.
pub fn enumerate_admissible(k: usize, h: u64) -> Result<Vec<Tuple>, TupleError> {
    if k == 0 {
        return Err(TupleError::Empty);
    }
    if h < k as u64 {
        return Ok(Vec::new());
    }
    check_enum_budget(k, h)?;
    let mut out = Vec::new();
    for_each_subset(k, h, &mut |offsets| {
        let t = Tuple {
            offsets: offsets.to_vec(),
        };
        if is_admissible(&t) {
            out.push(t);
        }
    });
    Ok(out)
}
