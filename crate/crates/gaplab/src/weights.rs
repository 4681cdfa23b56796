//! Truncated divisor-sum weights over the dyadic range (N, 2N] and the
//! moment sums built on them.
//!
//! Two independent computation paths exist for the weight
//! `(1/(k+l)!) sum_{d | P(n), d <= R, d squarefree} mu(d) (log R/d)^{k+l}`
//! where `P(n) = prod (n + h_i)`:
//!
//! * [`build_weight_array`] walks squarefree d (depth-first over ascending
//!   primes) and adds each term to the residue classes n mod d with
//!   d | P(n), obtained by CRT from the per-prime classes -h_i mod p. This
//!   is the performance path.
//! * [`lambda_point`] factors P(n) for a single n and enumerates the same
//!   divisors the same way. This is the correctness oracle.
//!
//! Both paths visit divisors in the same preorder and share one term
//! formula, so a value computed by the array equals the per-n value bit for
//! bit. Proper prime powers never appear: divisors are enumerated over the
//! distinct primes of P(n) only, which is exactly the support of mu. When a
//! prime divides two of the n + h_i it still enters once.
//!
//! Array construction writes into fixed-size chunks (independent of thread
//! count) and moment reductions use per-chunk compensated sums merged in
//! ascending order, so every result is reproducible across parallelism
//! degrees.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::sieve::{self, PrimorialSupport, Sieve, SieveError};
use crate::tuples::{self, Tuple, TupleError};
use crate::util::{binomial_f64, factorial_f64, Kahan};
use crate::{Classify, ErrorClass};

/// Cap on the truncation level R.
pub const WEIGHT_R_CAP: u64 = 100_000_000;

/// Rough cap on N (log R)^k array-building work.
pub const WEIGHT_WORK_BUDGET: f64 = 7e10;

/// Fixed chunk length for array construction and reductions.
const CHUNK: usize = 1 << 20;

/// Truncation used for singular-series values inside main terms.
const MAIN_TERM_P: u64 = tuples::DEFAULT_SINGULAR_P;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("work budget exceeded: {0}")]
    Budget(String),
    #[error("tuple is inadmissible; the main term would be 0")]
    Inadmissible,
    #[error("factorization substrate missing: support bound {bound} below sqrt({needed})")]
    FactorizationSubstrate { bound: u64, needed: u64 },
    #[error("rough mask missing on the weight array")]
    MaskMissing,
    #[error(
        "divisor bound violated at n = {n}: |{value}| > {bound} (implementation bug)"
    )]
    DivisorBoundViolated { n: u64, value: f64, bound: f64 },
    #[error(transparent)]
    Tuple(#[from] TupleError),
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

impl Classify for WeightError {
    fn class(&self) -> ErrorClass {
        match self {
            WeightError::Precondition(_)
            | WeightError::Inadmissible
            | WeightError::FactorizationSubstrate { .. }
            | WeightError::MaskMissing => ErrorClass::Precondition,
            WeightError::Budget(_) => ErrorClass::Budget,
            WeightError::DivisorBoundViolated { .. } => ErrorClass::Internal,
            WeightError::Tuple(e) => e.class(),
            WeightError::Sieve(e) => e.class(),
        }
    }
}

/// Parameter bundle for weight computations over (N, 2N].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GpyConfig {
    n: u64,
    k: usize,
    l: usize,
    r: u64,
    delta: f64,
    h: u64,
}

impl GpyConfig {
    /// Validates 1 <= k, l < k, R >= 1, 0 < delta < 1/2.
    ///
    /// R = 1 is allowed (log R = 0 makes every weight vanish); rough
    /// filtering with R^delta < 2 sieves by an empty prime set and leaves
    /// every n unfiltered.
    pub fn new(n: u64, k: usize, l: usize, r: u64, delta: f64, h: u64) -> Result<Self, WeightError> {
        if k == 0 {
            return Err(WeightError::Precondition("k must be >= 1".into()));
        }
        if l >= k {
            return Err(WeightError::Precondition(format!(
                "l must satisfy 0 <= l < k, got l = {l}, k = {k}"
            )));
        }
        if n == 0 {
            return Err(WeightError::Precondition("N must be >= 1".into()));
        }
        if r == 0 {
            return Err(WeightError::Precondition("R must be >= 1".into()));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(WeightError::Precondition(format!(
                "delta must lie in (0, 1/2), got {delta}"
            )));
        }
        Ok(GpyConfig { n, k, l, r, delta, h })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    /// M = k + l, the exponent of the divisor terms.
    pub fn m(&self) -> usize {
        self.k + self.l
    }

    pub fn log_r(&self) -> f64 {
        (self.r as f64).ln()
    }

    /// rho = log R / log N.
    pub fn rho(&self) -> f64 {
        self.log_r() / (self.n as f64).ln()
    }

    /// Primes up to floor(R^delta) are sieved out by the rough mask. A tiny
    /// epsilon absorbs cases where R^delta is an exact integer that powf
    /// lands a hair under.
    pub fn rough_prime_limit(&self) -> u64 {
        ((self.r as f64).powf(self.delta) + 1e-9).floor() as u64
    }

    /// k^3 delta^2, the magnitude accompanying restricted-moment reports.
    pub fn k3_delta_sq(&self) -> f64 {
        let k = self.k as f64;
        k * k * k * self.delta * self.delta
    }
}

/// One divisor term `mu(d) (log(R/d))^m`, shared verbatim by both
/// computation paths.
#[inline]
fn divisor_term(r: u64, d: u64, omega: u32, m_exp: i32) -> f64 {
    let w = ((r as f64) / (d as f64)).ln().powi(m_exp);
    if omega & 1 == 1 {
        -w
    } else {
        w
    }
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // p prime, a not divisible by p
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p as i64, (a % p) as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1);
    ((t % p as i64 + p as i64) % p as i64) as u64
}

/// Rough-number mask over (N, 2N]: bit i (for n = N + 1 + i) is set iff no
/// prime p <= R^delta divides any n + h_i.
#[derive(Clone, Debug)]
pub struct RoughMask {
    first_n: u64,
    len: u64,
    words: Vec<u64>,
}

impl RoughMask {
    #[inline]
    pub fn bit(&self, idx: u64) -> bool {
        debug_assert!(idx < self.len);
        self.words[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    pub fn is_rough(&self, n: u64) -> bool {
        assert!(n >= self.first_n && n < self.first_n + self.len);
        self.bit(n - self.first_n)
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// Builds the rough mask by crossing out the nu_p residue classes mod p for
/// every prime p <= R^delta.
pub fn rough_mask(tuple: &Tuple, cfg: &GpyConfig) -> RoughMask {
    let n = cfg.n();
    let first_n = n + 1;
    let nwords = ((n + 63) / 64) as usize;
    let mut words = vec![!0u64; nwords];
    let tail = n % 64;
    if tail != 0 {
        words[nwords - 1] = (1u64 << tail) - 1;
    }
    for p in sieve::simple_primes(cfg.rough_prime_limit()) {
        for r in tuple.residues_neg_mod(p) {
            // first n >= first_n with n = r (mod p)
            let off = (r + p - first_n % p) % p;
            let mut i = off;
            while i < n {
                words[(i / 64) as usize] &= !(1u64 << (i % 64));
                i += p;
            }
        }
    }
    RoughMask { first_n, len: n, words }
}

/// Weight values for all n in (N, 2N], plus an optional rough mask.
#[derive(Clone, Debug)]
pub struct WeightArray {
    config: GpyConfig,
    tuple: Tuple,
    values: Vec<f64>,
    mask: Option<RoughMask>,
}

impl WeightArray {
    pub fn config(&self) -> &GpyConfig {
        &self.config
    }

    pub fn tuple(&self) -> &Tuple {
        &self.tuple
    }

    /// Values indexed by n - (N + 1).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, n: u64) -> f64 {
        let first = self.config.n() + 1;
        assert!(n >= first && n <= 2 * self.config.n());
        self.values[(n - first) as usize]
    }

    pub fn mask(&self) -> Option<&RoughMask> {
        self.mask.as_ref()
    }

    /// The uniform bound `2^{k log 3N / (delta log R)} (log R)^{k+l} / (k+l)!`
    /// valid for every rough n. Infinite when R = 1 (every weight is 0).
    pub fn divisor_bound(&self) -> f64 {
        let cfg = &self.config;
        if cfg.r() == 1 {
            return f64::INFINITY;
        }
        let t = (3.0 * cfg.n() as f64).ln() / (cfg.delta() * cfg.log_r());
        (cfg.k() as f64 * t).exp2() * cfg.log_r().powi(cfg.m() as i32)
            / factorial_f64(cfg.m())
    }

    /// Attaches a rough mask, verifying the divisor bound on every rough n.
    pub fn with_rough_mask(mut self, mask: RoughMask) -> Result<Self, WeightError> {
        assert_eq!(mask.len(), self.config.n());
        let bound = self.divisor_bound();
        for (i, v) in self.values.iter().enumerate() {
            if mask.bit(i as u64) && v.abs() > bound {
                return Err(WeightError::DivisorBoundViolated {
                    n: self.config.n() + 1 + i as u64,
                    value: *v,
                    bound,
                });
            }
        }
        self.mask = Some(mask);
        Ok(self)
    }
}

struct DivisorWalk<'a> {
    r: u64,
    m_exp: i32,
    primes: &'a [u64],
    classes: Vec<Vec<u64>>, // residues_neg_mod per prime index
}

impl<'a> DivisorWalk<'a> {
    fn new(tuple: &Tuple, r: u64, m_exp: i32, primes: &'a [u64]) -> Self {
        let classes = primes.iter().map(|&p| tuple.residues_neg_mod(p)).collect();
        DivisorWalk {
            r,
            m_exp,
            primes,
            classes,
        }
    }

    /// Adds every divisor term of every d > 1 into `chunk`, whose entry j
    /// holds n = lo + j. Depth-first over ascending primes: preorder, so
    /// each n receives its terms in the same order [`lambda_point`] sums
    /// them.
    fn accumulate(&self, chunk: &mut [f64], lo: u64) {
        self.rec(chunk, lo, 0, 1, 0, &[0]);
    }

    fn rec(&self, chunk: &mut [f64], lo: u64, start: usize, d: u64, omega: u32, residues: &[u64]) {
        for j in start..self.primes.len() {
            let p = self.primes[j];
            let nd = match d.checked_mul(p) {
                Some(nd) if nd <= self.r => nd,
                _ => break,
            };
            let rp = &self.classes[j];
            // CRT: x = r0 (mod d), x = s (mod p)
            let inv = mod_inverse(d, p);
            let mut nres = Vec::with_capacity(residues.len() * rp.len());
            for &r0 in residues {
                for &s in rp {
                    let diff = (s + p - r0 % p) % p;
                    nres.push(r0 + d * (diff * inv % p));
                }
            }
            let w = divisor_term(self.r, nd, omega + 1, self.m_exp);
            for &r0 in &nres {
                let off = (r0 + nd - lo % nd) % nd;
                let mut i = off as usize;
                while i < chunk.len() {
                    chunk[i] += w;
                    i += nd as usize;
                }
            }
            self.rec(chunk, lo, j + 1, nd, omega + 1, &nres);
        }
    }
}

/// Builds the weight array over (N, 2N] by per-divisor residue-class
/// accumulation.
pub fn build_weight_array(tuple: &Tuple, cfg: &GpyConfig) -> Result<WeightArray, WeightError> {
    if cfg.r() > WEIGHT_R_CAP {
        return Err(WeightError::Budget(format!(
            "R = {} exceeds cap {WEIGHT_R_CAP}",
            cfg.r()
        )));
    }
    let est = cfg.n() as f64 * (cfg.log_r() + 1.0).powi(cfg.k() as i32);
    if est > WEIGHT_WORK_BUDGET {
        return Err(WeightError::Budget(format!(
            "estimated work N (log R)^k = {est:.3e} exceeds {WEIGHT_WORK_BUDGET:.1e}"
        )));
    }
    let m_exp = cfg.m() as i32;
    let primes = sieve::simple_primes(cfg.r());
    let walk = DivisorWalk::new(tuple, cfg.r(), m_exp, &primes);
    let t0 = divisor_term(cfg.r(), 1, 0, m_exp);
    let inv_mfact = 1.0 / factorial_f64(cfg.m());
    let first_n = cfg.n() + 1;
    let mut values = vec![0.0f64; cfg.n() as usize];
    values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(ci, chunk)| {
            let lo = first_n + (ci * CHUNK) as u64;
            chunk.fill(t0);
            walk.accumulate(chunk, lo);
            for v in chunk.iter_mut() {
                *v *= inv_mfact;
            }
        });
    Ok(WeightArray {
        config: cfg.clone(),
        tuple: tuple.clone(),
        values,
        mask: None,
    })
}

/// The weight at a single n, from the factorization of P(n).
///
/// `support` must contain every prime up to sqrt(n + max offset); otherwise
/// the factorization substrate is reported missing.
pub fn lambda_point(
    n: u64,
    tuple: &Tuple,
    cfg: &GpyConfig,
    support: &PrimorialSupport,
) -> Result<f64, WeightError> {
    if n == 0 {
        return Err(WeightError::Precondition("n must be >= 1".into()));
    }
    let needed = n + tuple.max_offset();
    if support.bound() < needed.isqrt() {
        return Err(WeightError::FactorizationSubstrate {
            bound: support.bound(),
            needed,
        });
    }
    // distinct primes of P(n) = prod (n + h_i); shared primes enter once
    let mut ps: Vec<u64> = Vec::new();
    for &h in tuple.offsets() {
        let mut v = n + h;
        for &p in support.primes() {
            if p * p > v {
                break;
            }
            if v % p == 0 {
                ps.push(p);
                while v % p == 0 {
                    v /= p;
                }
            }
        }
        if v > 1 {
            ps.push(v);
        }
    }
    ps.sort_unstable();
    ps.dedup();

    let m_exp = cfg.m() as i32;
    let r = cfg.r();
    let mut acc = divisor_term(r, 1, 0, m_exp);
    // same preorder as the array path, restricted to the primes of P(n)
    fn rec(acc: &mut f64, ps: &[u64], start: usize, d: u64, omega: u32, r: u64, m_exp: i32) {
        for j in start..ps.len() {
            let nd = match d.checked_mul(ps[j]) {
                Some(nd) if nd <= r => nd,
                _ => break,
            };
            *acc += divisor_term(r, nd, omega + 1, m_exp);
            rec(acc, ps, j + 1, nd, omega + 1, r, m_exp);
        }
    }
    rec(&mut acc, &ps, 0, 1, 0, r, m_exp);
    Ok(acc * (1.0 / factorial_f64(cfg.m())))
}

/// Report of the unconditional per-n bound check on rough entries.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DivisorBoundReport {
    pub bound: f64,
    pub max_abs: f64,
    pub max_ratio: f64,
    pub rough_entries: u64,
}

/// Verifies |weight| <= the divisor bound on every rough n. A violation is
/// a hard error: the inequality is unconditional, so it can only mean a bug.
pub fn divisor_bound_check(array: &WeightArray) -> Result<DivisorBoundReport, WeightError> {
    let mask = array.mask().ok_or(WeightError::MaskMissing)?;
    let bound = array.divisor_bound();
    let mut max_abs = 0.0f64;
    let mut rough = 0u64;
    for (i, v) in array.values().iter().enumerate() {
        if mask.bit(i as u64) {
            rough += 1;
            let a = v.abs();
            if a > bound {
                return Err(WeightError::DivisorBoundViolated {
                    n: array.config().n() + 1 + i as u64,
                    value: *v,
                    bound,
                });
            }
            if a > max_abs {
                max_abs = a;
            }
        }
    }
    let max_ratio = if bound.is_finite() { max_abs / bound } else { 0.0 };
    Ok(DivisorBoundReport {
        bound,
        max_abs,
        max_ratio,
        rough_entries: rough,
    })
}

/// Which path computed an empirical moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MomentMethod {
    PerNOracle,
    PerDSieve,
}

impl MomentMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentMethod::PerNOracle => "per_n_oracle",
            MomentMethod::PerDSieve => "per_d_sieve",
        }
    }
}

/// Empirical sum, theoretical main term and their ratio.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub offsets: Vec<u64>,
    pub n: u64,
    pub k: usize,
    pub l: usize,
    pub r: u64,
    pub delta: f64,
    pub h0: Option<u64>,
    pub restricted: bool,
    pub empirical: f64,
    /// 0 exactly when the (union) tuple is inadmissible; ratio is then NaN.
    pub main_term: f64,
    pub ratio: f64,
    pub method: MomentMethod,
    pub singular_value: f64,
    pub singular_tail_log_bound: f64,
    /// k^3 delta^2; the relative-error scale the restricted asymptotics
    /// carry. Reported, never folded into assertions.
    pub error_scale: f64,
}

/// Kahan sum of `f(i)` over i in 0..len, chunked by the fixed CHUNK size and
/// merged in order; parallel but reproducible.
fn chunked_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let nchunks = len.div_ceil(CHUNK).max(1);
    let parts: Vec<f64> = (0..nchunks)
        .into_par_iter()
        .map(|ci| {
            let start = ci * CHUNK;
            let end = ((ci + 1) * CHUNK).min(len);
            let mut acc = Kahan::new();
            for i in start..end {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    let mut total = Kahan::new();
    for p in parts {
        total.add(p);
    }
    total.value()
}

fn masked(mask: Option<&RoughMask>, i: usize) -> bool {
    mask.map_or(true, |m| m.bit(i as u64))
}

/// Second moment: sum of weight^2 over (N, 2N], optionally restricted to
/// rough n. The main term is
/// `C(2l, l) S(H) N (log R)^{k+2l} / (k+2l)!`.
pub fn second_moment(
    tuple: &Tuple,
    cfg: &GpyConfig,
    restricted: bool,
    method: MomentMethod,
) -> Result<MomentReport, WeightError> {
    if !tuples::is_admissible(tuple) {
        return Err(WeightError::Inadmissible);
    }
    if tuple.k() != cfg.k() {
        return Err(WeightError::Precondition(format!(
            "tuple size {} differs from configured k = {}",
            tuple.k(),
            cfg.k()
        )));
    }
    let singular = tuples::singular_series(tuple, MAIN_TERM_P)?;
    let empirical = match method {
        MomentMethod::PerDSieve => {
            let array = build_weight_array(tuple, cfg)?;
            let mask = restricted.then(|| rough_mask(tuple, cfg));
            let values = array.values();
            chunked_sum(values.len(), |i| {
                if masked(mask.as_ref(), i) {
                    values[i] * values[i]
                } else {
                    0.0
                }
            })
        }
        MomentMethod::PerNOracle => {
            let support = sieve::primorial_support((2 * cfg.n() + tuple.max_offset()).isqrt() + 1);
            let mask = restricted.then(|| rough_mask(tuple, cfg));
            let mut acc = Kahan::new();
            for i in 0..cfg.n() {
                if masked(mask.as_ref(), i as usize) {
                    let v = lambda_point(cfg.n() + 1 + i, tuple, cfg, &support)?;
                    acc.add(v * v);
                }
            }
            acc.value()
        }
    };
    let exp = cfg.k() + 2 * cfg.l();
    let main_term = binomial_f64(2 * cfg.l(), cfg.l()) * singular.value * cfg.n() as f64
        * cfg.log_r().powi(exp as i32)
        / factorial_f64(exp);
    Ok(MomentReport {
        offsets: tuple.offsets().to_vec(),
        n: cfg.n(),
        k: cfg.k(),
        l: cfg.l(),
        r: cfg.r(),
        delta: cfg.delta(),
        h0: None,
        restricted,
        empirical,
        main_term,
        ratio: empirical / main_term,
        method,
        singular_value: singular.value,
        singular_tail_log_bound: singular.tail_log_bound,
        error_scale: cfg.k3_delta_sq(),
    })
}

/// Twisted moment: sum of theta(n + h0) weight^2, optionally restricted.
///
/// With m = 1 if h0 is an offset and 0 otherwise, the main term is
/// `C(2(l+m), l+m) S(H u {h0}) N (log R)^{k+2l+m} / (k+2l+m)!`; when the
/// union is inadmissible the main term is 0 and only the empirical sum is
/// meaningful (ratio NaN).
pub fn twisted_moment(
    tuple: &Tuple,
    h0: u64,
    cfg: &GpyConfig,
    restricted: bool,
    method: MomentMethod,
) -> Result<MomentReport, WeightError> {
    if !tuples::is_admissible(tuple) {
        return Err(WeightError::Inadmissible);
    }
    if tuple.k() != cfg.k() {
        return Err(WeightError::Precondition(format!(
            "tuple size {} differs from configured k = {}",
            tuple.k(),
            cfg.k()
        )));
    }
    if h0 > cfg.h() && !tuple.contains(h0) {
        return Err(WeightError::Precondition(format!(
            "h0 = {h0} outside [0, h = {}]",
            cfg.h()
        )));
    }
    let m = usize::from(tuple.contains(h0));
    let union = tuple.with_offset(h0);
    let (main_term, singular_value, singular_tail) = if tuples::is_admissible(&union) {
        let s = tuples::singular_series(&union, MAIN_TERM_P)?;
        let exp = cfg.k() + 2 * cfg.l() + m;
        let main = binomial_f64(2 * (cfg.l() + m), cfg.l() + m) * s.value * cfg.n() as f64
            * cfg.log_r().powi(exp as i32)
            / factorial_f64(exp);
        (main, s.value, s.tail_log_bound)
    } else {
        (0.0, 0.0, 0.0)
    };

    let empirical = match method {
        MomentMethod::PerDSieve => {
            let array = build_weight_array(tuple, cfg)?;
            let mask = restricted.then(|| rough_mask(tuple, cfg));
            let sv = Sieve::new();
            let parts = sv.map_segments(cfg.n() + h0 + 1, 2 * cfg.n() + h0 + 1, false, |seg| {
                let mut acc = Kahan::new();
                for q in seg.primes() {
                    let idx = (q - h0 - cfg.n() - 1) as usize;
                    if masked(mask.as_ref(), idx) {
                        let v = array.values()[idx];
                        acc.add((q as f64).ln() * v * v);
                    }
                }
                acc.value()
            })?;
            let mut acc = Kahan::new();
            for p in parts {
                acc.add(p);
            }
            acc.value()
        }
        MomentMethod::PerNOracle => {
            let support = sieve::primorial_support(
                (2 * cfg.n() + tuple.max_offset().max(h0)).isqrt() + 1,
            );
            let mask = restricted.then(|| rough_mask(tuple, cfg));
            let mut acc = Kahan::new();
            for i in 0..cfg.n() {
                let n = cfg.n() + 1 + i;
                if masked(mask.as_ref(), i as usize) && sieve::is_prime_u64(n + h0) {
                    let v = lambda_point(n, tuple, cfg, &support)?;
                    acc.add(((n + h0) as f64).ln() * v * v);
                }
            }
            acc.value()
        }
    };
    Ok(MomentReport {
        offsets: tuple.offsets().to_vec(),
        n: cfg.n(),
        k: cfg.k(),
        l: cfg.l(),
        r: cfg.r(),
        delta: cfg.delta(),
        h0: Some(h0),
        restricted,
        empirical,
        main_term,
        ratio: empirical / main_term,
        method,
        singular_value,
        singular_tail_log_bound: singular_tail,
        error_scale: cfg.k3_delta_sq(),
    })
}

/// The diagonal statistic over all admissible k-subsets of [1, h], with the
/// per-tuple rough restriction:
/// `(1/(N (h log R)^k)) sum_n (Theta(n, h) - log 3N) sum*_H weight^2`.
///
/// Subset sums use the ordered-tuple convention (each unordered set weighted
/// k!), matching the Gallagher normalization of the main terms. The three
/// components expose the log-3N piece, the twist at offsets inside H, and
/// the twist at the remaining shifts, each against its main term (whose
/// asymptotic form carries log N rather than log 3N).
#[derive(Clone, Debug, Serialize)]
pub struct StildeReport {
    pub n: u64,
    pub h: u64,
    pub k: usize,
    pub l: usize,
    pub r: u64,
    pub delta: f64,
    pub value: f64,
    pub tuples: u64,
    pub comp_log: f64,
    pub comp_twist_in: f64,
    pub comp_twist_out: f64,
    pub main_log: f64,
    pub main_twist_in: f64,
    pub main_twist_out: f64,
    pub ratio_log: f64,
    pub ratio_twist_in: f64,
    pub ratio_twist_out: f64,
}

/// Budget guard for s_tilde and the fourth-moment probe.
const STILDE_MAX_K: usize = 3;

pub fn s_tilde(cfg: &GpyConfig) -> Result<StildeReport, WeightError> {
    if cfg.k() > STILDE_MAX_K {
        return Err(WeightError::Budget(format!(
            "s_tilde enumeration is limited to k <= {STILDE_MAX_K}, got {}",
            cfg.k()
        )));
    }
    let tuples_list = tuples::enumerate_admissible(cfg.k(), cfg.h())?;
    let per_tuple_work = cfg.n() as f64 * (cfg.log_r() + 1.0).powi(cfg.k() as i32);
    if tuples_list.len() as f64 * per_tuple_work > WEIGHT_WORK_BUDGET {
        return Err(WeightError::Budget(format!(
            "{} tuples at ~{per_tuple_work:.3e} work each exceed {WEIGHT_WORK_BUDGET:.1e}",
            tuples_list.len()
        )));
    }

    let n = cfg.n();
    let h = cfg.h();
    let log3n = (3.0 * n as f64).ln();
    let mut comp_log = Kahan::new();
    let mut comp_in = Kahan::new();
    let mut comp_out = Kahan::new();

    if !tuples_list.is_empty() {
        let sv = Sieve::new();
        let bits = sv.range_bits(n + 1, 2 * n + h + 1)?;
        // cumulative theta over (N, 2N+h]: cum[i] = sum over N < m <= N+i
        let mut cum = Vec::with_capacity((n + h + 1) as usize);
        cum.push(0.0f64);
        let mut acc = Kahan::new();
        for m in (n + 1)..=(2 * n + h) {
            if bits.is_prime(m) {
                acc.add((m as f64).ln());
            }
            cum.push(acc.value());
        }
        let theta_at = |m: u64| -> f64 {
            if bits.is_prime(m) {
                (m as f64).ln()
            } else {
                0.0
            }
        };

        // per-tuple sums, computed in parallel, merged in enumeration order
        let parts: Vec<(f64, f64, f64)> = tuples_list
            .par_iter()
            .map(|tuple| {
                let array = build_weight_array(tuple, cfg)?;
                let mask = rough_mask(tuple, cfg);
                let values = array.values();
                let mut s_plain = Kahan::new();
                let mut s_all = Kahan::new();
                let mut s_in = Kahan::new();
                for i in 0..values.len() {
                    if !mask.bit(i as u64) {
                        continue;
                    }
                    let nn = n + 1 + i as u64;
                    let w2 = values[i] * values[i];
                    if w2 == 0.0 {
                        continue;
                    }
                    s_plain.add(w2);
                    // Theta(nn, h) = cum[nn + h - N] - cum[nn - N]
                    let th = cum[(nn + h - n) as usize] - cum[(nn - n) as usize];
                    if th != 0.0 {
                        s_all.add(th * w2);
                    }
                    for &hi in tuple.offsets() {
                        let t = theta_at(nn + hi);
                        if t != 0.0 {
                            s_in.add(t * w2);
                        }
                    }
                }
                Ok((s_plain.value(), s_all.value(), s_in.value()))
            })
            .collect::<Result<_, WeightError>>()?;
        for (plain, all, inside) in parts {
            comp_log.add(log3n * plain);
            comp_in.add(inside);
            comp_out.add(all - inside);
        }
    }

    let kfact = factorial_f64(cfg.k());
    let comp_log = comp_log.value() * kfact;
    let comp_twist_in = comp_in.value() * kfact;
    let comp_twist_out = comp_out.value() * kfact;

    let nf = n as f64;
    let hf = h as f64;
    let lr = cfg.log_r();
    let k = cfg.k();
    let l = cfg.l();
    let main_log = binomial_f64(2 * l, l) * hf.powi(k as i32) * nf * lr.powi((k + 2 * l) as i32)
        * nf.ln()
        / factorial_f64(k + 2 * l);
    let main_twist_in = binomial_f64(2 * l + 2, l + 1) * k as f64 * hf.powi(k as i32) * nf
        * lr.powi((k + 2 * l + 1) as i32)
        / factorial_f64(k + 2 * l + 1);
    let main_twist_out = binomial_f64(2 * l, l) * hf.powi(k as i32 + 1) * nf
        * lr.powi((k + 2 * l) as i32)
        / factorial_f64(k + 2 * l);
    let norm = nf * (hf * lr).powi(k as i32);
    Ok(StildeReport {
        n,
        h,
        k,
        l,
        r: cfg.r(),
        delta: cfg.delta(),
        value: (comp_twist_in + comp_twist_out - comp_log) / norm,
        tuples: tuples_list.len() as u64,
        comp_log,
        comp_twist_in,
        comp_twist_out,
        main_log,
        main_twist_in,
        main_twist_out,
        ratio_log: comp_log / main_log,
        ratio_twist_in: comp_twist_in / main_twist_in,
        ratio_twist_out: comp_twist_out / main_twist_out,
    })
}

/// Count of rough n against the Selberg upper-bound benchmark, plus the
/// share of weight mass removed by the mask against k^3 delta^2 / 4.
#[derive(Clone, Debug, Serialize)]
pub struct RoughCountReport {
    pub offsets: Vec<u64>,
    pub n: u64,
    pub r: u64,
    pub delta: f64,
    pub rough_count: u64,
    /// `N k! S(H) / (delta log R)^k`; 0 for inadmissible tuples.
    pub selberg_bound: f64,
    /// rough_count / selberg_bound (NaN when the bound is 0).
    pub count_ratio: f64,
    /// sum of weight^2 over non-rough n divided by the full sum.
    pub discarded_weight_ratio: f64,
    /// k^3 delta^2 / 4, the comparison scale. Report only; the inequality
    /// needs k large.
    pub k3d2_over_4: f64,
}

pub fn rough_count_report(tuple: &Tuple, cfg: &GpyConfig) -> Result<RoughCountReport, WeightError> {
    let mask = rough_mask(tuple, cfg);
    let singular = tuples::singular_series(tuple, MAIN_TERM_P)?;
    let k = cfg.k() as i32;
    let selberg_bound = cfg.n() as f64 * factorial_f64(cfg.k()) * singular.value
        / (cfg.delta() * cfg.log_r()).powi(k);
    let array = build_weight_array(tuple, cfg)?;
    let values = array.values();
    let total = chunked_sum(values.len(), |i| values[i] * values[i]);
    let discarded = chunked_sum(values.len(), |i| {
        if mask.bit(i as u64) {
            0.0
        } else {
            values[i] * values[i]
        }
    });
    let rough_count = mask.count_ones();
    Ok(RoughCountReport {
        offsets: tuple.offsets().to_vec(),
        n: cfg.n(),
        r: cfg.r(),
        delta: cfg.delta(),
        rough_count,
        selberg_bound,
        count_ratio: rough_count as f64 / selberg_bound,
        discarded_weight_ratio: if total > 0.0 { discarded / total } else { 0.0 },
        k3d2_over_4: cfg.k3_delta_sq() / 4.0,
    })
}

/// Fourth moment of the tuple-summed weight, against N (log N)^{4k+4l}.
#[derive(Clone, Debug, Serialize)]
pub struct FourthMomentReport {
    pub n: u64,
    pub h: u64,
    pub k: usize,
    pub l: usize,
    pub r: u64,
    pub sum: f64,
    pub ratio: f64,
    pub tuples: u64,
}

/// Probes `sum_n (sum_H weight(n; H))^4` over all k-subsets H of [1, h]
/// (admissible or not), in the ordered-tuple convention. Report only.
pub fn fourth_moment_probe(cfg: &GpyConfig) -> Result<FourthMomentReport, WeightError> {
    if cfg.k() > 2 || cfg.h() > 12 || cfg.n() > 100_000 {
        return Err(WeightError::Budget(format!(
            "fourth-moment probe needs k <= 2, h <= 12, N <= 1e5; got k = {}, h = {}, N = {}",
            cfg.k(),
            cfg.h(),
            cfg.n()
        )));
    }
    let mut subsets: Vec<Tuple> = Vec::new();
    collect_subsets(cfg.k(), cfg.h(), &mut subsets);
    let mut total = vec![0.0f64; cfg.n() as usize];
    for tuple in &subsets {
        let array = build_weight_array(tuple, cfg)?;
        for (t, v) in total.iter_mut().zip(array.values()) {
            *t += v;
        }
    }
    let kfact = factorial_f64(cfg.k());
    let sum = chunked_sum(total.len(), |i| {
        let s = total[i] * kfact;
        s * s * s * s
    });
    let exp = 4 * cfg.k() as i32 + 4 * cfg.l() as i32;
    let ratio = sum / (cfg.n() as f64 * (cfg.n() as f64).ln().powi(exp));
    Ok(FourthMomentReport {
        n: cfg.n(),
        h: cfg.h(),
        k: cfg.k(),
        l: cfg.l(),
        r: cfg.r(),
        sum,
        ratio,
        tuples: subsets.len() as u64,
    })
}

fn collect_subsets(k: usize, h: u64, out: &mut Vec<Tuple>) {
    fn rec(current: &mut Vec<u64>, k: usize, h: u64, next: u64, out: &mut Vec<Tuple>) {
        if current.len() == k {
            out.push(Tuple::new(current.clone()).unwrap());
            return;
        }
        let remaining = (k - current.len()) as u64;
        let mut v = next;
        while v + remaining - 1 <= h {
            current.push(v);
            rec(current, k, h, v + 1, out);
            current.pop();
            v += 1;
        }
    }
    if h >= k as u64 {
        rec(&mut Vec::new(), k, h, 1, out);
    }
}
