//! Segmented sieve of Eratosthenes: primality bits, smallest-prime-factor
//! tables, prime counting and Chebyshev theta sums.
//!
//! Range operations partition `[lo, hi)` into fixed-length segments
//! (independent of thread count), sieve each segment on its own, and merge
//! per-segment results in ascending order. Float accumulations use
//! compensated summation with that fixed merge order, so every result is
//! bit-identical across reruns and across parallelism degrees.
//!
//! Segments can be cached on disk (see [`cache`]); the cache is purely an
//! optimization and never changes results.

pub mod cache;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::util::Kahan;
use crate::{Classify, ErrorClass};

/// Default segment length in integers; the bit array then occupies 512 KiB,
/// which keeps the inner marking loops inside L2.
pub const DEFAULT_SEGMENT_CAP: u64 = 1 << 22;

/// Hard upper end for any sieved range.
pub const GLOBAL_SIEVE_CAP: u64 = 10_000_000_000;

/// spf tables hold `u32` entries, so they are only available below 2^32.
pub const SPF_VALUE_CAP: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("invalid range: need 0 < lo < hi, got lo = {lo}, hi = {hi}")]
    BadRange { lo: u64, hi: u64 },
    #[error("segment [{lo}, {hi}) longer than the segment cap {cap}")]
    SegmentTooLong { lo: u64, hi: u64, cap: u64 },
    #[error("range end {hi} exceeds the global sieve cap {cap}")]
    RangeTooLarge { hi: u64, cap: u64 },
    #[error("spf entries are 32-bit; segment end {hi} exceeds 2^32")]
    SpfRange { hi: u64 },
    #[error("cache i/o on {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Classify for SieveError {
    fn class(&self) -> ErrorClass {
        match self {
            SieveError::CacheIo { .. } => ErrorClass::Io,
            _ => ErrorClass::Precondition,
        }
    }
}

/// Primality (and optionally smallest-prime-factor) data for `[lo, hi)`.
///
/// Bit `i` of the packed words is set iff `lo + i` is prime. When present,
/// `spf[i]` is the least prime factor of `lo + i` (equal to `lo + i` itself
/// exactly when `lo + i` is prime; the entry for 1 is 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SieveSegment {
    lo: u64,
    hi: u64,
    words: Vec<u64>,
    spf: Option<Vec<u32>>,
}

impl SieveSegment {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects lo >= hi
    }

    pub fn has_spf(&self) -> bool {
        self.spf.is_some()
    }

    /// Primality of the i-th value of the segment.
    #[inline]
    pub fn bit(&self, i: u64) -> bool {
        debug_assert!(i < self.len());
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    /// Primality of `n`; `n` must lie in `[lo, hi)`.
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n >= self.lo && n < self.hi, "value {n} outside segment");
        self.bit(n - self.lo)
    }

    /// Least prime factor of `n`, if the segment carries spf data.
    pub fn spf_of(&self, n: u64) -> Option<u64> {
        assert!(n >= self.lo && n < self.hi, "value {n} outside segment");
        self.spf.as_ref().map(|t| t[(n - self.lo) as usize] as u64)
    }

    /// Primes of the segment in ascending order.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        let lo = self.lo;
        let len = self.len();
        self.words.iter().enumerate().flat_map(move |(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                while bits != 0 {
                    let b = bits.trailing_zeros() as u64;
                    bits &= bits - 1;
                    let i = w as u64 * 64 + b;
                    if i < len {
                        return Some(lo + i);
                    }
                }
                None
            })
        })
    }

    /// Number of primes in the segment.
    pub fn prime_count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Sum of `log p` over the primes of the segment, ascending.
    pub fn theta(&self) -> f64 {
        let mut acc = Kahan::new();
        for p in self.primes() {
            acc.add((p as f64).ln());
        }
        acc.value()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn spf_table(&self) -> Option<&[u32]> {
        self.spf.as_deref()
    }
}

/// Simple in-memory sieve; the base-prime supplier for segments and the
/// reference for small bounds.
pub fn simple_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    primes
}

/// Deterministic trial-division primality; fine for point queries.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    if n % 3 == 0 {
        return n == 3;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

fn sieve_words(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    let len = hi - lo;
    let nwords = ((len + 63) / 64) as usize;
    let mut words = vec![!0u64; nwords];
    // clear bits past the end
    let tail = len % 64;
    if tail != 0 {
        words[nwords - 1] = (1u64 << tail) - 1;
    }
    let clear = |words: &mut [u64], i: u64| {
        words[(i / 64) as usize] &= !(1u64 << (i % 64));
    };
    if lo == 1 {
        clear(&mut words, 0);
    }
    for &p in base {
        if p * p >= hi {
            break;
        }
        let first = p * p.max(lo.div_ceil(p));
        let mut m = first;
        while m < hi {
            clear(&mut words, m - lo);
            m += p;
        }
    }
    words
}

fn sieve_spf(lo: u64, hi: u64, base: &[u64]) -> Vec<u32> {
    let len = (hi - lo) as usize;
    let mut spf = vec![0u32; len];
    for &p in base {
        if p * p >= hi {
            break;
        }
        let mut m = p * lo.div_ceil(p);
        while m < hi {
            let e = &mut spf[(m - lo) as usize];
            if *e == 0 {
                *e = p as u32;
            }
            m += p;
        }
    }
    for (i, e) in spf.iter_mut().enumerate() {
        if *e == 0 {
            // prime above the base bound, or 1
            *e = (lo + i as u64) as u32;
        }
    }
    spf
}

/// Sieving context: segment cap and optional disk cache.
#[derive(Clone, Debug)]
pub struct Sieve {
    segment_cap: u64,
    cache_dir: Option<PathBuf>,
}

impl Default for Sieve {
    fn default() -> Self {
        Self::new()
    }
}

impl Sieve {
    pub fn new() -> Self {
        Sieve {
            segment_cap: DEFAULT_SEGMENT_CAP,
            cache_dir: None,
        }
    }

    /// Cap rounded up to a multiple of 64 so segment words concatenate
    /// cleanly into range-wide bitsets.
    pub fn with_segment_cap(mut self, cap: u64) -> Self {
        self.segment_cap = cap.max(64).div_ceil(64) * 64;
        self
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn segment_cap(&self) -> u64 {
        self.segment_cap
    }

    fn validate(&self, lo: u64, hi: u64) -> Result<(), SieveError> {
        if lo == 0 || lo >= hi {
            return Err(SieveError::BadRange { lo, hi });
        }
        if hi > GLOBAL_SIEVE_CAP {
            return Err(SieveError::RangeTooLarge {
                hi,
                cap: GLOBAL_SIEVE_CAP,
            });
        }
        Ok(())
    }

    /// Build (or load from cache) one segment. `hi - lo` must be within the
    /// segment cap.
    pub fn segment(&self, lo: u64, hi: u64, with_spf: bool) -> Result<SieveSegment, SieveError> {
        self.validate(lo, hi)?;
        if hi - lo > self.segment_cap {
            return Err(SieveError::SegmentTooLong {
                lo,
                hi,
                cap: self.segment_cap,
            });
        }
        if with_spf && hi > SPF_VALUE_CAP {
            return Err(SieveError::SpfRange { hi });
        }
        if let Some(dir) = &self.cache_dir {
            if let Some(seg) = cache::load_segment(dir, lo, hi, with_spf)? {
                return Ok(seg);
            }
        }
        let base = simple_primes((hi - 1).isqrt());
        let words = sieve_words(lo, hi, &base);
        let spf = with_spf.then(|| sieve_spf(lo, hi, &base));
        let seg = SieveSegment { lo, hi, words, spf };
        if let Some(dir) = &self.cache_dir {
            cache::store_segment(dir, &seg)?;
        }
        Ok(seg)
    }

    /// The fixed partition of `[lo, hi)` into cap-sized spans.
    pub fn spans(&self, lo: u64, hi: u64) -> Vec<(u64, u64)> {
        let mut spans = Vec::new();
        let mut a = lo;
        while a < hi {
            let b = hi.min(a + self.segment_cap);
            spans.push((a, b));
            a = b;
        }
        spans
    }

    /// Map every segment of `[lo, hi)` through `f` in parallel; results come
    /// back in ascending segment order.
    pub fn map_segments<T, F>(
        &self,
        lo: u64,
        hi: u64,
        with_spf: bool,
        f: F,
    ) -> Result<Vec<T>, SieveError>
    where
        T: Send,
        F: Fn(SieveSegment) -> T + Sync,
    {
        self.validate(lo, hi)?;
        self.spans(lo, hi)
            .into_par_iter()
            .map(|(a, b)| self.segment(a, b, with_spf).map(&f))
            .collect()
    }

    /// pi(x).
    pub fn prime_count(&self, x: u64) -> Result<u64, SieveError> {
        if x < 2 {
            return Ok(0);
        }
        let counts = self.map_segments(2, x + 1, false, |s| s.prime_count())?;
        Ok(counts.into_iter().sum())
    }

    /// Sum of `log n` over primes `n <= x`; per-segment compensated sums
    /// merged left to right.
    pub fn theta_sum(&self, x: u64) -> Result<f64, SieveError> {
        if x < 2 {
            return Ok(0.0);
        }
        let parts = self.map_segments(2, x + 1, false, |s| s.theta())?;
        let mut acc = Kahan::new();
        for part in parts {
            acc.add(part);
        }
        Ok(acc.value())
    }

    /// All primes in `[lo, hi)`, ascending.
    pub fn primes_in(&self, lo: u64, hi: u64) -> Result<Vec<u64>, SieveError> {
        let chunks = self.map_segments(lo, hi, false, |s| s.primes().collect::<Vec<_>>())?;
        Ok(chunks.concat())
    }

    /// One packed primality bitset for `[lo, hi)`, assembled from segments.
    pub fn range_bits(&self, lo: u64, hi: u64) -> Result<RangeBits, SieveError> {
        let segs = self.map_segments(lo, hi, false, |s| s)?;
        let len = hi - lo;
        let mut words = vec![0u64; ((len + 63) / 64) as usize];
        for seg in &segs {
            let off = seg.lo() - lo;
            debug_assert_eq!(off % 64, 0, "segment cap keeps spans word-aligned");
            let w0 = (off / 64) as usize;
            words[w0..w0 + seg.words().len()].copy_from_slice(seg.words());
        }
        Ok(RangeBits { lo, len, words })
    }
}

/// A packed primality bitset over a contiguous range, for random access.
#[derive(Clone, Debug)]
pub struct RangeBits {
    lo: u64,
    len: u64,
    words: Vec<u64>,
}

impl RangeBits {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n >= self.lo && n < self.lo + self.len, "value {n} outside range bits");
        let i = n - self.lo;
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    /// Primes of the range in ascending order.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        let lo = self.lo;
        let len = self.len;
        self.words.iter().enumerate().flat_map(move |(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                while bits != 0 {
                    let b = bits.trailing_zeros() as u64;
                    bits &= bits - 1;
                    let i = w as u64 * 64 + b;
                    if i < len {
                        return Some(lo + i);
                    }
                }
                None
            })
        })
    }
}

/// All primes up to `x` in ascending order, in factored ("support") form.
///
/// The primorial itself is never multiplied out; its factored form is what
/// rough-number filtering and singular-series tails consume.
#[derive(Clone, Debug)]
pub struct PrimorialSupport {
    bound: u64,
    primes: Vec<u64>,
}

impl PrimorialSupport {
    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// log of the primorial, i.e. theta(bound).
    pub fn log_primorial(&self) -> f64 {
        let mut acc = Kahan::new();
        for &p in &self.primes {
            acc.add((p as f64).ln());
        }
        acc.value()
    }
}

/// Support of the primorial of `x`; `x >= 2`.
pub fn primorial_support(x: u64) -> PrimorialSupport {
    assert!(x >= 2, "primorial support needs x >= 2");
    PrimorialSupport {
        bound: x,
        primes: simple_primes(x),
    }
}

/// One segment over `[lo, hi)` using the default context.
pub fn build_segment(lo: u64, hi: u64, with_spf: bool) -> Result<SieveSegment, SieveError> {
    Sieve::new().segment(lo, hi, with_spf)
}

/// pi(x) with the default context. Panics if `x` exceeds the global cap.
pub fn prime_count(x: u64) -> u64 {
    Sieve::new().prime_count(x).expect("x within global sieve cap")
}

/// log n for prime n, 0 otherwise.
pub fn theta_point(n: u64) -> f64 {
    if is_prime_u64(n) {
        (n as f64).ln()
    } else {
        0.0
    }
}

/// Sum of theta over the window (n, n+h].
pub fn theta_window(n: u64, h: u64) -> f64 {
    let mut acc = Kahan::new();
    for h0 in 1..=h {
        acc.add(theta_point(n + h0));
    }
    acc.value()
}
