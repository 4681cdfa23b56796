//! Empirical statistics of gaps between consecutive primes: normalized-gap
//! histograms, the exponential-law comparison, window counts and their exact
//! combinatorial inequality, prime-pair counts, and the sparsity ratio of
//! very small gaps.
//!
//! Conventions: a gap (p, q) with q the next prime after p belongs to a
//! range when p does, and its successor q may lie beyond the range top.
//! Threshold comparisons are `integer gap <= real threshold`, ties toward
//! inclusion.

use serde::Serialize;
use thiserror::Error;

use crate::sieve::{Sieve, SieveError};
use crate::tuples;
use crate::{Classify, ErrorClass};

/// Space past the range top searched for the final successor; the largest
/// gap below the global sieve cap is far smaller.
const GAP_LOOKAHEAD: u64 = 2048;

#[derive(Debug, Error)]
pub enum GapError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error("pair count {count} exceeds the sieve bound {bound} (implementation bug)")]
    SieveBoundViolated { count: u64, bound: f64 },
}

impl Classify for GapError {
    fn class(&self) -> ErrorClass {
        match self {
            GapError::Precondition(_) => ErrorClass::Precondition,
            GapError::Sieve(e) => e.class(),
            GapError::SieveBoundViolated { .. } => ErrorClass::Internal,
        }
    }
}

/// Streams consecutive-prime pairs (p, next prime after p) for every prime
/// p <= x, ascending, starting at p = 2. Segments are built in small
/// parallel batches and scanned in order.
fn for_each_gap<F: FnMut(u64, u64)>(sv: &Sieve, x: u64, mut f: F) -> Result<(), GapError> {
    if x < 3 {
        return Err(GapError::Precondition(format!("need x >= 3, got {x}")));
    }
    let hi = x + GAP_LOOKAHEAD + 1;
    let spans = sv.spans(2, hi);
    let mut prev: Option<u64> = None;
    for batch in spans.chunks(32) {
        let lo = batch[0].0;
        let seg_hi = batch[batch.len() - 1].1;
        let bits = sv.range_bits(lo, seg_hi)?;
        for q in bits.primes() {
            if let Some(p) = prev {
                if p > x {
                    return Ok(());
                }
                f(p, q);
            }
            prev = Some(q);
        }
    }
    match prev {
        Some(p) if p > x => Ok(()),
        _ => Err(GapError::Precondition(format!(
            "no successor within lookahead past {x}"
        ))),
    }
}

/// How gaps are normalized before binning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapNormalization {
    /// (q - p) / log p.
    ByLogP,
}

/// Histogram of normalized gaps over primes p in (2, x].
#[derive(Clone, Debug, Serialize)]
pub struct GapHistogram {
    pub x: u64,
    pub normalization: GapNormalization,
    /// Ascending positive edges; bin i covers (edge[i-1], edge[i]] with an
    /// implicit 0 on the left and a final overflow bin past the last edge.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_gaps: u64,
}

/// Bins (q - p)/log p over primes p in (2, x]. Edges must be strictly
/// increasing and positive; an empty edge list makes a single (0, inf) bin.
pub fn gap_histogram(x: u64, edges: &[f64]) -> Result<GapHistogram, GapError> {
    if x < 100 {
        return Err(GapError::Precondition(format!("need x >= 100, got {x}")));
    }
    if edges.iter().any(|e| !e.is_finite() || *e <= 0.0)
        || edges.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(GapError::Precondition(
            "edges must be finite, positive, strictly increasing".into(),
        ));
    }
    let mut counts = vec![0u64; edges.len() + 1];
    let mut total = 0u64;
    let sv = Sieve::new();
    for_each_gap(&sv, x, |p, q| {
        if p == 2 {
            return;
        }
        let t = (q - p) as f64 / (p as f64).ln();
        let bin = edges.partition_point(|&e| e < t);
        counts[bin] += 1;
        total += 1;
    })?;
    Ok(GapHistogram {
        x,
        normalization: GapNormalization::ByLogP,
        bin_edges: edges.to_vec(),
        counts,
        total_gaps: total,
    })
}

/// Number of primes p in (N, 2N] whose gap to the next prime is at most
/// eta log N.
pub fn small_gap_count(n: u64, eta: f64) -> Result<u64, GapError> {
    if !(eta > 0.0) {
        return Err(GapError::Precondition(format!("need eta > 0, got {eta}")));
    }
    let threshold = eta * (n as f64).ln();
    let sv = Sieve::new();
    let mut count = 0u64;
    for_each_gap(&sv, 2 * n, |p, q| {
        if p > n && (q - p) as f64 <= threshold {
            count += 1;
        }
    })?;
    Ok(count)
}

/// One row of the exponential-law table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExpLawRow {
    pub eta: f64,
    pub count: u64,
    pub fraction: f64,
    /// 1 - e^{-eta}, the conjectured limit.
    pub conjectured: f64,
    pub diff: f64,
}

/// For each eta: the fraction of primes p <= x with gap <= eta log p,
/// against 1 - e^{-eta}.
pub fn exponential_law_table(x: u64, etas: &[f64]) -> Result<Vec<ExpLawRow>, GapError> {
    if x < 10_000 {
        return Err(GapError::Precondition(format!("need x >= 1e4, got {x}")));
    }
    if etas.iter().any(|e| !(*e > 0.0)) {
        return Err(GapError::Precondition("every eta must be positive".into()));
    }
    let sv = Sieve::new();
    let mut counts = vec![0u64; etas.len()];
    let mut total = 0u64;
    for_each_gap(&sv, x, |p, q| {
        total += 1;
        let norm = (q - p) as f64 / (p as f64).ln();
        for (c, &eta) in counts.iter_mut().zip(etas) {
            if norm <= eta {
                *c += 1;
            }
        }
    })?;
    Ok(etas
        .iter()
        .zip(&counts)
        .map(|(&eta, &count)| {
            let fraction = count as f64 / total as f64;
            let conjectured = 1.0 - (-eta).exp();
            ExpLawRow {
                eta,
                count,
                fraction,
                conjectured,
                diff: fraction - conjectured,
            }
        })
        .collect())
}

/// Q(N, h) and the exact combinatorial inequality tying it to the count of
/// small gaps.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QCountReport {
    pub n: u64,
    pub h: u64,
    /// Number of N < n <= 2N with more than one prime in (n, n+h].
    pub q: u64,
    /// Gaps <= h with left endpoint in (N, 2N].
    pub inside_gaps: u64,
    /// Exact count of n attributable to gaps whose left endpoint lies past
    /// 2N (the right-boundary correction).
    pub boundary: u64,
    /// q <= h * inside_gaps + boundary, which holds unconditionally.
    pub check_34: bool,
}

/// Counts Q(N, h) by a sliding window and verifies the inequality with the
/// exact boundary term instead of an asymptotic error estimate: every
/// counted n yields a gap (p, q) with n < p, q <= n + h, so n lies in
/// [q - h, p); gaps with p <= 2N absorb fewer than h values of n each and
/// the rest are enumerated directly.
pub fn q_count(n: u64, h: u64) -> Result<QCountReport, GapError> {
    if h == 0 {
        return Err(GapError::Precondition("need h >= 1".into()));
    }
    let sv = Sieve::new();
    let bits = sv.range_bits(n + 1, 2 * n + h + 1)?;
    // prefix[i] = number of primes in (N, N + i]
    let len = (n + h) as usize;
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0u64);
    let mut acc = 0u64;
    for m in (n + 1)..=(2 * n + h) {
        if bits.is_prime(m) {
            acc += 1;
        }
        prefix.push(acc);
    }
    let mut q = 0u64;
    for i in 1..=n {
        // window (n0, n0 + h] for n0 = N + i
        if prefix[(i + h) as usize] - prefix[i as usize] > 1 {
            q += 1;
        }
    }

    // gaps (p, next) with gap <= h; left endpoints in (N, 2N] vs beyond
    let mut inside = 0u64;
    let mut boundary = 0u64;
    let primes: Vec<u64> = bits.primes().collect();
    for w in primes.windows(2) {
        let (p, nx) = (w[0], w[1]);
        if nx - p > h {
            continue;
        }
        if p <= 2 * n {
            inside += 1;
        } else {
            // n in [nx - h, p) intersected with (N, 2N]
            let lo = (nx.saturating_sub(h)).max(n + 1);
            let hi = (2 * n).min(p - 1);
            if lo <= hi {
                boundary += hi - lo + 1;
            }
        }
    }
    Ok(QCountReport {
        n,
        h,
        q,
        inside_gaps: inside,
        boundary,
        check_34: q <= h * inside + boundary,
    })
}

/// Prime-pair count over (N, 2N] with its singular-series benchmark.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairCountReport {
    pub n: u64,
    pub h1: u64,
    pub h2: u64,
    pub count: u64,
    /// Singular series of {h1, h2}; depends only on |h2 - h1|.
    pub singular: f64,
    /// count / (S N / log(1.5 N)^2); NaN when S = 0 (odd difference). The
    /// representative log is taken at the range midpoint.
    pub hl_ratio: f64,
    /// The sieve benchmark 2^2 2! S N with a desk-scale slack of 0.5.
    pub sieve_bound: f64,
}

/// Counts n in (N, 2N] with n + h1 and n + h2 both prime.
pub fn prime_pair_count(n: u64, h1: u64, h2: u64) -> Result<PairCountReport, GapError> {
    if h1 == h2 {
        return Err(GapError::Precondition("need h1 != h2".into()));
    }
    let (lo_off, hi_off) = (h1.min(h2), h1.max(h2));
    let sv = Sieve::new();
    let bits = sv.range_bits(n + 1 + lo_off, 2 * n + hi_off + 1)?;
    let mut count = 0u64;
    for m in (n + 1)..=(2 * n) {
        if bits.is_prime(m + h1) && bits.is_prime(m + h2) {
            count += 1;
        }
    }
    let singular = tuples::twin_singular(hi_off - lo_off);
    let log_mid = (1.5 * n as f64).ln();
    let hl_ratio = count as f64 / (singular * n as f64 / (log_mid * log_mid));
    let sieve_bound = 4.0 * 2.0 * singular * n as f64 * 1.5;
    if singular > 0.0 && count as f64 > sieve_bound {
        return Err(GapError::SieveBoundViolated {
            count,
            bound: sieve_bound,
        });
    }
    Ok(PairCountReport {
        n,
        h1,
        h2,
        count,
        singular,
        hl_ratio,
        sieve_bound,
    })
}

/// Density of gaps <= h against the ceiling min(h / log x, 1).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SparsityReport {
    pub x: u64,
    pub h: f64,
    pub count: u64,
    pub pi_x: u64,
    /// count / (min(h / log x, 1) pi(x)).
    pub ratio: f64,
}

/// Ratio of #{p <= x : gap <= h} to min(h/log x, 1) pi(x).
///
/// The h > 2 regime is where the ceiling carries content (no gap beats 1
/// past the first pair); smaller thresholds are still counted.
pub fn sparsity_ratio(x: u64, h: f64) -> Result<SparsityReport, GapError> {
    if !(h > 0.0) {
        return Err(GapError::Precondition(format!("need h > 0, got {h}")));
    }
    let sv = Sieve::new();
    let mut count = 0u64;
    let mut pi_x = 0u64;
    for_each_gap(&sv, x, |p, q| {
        pi_x += 1;
        if (q - p) as f64 <= h {
            count += 1;
        }
    })?;
    let denom = (h / (x as f64).ln()).min(1.0) * pi_x as f64;
    Ok(SparsityReport {
        x,
        h,
        count,
        pi_x,
        ratio: count as f64 / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::is_prime_u64;

    /// Oracle: consecutive prime pairs by trial division.
    fn oracle_gaps(x: u64) -> Vec<(u64, u64)> {
        let mut primes: Vec<u64> = (2..=x + 300).filter(|&n| is_prime_u64(n)).collect();
        primes.truncate(primes.partition_point(|&p| p <= x) + 1);
        primes.windows(2).map(|w| (w[0], w[1])).collect()
    }

    #[test]
    fn histogram_hand_enumeration_x30() {
        // would require x >= 100; check the convention through the oracle at
        // a valid x instead, then pin the x = 30 gap list directly
        let gaps = oracle_gaps(30);
        let from3: Vec<(u64, u64)> = gaps.into_iter().filter(|&(p, _)| p > 2).collect();
        assert_eq!(from3.len(), 9);
        assert_eq!(from3[0], (3, 5));
        assert_eq!(from3[8], (29, 31));
    }

    #[test]
    fn histogram_single_bin_collects_everything() {
        let hist = gap_histogram(1000, &[]).unwrap();
        assert_eq!(hist.counts.len(), 1);
        assert_eq!(hist.counts[0], hist.total_gaps);
        // primes in (2, 1000]: pi(1000) - 1 = 167
        assert_eq!(hist.total_gaps, 167);
    }

    #[test]
    fn histogram_mass_conserved_under_refinement() {
        let coarse = gap_histogram(10_000, &[1.0, 2.0]).unwrap();
        let fine = gap_histogram(10_000, &[0.25, 0.5, 1.0, 1.5, 2.0, 3.0]).unwrap();
        assert_eq!(coarse.total_gaps, fine.total_gaps);
        assert_eq!(
            coarse.counts.iter().sum::<u64>(),
            fine.counts.iter().sum::<u64>()
        );
        // refined bins regroup to the coarse ones
        let upto1: u64 = fine.counts[..3].iter().sum();
        assert_eq!(upto1, coarse.counts[0]);
    }

    #[test]
    fn histogram_counts_match_oracle() {
        let edges = [0.5, 1.0, 2.0];
        let hist = gap_histogram(5000, &edges).unwrap();
        let mut counts = vec![0u64; 4];
        for (p, q) in oracle_gaps(5000) {
            if p == 2 {
                continue;
            }
            let t = (q - p) as f64 / (p as f64).ln();
            counts[edges.partition_point(|&e| e < t)] += 1;
        }
        assert_eq!(hist.counts, counts);
    }

    #[test]
    fn malformed_edges_rejected() {
        assert!(gap_histogram(1000, &[1.0, 1.0]).is_err());
        assert!(gap_histogram(1000, &[-1.0]).is_err());
        assert!(gap_histogram(50, &[1.0]).is_err());
    }

    #[test]
    fn small_gap_count_examples() {
        // h = 0.01 ln 100 ~ 0.046: no integer gap fits
        assert_eq!(small_gap_count(100, 0.01).unwrap(), 0);
        // h = 0.5 ln 100 ~ 2.30: the seven twin pairs in (100, 200]
        assert_eq!(small_gap_count(100, 0.5).unwrap(), 7);
    }

    #[test]
    fn small_gap_count_monotone_and_matches_oracle() {
        let n = 3000u64;
        let mut last = 0;
        for eta in [0.05, 0.1, 0.3, 0.5, 1.0, 2.0] {
            let c = small_gap_count(n, eta).unwrap();
            assert!(c >= last);
            last = c;
            // double-loop oracle
            let threshold = eta * (n as f64).ln();
            let mut expect = 0u64;
            for p in (n + 1)..=(2 * n) {
                if !is_prime_u64(p) {
                    continue;
                }
                let mut q = p + 1;
                while !is_prime_u64(q) {
                    q += 1;
                }
                if (q - p) as f64 <= threshold {
                    expect += 1;
                }
            }
            assert_eq!(c, expect, "eta = {eta}");
        }
    }

    #[test]
    fn explaw_fraction_monotone_and_bounded() {
        let etas = [0.25, 0.5, 1.0, 2.0, 50.0];
        let rows = exponential_law_table(100_000, &etas).unwrap();
        let mut last = 0.0;
        for row in &rows {
            assert!(row.fraction >= last && row.fraction <= 1.0);
            last = row.fraction;
        }
        // every gap below 1e5 is under 50 log p
        assert_eq!(rows[4].fraction, 1.0);
    }

    #[test]
    fn q_count_trivial_h1() {
        let rep = q_count(1000, 1).unwrap();
        assert_eq!(rep.q, 0);
        assert!(rep.check_34);
    }

    #[test]
    fn q_count_brute_force_n100() {
        let rep = q_count(100, 10).unwrap();
        // independent brute force
        let mut expect = 0u64;
        for n in 101..=200u64 {
            let primes = ((n + 1)..=(n + 10)).filter(|&m| is_prime_u64(m)).count();
            if primes > 1 {
                expect += 1;
            }
        }
        assert_eq!(rep.q, expect);
        assert_eq!(rep.q, 72);
        assert!(rep.check_34);
    }

    #[test]
    fn q_count_inequality_holds_across_configs() {
        for (n, h) in [(1_000u64, 5u64), (10_000, 10), (10_000, 25), (100_000, 20)] {
            let rep = q_count(n, h).unwrap();
            assert!(rep.check_34, "N = {n}, h = {h}: {rep:?}");
        }
    }

    #[test]
    fn pair_count_twins() {
        let rep = prime_pair_count(10_000, 0, 2).unwrap();
        // oracle
        let expect = (10_001..=20_000u64)
            .filter(|&m| is_prime_u64(m) && is_prime_u64(m + 2))
            .count() as u64;
        assert_eq!(rep.count, expect);
        assert!(rep.hl_ratio > 0.5 && rep.hl_ratio < 2.0, "{}", rep.hl_ratio);
        assert!((rep.count as f64) <= rep.sieve_bound);
    }

    #[test]
    fn pair_count_odd_difference() {
        let rep = prime_pair_count(10_000, 0, 3).unwrap();
        assert!(rep.count <= 1);
        assert_eq!(rep.singular, 0.0);
        assert!(rep.hl_ratio.is_nan());
    }

    #[test]
    fn pair_count_translation_sanity() {
        let c = 6u64;
        let a = prime_pair_count(10_000, 0, 2).unwrap();
        let b = prime_pair_count(10_000, c, 2 + c).unwrap();
        let diff = a.count.abs_diff(b.count);
        assert!(diff <= c, "counts {} vs {}", a.count, b.count);
    }

    #[test]
    fn sparsity_huge_h_gives_one() {
        let rep = sparsity_ratio(10_000, 10_000.0).unwrap();
        assert_eq!(rep.count, rep.pi_x);
        assert_eq!(rep.ratio, 1.0);
        assert_eq!(rep.pi_x, 1229);
    }

    #[test]
    fn sparsity_small_h_recorded() {
        let rep = sparsity_ratio(100_000, 3.0).unwrap();
        assert!(rep.ratio > 0.0 && rep.ratio.is_finite());
        // gaps of 1 or 2: the twin count dominates
        assert!(rep.count < rep.pi_x / 2);
    }
}
