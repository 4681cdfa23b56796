//! Exact-rational verification of the closed-form identities behind the
//! weight moments, the quadruple-count formula, and the parameter selectors
//! with their explicit constants.
//!
//! Every check here is exact: no floating comparison participates in an
//! assertion, floats appear only in rendered reports.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::rational::{binomial, factorial, rat_int, Rational, RationalPoly};
use crate::{Classify, ErrorClass};

/// Search ceiling for the conditional selector.
pub const CONDITIONAL_MAX_K: u64 = 100_000;

/// Cap on l in the selectors (l^4 must stay inside u64 comfortably).
const SELECTOR_MAX_L: u64 = 10_000;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("search budget exceeded: {0}")]
    Budget(String),
    #[error("alpha = -1 is a pole of the closed form")]
    AlphaPole,
    #[error("identity violated: {0}")]
    IdentityViolation(String),
    #[error("no (k, l) with k <= {max_k} satisfies the positivity criterion; theta too close to 1/2")]
    SearchExhausted { max_k: u64 },
    #[error("bracket assertion failed: {0}")]
    BracketAssertion(String),
}

impl Classify for AnalyticError {
    fn class(&self) -> ErrorClass {
        match self {
            AnalyticError::Precondition(_) | AnalyticError::AlphaPole => ErrorClass::Precondition,
            AnalyticError::Budget(_) | AnalyticError::SearchExhausted { .. } => ErrorClass::Budget,
            AnalyticError::IdentityViolation(_) | AnalyticError::BracketAssertion(_) => {
                ErrorClass::Internal
            }
        }
    }
}

fn rat_pow(base: &Rational, e: u64) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e {
        acc *= base;
    }
    acc
}

fn big_rat(b: BigInt) -> Rational {
    Rational::from_integer(b)
}

/// Both evaluations of the l-th series coefficient: the closed binomial sum
/// and the direct truncated-series extraction.
#[derive(Clone, Debug)]
pub struct TQ1 {
    pub closed: Rational,
    pub series: Rational,
}

/// Closed form `(1+a)^{k+l} sum_{m=0}^{l} C(2l-m, l) C(k+m-1, m) (-a)^m`
/// against the coefficient of x^l in `(1+a+x)^{k+2l} (1+x)^{-k}`, both
/// exact. They must agree; the pair is returned for reporting.
pub fn t_q1(k: u64, l: u64, alpha: &Rational) -> Result<TQ1, AnalyticError> {
    check_k_l(k, l)?;
    if *alpha == rat_int(-1) {
        return Err(AnalyticError::AlphaPole);
    }
    let one_plus = Rational::one() + alpha;

    let mut sum = Rational::zero();
    let mut neg_pow = Rational::one(); // (-alpha)^m
    for m in 0..=l {
        let c = binomial(2 * l - m, l) * binomial(k + m - 1, m);
        sum += big_rat(c) * &neg_pow;
        neg_pow *= -alpha.clone();
    }
    let closed = rat_pow(&one_plus, k + l) * sum;

    // series route: truncate both factors at degree l and convolve
    let ld = l as usize;
    // (1+a+x)^{k+2l} = sum_j C(k+2l, j) (1+a)^{k+2l-j} x^j
    let a_poly = RationalPoly::new(
        (0..=ld)
            .map(|j| big_rat(binomial(k + 2 * l, j as u64)) * rat_pow(&one_plus, k + 2 * l - j as u64))
            .collect(),
    );
    // (1+x)^{-k} = sum_j (-1)^j C(k+j-1, j) x^j
    let b_poly = RationalPoly::new(
        (0..=ld)
            .map(|j| {
                let c = big_rat(binomial(k + j as u64 - 1, j as u64));
                if j % 2 == 1 {
                    -c
                } else {
                    c
                }
            })
            .collect(),
    );
    let series = a_poly.mul_truncated(&b_poly, ld).coeff(ld);

    if closed != series {
        return Err(AnalyticError::IdentityViolation(format!(
            "t_q1({k}, {l}, {alpha}): closed {closed} != series {series}"
        )));
    }
    Ok(TQ1 { closed, series })
}

fn check_k_l(k: u64, l: u64) -> Result<(), AnalyticError> {
    if k < 1 {
        return Err(AnalyticError::Precondition("k must be >= 1".into()));
    }
    if l >= k {
        return Err(AnalyticError::Precondition(format!(
            "l must satisfy 0 <= l < k, got l = {l}, k = {k}"
        )));
    }
    Ok(())
}

/// The exact alpha-expansion of the closed form to second order.
#[derive(Clone, Debug)]
pub struct ExpansionCoeffs {
    pub c0: Rational,
    pub c1: Rational,
    pub c2: Rational,
    /// The quadratic coefficient formula
    /// `k^2/8 + kl/2 - 3k/8 + l^2/2 - l/2 - k(k+1)/(8(2l-1))`,
    /// defined for l >= 1.
    pub k_formula: Option<Rational>,
}

/// Expands the closed form in alpha exactly to degree 2 and verifies
/// c0 = C(2l, l) and, for l >= 1, c1/c0 = k/2 + l and c2/c0 = the quadratic
/// formula.
///
/// Both ratio identities need l >= 1: the linear one rests on
/// C(2l-1, l) = C(2l, l)/2 and the quadratic one has the 2l - 1 denominator.
/// At l = 0 the closed form is just (1+a)^k, whose exact linear coefficient
/// is k (not k/2); the coefficients are returned without the ratio
/// assertions.
pub fn expansion_coeffs(k: u64, l: u64) -> Result<ExpansionCoeffs, AnalyticError> {
    check_k_l(k, l)?;
    // (1+x)^{k+l} * sum_m C(2l-m, l) C(k+m-1, m) (-x)^m, truncated at x^2
    let lead = RationalPoly::one_plus_x().pow_truncated(k + l, 2);
    let tail = RationalPoly::new(
        (0..=l.min(2) as usize)
            .map(|m| {
                let c = big_rat(binomial(2 * l - m as u64, l) * binomial(k + m as u64 - 1, m as u64));
                if m % 2 == 1 {
                    -c
                } else {
                    c
                }
            })
            .collect(),
    );
    let p = lead.mul_truncated(&tail, 2);
    let (c0, c1, c2) = (p.coeff(0), p.coeff(1), p.coeff(2));

    let expect_c0 = big_rat(binomial(2 * l, l));
    if c0 != expect_c0 {
        return Err(AnalyticError::IdentityViolation(format!(
            "expansion({k}, {l}): c0 = {c0}, expected C(2l, l) = {expect_c0}"
        )));
    }
    if l >= 1 {
        let expect_ratio1 = rat_int(k as i64) / rat_int(2) + rat_int(l as i64);
        if c1.clone() / c0.clone() != expect_ratio1 {
            return Err(AnalyticError::IdentityViolation(format!(
                "expansion({k}, {l}): c1/c0 = {}, expected k/2 + l = {expect_ratio1}",
                c1.clone() / c0.clone()
            )));
        }
    }
    let k_formula = if l >= 1 {
        let kq = rat_int(k as i64);
        let lq = rat_int(l as i64);
        let f = &kq * &kq / rat_int(8) + &kq * &lq / rat_int(2) - rat_int(3) * &kq / rat_int(8)
            + &lq * &lq / rat_int(2)
            - &lq / rat_int(2)
            - &kq * (&kq + rat_int(1)) / (rat_int(8) * (rat_int(2) * &lq - rat_int(1)));
        if c2.clone() / c0.clone() != f {
            return Err(AnalyticError::IdentityViolation(format!(
                "expansion({k}, {l}): c2/c0 = {}, formula gives {f}",
                c2.clone() / c0.clone()
            )));
        }
        Some(f)
    } else {
        None
    };
    Ok(ExpansionCoeffs { c0, c1, c2, k_formula })
}

/// Exact quadruple count
/// `k!^2 (k+r)! (k^4 + 3k^3 + (3r+2)k^2 + 4rk + r^2) / (r!^2 (k+2-r)!)`;
/// the division must come out exact.
pub fn d_formula(k: u64, r: u64) -> Result<BigInt, AnalyticError> {
    if k < 1 {
        return Err(AnalyticError::Precondition("k must be >= 1".into()));
    }
    if r > k + 2 {
        return Err(AnalyticError::Precondition(format!(
            "r must lie in [0, k+2], got r = {r}, k = {k}"
        )));
    }
    let kk = BigInt::from(k);
    let rr = BigInt::from(r);
    let poly = kk.pow(4) + 3 * kk.pow(3) + (3 * &rr + 2) * kk.pow(2) + 4 * &rr * &kk + rr.pow(2);
    let kfact = factorial(k);
    let num = &kfact * &kfact * factorial(k + r) * poly;
    let den = {
        let rfact = factorial(r);
        &rfact * &rfact * factorial(k + 2 - r)
    };
    if (&num % &den) != BigInt::zero() {
        return Err(AnalyticError::IdentityViolation(format!(
            "D({k}, {r}) is not an integer: {num} / {den}"
        )));
    }
    let d: BigInt = num / den;
    if !d.is_positive() {
        return Err(AnalyticError::IdentityViolation(format!(
            "D({k}, {r}) = {d} is not positive"
        )));
    }
    Ok(d)
}

/// Enumeration conventions for the quadruple count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QuadrupleConvention {
    /// (h', h'') ordered, h' = h'' allowed, each tuple in all k! orders.
    OrderedWithRepeats,
    /// (h', h'') ordered and distinct.
    OrderedDistinct,
    /// {h', h''} unordered (repeats collapse), tuples still ordered.
    UnorderedPair,
}

/// Exhaustive count of quadruples (h', h'', tuple1, tuple2) covering a fixed
/// representative set, under each convention.
#[derive(Clone, Debug, Serialize)]
pub struct DOracleReport {
    pub k: u64,
    pub r: u64,
    pub formula: String,
    pub ordered_with_repeats: u64,
    pub ordered_distinct: u64,
    pub unordered_pair: u64,
    /// Which convention reproduces the formula, if any.
    pub matching: Option<QuadrupleConvention>,
    /// Number of distinct representative sets checked (counts agreed).
    pub representatives: u64,
}

/// Counts quadruples whose union is exactly a fixed (k+r)-subset of [1, h],
/// with k!^2 ordering multiplicity on the two k-subsets. The count must not
/// depend on the representative; several are tried.
pub fn d_oracle(k: u64, r: u64, h: u64) -> Result<DOracleReport, AnalyticError> {
    if !(2..=3).contains(&k) {
        return Err(AnalyticError::Budget(format!(
            "oracle enumeration supports k in {{2, 3}}, got {k}"
        )));
    }
    if r > k + 2 {
        return Err(AnalyticError::Precondition(format!(
            "r must lie in [0, k+2], got r = {r}, k = {k}"
        )));
    }
    if h < (k + r) {
        return Err(AnalyticError::Precondition(format!(
            "h = {h} too small for a representative of size {}",
            k + r
        )));
    }

    // a few distinct representatives inside [1, h]
    let mut reps: Vec<Vec<u64>> = vec![(1..=k + r).collect()];
    if h > k + r {
        reps.push((h - (k + r) + 1..=h).collect());
        let mut spread: Vec<u64> = (1..=k + r - 1).collect();
        spread.push(h);
        reps.push(spread);
    }

    let counts: Vec<(u64, u64, u64)> = reps.iter().map(|rep| count_quadruples(k, rep)).collect();
    for w in counts.windows(2) {
        if w[0] != w[1] {
            return Err(AnalyticError::IdentityViolation(format!(
                "representative dependence: {:?} vs {:?}",
                w[0], w[1]
            )));
        }
    }
    let (ordered_with_repeats, ordered_distinct, unordered_pair) = counts[0];
    let formula = d_formula(k, r)?;
    let as_big = |v: u64| BigInt::from(v);
    let matching = if as_big(ordered_with_repeats) == formula {
        Some(QuadrupleConvention::OrderedWithRepeats)
    } else if as_big(ordered_distinct) == formula {
        Some(QuadrupleConvention::OrderedDistinct)
    } else if as_big(unordered_pair) == formula {
        Some(QuadrupleConvention::UnorderedPair)
    } else {
        None
    };
    Ok(DOracleReport {
        k,
        r,
        formula: formula.to_string(),
        ordered_with_repeats,
        ordered_distinct,
        unordered_pair,
        matching,
        representatives: counts.len() as u64,
    })
}

fn count_quadruples(k: u64, rep: &[u64]) -> (u64, u64, u64) {
    let size = rep.len();
    let full: u32 = (1u32 << size) - 1;
    // all k-subsets of rep as bitmasks
    let subsets: Vec<u32> = (0..=full)
        .filter(|m| m.count_ones() == k as u32)
        .collect();
    let kfact: u64 = (1..=k).product();
    let weight = kfact * kfact;
    let (mut with_repeats, mut distinct, mut unordered) = (0u64, 0u64, 0u64);
    for &m1 in &subsets {
        for &m2 in &subsets {
            let base = m1 | m2;
            for i in 0..size {
                for j in 0..size {
                    if base | (1 << i) | (1 << j) == full {
                        with_repeats += weight;
                        if i != j {
                            distinct += weight;
                        }
                        if i <= j {
                            unordered += weight;
                        }
                    }
                }
            }
        }
    }
    (with_repeats, distinct, unordered)
}

/// Exact truth of
/// `sum_{r=0}^{k+2} (k+r)! D(k,r) u^{k+r} <= (2k+2)!^2 u^k (1+u)^{k+2}`.
pub fn check_315(k: u64, u: &Rational) -> Result<bool, AnalyticError> {
    if !(1..=6).contains(&k) {
        return Err(AnalyticError::Precondition(format!(
            "k must lie in [1, 6], got {k}"
        )));
    }
    if !u.is_positive() {
        return Err(AnalyticError::Precondition(format!("u must be > 0, got {u}")));
    }
    let mut lhs = Rational::zero();
    for r in 0..=k + 2 {
        let coeff = big_rat(factorial(k + r) * d_formula(k, r)?);
        lhs += coeff * rat_pow(u, k + r);
    }
    let f = factorial(2 * k + 2);
    let rhs = big_rat(&f * &f) * rat_pow(u, k) * rat_pow(&(Rational::one() + u), k + 2);
    Ok(lhs <= rhs)
}

/// The positivity bracket
/// `k/(k+2l+1) * 2(2l+1)/(l+1) * rho + eta - 1 + err`,
/// with `err` the caller's stand-in for the k^3 delta^2 error term.
pub fn bracket(k: u64, l: u64, rho: f64, eta: f64, err: f64) -> f64 {
    let kf = k as f64;
    let lf = l as f64;
    kf / (kf + 2.0 * lf + 1.0) * (2.0 * (2.0 * lf + 1.0) / (lf + 1.0)) * rho + eta - 1.0 + err
}

/// Parameter selection report; `extras` carries the regime's named
/// constants. BTreeMap keeps JSON output deterministic.
#[derive(Clone, Debug, Serialize)]
pub struct ParamReport {
    pub regime: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    pub k: u64,
    pub l: u64,
    pub delta: f64,
    pub rho: f64,
    pub bracket: f64,
    pub bracket_target: f64,
    /// k^3 delta^2, the error-term magnitude left out of the bracket.
    pub error_magnitude: f64,
    pub extras: BTreeMap<String, f64>,
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn floor_u64(r: &Rational) -> Option<u64> {
    r.floor().to_integer().to_u64()
}

fn ceil_u64(r: &Rational) -> Option<u64> {
    r.ceil().to_integer().to_u64()
}

/// Unconditional regime: l = floor(4/eta), k = 2(l+1)(2l+1), delta = l^-4,
/// rho = 1/(4(1+delta)). Reports the bracket against eta/2, the exact
/// identity u = h/(delta log R) = 4 eta (l^4 + 1) (asserted > 16), the
/// ceiling constant 184544, and the dominating exponent 65 (4/eta)^6 log 2.
pub fn select_unconditional(eta: &Rational) -> Result<ParamReport, AnalyticError> {
    if !eta.is_positive() || eta > &crate::rational::rat(1, 5) {
        return Err(AnalyticError::Precondition(format!(
            "eta must lie in (0, 0.2], got {eta}"
        )));
    }
    let l = floor_u64(&(rat_int(4) / eta)).ok_or_else(|| {
        AnalyticError::Precondition("4/eta does not fit a machine integer".into())
    })?;
    if l > SELECTOR_MAX_L {
        return Err(AnalyticError::Budget(format!(
            "l = {l} exceeds the selector cap {SELECTOR_MAX_L}"
        )));
    }
    let k = 2 * (l + 1) * (2 * l + 1);
    let l4 = l * l * l * l;
    let delta_rat = Rational::new(BigInt::one(), BigInt::from(l4));
    let rho_rat = rat_int(1) / (rat_int(4) * (Rational::one() + &delta_rat));
    // exact identity: with h = eta log N and the rho above,
    // h / (delta log R) = 4 eta (l^4 + 1)
    let u = rat_int(4) * eta * rat_int(l4 as i64 + 1);
    if u <= rat_int(16) {
        return Err(AnalyticError::IdentityViolation(format!(
            "u = 4 eta (l^4+1) = {u} <= 16"
        )));
    }
    let delta = to_f64(&delta_rat);
    let rho = to_f64(&rho_rat);
    let eta_f = to_f64(eta);
    let b = bracket(k, l, rho, eta_f, 0.0);
    let kf = k as f64;
    let mut extras = BTreeMap::new();
    // ceil(65 * 4^6 * log 2); the product sits 0.39 below the integer, far
    // outside double rounding error
    extras.insert("c3".into(), (65.0 * 4096.0 * std::f64::consts::LN_2).ceil());
    extras.insert(
        "exponent_bound".into(),
        65.0 * (4.0 / eta_f).powi(6) * std::f64::consts::LN_2,
    );
    extras.insert("u".into(), to_f64(&u));
    Ok(ParamReport {
        regime: "unconditional",
        eta: Some(eta_f),
        theta: None,
        xi: None,
        k,
        l,
        delta,
        rho,
        bracket: b,
        bracket_target: eta_f / 2.0,
        error_magnitude: kf * kf * kf * delta * delta,
        extras,
    })
}

/// Minimal k (with its best l) making the bracket positive at eta = 0 and
/// rho = theta/2, by exact rational comparison:
/// `k (2l+1) theta > (k+2l+1)(l+1)`.
pub fn select_conditional(theta: &Rational) -> Result<(u64, u64), AnalyticError> {
    if theta <= &crate::rational::rat(1, 2) || theta > &rat_int(1) {
        return Err(AnalyticError::Precondition(format!(
            "theta must lie in (1/2, 1], got {theta}"
        )));
    }
    for k in 1..=CONDITIONAL_MAX_K {
        // the continuous optimum sits at (2l+1)^2 = k; scan a window
        let center = (k.isqrt().saturating_sub(1)) / 2;
        let lo = center.saturating_sub(3);
        let hi = (center + 3).min(k - 1);
        let mut best: Option<(Rational, u64)> = None;
        for l in lo..=hi {
            let lhs = big_rat(BigInt::from(k * (2 * l + 1))) * theta;
            let rhs = big_rat(BigInt::from((k + 2 * l + 1) * (l + 1)));
            if lhs > rhs {
                let score = lhs / rhs;
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, l));
                }
            }
        }
        if let Some((_, l)) = best {
            return Ok((k, l));
        }
    }
    Err(AnalyticError::SearchExhausted {
        max_k: CONDITIONAL_MAX_K,
    })
}

/// Near-1/2 level-of-distribution regime: l = ceil(1/xi),
/// k = 2(l+1)(2l+1), delta = l^-4, R-exponent (1/2+xi)/(2(1+delta))
/// cross-checked exactly against its (1+2xi)/(4(1+l^-4)) form. Reports
/// eta_max = xi^4/5, u at eta_max, and the eta-exponent
/// 4 xi^-2 + 14 xi^-1 + 11.
pub fn xi_regime(xi: &Rational) -> Result<ParamReport, AnalyticError> {
    if !xi.is_positive() || xi > &crate::rational::rat(1, 5) {
        return Err(AnalyticError::Precondition(format!(
            "xi must lie in (0, 0.2], got {xi}"
        )));
    }
    let l = ceil_u64(&(rat_int(1) / xi)).ok_or_else(|| {
        AnalyticError::Precondition("1/xi does not fit a machine integer".into())
    })?;
    if l > SELECTOR_MAX_L {
        return Err(AnalyticError::Budget(format!(
            "l = {l} exceeds the selector cap {SELECTOR_MAX_L}"
        )));
    }
    let k = 2 * (l + 1) * (2 * l + 1);
    let l4 = l * l * l * l;
    let delta_rat = Rational::new(BigInt::one(), BigInt::from(l4));
    let r_exp = (crate::rational::rat(1, 2) + xi) / (rat_int(2) * (Rational::one() + &delta_rat));
    let r_exp_alt =
        (Rational::one() + rat_int(2) * xi) / (rat_int(4) * (Rational::one() + &delta_rat));
    if r_exp != r_exp_alt {
        return Err(AnalyticError::IdentityViolation(format!(
            "R-exponent forms disagree: {r_exp} vs {r_exp_alt}"
        )));
    }
    let eta_max = rat_pow(xi, 4) / rat_int(5);
    let u = rat_int(4) * (Rational::one() + rat_int(l4 as i64)) * &eta_max
        / (Rational::one() + rat_int(2) * xi);
    let exponent = rat_int(4) / rat_pow(xi, 2) + rat_int(14) / xi + rat_int(11);

    let delta = to_f64(&delta_rat);
    let rho = to_f64(&r_exp);
    let eta_f = to_f64(&eta_max);
    let xi_f = to_f64(xi);
    let kf = k as f64;
    let mut extras = BTreeMap::new();
    extras.insert("eta_max".into(), eta_f);
    extras.insert("u".into(), to_f64(&u));
    extras.insert("exponent".into(), to_f64(&exponent));
    Ok(ParamReport {
        regime: "xi",
        eta: Some(eta_f),
        theta: None,
        xi: Some(xi_f),
        k,
        l,
        delta,
        rho,
        bracket: bracket(k, l, rho, eta_f, 0.0),
        bracket_target: eta_f + xi_f / 2.0,
        error_magnitude: kf * kf * kf * delta * delta,
        extras,
    })
}

/// Two-prime variant under the full level of distribution: k the smallest
/// integer above 144/eta^2 (and above 36), l = floor(sqrt(k)/2),
/// delta = k^-2, rho = 1/(2(1+delta)). The bracket carries the -2 constant
/// and the explicit -k^3 delta^2; its conclusion bracket > eta/2 is
/// asserted, with the chain's intermediate eta - 6/sqrt(k) reported.
pub fn eh_two_shift(eta: &Rational) -> Result<ParamReport, AnalyticError> {
    if !eta.is_positive() || eta > &rat_int(1) {
        return Err(AnalyticError::Precondition(format!(
            "eta must lie in (0, 1], got {eta}"
        )));
    }
    let threshold = rat_int(144) / (eta * eta);
    let k = floor_u64(&threshold)
        .and_then(|f| f.checked_add(1))
        .ok_or_else(|| AnalyticError::Precondition("144/eta^2 overflows".into()))?
        .max(37);
    let l = k.isqrt() / 2;
    let kf = k as f64;
    let delta = 1.0 / (kf * kf);
    let rho = 1.0 / (2.0 * (1.0 + delta));
    let err_mag = 1.0 / kf; // k^3 delta^2 with delta = k^-2
    let b = bracket(k, l, rho, to_f64(eta), 0.0) - 1.0 - err_mag;
    let target = to_f64(eta) / 2.0;
    if b <= target {
        return Err(AnalyticError::BracketAssertion(format!(
            "two-shift bracket {b} <= eta/2 = {target} at k = {k}, l = {l}"
        )));
    }
    let mut extras = BTreeMap::new();
    extras.insert("intermediate".into(), to_f64(eta) - 6.0 / kf.sqrt());
    extras.insert("c7".into(), 5.0);
    Ok(ParamReport {
        regime: "eh-two-shift",
        eta: Some(to_f64(eta)),
        theta: None,
        xi: None,
        k,
        l,
        delta,
        rho,
        bracket: b,
        bracket_target: target,
        error_magnitude: err_mag,
        extras,
    })
}
