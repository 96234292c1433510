//! Prime toolkit: sieve, consecutive-prime-pair enumeration, the greedy
//! selection of the variable prime set VP, and validation of the four
//! admissibility conditions on it.
//!
//! The conditions on a candidate set of `n` consecutive-prime pairs
//! `(p̲_1, p̄_1) < ... < (p̲_n, p̄_n)` are:
//!
//! 1. every pair gap `b_i = p̄_i - p̲_i` is at most `b`;
//! 2. `p̄_n < B * p̲_1`, with the stretch `B` at least `(6*b̃*log2 n)^b̃`;
//!    2.5. `p̲_1 > n^(6*b̃)`;
//! 3. no multiple of a selected prime falls strictly inside any pair's gap.
//!
//! Desk-scale sets deliberately violate Condition 2.5 (the full-scale
//! magnitude is astronomical); [`validate_conditions`] reports every margin
//! exactly instead of assuming the asymptotic regime.

use crate::numerics::{rat_nat, Nat, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrimesError {
    #[error("sieve limit {limit} exceeds the memory cap {cap}")]
    SieveCapExceeded { limit: u64, cap: u64 },
    #[error("only {found} qualifying prime pairs below the limit, {needed} required")]
    NotEnoughPairs { found: usize, needed: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid vp set: {0}")]
    InvalidVpSet(String),
}

/// Default sieve memory cap.
pub const DEFAULT_SIEVE_CAP: u64 = 100_000_000;

/// All primes up to `limit`, ascending.
pub fn sieve(limit: u64, cap: u64) -> Result<Vec<u64>, PrimesError> {
    if limit > cap {
        return Err(PrimesError::SieveCapExceeded { limit, cap });
    }
    if limit < 2 {
        return Ok(Vec::new());
    }
    let len = limit as usize + 1;
    let mut composite = vec![0u64; len / 64 + 1];
    let is_set = |bits: &[u64], i: usize| bits[i / 64] >> (i % 64) & 1 == 1;
    let mut p = 2usize;
    while p * p <= limit as usize {
        if !is_set(&composite, p) {
            let mut m = p * p;
            while m < len {
                composite[m / 64] |= 1 << (m % 64);
                m += p;
            }
        }
        p += 1;
    }
    let mut primes = Vec::new();
    for i in 2..len {
        if !is_set(&composite, i) {
            primes.push(i as u64);
        }
    }
    Ok(primes)
}

fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A pair of consecutive primes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[u64; 2]", try_from = "[u64; 2]")]
pub struct PrimePair {
    pub lower: u64,
    pub upper: u64,
}

impl PrimePair {
    pub fn gap(&self) -> u64 {
        self.upper - self.lower
    }
}

impl From<PrimePair> for [u64; 2] {
    fn from(p: PrimePair) -> Self {
        [p.lower, p.upper]
    }
}

impl TryFrom<[u64; 2]> for PrimePair {
    type Error = String;

    fn try_from(v: [u64; 2]) -> Result<Self, String> {
        if v[0] >= v[1] {
            return Err(format!("pair [{}, {}] is not increasing", v[0], v[1]));
        }
        Ok(PrimePair {
            lower: v[0],
            upper: v[1],
        })
    }
}

/// Parameters recorded alongside a selected prime-pair set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VpParams {
    /// Maximum admissible pair gap.
    pub b: u64,
    /// Density exponent b̃.
    pub b_tilde: u32,
    /// Number of pairs.
    pub n: u64,
}

/// The selected pair set VP₂, the flattened prime set VP, and the small-prime
/// set PP of all primes below the first selected pair (optionally truncated
/// at `pp_cap` for tractability of the Constants commodity family).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VpSet {
    pub pairs: Vec<PrimePair>,
    pub pp: Vec<u64>,
    pub pp_cap: Option<u64>,
    pub params: VpParams,
}

impl VpSet {
    pub fn new(
        pairs: Vec<PrimePair>,
        pp: Vec<u64>,
        pp_cap: Option<u64>,
        params: VpParams,
    ) -> Result<Self, PrimesError> {
        let set = Self {
            pairs,
            pp,
            pp_cap,
            params,
        };
        set.validate()?;
        Ok(set)
    }

    /// Flattened ordered prime list `p̲_1, p̄_1, ..., p̲_n, p̄_n`.
    pub fn primes(&self) -> Vec<u64> {
        self.pairs
            .iter()
            .flat_map(|p| [p.lower, p.upper])
            .collect()
    }

    pub fn lower_primes(&self) -> Vec<u64> {
        self.pairs.iter().map(|p| p.lower).collect()
    }

    pub fn upper_primes(&self) -> Vec<u64> {
        self.pairs.iter().map(|p| p.upper).collect()
    }

    pub fn first_lower(&self) -> Option<u64> {
        self.pairs.first().map(|p| p.lower)
    }

    fn validate(&self) -> Result<(), PrimesError> {
        if self.pairs.is_empty() {
            return Err(PrimesError::InvalidVpSet("no pairs".into()));
        }
        if self.params.n != self.pairs.len() as u64 {
            return Err(PrimesError::InvalidVpSet(format!(
                "params.n = {} but {} pairs present",
                self.params.n,
                self.pairs.len()
            )));
        }
        let primes = self.primes();
        if !primes.windows(2).all(|w| w[0] < w[1]) {
            return Err(PrimesError::InvalidVpSet(
                "pair primes are not strictly increasing".into(),
            ));
        }
        for pair in &self.pairs {
            if !is_prime_trial(pair.lower) || !is_prime_trial(pair.upper) {
                return Err(PrimesError::InvalidVpSet(format!(
                    "pair ({}, {}) contains a composite",
                    pair.lower, pair.upper
                )));
            }
            for q in pair.lower + 1..pair.upper {
                if is_prime_trial(q) {
                    return Err(PrimesError::InvalidVpSet(format!(
                        "pair ({}, {}) is not consecutive: {} is prime",
                        pair.lower, pair.upper, q
                    )));
                }
            }
        }
        let first_lower = self.pairs[0].lower;
        let pp_bound = self.pp_cap.map_or(first_lower, |c| c.min(first_lower));
        if !self.pp.windows(2).all(|w| w[0] < w[1]) {
            return Err(PrimesError::InvalidVpSet("pp is not ascending".into()));
        }
        if self.pp.iter().any(|&p| p >= first_lower) {
            return Err(PrimesError::InvalidVpSet(
                "pp contains a prime not below the first pair".into(),
            ));
        }
        // Full content check only at sizes where trial division stays cheap.
        if pp_bound <= 2_000_000 {
            let expect: Vec<u64> = (2..pp_bound).filter(|&q| is_prime_trial(q)).collect();
            if self.pp != expect {
                return Err(PrimesError::InvalidVpSet(format!(
                    "pp does not list exactly the primes below {pp_bound}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: VpSet = serde_json::from_str(text).map_err(|e| e.to_string())?;
        raw.validate().map_err(|e| e.to_string())?;
        Ok(raw)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("vp set serializes");
        s.push('\n');
        s
    }
}

/// Reduction parameters: gap bound `b`, density exponent `b̃`, interval
/// stretch `B`, variable count `n`, and the optional PP truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionParams {
    pub b: u64,
    pub b_tilde: u32,
    pub big_b: Rational,
    pub n: u64,
    pub pp_cap: Option<u64>,
}

impl ReductionParams {
    pub fn new(
        b: u64,
        b_tilde: u32,
        big_b: Rational,
        n: u64,
        pp_cap: Option<u64>,
    ) -> Result<Self, PrimesError> {
        if b < 2 {
            return Err(PrimesError::InvalidParams("b must be >= 2".into()));
        }
        if b_tilde < 2 {
            return Err(PrimesError::InvalidParams("b_tilde must be >= 2".into()));
        }
        if n < 1 {
            return Err(PrimesError::InvalidParams("n must be >= 1".into()));
        }
        Ok(Self {
            b,
            b_tilde,
            big_b,
            n,
            pp_cap,
        })
    }

    /// Parameters for a selected set, with the stretch defaulting to the
    /// smallest admissible value (a dyadic upper bound on
    /// `(6*b̃*log2 n)^b̃`, exact when `n` is a power of two).
    pub fn for_vp(vp: &VpSet, big_b: Option<Rational>) -> Result<Self, PrimesError> {
        let params = vp.params;
        let big_b = big_b.unwrap_or_else(|| min_stretch_upper(params.n, params.b_tilde));
        Self::new(params.b, params.b_tilde, big_b, params.n, vp.pp_cap)
    }
}

/// Every adjacent pair of the given complete ascending prime list whose gap
/// is at most `b`.
pub fn consecutive_pairs(primes: &[u64], b: u64) -> Vec<PrimePair> {
    primes
        .windows(2)
        .filter(|w| w[1] - w[0] <= b)
        .map(|w| PrimePair {
            lower: w[0],
            upper: w[1],
        })
        .collect()
}

/// True iff some multiple of a prime in `vp_so_far` falls strictly inside
/// the candidate's gap.
pub fn violates_condition3(candidate: &PrimePair, vp_so_far: &[u64]) -> bool {
    vp_so_far.iter().any(|&p| {
        let first_above = (candidate.lower / p + 1) * p;
        first_above < candidate.upper
    })
}

/// Greedy selection of `n` consecutive-prime pairs with gap at most `b`,
/// starting from the smallest pair whose lower prime is at least `p_start`,
/// skipping candidates that violate Condition 3 against the primes already
/// selected.
///
/// Only the earlier-prime-into-new-gap direction needs checking: a newly
/// selected prime exceeds every earlier pair's upper bound, so its multiples
/// cannot land in an earlier gap, and within its own pair `2*p̲ > p̄`.
pub fn select_vp(
    n: usize,
    b: u64,
    p_start: u64,
    limit: u64,
    b_tilde: u32,
    pp_cap: Option<u64>,
    sieve_cap: u64,
) -> Result<VpSet, PrimesError> {
    if n == 0 {
        return Err(PrimesError::InvalidParams("n must be >= 1".into()));
    }
    if p_start < 2 || limit <= p_start {
        return Err(PrimesError::InvalidParams(
            "need p_start >= 2 and limit > p_start".into(),
        ));
    }
    let primes = sieve(limit, sieve_cap)?;
    let mut selected: Vec<PrimePair> = Vec::with_capacity(n);
    let mut vp: Vec<u64> = Vec::with_capacity(2 * n);
    for w in primes.windows(2) {
        if w[0] < p_start {
            continue;
        }
        if let Some(last) = selected.last() {
            if w[0] <= last.upper {
                continue;
            }
        }
        if w[1] - w[0] > b {
            continue;
        }
        let candidate = PrimePair {
            lower: w[0],
            upper: w[1],
        };
        if violates_condition3(&candidate, &vp) {
            continue;
        }
        vp.push(candidate.lower);
        vp.push(candidate.upper);
        selected.push(candidate);
        if selected.len() == n {
            break;
        }
    }
    if selected.len() < n {
        return Err(PrimesError::NotEnoughPairs {
            found: selected.len(),
            needed: n,
        });
    }
    let first_lower = selected[0].lower;
    let pp_bound = pp_cap.map_or(first_lower, |c| c.min(first_lower));
    let pp: Vec<u64> = primes.iter().copied().take_while(|&p| p < pp_bound).collect();
    VpSet::new(
        selected,
        pp,
        pp_cap,
        VpParams {
            b,
            b_tilde,
            n: n as u64,
        },
    )
}

// ---------------------------------------------------------------------------
// Condition report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub condition: String,
    pub pass: bool,
    #[serde(with = "crate::numerics::rational_string")]
    pub margin: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, condition: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.condition == condition)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,pass,margin\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{}\n",
                e.condition,
                e.pass,
                crate::numerics::format_rational(&e.margin)
            ));
        }
        out
    }
}

/// Bracket `lo <= log2(n) <= hi` with dyadic endpoints carrying up to
/// `frac_bits` fractional bits (at most 64); exact (`lo == hi`) when `n` is
/// a power of two.
///
/// Digit recurrence on the mantissa interval: write `n = x * 2^e` with
/// `x in [1, 2)`, square `x` once per fraction bit with outward rounding at
/// 32 guard bits, and emit a 1 exactly when the square reaches 2. If the
/// interval ever straddles 2 the recurrence stops early and the bracket is
/// returned at the precision reached, still rigorous.
pub fn log2_bracket(n: u64, frac_bits: u32) -> (Rational, Rational) {
    assert!(n >= 1);
    assert!(frac_bits <= 64, "bracket precision capped at 64 bits");
    if n.is_power_of_two() {
        let exact = Rational::from_integer(BigInt::from(n.trailing_zeros()));
        return (exact.clone(), exact);
    }
    let e = 63 - n.leading_zeros();
    let p = frac_bits + 32;
    let mut m_lo = Nat::from(n) << p >> e;
    let mut m_hi = m_lo.clone();
    let round_up: Nat = (Nat::one() << p) - Nat::one();
    let two_mantissa: Nat = Nat::one() << (p + 1);

    let mut bits = Nat::ZERO;
    let mut produced = 0u32;
    while produced < frac_bits {
        m_lo = (&m_lo * &m_lo) >> p;
        m_hi = (&m_hi * &m_hi + &round_up) >> p;
        let lo_reaches_two = m_lo >= two_mantissa;
        let hi_reaches_two = m_hi >= two_mantissa;
        if lo_reaches_two != hi_reaches_two {
            break;
        }
        produced += 1;
        bits <<= 1;
        if lo_reaches_two {
            bits += Nat::one();
            m_hi = (m_hi + Nat::one()) >> 1;
            m_lo >>= 1;
        }
    }
    let denom = BigInt::one() << produced;
    let base = Rational::from_integer(BigInt::from(e));
    let frac_lo = Rational::new(BigInt::from(bits.clone()), denom.clone());
    let frac_hi = Rational::new(BigInt::from(bits + Nat::one()), denom);
    (&base + frac_lo, base + frac_hi)
}

/// Dyadic upper bound on the minimal admissible stretch
/// `(6*b̃*log2 n)^b̃`.
pub fn min_stretch_upper(n: u64, b_tilde: u32) -> Rational {
    let (_, hi) = log2_bracket(n, 12);
    let six_bt = Rational::from_integer(BigInt::from(6 * b_tilde as u64));
    (six_bt * hi).pow(b_tilde as i32)
}

/// Decides `B >= (6*b̃*log2 n)^b̃` by refining the log bracket. Returns the
/// verdict and an exact margin against the deciding bracket endpoint (a
/// conservative lower bound on the true margin on pass, an upper bound on
/// fail; exact when `n` is a power of two).
fn stretch_bound_check(big_b: &Rational, n: u64, b_tilde: u32) -> (bool, Rational) {
    let six_bt = Rational::from_integer(BigInt::from(6 * b_tilde as u64));
    let mut frac_bits = 12;
    loop {
        let (lo, hi) = log2_bracket(n, frac_bits);
        let bound_lo = (&six_bt * lo).pow(b_tilde as i32);
        let bound_hi = (&six_bt * hi).pow(b_tilde as i32);
        if bound_lo == bound_hi {
            return (*big_b >= bound_hi, big_b - bound_hi);
        }
        if *big_b >= bound_hi {
            return (true, big_b - bound_hi);
        }
        if *big_b < bound_lo {
            return (false, big_b - bound_lo);
        }
        if frac_bits >= 64 {
            // log2(n) is irrational here, so B cannot equal the bound; at
            // this precision the verdict from the upper endpoint stands.
            return (*big_b >= bound_hi, big_b - bound_hi);
        }
        frac_bits = (frac_bits * 2).min(64);
    }
}

/// Re-checks Conditions 1, 2 (both halves), 2.5 and 3 from scratch and
/// reports exact margins. Failures are reported, never thrown.
pub fn validate_conditions(vp: &VpSet, params: &ReductionParams) -> ConditionReport {
    let mut entries = Vec::new();

    let max_gap = vp.pairs.iter().map(PrimePair::gap).max().unwrap_or(0);
    entries.push(ConditionEntry {
        condition: "condition1_gap_bound".into(),
        pass: max_gap <= params.b,
        margin: Rational::from_integer(BigInt::from(params.b as i128 - max_gap as i128)),
    });

    let p1 = rat_nat(&Nat::from(vp.pairs[0].lower));
    let pn_upper = rat_nat(&Nat::from(vp.pairs.last().unwrap().upper));
    let margin2 = &params.big_b * &p1 - &pn_upper;
    entries.push(ConditionEntry {
        condition: "condition2_interval".into(),
        pass: margin2.is_positive(),
        margin: margin2,
    });

    let (pass_b, margin_b) = stretch_bound_check(&params.big_b, params.n, params.b_tilde);
    entries.push(ConditionEntry {
        condition: "condition2_stretch_bound".into(),
        pass: pass_b,
        margin: margin_b,
    });

    let magnitude = Nat::from(params.n).pow(6 * params.b_tilde);
    let margin25 = &p1 - rat_nat(&magnitude);
    entries.push(ConditionEntry {
        condition: "condition2_5_magnitude".into(),
        pass: margin25.is_positive(),
        margin: margin25,
    });

    let vp_primes = vp.primes();
    let mut violations: u64 = 0;
    for pair in &vp.pairs {
        for &p in &vp_primes {
            let first_above = (pair.lower / p + 1) * p;
            if first_above < pair.upper {
                violations += 1;
            }
        }
    }
    entries.push(ConditionEntry {
        condition: "condition3_no_multiple_in_gap".into(),
        pass: violations == 0,
        margin: -Rational::from_integer(BigInt::from(violations)),
    });

    ConditionReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat_int;

    fn cap() -> u64 {
        DEFAULT_SIEVE_CAP
    }

    #[test]
    fn sieve_basics() {
        assert_eq!(sieve(10, cap()).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(sieve(2, cap()).unwrap(), vec![2]);
        assert_eq!(sieve(1, cap()).unwrap(), Vec::<u64>::new());
        assert_eq!(sieve(10_000, cap()).unwrap().len(), 1229);
        assert!(matches!(
            sieve(100, 50),
            Err(PrimesError::SieveCapExceeded { .. })
        ));
    }

    #[test]
    fn pair_enumeration() {
        let primes20 = sieve(20, cap()).unwrap();
        // Gap <= 2 admits (2,3) as well, the only odd-gap pair.
        let twins: Vec<(u64, u64)> = consecutive_pairs(&primes20, 2)
            .iter()
            .map(|p| (p.lower, p.upper))
            .collect();
        assert_eq!(twins, [(2, 3), (3, 5), (5, 7), (11, 13), (17, 19)]);

        let ones: Vec<(u64, u64)> = consecutive_pairs(&primes20, 1)
            .iter()
            .map(|p| (p.lower, p.upper))
            .collect();
        assert_eq!(ones, [(2, 3)]);

        let primes25 = sieve(25, cap()).unwrap();
        let wide = consecutive_pairs(&primes25, 4);
        for expected in [(7, 11), (13, 17), (19, 23)] {
            assert!(wide.iter().any(|p| (p.lower, p.upper) == expected));
        }
    }

    #[test]
    fn condition3_checks() {
        let pair = |lower, upper| PrimePair { lower, upper };
        assert!(violates_condition3(&pair(29, 31), &[5])); // 30 = 6*5
        assert!(!violates_condition3(&pair(11, 13), &[5, 7]));
        assert!(!violates_condition3(&pair(29, 31), &[]));
    }

    #[test]
    fn select_examples() {
        let vp = select_vp(2, 2, 11, 100, 2, None, cap()).unwrap();
        assert_eq!(vp.primes(), vec![11, 13, 17, 19]);
        assert_eq!(vp.pp, vec![2, 3, 5, 7]);

        let vp = select_vp(3, 2, 11, 100, 2, None, cap()).unwrap();
        assert_eq!(vp.primes(), vec![11, 13, 17, 19, 29, 31]);

        let vp = select_vp(1, 2, 3, 10, 2, None, cap()).unwrap();
        assert_eq!(vp.primes(), vec![3, 5]);
        assert_eq!(vp.pp, vec![2]);
    }

    #[test]
    fn select_exhaustion() {
        assert!(matches!(
            select_vp(50, 2, 11, 100, 2, None, cap()),
            Err(PrimesError::NotEnoughPairs { .. })
        ));
    }

    #[test]
    fn select_respects_pp_cap() {
        let vp = select_vp(2, 2, 59, 1000, 2, Some(50), cap()).unwrap();
        assert_eq!(vp.pairs[0].lower, 59);
        assert!(vp.pp.iter().all(|&p| p < 50));
        assert_eq!(vp.pp.last(), Some(&47));
    }

    #[test]
    fn desk_set_condition_report() {
        let vp = select_vp(2, 2, 11, 100, 2, None, cap()).unwrap();
        let params = ReductionParams::for_vp(&vp, None).unwrap();
        let report = validate_conditions(&vp, &params);
        assert!(report.entry("condition1_gap_bound").unwrap().pass);
        assert!(report.entry("condition3_no_multiple_in_gap").unwrap().pass);
        let c25 = report.entry("condition2_5_magnitude").unwrap();
        assert!(!c25.pass);
        assert_eq!(c25.margin, rat_int(11 - 4096));
        // n = 2 is a power of two: B defaults to exactly (6*2*1)^2 = 144.
        assert_eq!(params.big_b, rat_int(144));
        assert!(report.entry("condition2_interval").unwrap().pass);
        assert!(report.entry("condition2_stretch_bound").unwrap().pass);
    }

    #[test]
    fn first_twin_pair_above_magnitude_passes() {
        // Condition 2.5 needs p̲_1 > 2^12 = 4096 for n = 2, b̃ = 2.
        let vp = select_vp(2, 2, 4097, 10_000, 2, None, cap()).unwrap();
        let params = ReductionParams::for_vp(&vp, None).unwrap();
        let report = validate_conditions(&vp, &params);
        assert!(report.entry("condition2_5_magnitude").unwrap().pass);
    }

    #[test]
    fn overlap_violation_reported() {
        let vp = VpSet::new(
            vec![
                PrimePair { lower: 5, upper: 7 },
                PrimePair {
                    lower: 29,
                    upper: 31,
                },
            ],
            vec![2, 3],
            None,
            VpParams {
                b: 2,
                b_tilde: 2,
                n: 2,
            },
        )
        .unwrap();
        let params = ReductionParams::for_vp(&vp, None).unwrap();
        let report = validate_conditions(&vp, &params);
        let c3 = report.entry("condition3_no_multiple_in_gap").unwrap();
        assert!(!c3.pass); // 30 = 6*5
        assert_eq!(c3.margin, rat_int(-1));
    }

    #[test]
    fn selection_is_deterministic_and_sound() {
        let a = select_vp(5, 4, 100, 10_000, 2, None, cap()).unwrap();
        let b = select_vp(5, 4, 100, 10_000, 2, None, cap()).unwrap();
        assert_eq!(a, b);
        let params = ReductionParams::for_vp(&a, None).unwrap();
        let report = validate_conditions(&a, &params);
        assert!(report.entry("condition1_gap_bound").unwrap().pass);
        assert!(report.entry("condition3_no_multiple_in_gap").unwrap().pass);
    }

    #[test]
    fn pairs_are_consecutive_primes() {
        let vp = select_vp(4, 6, 1000, 100_000, 2, None, cap()).unwrap();
        let primes = sieve(100_000, cap()).unwrap();
        for pair in &vp.pairs {
            let idx = primes.binary_search(&pair.lower).unwrap();
            assert_eq!(primes[idx + 1], pair.upper);
        }
    }

    #[test]
    fn vpset_json_roundtrip_and_validation() {
        let vp = select_vp(2, 2, 11, 100, 2, None, cap()).unwrap();
        let json = vp.to_json();
        assert_eq!(VpSet::from_json(&json).unwrap(), vp);

        // A tampered pair is rejected.
        let bad = json.replace("13", "14");
        assert!(VpSet::from_json(&bad).is_err());
    }

    #[test]
    fn prime_count_envelope() {
        // pi(x) <= 1.255 x / ln x for x >= 17, with ln 10 < 2.302586.
        let ln10_upper = crate::numerics::rat(2_302_586, 1_000_000);
        for (exp, x) in [(3u32, 1_000u64), (4, 10_000), (5, 100_000)] {
            let count = sieve(x, cap()).unwrap().len() as i64;
            let ln_upper = rat_int(exp as i64) * ln10_upper.clone();
            let envelope = crate::numerics::rat(1255, 1000) * rat_int(x as i64) / ln_upper;
            assert!(rat_int(count) <= envelope, "x = {x}");
        }
    }

    #[test]
    fn stretch_bound_refinement() {
        // For n = 3, b̃ = 2 the minimal stretch is (12*log2 3)^2 =
        // 361.74328253... A supplied B inside the coarse 12-bit bracket
        // [361.74257, 361.85403] forces the bracket to refine before the
        // verdict; both sides of the bound decide correctly.
        let vp = select_vp(3, 2, 11, 100, 2, None, cap()).unwrap();
        for (b_str, expect) in [("3617433/10000", true), ("3617432/10000", false)] {
            let big_b = crate::numerics::parse_rational(b_str).unwrap();
            let params = ReductionParams::new(2, 2, big_b, 3, None).unwrap();
            let report = validate_conditions(&vp, &params);
            assert_eq!(
                report.entry("condition2_stretch_bound").unwrap().pass,
                expect,
                "B = {b_str}"
            );
        }
    }

    #[test]
    fn log_bracket_sane() {
        let (lo, hi) = log2_bracket(3, 12);
        assert!(lo < hi);
        // log2(3) = 1.58496...
        assert!(lo > crate::numerics::rat(15, 10));
        assert!(hi < crate::numerics::rat(16, 10));
        let (lo, hi) = log2_bracket(8, 12);
        assert_eq!(lo, rat_int(3));
        assert_eq!(hi, rat_int(3));
    }
}
