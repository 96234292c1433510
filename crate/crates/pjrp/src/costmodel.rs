//! PJRP instances, integer-cycle policies, and exact evaluation of total and
//! marginal average periodic costs.
//!
//! Densities are asymptotic proportions of periods over an infinite horizon,
//! computed exactly by rational inclusion–exclusion over least common
//! multiples. A period carries a joint order when at least one commodity's
//! cycle time divides it; the joint cost `K0` is paid only in such periods
//! (the correction-factor semantics — empty joint orders cost nothing).
//!
//! Before running inclusion–exclusion the engine applies two exactness-
//! preserving simplifications:
//!
//! * duplicate and *dominated* values are dropped — a cycle that is a
//!   multiple of another cycle orders only in periods already covered;
//! * for sole-order densities, every other cycle `o` is replaced by the
//!   reduced value `o'` with `o | t·s  ⇔  o' | s`, obtained by cancelling
//!   common factors of `o` and `t`.
//!
//! The subset cap bounds the number of distinct values *after* these
//! simplifications; pairwise-coprime sets take a closed-form product and are
//! exempt. Structured reduction instances with many commodities bypass the
//! generic engine entirely via closed forms in [`crate::reduction`].

use crate::numerics::{rat_nat, Nat, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CostError {
    #[error("{0} distinct cycle values exceed the subset cap {1}")]
    SubsetCapExceeded(usize, usize),
    #[error("hyperperiod {0} exceeds the cap {1}")]
    HyperperiodCapExceeded(Nat, u64),
    #[error("policy has no cycle time for commodity {0:?}")]
    MissingCycle(String),
    #[error("cycle time for commodity {0:?} must be >= 1")]
    ZeroCycleTime(String),
    #[error("cycle values must be >= 1")]
    ZeroCycleValue,
    #[error("duplicate commodity id {0:?}")]
    DuplicateId(String),
    #[error("instance must contain at least one commodity")]
    EmptyInstance,
    #[error("commodity {id:?}: {field} must be strictly positive")]
    NonPositiveCost { id: String, field: &'static str },
    #[error("K0 must be non-negative")]
    NegativeJointCost,
}

/// Caps guarding the exponential and hyperperiod code paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityCaps {
    /// Maximum number of distinct (post-simplification) values admitted to
    /// generic inclusion–exclusion.
    pub subset_cap: usize,
    /// Maximum hyperperiod the counting oracle will enumerate.
    pub hyperperiod_cap: u64,
}

impl Default for DensityCaps {
    fn default() -> Self {
        Self {
            subset_cap: 20,
            hyperperiod_cap: 10_000_000,
        }
    }
}

// ---------------------------------------------------------------------------
// Model types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommodityKind {
    Constant,
    Variable,
    Clause,
    Generic,
}

/// Role indices attached to reduction-built commodities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum CommodityMeta {
    /// Constants commodity for the `l`-th prime of PP and `m`-th prime of VP
    /// (both 1-based).
    Constant { l: u64, m: u64 },
    /// Variables commodity for variable `i` (1-based).
    Variable { i: u64 },
    /// Clauses commodity for clause `r` (1-based).
    Clause { r: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commodity {
    pub id: String,
    pub kind: CommodityKind,
    #[serde(rename = "K", with = "crate::numerics::rational_string")]
    pub k: Rational,
    #[serde(with = "crate::numerics::rational_string")]
    pub h: Rational,
    #[serde(with = "crate::numerics::rational_string")]
    pub lambda: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<CommodityMeta>,
}

impl Commodity {
    pub fn new(
        id: impl Into<String>,
        kind: CommodityKind,
        k: Rational,
        h: Rational,
        lambda: Rational,
        meta: Option<CommodityMeta>,
    ) -> Result<Self, CostError> {
        let id = id.into();
        for (value, field) in [(&k, "K"), (&h, "h"), (&lambda, "lambda")] {
            if !value.is_positive() {
                return Err(CostError::NonPositiveCost { id, field });
            }
        }
        Ok(Self {
            id,
            kind,
            k,
            h,
            lambda,
            meta,
        })
    }

    fn canonical_key(&self) -> (u8, u64, u64, &str) {
        match (&self.kind, &self.meta) {
            (CommodityKind::Constant, Some(CommodityMeta::Constant { l, m })) => {
                (0, *l, *m, self.id.as_str())
            }
            (CommodityKind::Constant, _) => (0, u64::MAX, u64::MAX, self.id.as_str()),
            (CommodityKind::Variable, Some(CommodityMeta::Variable { i })) => {
                (1, *i, 0, self.id.as_str())
            }
            (CommodityKind::Variable, _) => (1, u64::MAX, u64::MAX, self.id.as_str()),
            (CommodityKind::Clause, Some(CommodityMeta::Clause { r })) => {
                (2, *r, 0, self.id.as_str())
            }
            (CommodityKind::Clause, _) => (2, u64::MAX, u64::MAX, self.id.as_str()),
            (CommodityKind::Generic, _) => (3, 0, 0, self.id.as_str()),
        }
    }
}

/// A PJRP instance: commodities in canonical order plus the joint cost `K0`.
///
/// Canonical order (constants by `(l, m)`, variables by `i`, clauses by `r`,
/// generic by id) makes serialized instances byte-reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "K0", with = "crate::numerics::rational_string")]
    pub k0: Rational,
    pub commodities: Vec<Commodity>,
}

impl Instance {
    pub fn new(commodities: Vec<Commodity>, k0: Rational) -> Result<Self, CostError> {
        if commodities.is_empty() {
            return Err(CostError::EmptyInstance);
        }
        if k0.is_negative() {
            return Err(CostError::NegativeJointCost);
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &commodities {
            if !seen.insert(c.id.clone()) {
                return Err(CostError::DuplicateId(c.id.clone()));
            }
        }
        let mut commodities = commodities;
        commodities.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
        Ok(Self { k0, commodities })
    }

    pub fn commodity(&self, id: &str) -> Option<&Commodity> {
        self.commodities.iter().find(|c| c.id == id)
    }

    /// Parses and re-validates an instance from its JSON form; commodity
    /// order is normalized on read.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: Instance = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Instance::new(raw.commodities, raw.k0).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }
}

/// Integer cycle times, one per commodity id. Order quantities follow as
/// `q_c = lambda_c * t_c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    #[serde(with = "nat_map")]
    pub cycles: BTreeMap<String, Nat>,
}

impl Policy {
    pub fn new(cycles: BTreeMap<String, Nat>) -> Self {
        Self { cycles }
    }

    pub fn cycle(&self, id: &str) -> Option<&Nat> {
        self.cycles.get(id)
    }

    /// Derived order quantity `q_c = lambda_c * t_c`.
    pub fn order_quantity(&self, c: &Commodity) -> Option<Rational> {
        self.cycle(&c.id).map(|t| &c.lambda * rat_nat(t))
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("policy serializes");
        s.push('\n');
        s
    }
}

mod nat_map {
    use super::Nat;
    use serde::{de, ser::SerializeMap, Deserialize, Deserializer, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<String, Nat>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            let number = serde_json::Number::from_string_unchecked(v.to_string());
            map.serialize_entry(k, &serde_json::Value::Number(number))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, Nat>, D::Error> {
        let raw: BTreeMap<String, serde_json::Value> = BTreeMap::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| match v {
                serde_json::Value::Number(n) => n
                    .to_string()
                    .parse::<Nat>()
                    .map(|nat| (k, nat))
                    .map_err(|_| de::Error::custom("cycle times must be non-negative integers")),
                other => Err(de::Error::custom(format!("expected integer, got {other}"))),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Density engine
// ---------------------------------------------------------------------------

/// lcm word that stays in `u128` while it fits.
#[derive(Clone, PartialEq, Eq)]
enum Word {
    Small(u128),
    Big(Nat),
}

impl Word {
    fn from_nat(n: &Nat) -> Word {
        match n.to_u128() {
            Some(v) => Word::Small(v),
            None => Word::Big(n.clone()),
        }
    }

    fn to_nat(&self) -> Nat {
        match self {
            Word::Small(v) => Nat::from(*v),
            Word::Big(n) => n.clone(),
        }
    }

    fn lcm(&self, other: &Word) -> Word {
        match (self, other) {
            (Word::Small(a), Word::Small(b)) => {
                let g = gcd_u128(*a, *b);
                match (a / g).checked_mul(*b) {
                    Some(l) => Word::Small(l),
                    None => Word::Big(crate::numerics::lcm(&Nat::from(*a), &Nat::from(*b))
                        .expect("positive")),
                }
            }
            _ => Word::Big(
                crate::numerics::lcm(&self.to_nat(), &other.to_nat()).expect("positive"),
            ),
        }
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Dedups, sorts, and drops values that are multiples of another value.
fn simplify_values(cycles: &[Nat]) -> Result<Vec<Nat>, CostError> {
    let mut values: Vec<Nat> = cycles.to_vec();
    if values.iter().any(Zero::is_zero) {
        return Err(CostError::ZeroCycleValue);
    }
    values.sort();
    values.dedup();
    let mut kept: Vec<Nat> = Vec::with_capacity(values.len());
    'outer: for v in values {
        for k in &kept {
            if (&v % k).is_zero() {
                continue 'outer;
            }
        }
        kept.push(v);
    }
    Ok(kept)
}

fn pairwise_coprime(values: &[Nat]) -> bool {
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            if !crate::numerics::gcd(a, b).is_one() {
                return false;
            }
        }
    }
    true
}

/// Inclusion–exclusion over all non-empty subsets, summed over the common
/// denominator `lcm(values)` so each term is an exact integer.
fn inclusion_exclusion(values: &[Nat]) -> Rational {
    let l_all = values
        .iter()
        .fold(Nat::one(), |acc, v| crate::numerics::lcm(&acc, v).expect("positive"));
    let mut numerator = BigInt::zero();
    let words: Vec<Word> = values.iter().map(Word::from_nat).collect();

    fn descend(words: &[Word], start: usize, current: &Word, sign: i8, l_all: &Nat, acc: &mut BigInt) {
        for j in start..words.len() {
            let next = current.lcm(&words[j]);
            let term = BigInt::from(l_all / next.to_nat());
            if sign > 0 {
                *acc += term;
            } else {
                *acc -= term;
            }
            descend(words, j + 1, &next, -sign, l_all, acc);
        }
    }

    descend(&words, 0, &Word::Small(1), 1, &l_all, &mut numerator);
    Rational::new(numerator, BigInt::from(l_all))
}

/// Exact asymptotic proportion of periods in which at least one of the given
/// cycles orders. Duplicates and dominated values are dropped first;
/// pairwise-coprime sets use the closed product `1 - prod(1 - 1/t)` and are
/// not subject to the subset cap.
pub fn joint_order_density(cycles: &[Nat], caps: &DensityCaps) -> Result<Rational, CostError> {
    let values = simplify_values(cycles)?;
    if values.is_empty() {
        return Ok(Rational::zero());
    }
    if pairwise_coprime(&values) {
        let none = values
            .iter()
            .map(|v| (rat_nat(v) - Rational::one()) / rat_nat(v))
            .product::<Rational>();
        return Ok(Rational::one() - none);
    }
    if values.len() > caps.subset_cap {
        return Err(CostError::SubsetCapExceeded(values.len(), caps.subset_cap));
    }
    Ok(inclusion_exclusion(&values))
}

/// Replaces `o` by `o'` with `o | t*s  ⇔  o' | s`, cancelling the factors
/// `o` shares with `t`.
fn reduce_against(o: &Nat, t: &Nat) -> Nat {
    let mut o = o.clone();
    let mut t = t.clone();
    loop {
        let g = crate::numerics::gcd(&o, &t);
        if g.is_one() {
            return o;
        }
        o /= &g;
        t /= &g;
    }
}

/// Exact proportion of periods that are multiples of `t` and of no element
/// of `others`.
pub fn sole_order_density(
    t: &Nat,
    others: &[Nat],
    caps: &DensityCaps,
) -> Result<Rational, CostError> {
    if t.is_zero() {
        return Err(CostError::ZeroCycleValue);
    }
    if others.iter().any(Zero::is_zero) {
        return Err(CostError::ZeroCycleValue);
    }
    let reduced: Vec<Nat> = others.iter().map(|o| reduce_against(o, t)).collect();
    if reduced.iter().any(One::is_one) {
        // Some other cycle covers every multiple of t.
        return Ok(Rational::zero());
    }
    let covered = joint_order_density(&reduced, caps)?;
    Ok((Rational::one() - covered) / rat_nat(t))
}

/// Brute-force joint-order density: counts ordering periods over one
/// hyperperiod `1..=lcm(cycles)`.
pub fn density_oracle(cycles: &[Nat], caps: &DensityCaps) -> Result<Rational, CostError> {
    if cycles.is_empty() {
        return Ok(Rational::zero());
    }
    if cycles.iter().any(Zero::is_zero) {
        return Err(CostError::ZeroCycleValue);
    }
    let mut hyper = Nat::one();
    for c in cycles {
        hyper = crate::numerics::lcm(&hyper, c).expect("positive");
        if hyper > Nat::from(caps.hyperperiod_cap) {
            return Err(CostError::HyperperiodCapExceeded(hyper, caps.hyperperiod_cap));
        }
    }
    let l = hyper.to_u64().expect("within cap");
    let mut ordered = vec![false; l as usize + 1];
    for c in cycles {
        let step = c.to_u64().expect("divides hyperperiod");
        let mut at = step;
        while at <= l {
            ordered[at as usize] = true;
            at += step;
        }
    }
    let count = ordered.iter().filter(|&&b| b).count();
    Ok(Rational::new(BigInt::from(count), BigInt::from(l)))
}

/// Total average periodic cost of a policy:
/// `sum_c (K_c/t_c + lambda_c*h_c*t_c/2) + K0 * joint_order_density`.
pub fn total_average_cost(
    inst: &Instance,
    pol: &Policy,
    caps: &DensityCaps,
) -> Result<Rational, CostError> {
    let mut total = Rational::zero();
    let mut cycles = Vec::with_capacity(inst.commodities.len());
    for c in &inst.commodities {
        let t = pol
            .cycle(&c.id)
            .ok_or_else(|| CostError::MissingCycle(c.id.clone()))?;
        if t.is_zero() {
            return Err(CostError::ZeroCycleTime(c.id.clone()));
        }
        let tr = rat_nat(t);
        total += &c.k / &tr + &c.lambda * &c.h * &tr / rat_nat(&Nat::from(2u32));
        cycles.push(t.clone());
    }
    if !inst.k0.is_zero() {
        total += &inst.k0 * joint_order_density(&cycles, caps)?;
    }
    Ok(total)
}

/// Marginal average periodic cost of one commodity at cycle time `t` given
/// the other cycles: `K/t + lambda*h*t/2 + K0 * jr(t, others)`.
pub fn marginal_cost(
    c: &Commodity,
    t: &Nat,
    others: &[Nat],
    k0: &Rational,
    caps: &DensityCaps,
) -> Result<Rational, CostError> {
    if t.is_zero() {
        return Err(CostError::ZeroCycleTime(c.id.clone()));
    }
    let tr = rat_nat(t);
    let standalone = &c.k / &tr + &c.lambda * &c.h * &tr / rat_nat(&Nat::from(2u32));
    Ok(standalone + k0 * sole_order_density(t, others, caps)?)
}
