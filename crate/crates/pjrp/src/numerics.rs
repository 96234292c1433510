//! Exact arithmetic primitives shared by every other module.
//!
//! All costs, densities and margins in this crate are [`Rational`] values and
//! every comparison is exact. Square roots are never materialized: whenever a
//! continuous optimum `t*` has to be compared against something, the test is
//! rewritten as a comparison of squares (see [`crate::eoq`]).
//!
//! [`Rational`] is `num_rational::BigRational`, which already guarantees the
//! invariants we need (denominator positive, always stored in lowest terms,
//! structural equality). [`Nat`] is an arbitrary-precision non-negative
//! integer; cycle times of clause commodities are products of three primes
//! and routinely exceed 64 bits.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number, always reduced, denominator > 0.
pub type Rational = num_rational::BigRational;

/// Arbitrary-precision non-negative integer.
pub type Nat = BigUint;

/// Arbitrary-precision signed integer.
pub type Int = BigInt;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumericsError {
    #[error("lcm requires positive arguments, got a zero")]
    LcmZeroArgument,
    #[error("invalid rational literal {0:?}")]
    InvalidRational(String),
    #[error("zero denominator in rational literal {0:?}")]
    ZeroDenominator(String),
}

/// Greatest common divisor; `gcd(0, 0) = 0`.
pub fn gcd(a: &Nat, b: &Nat) -> Nat {
    a.gcd(b)
}

/// Least common multiple of two positive naturals.
pub fn lcm(a: &Nat, b: &Nat) -> Result<Nat, NumericsError> {
    if a.is_zero() || b.is_zero() {
        return Err(NumericsError::LcmZeroArgument);
    }
    Ok(a.lcm(b))
}

/// Largest `m` with `m^2 <= n`.
pub fn isqrt_floor(n: &Nat) -> Nat {
    n.sqrt()
}

/// Largest integer `m >= 0` with `m^2 <= r`, for a non-negative rational `r`.
///
/// `m = isqrt(floor(r))` suffices: `m^2 <= floor(r) <= r`, and since
/// `floor(r) < (m+1)^2` implies `r < floor(r) + 1 <= (m+1)^2`, the bracket
/// `m^2 <= r < (m+1)^2` holds exactly.
pub fn isqrt_floor_rational(r: &Rational) -> Nat {
    assert!(!r.is_negative(), "isqrt_floor_rational needs r >= 0");
    let floor = r.numer().div_floor(r.denom());
    isqrt_floor(&floor.to_biguint().expect("non-negative floor"))
}

/// Convenience constructor for an integer rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Convenience constructor for `num/den`. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from a natural.
pub fn rat_nat(n: &Nat) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

/// Natural from a small unsigned integer.
pub fn nat(n: u64) -> Nat {
    Nat::from(n)
}

/// Renders a rational in the interchange form used by all file formats:
/// `"num/den"` with the denominator omitted when it is 1 (`"71/2"`, `"-3"`,
/// `"0"`).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the `"num/den"` interchange form. A zero denominator is rejected;
/// non-reduced input is normalized.
pub fn parse_rational(s: &str) -> Result<Rational, NumericsError> {
    let s = s.trim();
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let num: BigInt = num_str
        .parse()
        .map_err(|_| NumericsError::InvalidRational(s.to_owned()))?;
    let den: BigInt = match den_str {
        Some(d) => d
            .parse()
            .map_err(|_| NumericsError::InvalidRational(s.to_owned()))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(NumericsError::ZeroDenominator(s.to_owned()));
    }
    Ok(Rational::new(num, den))
}

/// Serde adapter storing a [`Rational`] as its interchange string.
pub mod rational_string {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(de::Error::custom)
    }
}

/// Serde adapter storing a [`Nat`] as a JSON integer literal of any size.
pub mod nat_number {
    use super::Nat;
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(n: &Nat, s: S) -> Result<S::Ok, S::Error> {
        let number = serde_json::Number::from_string_unchecked(n.to_string());
        serde_json::Value::Number(number)
            .serialize(s)
            .map_err(serde::ser::Error::custom)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Nat, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(num) => num
                .to_string()
                .parse::<Nat>()
                .map_err(|_| de::Error::custom("cycle times must be non-negative integers")),
            other => Err(de::Error::custom(format!(
                "expected integer, got {other}"
            ))),
        }
    }
}
