//! Single-commodity economic order quantity: exact average periodic cost,
//! the squared continuous optimum, and integer rounding.
//!
//! The standalone cost of a commodity with ordering cost `K`, holding cost
//! `h` and demand rate `lambda` at cycle time `t` is
//!
//! ```text
//! g(t) = K/t + lambda * h * t / 2
//! ```
//!
//! with continuous minimizer `t* = sqrt(2K / (h * lambda))`. `t*` is usually
//! irrational, so this module only ever exposes `(t*)^2` and performs the
//! integer rounding decision between the straddling integers `t̲` and
//! `t̲ + 1` by comparing `t̲ * (t̲ + 1)` against `(t*)^2`: the product of the
//! two candidates is below the squared optimum exactly when the upper
//! candidate is strictly cheaper.
//!
//! The direction of that comparison is forced by the identity
//! `g(t̲) - g(t̄) = (t̄ - t̲) * (K/(t̲*t̄) - h*lambda/2)`: the upper candidate
//! wins iff `t̲*t̄ < 2K/(h*lambda)`. A rounding rule stated with the
//! opposite sense (pick the upper candidate when the geometric mean of the
//! candidates *exceeds* `t*`) contradicts this identity; the verifier relies
//! on the direction implemented here, under which `K = T^2 - 1/2` and
//! `K = T^2 + 1/2` (with `h = 1`, `lambda = 2`) both round to exactly `T`.

use crate::numerics::{isqrt_floor_rational, rat_nat, Nat, Rational};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EoqError {
    #[error("EOQ parameter {0} must be strictly positive")]
    NonPositiveParam(&'static str),
    #[error("cycle time must be strictly positive")]
    NonPositiveCycle,
}

/// Parameters of a standalone EOQ problem. All fields strictly positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EoqParams {
    #[serde(with = "crate::numerics::rational_string")]
    pub k: Rational,
    #[serde(with = "crate::numerics::rational_string")]
    pub h: Rational,
    #[serde(with = "crate::numerics::rational_string")]
    pub lambda: Rational,
}

impl EoqParams {
    pub fn new(k: Rational, h: Rational, lambda: Rational) -> Result<Self, EoqError> {
        if !k.is_positive() {
            return Err(EoqError::NonPositiveParam("K"));
        }
        if !h.is_positive() {
            return Err(EoqError::NonPositiveParam("h"));
        }
        if !lambda.is_positive() {
            return Err(EoqError::NonPositiveParam("lambda"));
        }
        Ok(Self { k, h, lambda })
    }
}

/// Exact value of `g(t) = K/t + lambda*h*t/2` for a positive rational `t`.
pub fn average_periodic_cost(p: &EoqParams, t: &Rational) -> Result<Rational, EoqError> {
    if !t.is_positive() {
        return Err(EoqError::NonPositiveCycle);
    }
    Ok(&p.k / t + &p.lambda * &p.h * t / Rational::from_integer(2.into()))
}

/// `(t*)^2 = 2K / (h * lambda)`, exact. `t*` itself is never materialized.
pub fn continuous_optimum_squared(p: &EoqParams) -> Rational {
    Rational::from_integer(2.into()) * &p.k / (&p.h * &p.lambda)
}

/// The integer cycle time minimizing `g` over positive integers.
///
/// With `t̲` the largest integer at or below `t*`, the upper candidate
/// `t̲ + 1` wins exactly when `t̲ * (t̲ + 1) < (t*)^2`; on exact equality the
/// two costs tie and the lower candidate is returned. Continuous optima
/// below 1 round to 1.
pub fn integer_optimum(p: &EoqParams) -> Nat {
    let squared = continuous_optimum_squared(p);
    if squared < Rational::one() {
        return Nat::one();
    }
    let lower = isqrt_floor_rational(&squared);
    debug_assert!(!lower.is_zero());
    let product = rat_nat(&lower) * rat_nat(&(&lower + Nat::one()));
    if product < squared {
        &lower + Nat::one()
    } else {
        lower
    }
}
