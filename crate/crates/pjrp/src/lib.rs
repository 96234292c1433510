//! Exact workbench for the periodic joint replenishment problem (PJRP).
//!
//! Each commodity orders at every multiple of an integer cycle time; a joint
//! cost `K0` is paid in any period with at least one order (empty joint
//! orders cost nothing). The crate provides:
//!
//! * exact rational evaluation of total and marginal average periodic costs,
//!   with joint-order densities computed by inclusion–exclusion over least
//!   common multiples ([`costmodel`]);
//! * the single-commodity cost function, its squared continuous optimum and
//!   the integer rounding rule ([`eoq`]);
//! * a sieve-backed toolkit for selecting admissible sets of consecutive
//!   prime pairs ([`primes`]);
//! * compilation of a 3-CNF formula into a PJRP instance whose optimal
//!   policies encode truth assignments, with closed-form cost bounds and the
//!   satisfiability-gap report ([`reduction`]);
//! * an exact brute-force solver over candidate windows, a truth-table SAT
//!   oracle, lemma/claim verifiers and end-to-end experiments ([`harness`]).
//!
//! Everything on a decision path is exact: costs, densities, and margins are
//! arbitrary-precision rationals, and comparisons against irrational
//! quantities (square roots, fractional powers) are rewritten as polynomial
//! comparisons. Infinite-horizon semantics are used throughout; for a finite
//! horizon that is a common multiple of all cycle times the last cycle is
//! complete and the average periodic cost coincides with the infinite-horizon
//! value, so the evaluator applies there unchanged.

pub mod costmodel;
pub mod eoq;
pub mod harness;
pub mod numerics;
pub mod primes;
pub mod reduction;
pub mod report;

pub use costmodel::{Commodity, CommodityKind, DensityCaps, Instance, Policy};
pub use eoq::EoqParams;
pub use harness::{SearchWindow, SolveCaps, SolveMode, SolveResult};
pub use numerics::{Nat, Rational};
pub use primes::{PrimePair, ReductionParams, VpSet};
pub use reduction::{Assignment, CnfFormula, Gamma};
pub use report::{Report, ReportEntry};
