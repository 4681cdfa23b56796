//! A laboratory for small gaps between primes.
//!
//! The crate provides the computable pieces used in empirical studies of
//! prime gaps in dyadic ranges: a segmented sieve substrate ([`sieve`]),
//! prime k-tuple machinery and singular series ([`tuples`]), truncated
//! divisor-sum weight arrays and their moment sums ([`weights`]), gap-density
//! statistics ([`gaps`]), exact-rational identity and parameter checks
//! ([`analytic`]), and level-of-distribution error sums ([`distlevel`]).
//!
//! Everything numeric is deterministic: range computations are partitioned
//! into fixed segments, mapped (possibly in parallel) and merged in ascending
//! order, so identical inputs produce bit-identical outputs regardless of the
//! worker-thread count.

pub mod analytic;
pub mod distlevel;
pub mod gaps;
pub mod rational;
pub mod sieve;
pub mod tuples;
pub mod weights;

pub(crate) mod util;

/// Coarse classification of library errors, used by front ends to pick exit
/// codes: violated preconditions, exceeded work budgets, I/O trouble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Precondition,
    Budget,
    Io,
    Internal,
}

/// Implemented by every error type in the crate.
pub trait Classify {
    fn class(&self) -> ErrorClass;
}
