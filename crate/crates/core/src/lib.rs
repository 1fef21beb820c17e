//! Exact analysis of false-name attacks on the two-item VCG auction.
//!
//! The crate is `no_std` (it needs `alloc`). All arithmetic in the mechanism,
//! the expectation engine and the threshold computations is exact rational.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod distributions;
pub mod error;
pub mod expectation;
pub mod mechanism;
pub mod polynomial;
pub mod rational;
pub mod thresholds;

pub use error::Error;
pub use rational::Rational;

pub type Result<T> = core::result::Result<T, Error>;
