//! Weighted prime sums and the identities that tie them to π(x).
//!
//! For primes `p ≤ x` with weight `a = √(ln p / p)` the crate streams
//!
//! * `S(x) = Σ a`,
//! * `M(x) = Σ a² = Σ ln p / p`,
//! * `E(x) = S(x)² − M(x) = 2 Σ_{i<j} aᵢ aⱼ`,
//!
//! alongside `π(x)`, and checks the exact algebraic identities, the
//! monotone-weight inequalities and the Abel-summation decomposition that
//! connect them. Order-of-magnitude behaviour (`S ≍ √(x/ln x)`, `E ≍ π(x)`)
//! is measured as ratio bands over a geometric grid of checkpoints.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the working precision to binary64, which is
//! what the reporting layer uses.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accumulate;
pub mod asymptotics;
pub mod calculus;
pub mod compensated;
mod error;
pub mod pipeline;
pub mod scalar;
pub mod sieve;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type WeightedPrimeTerm = accumulate::WeightedPrimeTerm<f64>;
pub type SumState = accumulate::SumState<f64>;
pub type Checkpoint = accumulate::Checkpoint<f64>;
pub type Ratios = accumulate::Ratios<f64>;
pub type BlockStat = asymptotics::BlockStat<f64>;
pub type RatioBand = asymptotics::RatioBand<f64>;
pub type AbelDecomposition = calculus::AbelDecomposition<f64>;
pub type CompensatedSum = compensated::CompensatedSum<f64>;
pub type Run = pipeline::Run<f64>;

pub use sieve::{base_primes, prime_count, stream_segments, PrimeSegment, SieveConfig};
pub use verify::{Location, VerificationRecord};
