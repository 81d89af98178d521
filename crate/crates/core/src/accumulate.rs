//! Streaming accumulation of the weighted prime sums.
//!
//! Each prime `p_n` contributes a weight `a_n = √(ln p_n / p_n)`. The state
//! carries `S_n = Σ a_k` and `M_n = Σ a_k²` with compensated summation, plus a
//! separately accumulated `Σ 2 a_k S_{k−1}` that must agree with `S_n² − M_n`.

use crate::asymptotics;
use crate::compensated::CompensatedSum;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One prime with its weight `√(ln p / p)` and squared weight `ln p / p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPrimeTerm<T> {
    /// 1-based position of the prime, `n` in `p_n`.
    pub index: u64,
    pub prime: u64,
    pub weight: T,
    pub weight_sq: T,
}

pub fn make_term<T: Real>(index: u64, prime: u64) -> Result<WeightedPrimeTerm<T>> {
    if prime < 2 {
        return Err(Error::Domain(format!("weight undefined for p = {prime} < 2")));
    }
    if index == 0 {
        return Err(Error::Domain("term index is 1-based".into()));
    }
    let p = T::from_count(prime);
    let weight_sq = p.ln() / p;
    Ok(WeightedPrimeTerm { index, prime, weight: weight_sq.sqrt(), weight_sq })
}

/// Running sums over the primes absorbed so far.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SumState<T> {
    n: u64,
    last_prime: u64,
    s: CompensatedSum<T>,
    m: CompensatedSum<T>,
    e_incremental: CompensatedSum<T>,
}

impl<T: Real> SumState<T> {
    pub fn new() -> Self {
        Self {
            n: 0,
            last_prime: 0,
            s: CompensatedSum::new(),
            m: CompensatedSum::new(),
            e_incremental: CompensatedSum::new(),
        }
    }

    /// Reassembles a persisted state. The accumulators are taken verbatim so a
    /// restored state continues bit-identically.
    pub fn from_parts(
        n: u64,
        last_prime: u64,
        s: CompensatedSum<T>,
        m: CompensatedSum<T>,
        e_incremental: CompensatedSum<T>,
    ) -> Self {
        Self { n, last_prime, s, m, e_incremental }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn last_prime(&self) -> u64 {
        self.last_prime
    }

    pub fn s(&self) -> T {
        self.s.value()
    }

    pub fn m(&self) -> T {
        self.m.value()
    }

    /// `S² − M` from the current sums.
    pub fn e(&self) -> T {
        let s = self.s();
        s * s - self.m()
    }

    pub fn e_incremental(&self) -> T {
        self.e_incremental.value()
    }

    pub fn s_acc(&self) -> CompensatedSum<T> {
        self.s
    }

    pub fn m_acc(&self) -> CompensatedSum<T> {
        self.m
    }

    pub fn e_incremental_acc(&self) -> CompensatedSum<T> {
        self.e_incremental
    }

    /// `|(S² − M) − E_incremental| / max(1, E_incremental)`.
    pub fn identity_residual(&self) -> T {
        let inc = self.e_incremental();
        (self.e() - inc).abs() / inc.max(T::one())
    }

    /// Absorbs the next term and returns the jump `2 a_n S_{n−1}`.
    pub fn push(&mut self, term: &WeightedPrimeTerm<T>) -> Result<T> {
        if term.index != self.n + 1 {
            return Err(Error::Sequencing(format!(
                "expected term index {}, got {}",
                self.n + 1,
                term.index
            )));
        }
        if term.prime <= self.last_prime {
            return Err(Error::Sequencing(format!(
                "prime {} does not exceed last absorbed prime {}",
                term.prime, self.last_prime
            )));
        }
        let jump = T::lit(2.0) * term.weight * self.s();
        self.e_incremental.add(jump);
        self.s.add(term.weight);
        self.m.add(term.weight_sq);
        self.n += 1;
        self.last_prime = term.prime;
        Ok(jump)
    }

    /// Builds the term for the next prime and absorbs it.
    pub fn absorb(&mut self, prime: u64) -> Result<WeightedPrimeTerm<T>> {
        let term = make_term(self.n + 1, prime)?;
        self.push(&term)?;
        Ok(term)
    }

    /// Snapshot at `x`. The caller guarantees that no unabsorbed prime is `≤ x`;
    /// use [`SumState::snapshot_within`] when the next prime is known.
    pub fn snapshot(&self, x: T) -> Result<Checkpoint<T>> {
        let floor = floor_u64(x)?;
        if floor < self.last_prime {
            return Err(Error::Sequencing(format!(
                "snapshot at x = {x} precedes last absorbed prime {}",
                self.last_prime
            )));
        }
        let s = self.s();
        let m = self.m();
        let checkpoint = Checkpoint { x, pi: self.n, s, m, e: s * s - m, ratios: None };
        if x >= T::lit(3.0) {
            asymptotics::compute_ratios(&checkpoint)
        } else {
            Ok(checkpoint)
        }
    }

    /// Snapshot at `x`, also checking that `next_prime` (the first prime not yet
    /// absorbed) lies beyond `x`.
    pub fn snapshot_within(&self, x: T, next_prime: Option<u64>) -> Result<Checkpoint<T>> {
        if let Some(q) = next_prime {
            if floor_u64(x)? >= q {
                return Err(Error::Sequencing(format!(
                    "snapshot at x = {x} but prime {q} <= x has not been absorbed"
                )));
            }
        }
        self.snapshot(x)
    }
}

fn floor_u64<T: Real>(x: T) -> Result<u64> {
    if !x.is_finite() || x < T::zero() {
        return Err(Error::Domain(format!("checkpoint position {x} must be finite and non-negative")));
    }
    x.floor()
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("checkpoint position {x} out of range")))
}

/// Derived ratios, defined for `x ≥ 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios<T> {
    /// `S / √(x / ln x)`
    pub r_s: T,
    /// `E / π(x)`
    pub r_e_pi: T,
    /// `E / (x / ln x)`
    pub r_e_x: T,
    /// `M − ln x`
    pub mertens_remainder: T,
}

/// Sums over `p ≤ x` frozen at grid point `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint<T> {
    pub x: T,
    pub pi: u64,
    pub s: T,
    pub m: T,
    pub e: T,
    pub ratios: Option<Ratios<T>>,
}

/// Geometric grid `x_start · ratioᵏ` below `x_max`, with `x_max` appended.
pub fn grid_points<T: Real>(x_start: T, x_max: T, ratio: T) -> Result<Vec<T>> {
    if !(ratio > T::one()) || !ratio.is_finite() {
        return Err(Error::Config(format!("grid ratio must exceed 1, got {ratio}")));
    }
    if !(x_start >= T::lit(3.0)) {
        return Err(Error::Config(format!("grid start must be at least 3, got {x_start}")));
    }
    if !(x_max >= x_start) || !x_max.is_finite() {
        return Err(Error::Config(format!("grid end {x_max} precedes start {x_start}")));
    }
    // Points within a relative hair of x_max collapse onto it.
    let cutoff = x_max * (T::one() - T::lit(1e-12));
    let mut points = Vec::new();
    let mut k: i32 = 0;
    loop {
        let x = x_start * ratio.powi(k);
        if x >= cutoff {
            break;
        }
        points.push(x);
        k = k
            .checked_add(1)
            .ok_or_else(|| Error::Config("grid has too many points".into()))?;
    }
    points.push(x_max);
    Ok(points)
}
