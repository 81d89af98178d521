//! Exact structural identities of `E = S² − M`.
//!
//! * pair sum: `S_n² − M_n = 2 Σ_{i<j≤n} a_i a_j`, against a quadratic brute force;
//! * jump: `E_n − E_{n−1} = 2 a_n S_{n−1}` at every prime of a stream;
//! * `E` is non-negative and nondecreasing across checkpoints.
//!
//! Residuals are relative, normalised by `max(1, |rhs|)` so that checks whose
//! exact value is zero still have a meaningful tolerance.

use std::fmt;

use crate::accumulate::{make_term, Checkpoint, SumState, WeightedPrimeTerm};
use crate::compensated::CompensatedSum;
use crate::error::{Error, Result};
use crate::pipeline::Observer;
use crate::scalar::Real;
use crate::sieve::{primes, SieveConfig};

pub const PAIR_TOLERANCE: f64 = 1e-10;
pub const JUMP_TOLERANCE: f64 = 1e-9;
pub const MAX_BRUTE_FORCE_TERMS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    /// Term index `n`.
    Index(u64),
    /// Checkpoint position `x`.
    At(f64),
    /// Argument `t` of a function evaluation, not tied to a checkpoint.
    Arg(f64),
    /// The check summarises a whole run.
    Whole,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Index(n) => write!(f, "n={n}"),
            Location::At(x) => write!(f, "x={x:.17e}"),
            Location::Arg(t) => write!(f, "t={t:.17e}"),
            Location::Whole => f.write_str("all"),
        }
    }
}

/// How `lhs` is supposed to relate to `rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtLeast,
    AtMost,
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Equal => "eq",
            Relation::AtLeast => "ge",
            Relation::AtMost => "le",
        }
    }
}

/// One evaluated check. `pass` is exactly `residual ≤ tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub check_id: String,
    pub location: Location,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationRecord {
    /// Residual `|lhs − rhs| / max(1, |rhs|)`.
    pub fn equality(check_id: impl Into<String>, location: Location, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).abs() / rhs.abs().max(1.0);
        Self::with_residual(check_id, location, Relation::Equal, lhs, rhs, residual, tolerance)
    }

    /// `lhs ≥ rhs`; residual is the shortfall over `max(1, |rhs|)`.
    pub fn at_least(check_id: impl Into<String>, location: Location, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (rhs - lhs).max(0.0) / rhs.abs().max(1.0);
        Self::with_residual(check_id, location, Relation::AtLeast, lhs, rhs, residual, tolerance)
    }

    /// `lhs ≤ rhs`; residual is the excess over `max(1, |rhs|)`.
    pub fn at_most(check_id: impl Into<String>, location: Location, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).max(0.0) / rhs.abs().max(1.0);
        Self::with_residual(check_id, location, Relation::AtMost, lhs, rhs, residual, tolerance)
    }

    pub fn with_residual(
        check_id: impl Into<String>,
        location: Location,
        relation: Relation,
        lhs: f64,
        rhs: f64,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        // NaN compares false, so a NaN residual never passes.
        let pass = residual <= tolerance;
        Self { check_id: check_id.into(), location, relation, lhs, rhs, residual, tolerance, pass }
    }
}

/// `2 Σ_{i<j} a_i a_j` by a direct double loop.
pub fn pair_sum_bruteforce<T: Real>(terms: &[WeightedPrimeTerm<T>]) -> Result<T> {
    let n = terms.len() as u64;
    if n > MAX_BRUTE_FORCE_TERMS {
        return Err(Error::TooLarge { what: "brute-force terms", got: n, max: MAX_BRUTE_FORCE_TERMS });
    }
    let mut acc = CompensatedSum::new();
    for (i, ti) in terms.iter().enumerate() {
        for tj in &terms[i + 1..] {
            acc.add(ti.weight * tj.weight);
        }
    }
    Ok(T::lit(2.0) * acc.value())
}

/// `{1, 2, 4, …} ∩ [1, n]`, plus `n` itself.
pub fn log_samples(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |&k| k.checked_mul(2))
        .take_while(|&k| k <= n)
        .collect();
    if n >= 1 && out.last() != Some(&n) {
        out.push(n);
    }
    out
}

/// The first `count` primes as weighted terms.
pub fn first_terms<T: Real>(count: u64) -> Result<Vec<WeightedPrimeTerm<T>>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let c = count as f64;
    // p_n < n (ln n + ln ln n) for n ≥ 6.
    let bound = if count < 6 { 13 } else { (c * (c.ln() + c.ln().ln())).ceil() as u64 };
    primes(SieveConfig::new(bound)?)
        .take(count as usize)
        .enumerate()
        .map(|(i, p)| make_term(i as u64 + 1, p))
        .collect()
}

/// Pair identity at log-spaced `n ≤ n_max` over the first `n_max` primes.
pub fn check_pair_identity(n_max: u64) -> Result<Vec<VerificationRecord>> {
    if n_max > MAX_BRUTE_FORCE_TERMS {
        return Err(Error::TooLarge { what: "n_max", got: n_max, max: MAX_BRUTE_FORCE_TERMS });
    }
    let terms = first_terms::<f64>(n_max)?;
    check_pair_identity_with(&terms, &terms, PAIR_TOLERANCE)
}

/// Accumulates `streamed` and compares `S_n² − M_n` against the brute-force
/// pair sum over `reference` at each sampled `n`. Passing different slices
/// lets a corrupted stream be tested against clean reference weights.
pub fn check_pair_identity_with<T: Real>(
    streamed: &[WeightedPrimeTerm<T>],
    reference: &[WeightedPrimeTerm<T>],
    tolerance: f64,
) -> Result<Vec<VerificationRecord>> {
    if streamed.len() != reference.len() {
        return Err(Error::Config(format!(
            "streamed and reference term lists differ in length ({} vs {})",
            streamed.len(),
            reference.len()
        )));
    }
    let samples = log_samples(streamed.len() as u64);
    let mut state = SumState::new();
    let mut records = Vec::with_capacity(samples.len());
    let mut done = 0usize;
    for n in samples {
        for term in &streamed[done..n as usize] {
            state.push(term)?;
        }
        done = n as usize;
        let oracle = pair_sum_bruteforce(&reference[..done])?;
        records.push(VerificationRecord::equality(
            "pair_identity",
            Location::Index(n),
            state.e().to_f64_lossy(),
            oracle.to_f64_lossy(),
            tolerance,
        ));
    }
    Ok(records)
}

/// Per-term audit of the streaming sums.
///
/// Tracks the worst jump-identity residual, the worst drift between
/// `S² − M` and the incrementally summed jumps, strict growth of `S`, `M`
/// and `E`, and strict decrease of the weights from `p = 3` on.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamAudit<T> {
    pub terms: u64,
    pub max_jump_residual: T,
    pub max_jump_at: u64,
    pub max_identity_residual: T,
    pub max_identity_at: u64,
    pub growth_violations: u64,
    pub first_growth_violation: Option<u64>,
    pub weight_violations: u64,
    pub first_weight_violation: Option<u64>,
    prev_weight: Option<T>,
}

impl<T: Real> Default for StreamAudit<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> StreamAudit<T> {
    pub fn new() -> Self {
        Self {
            terms: 0,
            max_jump_residual: T::zero(),
            max_jump_at: 0,
            max_identity_residual: T::zero(),
            max_identity_at: 0,
            growth_violations: 0,
            first_growth_violation: None,
            weight_violations: 0,
            first_weight_violation: None,
            prev_weight: None,
        }
    }

    pub fn observe(&mut self, term: &WeightedPrimeTerm<T>, before: &SumState<T>, after: &SumState<T>, jump: T) {
        self.terms += 1;
        // E_n − E_{n−1} in factored form: subtracting two values of S²
        // directly cancels catastrophically once S is in the thousands.
        // Differencing the compensated parts separately keeps ΔS accurate to
        // the size of the correction term rather than to one ulp of S.
        let step = delta(&after.s_acc(), &before.s_acc()) * (after.s() + before.s())
            - delta(&after.m_acc(), &before.m_acc());
        let residual = (step - jump).abs() / jump.abs().max(T::one());
        // A NaN residual must register as the worst case.
        if residual.is_nan() || residual > self.max_jump_residual || self.max_jump_residual.is_nan() {
            self.max_jump_residual = residual;
            self.max_jump_at = term.index;
        }
        let drift = after.identity_residual();
        if drift.is_nan() || drift > self.max_identity_residual || self.max_identity_residual.is_nan() {
            self.max_identity_residual = drift;
            self.max_identity_at = term.index;
        }
        let grew = after.s() > before.s()
            && after.m() > before.m()
            && (term.index == 1 || after.e_incremental() > before.e_incremental());
        if !grew {
            self.growth_violations += 1;
            self.first_growth_violation.get_or_insert(term.prime);
        }
        if term.prime >= 5 {
            if let Some(prev) = self.prev_weight {
                if !(term.weight < prev) {
                    self.weight_violations += 1;
                    self.first_weight_violation.get_or_insert(term.prime);
                }
            }
        }
        self.prev_weight = Some(term.weight);
    }

    pub fn jump_record(&self, tolerance: f64) -> VerificationRecord {
        let r = self.max_jump_residual.to_f64_lossy();
        VerificationRecord::with_residual(
            "jump_identity",
            Location::Index(self.max_jump_at),
            Relation::Equal,
            r,
            0.0,
            r,
            tolerance,
        )
    }

    pub fn identity_record(&self, tolerance: f64) -> VerificationRecord {
        let r = self.max_identity_residual.to_f64_lossy();
        VerificationRecord::with_residual(
            "incremental_identity",
            Location::Index(self.max_identity_at),
            Relation::Equal,
            r,
            0.0,
            r,
            tolerance,
        )
    }

    pub fn growth_record(&self) -> VerificationRecord {
        let loc = self.first_growth_violation.map_or(Location::Whole, Location::Index);
        let v = self.growth_violations as f64;
        VerificationRecord::with_residual("sums_increasing", loc, Relation::Equal, v, 0.0, v, 0.0)
    }

    pub fn weight_record(&self) -> VerificationRecord {
        let loc = self.first_weight_violation.map_or(Location::Whole, Location::Index);
        let v = self.weight_violations as f64;
        VerificationRecord::with_residual("weights_decreasing", loc, Relation::Equal, v, 0.0, v, 0.0)
    }
}

impl<T: Real> Observer<T> for StreamAudit<T> {
    fn on_term(&mut self, term: &WeightedPrimeTerm<T>, before: &SumState<T>, after: &SumState<T>, jump: T) {
        self.observe(term, before, after, jump);
    }
}

fn delta<T: Real>(after: &CompensatedSum<T>, before: &CompensatedSum<T>) -> T {
    (after.sum() - before.sum()) + (after.comp() - before.comp())
}

/// Largest jump-identity residual over every prime `≤ x_max`.
pub fn check_jump_identity(x_max: u64) -> Result<VerificationRecord> {
    if x_max < 2 {
        return Ok(StreamAudit::<f64>::new().jump_record(JUMP_TOLERANCE));
    }
    let terms = primes(SieveConfig::new(x_max)?)
        .enumerate()
        .map(|(i, p)| make_term::<f64>(i as u64 + 1, p));
    check_jump_identity_terms(terms, JUMP_TOLERANCE)
}

/// Jump identity over an explicit term stream.
pub fn check_jump_identity_terms<T, I>(terms: I, tolerance: f64) -> Result<VerificationRecord>
where
    T: Real,
    I: IntoIterator<Item = Result<WeightedPrimeTerm<T>>>,
{
    let mut state = SumState::new();
    let mut audit = StreamAudit::new();
    for term in terms {
        let term = term?;
        let before = state;
        let jump = state.push(&term)?;
        audit.observe(&term, &before, &state, jump);
    }
    Ok(audit.jump_record(tolerance))
}

/// Passes iff every `E ≥ 0` and `E` never decreases along the list.
pub fn check_e_monotone<T: Real>(checkpoints: &[Checkpoint<T>]) -> VerificationRecord {
    let mut worst = 0.0f64;
    let mut worst_at = Location::Whole;
    let mut prev: Option<f64> = None;
    for cp in checkpoints {
        let e = cp.e.to_f64_lossy();
        let mut violation = (-e).max(0.0);
        if let Some(p) = prev {
            violation = violation.max(p - e);
        }
        if violation > worst || e.is_nan() {
            worst = if e.is_nan() { f64::NAN } else { violation };
            worst_at = Location::At(cp.x.to_f64_lossy());
        }
        prev = Some(e);
    }
    VerificationRecord::with_residual("e_monotone", worst_at, Relation::AtLeast, -worst, 0.0, worst, 0.0)
}

/// `sums_monotone`: `π`, `S` and `M` never decrease along the list. Residual
/// counts violations.
pub fn check_sums_monotone<T: Real>(checkpoints: &[Checkpoint<T>]) -> VerificationRecord {
    let mut violations = 0u64;
    let mut first = Location::Whole;
    for w in checkpoints.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !(b.pi >= a.pi && b.s >= a.s && b.m >= a.m) {
            violations += 1;
            if violations == 1 {
                first = Location::At(b.x.to_f64_lossy());
            }
        }
    }
    let v = violations as f64;
    VerificationRecord::with_residual("sums_monotone", first, Relation::Equal, v, 0.0, v, 0.0)
}
