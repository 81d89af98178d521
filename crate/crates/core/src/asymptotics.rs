//! Order-of-magnitude measurements over checkpoints.
//!
//! The identities here are asymptotic (`≍`), so nothing is asserted about
//! limiting values. What is checked exactly are the two monotone-weight
//! inequalities on a block `(x_lo, x]` with `x_lo ≥ 3`, where `w(t) = √(ln t / t)`
//! is decreasing:
//!
//! * `S(x) ≥ (M(x) − M(x_lo)) / w(x_lo)`,
//! * `Δπ · w(x) ≤ S(x) − S(x_lo) ≤ Δπ · w(x_lo)`.
//!
//! The ratios `S/√(x/ln x)`, `E/π(x)`, `E ln x / x`, `M − ln x` and
//! `a_n S_{n−1}` are reported as inf/sup bands.

use std::fmt;

use crate::accumulate::{Checkpoint, Ratios, SumState, WeightedPrimeTerm};
use crate::calculus::eval_w;
use crate::error::{Error, Result};
use crate::pipeline::{Observer, PointKind, TaggedCheckpoint};
use crate::scalar::Real;
use crate::sieve::{primes, SieveConfig};
use crate::verify::{Location, Relation, VerificationRecord};

/// Relative rounding slack on the exact block inequalities.
pub const BLOCK_SLACK: f64 = 1e-12;

/// Fills in the ratio fields. Requires `x ≥ 3`.
pub fn compute_ratios<T: Real>(checkpoint: &Checkpoint<T>) -> Result<Checkpoint<T>> {
    let x = checkpoint.x;
    if !(x >= T::lit(3.0)) {
        return Err(Error::Domain(format!("ratios need x >= 3, got {x}")));
    }
    if checkpoint.pi == 0 {
        return Err(Error::Domain(format!("checkpoint at x = {x} holds no primes")));
    }
    let log_x = x.ln();
    let scale = x / log_x;
    let ratios = Ratios {
        r_s: checkpoint.s / scale.sqrt(),
        r_e_pi: checkpoint.e / T::from_count(checkpoint.pi),
        r_e_x: checkpoint.e / scale,
        mertens_remainder: checkpoint.m - log_x,
    };
    Ok(Checkpoint { ratios: Some(ratios), ..*checkpoint })
}

/// Random access to sums at recorded positions.
pub trait SumAccess<T> {
    /// The recorded checkpoint with the largest `x` not exceeding `x`.
    fn at_or_below(&self, x: T) -> Option<&Checkpoint<T>>;
}

/// Sorted ascending by `x`.
impl<T: Real> SumAccess<T> for [Checkpoint<T>] {
    fn at_or_below(&self, x: T) -> Option<&Checkpoint<T>> {
        let idx = self.partition_point(|c| c.x <= x);
        idx.checked_sub(1).map(|i| &self[i])
    }
}

impl<T: Real> SumAccess<T> for Vec<Checkpoint<T>> {
    fn at_or_below(&self, x: T) -> Option<&Checkpoint<T>> {
        self.as_slice().at_or_below(x)
    }
}

/// Block `(x_lo, x]` with `x_lo` the recorded point at or below `x / lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStat<T> {
    pub x: T,
    pub lambda: T,
    pub x_lo: T,
    pub delta_s: T,
    pub delta_pi: u64,
    /// `Δπ · w(x)`
    pub lower: T,
    /// `Δπ · w(x_lo)`
    pub upper: T,
}

impl<T: Real> BlockStat<T> {
    pub fn holds(&self) -> bool {
        let slack = T::lit(BLOCK_SLACK);
        self.lower <= self.delta_s + slack * self.delta_s.abs()
            && self.delta_s <= self.upper + slack * self.upper.abs()
    }

    /// Two records: `ΔS ≥ lower` and `ΔS ≤ upper`.
    pub fn records(&self) -> [VerificationRecord; 2] {
        let id = format!("block_sandwich_l{}", self.lambda);
        let at = Location::At(self.x.to_f64_lossy());
        let ds = self.delta_s.to_f64_lossy();
        let lo = self.lower.to_f64_lossy();
        let hi = self.upper.to_f64_lossy();
        let tol = |scale: f64| BLOCK_SLACK * scale.abs() / scale.abs().max(1.0);
        [
            VerificationRecord::at_least(format!("{id}_lower"), at, ds, lo, tol(ds)),
            VerificationRecord::at_most(format!("{id}_upper"), at, ds, hi, tol(hi)),
        ]
    }
}

fn block_ends<T: Real, D: SumAccess<T> + ?Sized>(x: T, ratio: T, data: &D) -> Result<(Checkpoint<T>, Checkpoint<T>)> {
    if !(ratio > T::one()) {
        return Err(Error::Config(format!("block ratio must exceed 1, got {ratio}")));
    }
    if !(x / ratio >= T::lit(3.0)) {
        return Err(Error::Domain(format!("block bottom x/{ratio} = {} is below 3", x / ratio)));
    }
    let top = *data
        .at_or_below(x)
        .ok_or_else(|| Error::Domain(format!("no sums recorded at or below x = {x}")))?;
    let bottom = *data
        .at_or_below(x / ratio)
        .ok_or_else(|| Error::Domain(format!("no sums recorded at or below x/{ratio}")))?;
    if !(bottom.x >= T::lit(3.0)) {
        return Err(Error::Domain(format!("snapped block bottom {} is below 3", bottom.x)));
    }
    Ok((top, bottom))
}

/// `S(x) ≥ (M(x) − M(x/A)) / w(x/A)`, with slack `10⁻¹² S(x)`.
pub fn lower_bound_check<T: Real, D: SumAccess<T> + ?Sized>(x: T, a: T, data: &D) -> Result<VerificationRecord> {
    let (top, bottom) = block_ends(x, a, data)?;
    let s = top.s.to_f64_lossy();
    let numerator = (top.m - bottom.m).to_f64_lossy();
    let rhs = numerator / eval_w(bottom.x)?.to_f64_lossy();
    let tol = BLOCK_SLACK * s / rhs.abs().max(1.0);
    Ok(VerificationRecord::at_least("lower_bound", Location::At(top.x.to_f64_lossy()), s, rhs, tol))
}

pub fn block_sandwich<T: Real, D: SumAccess<T> + ?Sized>(x: T, lambda: T, data: &D) -> Result<BlockStat<T>> {
    let (top, bottom) = block_ends(x, lambda, data)?;
    let delta_pi = top.pi - bottom.pi;
    let count = T::from_count(delta_pi);
    Ok(BlockStat {
        x: top.x,
        lambda,
        x_lo: bottom.x,
        delta_s: top.s - bottom.s,
        delta_pi,
        lower: count * eval_w(top.x)?,
        upper: count * eval_w(bottom.x)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Series {
    RS,
    REPi,
    REX,
    MertensRemainder,
    AnS,
}

impl Series {
    pub const CHECKPOINT_SERIES: [Series; 4] = [Series::RS, Series::REPi, Series::REX, Series::MertensRemainder];

    pub fn name(&self) -> &'static str {
        match self {
            Series::RS => "r_S",
            Series::REPi => "r_E_pi",
            Series::REX => "r_E_x",
            Series::MertensRemainder => "mertens_remainder",
            Series::AnS => "anS",
        }
    }

    pub fn of<T: Real>(&self, checkpoint: &Checkpoint<T>) -> Option<T> {
        let r = checkpoint.ratios?;
        match self {
            Series::RS => Some(r.r_s),
            Series::REPi => Some(r.r_e_pi),
            Series::REX => Some(r.r_e_x),
            Series::MertensRemainder => Some(r.mertens_remainder),
            Series::AnS => None,
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Empirical inf/sup of one series over `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBand<T> {
    pub series: Series,
    pub x_min: T,
    pub x_max: T,
    pub inf_value: T,
    pub inf_at: T,
    pub sup_value: T,
    pub sup_at: T,
}

impl<T: Real> RatioBand<T> {
    pub fn width(&self) -> T {
        self.sup_value - self.inf_value
    }
}

/// Running inf/sup with arg-locations; the first extreme wins ties.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Extremes<T> {
    inf: (T, T),
    sup: (T, T),
}

impl<T: Real> Extremes<T> {
    fn new(value: T, at: T) -> Self {
        Self { inf: (value, at), sup: (value, at) }
    }

    fn update(&mut self, value: T, at: T) {
        if value < self.inf.0 {
            self.inf = (value, at);
        }
        if value > self.sup.0 {
            self.sup = (value, at);
        }
    }

    fn band(&self, series: Series, x_min: T, x_max: T) -> RatioBand<T> {
        RatioBand {
            series,
            x_min,
            x_max,
            inf_value: self.inf.0,
            inf_at: self.inf.1,
            sup_value: self.sup.0,
            sup_at: self.sup.1,
        }
    }
}

/// Band of one checkpoint series over checkpoints with `x ∈ [x_min, x_max]`.
pub fn series_band<T: Real>(checkpoints: &[Checkpoint<T>], series: Series, x_min: T, x_max: T) -> Result<RatioBand<T>> {
    let mut ext: Option<Extremes<T>> = None;
    for cp in checkpoints.iter().filter(|c| c.x >= x_min && c.x <= x_max) {
        let Some(v) = series.of(cp) else { continue };
        match ext.as_mut() {
            Some(e) => e.update(v, cp.x),
            None => ext = Some(Extremes::new(v, cp.x)),
        }
    }
    ext.map(|e| e.band(series, x_min, x_max))
        .ok_or_else(|| Error::Config(format!("no checkpoint with {series} in [{x_min}, {x_max}]")))
}

/// Bands of the four checkpoint ratios over `[x_min, x_max]`.
pub fn ratio_bands<T: Real>(checkpoints: &[Checkpoint<T>], x_min: T, x_max: T) -> Result<Vec<RatioBand<T>>> {
    Series::CHECKPOINT_SERIES
        .iter()
        .map(|&s| series_band(checkpoints, s, x_min, x_max))
        .collect()
}

/// The empirical constants: bands over every checkpoint with `x ≥ x_min`.
pub fn empirical_constants<T: Real>(checkpoints: &[Checkpoint<T>], x_min: T) -> Result<Vec<RatioBand<T>>> {
    ratio_bands(checkpoints, x_min, T::infinity())
}

/// Width of the Mertens remainder band over `[x_min, x_max]`.
pub fn mertens_width<T: Real>(checkpoints: &[Checkpoint<T>], x_min: T, x_max: T) -> Result<T> {
    Ok(series_band(checkpoints, Series::MertensRemainder, x_min, x_max)?.width())
}

/// `mertens_contraction`: the width of `M − ln x` over `late` is strictly
/// smaller than over `early`. The residual is the ratio of the two widths.
pub fn check_mertens_contraction<T: Real>(checkpoints: &[Checkpoint<T>], early: (T, T), late: (T, T)) -> Result<VerificationRecord> {
    let early_w = mertens_width(checkpoints, early.0, early.1)?.to_f64_lossy();
    let late_w = mertens_width(checkpoints, late.0, late.1)?.to_f64_lossy();
    let ratio = late_w / early_w;
    // Strict inequality: the tolerance is the largest double below 1.
    Ok(VerificationRecord::with_residual(
        "mertens_contraction",
        Location::Whole,
        Relation::AtMost,
        late_w,
        early_w,
        ratio,
        1.0 - f64::EPSILON / 2.0,
    ))
}

/// `ratios_positive`: every checkpoint at `x ≥ 3` carries ratios, and `r_S`,
/// `r_E_pi` and `r_E_x` are strictly positive. Residual counts violations.
pub fn check_ratios_positive<T: Real>(checkpoints: &[Checkpoint<T>]) -> VerificationRecord {
    let mut violations = 0u64;
    let mut first = Location::Whole;
    for cp in checkpoints.iter().filter(|c| c.x >= T::lit(3.0)) {
        let ok = cp
            .ratios
            .is_some_and(|r| r.r_s > T::zero() && r.r_e_pi > T::zero() && r.r_e_x > T::zero());
        if !ok {
            violations += 1;
            if violations == 1 {
                first = Location::At(cp.x.to_f64_lossy());
            }
        }
    }
    let v = violations as f64;
    VerificationRecord::with_residual("ratios_positive", first, Relation::Equal, v, 0.0, v, 0.0)
}

/// One sampled value of `a_n S_{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnSnSample<T> {
    pub n: u64,
    pub prime: u64,
    pub value: T,
}

/// Observer for `a_n S_{n−1} = (jump)/2`.
///
/// Keeps samples at `n = 1, 2, 4, …` and the final `n`, plus the exact
/// inf/sup over every prime in `[band_min, band_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnSnTracker<T> {
    band_min: T,
    band_max: T,
    samples: Vec<AnSnSample<T>>,
    last: Option<AnSnSample<T>>,
    extremes: Option<Extremes<T>>,
}

impl<T: Real> AnSnTracker<T> {
    pub fn new(band_min: T, band_max: T) -> Self {
        Self { band_min, band_max, samples: Vec::new(), last: None, extremes: None }
    }

    pub fn observe(&mut self, term: &WeightedPrimeTerm<T>, before: &SumState<T>) {
        let value = term.weight * before.s();
        let sample = AnSnSample { n: term.index, prime: term.prime, value };
        if term.index.is_power_of_two() {
            self.samples.push(sample);
        }
        self.last = Some(sample);
        let p = T::from_count(term.prime);
        if p >= self.band_min && p <= self.band_max {
            match self.extremes.as_mut() {
                Some(e) => e.update(value, p),
                None => self.extremes = Some(Extremes::new(value, p)),
            }
        }
    }

    /// Appends the final term as a sample if it is not a power of two.
    pub fn finish(&mut self) {
        if let Some(last) = self.last {
            if self.samples.last().map(|s| s.n) != Some(last.n) {
                self.samples.push(last);
            }
        }
    }

    pub fn samples(&self) -> &[AnSnSample<T>] {
        &self.samples
    }

    /// `(min, max)` over samples with `n ≥ 2` (the `n = 1` value is always 0).
    pub fn sample_range(&self) -> Option<(T, T)> {
        let mut it = self.samples.iter().filter(|s| s.n >= 2).map(|s| s.value);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    pub fn band(&self) -> Option<RatioBand<T>> {
        self.extremes.map(|e| e.band(Series::AnS, self.band_min, self.band_max))
    }
}

impl<T: Real> Observer<T> for AnSnTracker<T> {
    fn on_term(&mut self, term: &WeightedPrimeTerm<T>, before: &SumState<T>, _after: &SumState<T>, _jump: T) {
        self.observe(term, before);
    }

    fn on_checkpoint(&mut self, _point: &TaggedCheckpoint<T>, _state: &SumState<T>) {}
}

/// `a_n S_{n−1}` sampled over all primes `≤ x_max`; the band covers `[3, x_max]`.
pub fn an_sn_series<T: Real>(x_max: u64) -> Result<AnSnTracker<T>> {
    if x_max < 3 {
        return Err(Error::Domain(format!("a_n S_(n-1) series needs x_max >= 3, got {x_max}")));
    }
    let mut state = SumState::new();
    let mut tracker = AnSnTracker::new(T::lit(3.0), T::from_count(x_max));
    for p in primes(SieveConfig::new(x_max)?) {
        let before = state;
        let term = state.absorb(p)?;
        tracker.observe(&term, &before);
    }
    tracker.finish();
    Ok(tracker)
}

/// Every tagged checkpoint of the given kind.
pub fn of_kind<T: Real>(points: &[TaggedCheckpoint<T>], kind: PointKind) -> Vec<Checkpoint<T>> {
    points.iter().filter(|p| p.kind == kind).map(|p| p.checkpoint).collect()
}
