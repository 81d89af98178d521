//! One ordered pass: sieve → accumulate → snapshots, with observers.
//!
//! Snapshots are taken at the grid points and at "probe" points `g / r`
//! (one per grid point `g` and block ratio `r`). Probe snapshots give the
//! block operations exact sums at the bottom of each block without a second
//! sieve pass.

use crate::accumulate::{grid_points, make_term, Checkpoint, SumState, WeightedPrimeTerm};
use crate::asymptotics::{self, AnSnTracker, BlockStat, RatioBand};
use crate::calculus::{AbelDecomposition, AbelTracker};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sieve::{SegmentStream, SieveConfig, DEFAULT_SEGMENT_SIZE};
use crate::verify::{StreamAudit, VerificationRecord};

/// Hooks called while a sweep runs.
pub trait Observer<T: Real> {
    /// After `term` has been absorbed. `jump` is `2 a_n S_{n−1}` as added to
    /// the incremental E sum.
    fn on_term(&mut self, _term: &WeightedPrimeTerm<T>, _before: &SumState<T>, _after: &SumState<T>, _jump: T) {}

    fn on_checkpoint(&mut self, _point: &TaggedCheckpoint<T>, _state: &SumState<T>) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Grid,
    Probe,
}

impl PointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointKind::Grid => "grid",
            PointKind::Probe => "probe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedCheckpoint<T> {
    pub kind: PointKind,
    pub checkpoint: Checkpoint<T>,
}

/// Grid points plus their probes `g / r` (kept when `≥ 3`), ascending and
/// de-duplicated. A probe that coincides with a grid point is dropped.
pub fn schedule<T: Real>(grid: &[T], block_ratios: &[T]) -> Vec<(T, PointKind)> {
    let mut points: Vec<(T, PointKind)> = grid.iter().map(|&g| (g, PointKind::Grid)).collect();
    for &g in grid {
        for &r in block_ratios {
            let lo = g / r;
            if lo >= T::lit(3.0) {
                points.push((lo, PointKind::Probe));
            }
        }
    }
    normalize(points)
}

/// Sorts ascending and drops repeated positions; a grid entry wins over a
/// probe at the same `x`.
pub fn normalize<T: Real>(mut points: Vec<(T, PointKind)>) -> Vec<(T, PointKind)> {
    points.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("schedule points are finite")
            .then_with(|| (a.1 == PointKind::Probe).cmp(&(b.1 == PointKind::Probe)))
    });
    points.dedup_by(|later, earlier| later.0 == earlier.0);
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub x_max: u64,
    pub segment_size: u64,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct Sweep<T> {
    pub state: SumState<T>,
    /// Every prime `≤ absorbed_through` is in `state`.
    pub absorbed_through: u64,
    pub checkpoints: Vec<TaggedCheckpoint<T>>,
}

/// Continues `start` (which holds every prime `≤ absorbed_through`) up to
/// `cfg.x_max`, snapshotting each scheduled point in `(absorbed_through, x_max]`.
pub fn sweep<T: Real>(
    points: &[(T, PointKind)],
    cfg: &SweepConfig,
    start: SumState<T>,
    absorbed_through: u64,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<Sweep<T>> {
    let x_max = T::from_count(cfg.x_max);
    let begin = T::from_count(absorbed_through);
    let pending: Vec<(T, PointKind)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| x > begin && x <= x_max)
        .collect();

    let mut state = start;
    let mut checkpoints = Vec::with_capacity(pending.len());
    let mut next = 0;
    let mut emit = |state: &SumState<T>, x: T, kind: PointKind, upcoming: Option<u64>, obs: &mut [&mut dyn Observer<T>]| -> Result<()> {
        let checkpoint = state.snapshot_within(x, upcoming)?;
        let tagged = TaggedCheckpoint { kind, checkpoint };
        for o in obs.iter_mut() {
            o.on_checkpoint(&tagged, state);
        }
        checkpoints.push(tagged);
        Ok(())
    };

    if cfg.x_max > absorbed_through && cfg.x_max >= 2 {
        let sieve = SieveConfig::with_segment_size(cfg.x_max, cfg.segment_size)?;
        let mut stream = SegmentStream::new(sieve).after(absorbed_through);
        if cfg.threads != 1 {
            stream = stream.with_threads(cfg.threads)?;
        }
        for segment in stream {
            for &p in segment.primes() {
                while next < pending.len() && floor(pending[next].0) < p {
                    let (x, kind) = pending[next];
                    emit(&state, x, kind, Some(p), observers)?;
                    next += 1;
                }
                let before = state;
                let term = make_term(state.n() + 1, p)?;
                let jump = state.push(&term)?;
                for o in observers.iter_mut() {
                    o.on_term(&term, &before, &state, jump);
                }
            }
        }
    }
    for &(x, kind) in &pending[next..] {
        emit(&state, x, kind, None, observers)?;
    }
    Ok(Sweep { state, absorbed_through: cfg.x_max.max(absorbed_through), checkpoints })
}

fn floor<T: Real>(x: T) -> u64 {
    x.floor().to_u64().unwrap_or(u64::MAX)
}

/// Parameters of a full computation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings<T> {
    pub x_max: u64,
    pub grid_start: T,
    pub grid_ratio: T,
    /// Block ratio for the lower-bound inequality.
    pub a: T,
    pub lambdas: Vec<T>,
    pub segment_size: u64,
    pub threads: usize,
    /// Lower end of the window the ratio bands are taken over.
    pub band_min: T,
}

impl<T: Real> RunSettings<T> {
    pub fn new(x_max: u64) -> Self {
        Self {
            x_max,
            grid_start: T::lit(100.0),
            grid_ratio: T::lit(2f64.powf(0.25)),
            a: T::lit(8.0),
            lambdas: vec![T::lit(2.0), T::lit(4.0), T::lit(8.0)],
            segment_size: DEFAULT_SEGMENT_SIZE,
            threads: 1,
            band_min: T::lit(1e3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let x_max = T::from_count(self.x_max);
        if !(self.grid_start >= T::lit(3.0)) {
            return Err(Error::Config(format!("grid start must be at least 3, got {}", self.grid_start)));
        }
        if !(x_max >= self.grid_start) {
            return Err(Error::Config(format!(
                "x_max = {} is below grid start {}",
                self.x_max, self.grid_start
            )));
        }
        if !(self.grid_ratio > T::one()) {
            return Err(Error::Config(format!("grid ratio must exceed 1, got {}", self.grid_ratio)));
        }
        if !(self.a > T::one()) {
            return Err(Error::Config(format!("A must exceed 1, got {}", self.a)));
        }
        if let Some(l) = self.lambdas.iter().find(|&&l| !(l > T::one())) {
            return Err(Error::Config(format!("every lambda must exceed 1, got {l}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Vec<T>> {
        grid_points(self.grid_start, T::from_count(self.x_max), self.grid_ratio)
    }

    /// `A` followed by the λs: every ratio a probe is taken for.
    pub fn block_ratios(&self) -> Vec<T> {
        std::iter::once(self.a).chain(self.lambdas.iter().copied()).collect()
    }

    pub fn schedule(&self) -> Result<Vec<(T, PointKind)>> {
        self.validate()?;
        Ok(schedule(&self.grid()?, &self.block_ratios()))
    }

    /// Points at or below `x_max` that a run with a larger `x_max` (same grid
    /// and ratios) schedules but this one does not: the probes of geometric
    /// grid points beyond this grid, and a geometric point that collapsed onto
    /// `x_max`. Recording them lets the larger run resume from this one
    /// without revisiting primes. All are tagged as probes.
    pub fn lookahead(&self) -> Result<Vec<(T, PointKind)>> {
        self.validate()?;
        let x_max = T::from_count(self.x_max);
        let cutoff = x_max * (T::one() - T::lit(1e-12));
        let ratios = self.block_ratios();
        let reach = ratios.iter().fold(T::one(), |m, &r| m.max(r)) * x_max;
        let mut points = Vec::new();
        let mut k: i32 = 0;
        loop {
            // Same expression as `grid_points`, so positions agree bit for bit.
            let g = self.grid_start * self.grid_ratio.powi(k);
            if g > reach {
                break;
            }
            if g >= cutoff {
                if g <= x_max {
                    points.push((g, PointKind::Probe));
                }
                for &r in &ratios {
                    let lo = g / r;
                    if lo >= T::lit(3.0) && lo <= x_max {
                        points.push((lo, PointKind::Probe));
                    }
                }
            }
            k = k
                .checked_add(1)
                .ok_or_else(|| Error::Config("grid has too many points".into()))?;
        }
        Ok(points)
    }

    /// [`RunSettings::schedule`] plus [`RunSettings::lookahead`].
    pub fn resumable_schedule(&self) -> Result<Vec<(T, PointKind)>> {
        let mut points = self.schedule()?;
        points.extend(self.lookahead()?);
        Ok(normalize(points))
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig { x_max: self.x_max, segment_size: self.segment_size, threads: self.threads }
    }
}

/// A fresh pass from 2 to `x_max` with every stream-level check attached.
#[derive(Debug, Clone)]
pub struct Run<T> {
    pub settings: RunSettings<T>,
    pub checkpoints: Vec<TaggedCheckpoint<T>>,
    pub state: SumState<T>,
    pub audit: StreamAudit<T>,
    /// Decomposition at every grid point.
    pub abel: Vec<AbelDecomposition<T>>,
    pub an_sn: AnSnTracker<T>,
}

impl<T: Real> Run<T> {
    pub fn execute(settings: RunSettings<T>) -> Result<Self> {
        let points = settings.schedule()?;
        let mut audit = StreamAudit::new();
        let mut abel = AbelTracker::new();
        let band_max = T::from_count(settings.x_max);
        let mut an_sn = AnSnTracker::new(settings.band_min.min(band_max), band_max);
        let sweep = {
            let mut observers: [&mut dyn Observer<T>; 3] = [&mut audit, &mut abel, &mut an_sn];
            sweep(&points, &settings.sweep_config(), SumState::new(), 1, &mut observers)?
        };
        an_sn.finish();
        let abel = abel.decompositions().to_vec();
        Ok(Self { settings, checkpoints: sweep.checkpoints, state: sweep.state, audit, abel, an_sn })
    }

    pub fn grid(&self) -> impl Iterator<Item = &Checkpoint<T>> {
        self.checkpoints
            .iter()
            .filter(|c| c.kind == PointKind::Grid)
            .map(|c| &c.checkpoint)
    }

    pub fn grid_checkpoints(&self) -> Vec<Checkpoint<T>> {
        self.grid().copied().collect()
    }

    /// Grid and probe snapshots together, ascending in `x`.
    pub fn table(&self) -> Vec<Checkpoint<T>> {
        self.checkpoints.iter().map(|c| c.checkpoint).collect()
    }

    /// Sandwich data for every grid point and λ whose block bottom is `≥ 3`.
    pub fn blocks(&self) -> Vec<BlockStat<T>> {
        block_table(&self.table(), &self.grid_checkpoints(), &self.settings.lambdas)
    }

    /// Lower-bound inequality at every grid point with `x / A ≥ 3`.
    pub fn lower_bounds(&self) -> Vec<VerificationRecord> {
        lower_bound_table(&self.table(), &self.grid_checkpoints(), self.settings.a)
    }

    /// Bands of the checkpoint ratios and of `a_n S_{n−1}` over
    /// `[band_min, x_max]`.
    pub fn bands(&self) -> Result<Vec<RatioBand<T>>> {
        let hi = T::from_count(self.settings.x_max);
        let lo = self.settings.band_min.min(hi);
        let mut bands = asymptotics::ratio_bands(&self.grid_checkpoints(), lo, hi)?;
        if let Some(b) = self.an_sn.band() {
            bands.push(b);
        }
        Ok(bands)
    }
}

pub fn block_table<T: Real>(table: &[Checkpoint<T>], grid: &[Checkpoint<T>], lambdas: &[T]) -> Vec<BlockStat<T>> {
    let mut out = Vec::new();
    for cp in grid {
        for &l in lambdas {
            if let Ok(b) = asymptotics::block_sandwich(cp.x, l, table) {
                out.push(b);
            }
        }
    }
    out
}

pub fn lower_bound_table<T: Real>(table: &[Checkpoint<T>], grid: &[Checkpoint<T>], a: T) -> Vec<VerificationRecord> {
    grid.iter()
        .filter_map(|cp| asymptotics::lower_bound_check(cp.x, a, table).ok())
        .collect()
}
