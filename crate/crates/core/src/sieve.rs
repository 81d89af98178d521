//! Segmented, odds-only sieve of Eratosthenes.
//!
//! Base primes up to `√limit` are computed once; the range `(1, limit]` is
//! then cut into windows `(lo, hi]` holding `segment_size` odd numbers each
//! and sieved independently. Windows can be sieved on a thread pool, but the
//! stream always hands them out in ascending order of `lo`.

use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest accepted sieve limit, `2⁶³ − 1`.
pub const MAX_LIMIT: u64 = (1 << 63) - 1;
pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 20;
pub const MIN_SEGMENT_SIZE: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    limit: u64,
    segment_size: u64,
}

impl SieveConfig {
    pub fn new(limit: u64) -> Result<Self> {
        Self::with_segment_size(limit, DEFAULT_SEGMENT_SIZE)
    }

    pub fn with_segment_size(limit: u64, segment_size: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::Config(format!("sieve limit must be at least 2, got {limit}")));
        }
        if limit > MAX_LIMIT {
            return Err(Error::Config(format!("sieve limit {limit} exceeds 2^63 - 1")));
        }
        if segment_size < MIN_SEGMENT_SIZE {
            return Err(Error::Config(format!(
                "segment size must be at least {MIN_SEGMENT_SIZE}, got {segment_size}"
            )));
        }
        Ok(Self { limit, segment_size })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Number of odd integers covered by one segment.
    pub fn segment_size(&self) -> u64 {
        self.segment_size
    }
}

/// The primes in the half-open window `(lo, hi]`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSegment {
    lo: u64,
    hi: u64,
    primes: Vec<u64>,
}

impl PrimeSegment {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn into_primes(self) -> Vec<u64> {
        self.primes
    }
}

/// All primes `≤ bound`, ascending. Returns an empty list for `bound < 2`.
pub fn base_primes(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    if bound > 1 << 24 {
        // Large bounds go through the segmented path to keep memory flat.
        let cfg = SieveConfig::new(bound).expect("bound validated above");
        return stream_segments(cfg).flat_map(PrimeSegment::into_primes).collect();
    }
    let n = bound as usize;
    // composite[i] describes the odd number 2i + 1.
    let mut composite = vec![false; n / 2 + 1];
    let mut primes = vec![2];
    let mut i = 1;
    while 2 * i < n {
        if !composite[i] {
            let p = 2 * i + 1;
            primes.push(p as u64);
            let mut j = p * p;
            while j <= n {
                composite[j / 2] = true;
                j += 2 * p;
            }
        }
        i += 1;
    }
    primes
}

/// π(limit), the number of primes `≤ limit`.
pub fn prime_count(limit: u64) -> u64 {
    match SieveConfig::new(limit.min(MAX_LIMIT)) {
        Ok(cfg) => stream_segments(cfg).map(|s| s.len() as u64).sum(),
        Err(_) => 0,
    }
}

/// Ordered single-threaded segment stream over `(1, cfg.limit()]`.
pub fn stream_segments(cfg: SieveConfig) -> SegmentStream {
    SegmentStream::new(cfg)
}

/// Iterator over [`PrimeSegment`]s in ascending order.
///
/// With more than one thread, batches of consecutive windows are sieved in
/// parallel and buffered; delivery order is unchanged.
pub struct SegmentStream {
    cfg: SieveConfig,
    base: Arc<Vec<u64>>,
    next_lo: u64,
    threads: usize,
    pool: Option<rayon::ThreadPool>,
    ready: VecDeque<PrimeSegment>,
}

impl SegmentStream {
    pub fn new(cfg: SieveConfig) -> Self {
        let root = cfg.limit.isqrt();
        // Odd base primes only; 2 is handled by skipping even numbers.
        let base: Vec<u64> = base_primes(root).into_iter().filter(|&p| p > 2).collect();
        Self {
            cfg,
            base: Arc::new(base),
            next_lo: 1,
            threads: 1,
            pool: None,
            ready: VecDeque::new(),
        }
    }

    /// Restricts the stream to primes strictly greater than `start`.
    pub fn after(mut self, start: u64) -> Self {
        self.next_lo = start.max(1);
        self
    }

    /// Sieves up to `threads` windows concurrently. `0` means the rayon default.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build sieve thread pool: {e}")))?;
        self.threads = pool.current_num_threads().max(1);
        self.pool = (self.threads > 1).then_some(pool);
        Ok(self)
    }

    pub fn config(&self) -> SieveConfig {
        self.cfg
    }

    fn next_window(&mut self) -> Option<(u64, u64)> {
        if self.next_lo >= self.cfg.limit {
            return None;
        }
        let lo = self.next_lo;
        let hi = lo.saturating_add(2 * self.cfg.segment_size).min(self.cfg.limit);
        self.next_lo = hi;
        Some((lo, hi))
    }

    fn refill(&mut self) {
        let batch = self.threads;
        let windows: Vec<(u64, u64)> = std::iter::from_fn(|| self.next_window()).take(batch).collect();
        let base = Arc::clone(&self.base);
        let sieve = |&(lo, hi): &(u64, u64)| sieve_window(lo, hi, &base);
        let segments: Vec<PrimeSegment> = match &self.pool {
            Some(pool) => pool.install(|| windows.par_iter().map(sieve).collect()),
            None => windows.iter().map(sieve).collect(),
        };
        self.ready.extend(segments);
    }
}

impl Iterator for SegmentStream {
    type Item = PrimeSegment;

    fn next(&mut self) -> Option<PrimeSegment> {
        if self.ready.is_empty() {
            self.refill();
        }
        self.ready.pop_front()
    }
}

/// Flattened ascending prime stream for `cfg`.
pub fn primes(cfg: SieveConfig) -> impl Iterator<Item = u64> {
    stream_segments(cfg).flat_map(PrimeSegment::into_primes)
}

/// Sieves `(lo, hi]` with the odd base primes `≤ √limit`.
fn sieve_window(lo: u64, hi: u64, odd_base: &[u64]) -> PrimeSegment {
    let mut primes = Vec::new();
    if lo < 2 && hi >= 2 {
        primes.push(2);
    }
    let first = if lo.is_multiple_of(2) { lo + 1 } else { lo + 2 };
    let first = first.max(3);
    if hi < first {
        return PrimeSegment { lo, hi, primes };
    }
    let count = ((hi - first) / 2 + 1) as usize;
    let mut composite = vec![false; count];
    for &p in odd_base {
        let sq = p * p;
        if sq > hi {
            break;
        }
        let mut m = first.div_ceil(p) * p;
        if m % 2 == 0 {
            m += p;
        }
        let mut j = m.max(sq);
        while j <= hi {
            composite[((j - first) / 2) as usize] = true;
            j += 2 * p;
        }
    }
    primes.extend(
        composite
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| first + 2 * i as u64),
    );
    PrimeSegment { lo, hi, primes }
}
