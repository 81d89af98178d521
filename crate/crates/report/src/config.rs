use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use prime_sums::calculus::{ABEL_TOLERANCE, DERIVATIVE_TOLERANCE};
use prime_sums::pipeline::RunSettings;
use prime_sums::sieve::DEFAULT_SEGMENT_SIZE;
use prime_sums::verify::{JUMP_TOLERANCE, PAIR_TOLERANCE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ReportError, Result};

pub const CHECKPOINT_FILE: &str = "checkpoints.txt";
pub const CHECKPOINT_CSV: &str = "checkpoints.csv";
pub const VERIFICATION_CSV: &str = "verification.csv";
pub const REPORT_JSON: &str = "report.json";

/// Quadrature tolerance for the main-term identity; the record passes at ten
/// times this.
pub const MAIN_TERM_TOLERANCE: f64 = 1e-9;
pub const INCREMENTAL_TOLERANCE: f64 = 1e-10;

/// Check ids whose tolerance `--tol` may override, with their defaults.
pub const DEFAULT_TOLERANCES: [(&str, f64); 6] = [
    ("pair_identity", PAIR_TOLERANCE),
    ("jump_identity", JUMP_TOLERANCE),
    ("incremental_identity", INCREMENTAL_TOLERANCE),
    ("abel", ABEL_TOLERANCE),
    ("main_term", MAIN_TERM_TOLERANCE),
    ("derivatives", DERIVATIVE_TOLERANCE),
];

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub x_max: u64,
    pub grid_start: f64,
    pub grid_ratio: f64,
    pub segment_size: u64,
    #[serde(rename = "A")]
    pub a: f64,
    pub lambdas: Vec<f64>,
    /// Overrides only; see [`RunConfig::tolerance`].
    pub tolerances: BTreeMap<String, f64>,
    pub out_dir: PathBuf,
    pub resume_from: Option<PathBuf>,
    pub threads: usize,
}

impl RunConfig {
    pub fn new(x_max: u64, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            x_max,
            grid_start: 100.0,
            grid_ratio: 2f64.powf(0.25),
            segment_size: DEFAULT_SEGMENT_SIZE,
            a: 8.0,
            lambdas: vec![2.0, 4.0, 8.0],
            tolerances: BTreeMap::new(),
            out_dir: out_dir.into(),
            resume_from: None,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(ReportError::Usage(m));
        if !(self.grid_start >= 3.0) || !self.grid_start.is_finite() {
            return usage(format!("--grid-start must be a finite number >= 3, got {}", self.grid_start));
        }
        if !((self.x_max as f64) >= self.grid_start) {
            return usage(format!("--x-max {} is below --grid-start {}", self.x_max, self.grid_start));
        }
        if !(self.grid_ratio > 1.0) || !self.grid_ratio.is_finite() {
            return usage(format!("--grid-ratio must exceed 1, got {}", self.grid_ratio));
        }
        if !(self.a > 1.0) || !self.a.is_finite() {
            return usage(format!("--A must exceed 1, got {}", self.a));
        }
        if self.lambdas.is_empty() {
            return usage("at least one --lambda is required".into());
        }
        if let Some(l) = self.lambdas.iter().find(|&&l| !(l > 1.0) || !l.is_finite()) {
            return usage(format!("every --lambda must exceed 1, got {l}"));
        }
        if self.threads == 0 {
            return usage("--threads must be at least 1".into());
        }
        for (id, &tol) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(known, _)| known == id) {
                let known: Vec<&str> = DEFAULT_TOLERANCES.iter().map(|(k, _)| *k).collect();
                return usage(format!("unknown check id `{id}` in --tol (known: {})", known.join(", ")));
            }
            if !(tol > 0.0) || !tol.is_finite() {
                return usage(format!("tolerance for `{id}` must be positive, got {tol}"));
            }
        }
        if let Some(main) = self.tolerances.get("main_term") {
            if *main < 1e-12 {
                return usage(format!("tolerance for `main_term` must be at least 1e-12, got {main}"));
            }
        }
        // Segment-size bounds are the sieve's to check.
        prime_sums::SieveConfig::with_segment_size(self.x_max.max(2), self.segment_size)
            .map_err(|e| ReportError::Usage(format!("--segment-size: {e}")))?;
        Ok(())
    }

    /// Effective tolerance for `check_id`: the override if given, else the
    /// default.
    pub fn tolerance(&self, check_id: &str) -> f64 {
        self.tolerances.get(check_id).copied().unwrap_or_else(|| {
            DEFAULT_TOLERANCES
                .iter()
                .find(|(id, _)| *id == check_id)
                .map(|(_, t)| *t)
                .unwrap_or_else(|| panic!("no default tolerance for `{check_id}`"))
        })
    }

    pub fn settings(&self) -> RunSettings<f64> {
        RunSettings {
            x_max: self.x_max,
            grid_start: self.grid_start,
            grid_ratio: self.grid_ratio,
            a: self.a,
            lambdas: self.lambdas.clone(),
            segment_size: self.segment_size,
            threads: self.threads,
            ..RunSettings::new(self.x_max)
        }
    }

    /// Fields that decide where snapshots are taken. `x_max` is deliberately
    /// left out so a finished run can be extended; segment size and thread
    /// count do not change any result.
    pub fn accumulation_fields(&self) -> AccumulationFields {
        let mut lambdas = self.lambdas.clone();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        AccumulationFields { grid_start: self.grid_start, grid_ratio: self.grid_ratio, a: self.a, lambdas }
    }

    pub fn config_hash(&self) -> String {
        self.accumulation_fields().hash()
    }

    /// Checkpoint file read by `verify` and `report`: `--resume` if given,
    /// else the one in the output directory.
    pub fn checkpoint_source(&self) -> PathBuf {
        self.resume_from.clone().unwrap_or_else(|| self.checkpoint_path())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out_dir.join(CHECKPOINT_FILE)
    }

    pub fn out_path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// The hashed part of a configuration, also echoed into checkpoint files so
/// a refused resume can say what changed.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulationFields {
    pub grid_start: f64,
    pub grid_ratio: f64,
    pub a: f64,
    /// Sorted, without repeats.
    pub lambdas: Vec<f64>,
}

impl AccumulationFields {
    /// `key value` lines, reals in round-trip exact scientific notation.
    pub fn canonical_lines(&self) -> Vec<(&'static str, String)> {
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| real(*l)).collect();
        vec![
            ("grid_start", real(self.grid_start)),
            ("grid_ratio", real(self.grid_ratio)),
            ("A", real(self.a)),
            ("lambdas", lambdas.join(" ")),
        ]
    }

    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.canonical_lines() {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        format!("{:x}", hasher.finalize())
    }

    /// Human-readable list of fields that differ from `other`.
    pub fn differences(&self, other: &AccumulationFields) -> Vec<String> {
        self.canonical_lines()
            .into_iter()
            .zip(other.canonical_lines())
            .filter(|(a, b)| a.1 != b.1)
            .map(|(a, b)| format!("{} {} -> {}", a.0, a.1, b.1))
            .collect()
    }
}

/// 17 significant digits: every binary64 value round-trips.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}
