//! The JSON report bundle.
//!
//! Schema (`primesums-report/1`), top-level keys:
//!
//! | key            | contents                                                        |
//! |----------------|-----------------------------------------------------------------|
//! | `schema`       | the string `primesums-report/1`                                 |
//! | `config`       | the run configuration as given                                  |
//! | `config_hash`  | SHA-256 of the grid fields, as in the checkpoint file           |
//! | `tolerances`   | effective tolerance per check id                                |
//! | `checkpoints`  | every snapshot: `kind`, `x`, `pi`, `S`, `M`, `E` and the ratios |
//! | `verification` | one entry per check, `pass` plus the compared values            |
//! | `bands`        | inf/sup of each ratio series over `[10³, x_max]`                |
//! | `blocks`       | the λ-block sandwich data per grid point                        |
//! | `abel`         | the Abel decomposition per grid point                           |
//! | `an_s_samples` | `a_n S_{n−1}` at `n = 2, 4, 8, …`                                |
//! | `metadata`     | wall time, prime count, versions, creation time                 |
//!
//! Non-finite reals are written as `null`.

use std::collections::BTreeMap;

use prime_sums::asymptotics::AnSnSample;
use prime_sums::pipeline::TaggedCheckpoint;
use prime_sums::{AbelDecomposition, BlockStat, Location, RatioBand, VerificationRecord};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const REPORT_SCHEMA: &str = "primesums-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBundle {
    pub schema: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub tolerances: BTreeMap<String, f64>,
    pub checkpoints: Vec<CheckpointRow>,
    pub verification: Vec<RecordRow>,
    pub bands: Vec<BandRow>,
    pub blocks: Vec<BlockRow>,
    pub abel: Vec<AbelRow>,
    pub an_s_samples: Vec<AnSnRow>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointRow {
    /// `grid` or `probe`.
    pub kind: String,
    pub x: f64,
    pub pi: u64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "r_S")]
    pub r_s: Option<f64>,
    #[serde(rename = "r_E_pi")]
    pub r_e_pi: Option<f64>,
    #[serde(rename = "r_E_x")]
    pub r_e_x: Option<f64>,
    pub mertens_remainder: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordRow {
    pub check_id: String,
    /// `n=…`, `x=…`, `t=…` or `all`.
    pub location: String,
    /// Set when the record sits at a checkpoint position.
    pub x: Option<f64>,
    /// `eq`, `ge` or `le`.
    pub relation: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandRow {
    pub series: String,
    pub x_min: f64,
    pub x_max: f64,
    pub inf: f64,
    pub inf_at: f64,
    pub sup: f64,
    pub sup_at: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockRow {
    pub x: f64,
    pub lambda: f64,
    pub x_lo: f64,
    pub delta_s: f64,
    pub delta_pi: u64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbelRow {
    pub x: f64,
    pub direct_s: f64,
    pub boundary_term: f64,
    pub integral_term: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnSnRow {
    pub n: u64,
    pub prime: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub library_version: String,
    pub checkpoint_file: String,
    pub checkpoint_created_unix: u64,
    pub created_unix: u64,
    pub wall_time_seconds: f64,
    pub prime_count: u64,
    pub records: usize,
    pub failed_records: usize,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&TaggedCheckpoint<f64>> for CheckpointRow {
    fn from(t: &TaggedCheckpoint<f64>) -> Self {
        let c = &t.checkpoint;
        Self {
            kind: t.kind.as_str().to_string(),
            x: c.x,
            pi: c.pi,
            s: c.s,
            m: c.m,
            e: c.e,
            r_s: c.ratios.map(|r| r.r_s),
            r_e_pi: c.ratios.map(|r| r.r_e_pi),
            r_e_x: c.ratios.map(|r| r.r_e_x),
            mertens_remainder: c.ratios.map(|r| r.mertens_remainder),
        }
    }
}

impl From<&VerificationRecord> for RecordRow {
    fn from(r: &VerificationRecord) -> Self {
        Self {
            check_id: r.check_id.clone(),
            location: r.location.to_string(),
            x: match r.location {
                Location::At(x) => Some(x),
                _ => None,
            },
            relation: r.relation.as_str().to_string(),
            lhs: finite(r.lhs),
            rhs: finite(r.rhs),
            residual: finite(r.residual),
            tolerance: r.tolerance,
            pass: r.pass,
        }
    }
}

impl From<&RatioBand> for BandRow {
    fn from(b: &RatioBand) -> Self {
        Self {
            series: b.series.name().to_string(),
            x_min: b.x_min,
            x_max: b.x_max,
            inf: b.inf_value,
            inf_at: b.inf_at,
            sup: b.sup_value,
            sup_at: b.sup_at,
            width: b.width(),
        }
    }
}

impl From<&BlockStat> for BlockRow {
    fn from(b: &BlockStat) -> Self {
        Self {
            x: b.x,
            lambda: b.lambda,
            x_lo: b.x_lo,
            delta_s: b.delta_s,
            delta_pi: b.delta_pi,
            lower: b.lower,
            upper: b.upper,
            holds: b.holds(),
        }
    }
}

impl From<&AbelDecomposition> for AbelRow {
    fn from(d: &AbelDecomposition) -> Self {
        Self {
            x: d.x,
            direct_s: d.direct_s,
            boundary_term: d.boundary_term,
            integral_term: d.integral_term,
            residual: d.residual,
        }
    }
}

impl From<&AnSnSample<f64>> for AnSnRow {
    fn from(s: &AnSnSample<f64>) -> Self {
        Self { n: s.n, prime: s.prime, value: s.value }
    }
}

impl ReportBundle {
    /// Positions referenced by records, blocks or decompositions that have
    /// no row in the checkpoint table. Empty for a consistent bundle.
    pub fn unreferenced_positions(&self) -> Vec<f64> {
        let known: std::collections::HashSet<u64> = self.checkpoints.iter().map(|c| c.x.to_bits()).collect();
        let referenced = self
            .verification
            .iter()
            .filter_map(|r| r.x)
            .chain(self.blocks.iter().flat_map(|b| [b.x, b.x_lo]))
            .chain(self.abel.iter().map(|a| a.x));
        let mut missing: Vec<f64> = referenced.filter(|x| !known.contains(&x.to_bits())).collect();
        missing.sort_by(f64::total_cmp);
        missing.dedup();
        missing
    }

    pub fn failed(&self) -> impl Iterator<Item = &RecordRow> {
        self.verification.iter().filter(|r| !r.pass)
    }
}
