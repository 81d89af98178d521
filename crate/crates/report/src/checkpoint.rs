//! Checkpoint files: a versioned `key value` header followed by one CSV row
//! per snapshot.
//!
//! ```text
//! primesums-checkpoint 1
//! config_hash 3f0c…
//! grid_start 1.0000000000000000e2
//! grid_ratio 1.1892071150027210e0
//! A 8.0000000000000000e0
//! lambdas 2.0000000000000000e0 4.0000000000000000e0 8.0000000000000000e0
//! x_max 1000000
//! absorbed_through 1000000
//! state_n 78498
//! state_last_prime 999983
//! state_S <sum> <correction>
//! state_M <sum> <correction>
//! state_E_incremental <sum> <correction>
//! created_by prime-sums-report 0.1.0
//! created_unix 1760000000
//! rows 241
//! body_sha256 9a1b…
//! kind,x,pi,S,M,E,r_S,r_E_pi,r_E_x,mertens_remainder
//! probe,1.2500000000000000e1,5,…
//! grid,1.0000000000000000e2,25,…
//! ```
//!
//! Reals are written with 17 significant digits, so every value, including
//! the compensated-sum parts of the state, reads back bit for bit. The body
//! checksum catches truncated or edited files.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use prime_sums::accumulate::{Checkpoint, Ratios};
use prime_sums::pipeline::{sweep, PointKind, SweepConfig, TaggedCheckpoint};
use prime_sums::{CompensatedSum, SumState};
use sha2::{Digest, Sha256};

use crate::config::{real, AccumulationFields, RunConfig};
use crate::error::{ReportError, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "primesums-checkpoint";
pub const COLUMNS: [&str; 10] = ["kind", "x", "pi", "S", "M", "E", "r_S", "r_E_pi", "r_E_x", "mertens_remainder"];

const HEADER_KEYS: [&str; 16] = [
    "config_hash",
    "grid_start",
    "grid_ratio",
    "A",
    "lambdas",
    "x_max",
    "absorbed_through",
    "state_n",
    "state_last_prime",
    "state_S",
    "state_M",
    "state_E_incremental",
    "created_by",
    "created_unix",
    "rows",
    "body_sha256",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointFile {
    pub config_hash: String,
    pub fields: AccumulationFields,
    pub x_max: u64,
    /// Every prime `≤ absorbed_through` is in `state`.
    pub absorbed_through: u64,
    pub state: SumState,
    pub created_by: String,
    pub created_unix: u64,
    /// Ascending in `x`.
    pub rows: Vec<TaggedCheckpoint<f64>>,
}

impl CheckpointFile {
    pub fn new(config: &RunConfig, absorbed_through: u64, state: SumState, rows: Vec<TaggedCheckpoint<f64>>) -> Self {
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self {
            config_hash: config.config_hash(),
            fields: config.accumulation_fields(),
            x_max: config.x_max,
            absorbed_through,
            state,
            created_by: format!("prime-sums-report {}", env!("CARGO_PKG_VERSION")),
            created_unix,
            rows,
        }
    }

    /// Grid rows only, in order.
    pub fn grid(&self) -> Vec<Checkpoint<f64>> {
        self.rows
            .iter()
            .filter(|r| r.kind == PointKind::Grid)
            .map(|r| r.checkpoint)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let body = body_text(&self.rows);
        let digest = format!("{:x}", Sha256::digest(body.as_bytes()));
        let pair = |c: CompensatedSum| format!("{} {}", real(c.sum()), real(c.comp()));
        let mut head = format!("{MAGIC} {FORMAT_VERSION}\n");
        let mut line = |k: &str, v: String| {
            head.push_str(k);
            head.push(' ');
            head.push_str(&v);
            head.push('\n');
        };
        line("config_hash", self.config_hash.clone());
        for (k, v) in self.fields.canonical_lines() {
            line(k, v);
        }
        line("x_max", self.x_max.to_string());
        line("absorbed_through", self.absorbed_through.to_string());
        line("state_n", self.state.n().to_string());
        line("state_last_prime", self.state.last_prime().to_string());
        line("state_S", pair(self.state.s_acc()));
        line("state_M", pair(self.state.m_acc()));
        line("state_E_incremental", pair(self.state.e_incremental_acc()));
        line("created_by", self.created_by.clone());
        line("created_unix", self.created_unix.to_string());
        line("rows", self.rows.len().to_string());
        line("body_sha256", digest);
        head + &body
    }

    /// Writes through a temporary file and a rename, so an interrupted write
    /// never leaves a half-written checkpoint behind.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_text().as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        };
        write().map_err(|e| ReportError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |m: String| ReportError::format(path, m);
        if text.trim().is_empty() {
            return Err(bad("empty checkpoint file".into()));
        }
        let mut lines = text.split_inclusive('\n');
        let first = lines.next().unwrap_or_default().trim_end();
        let version = first
            .strip_prefix(MAGIC)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| bad("not a checkpoint file (missing header line)".into()))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(ReportError::VersionMismatch {
                path: path.to_path_buf(),
                found: version.to_string(),
                expected: FORMAT_VERSION,
            });
        }

        let mut header: HashMap<&str, &str> = HashMap::new();
        let mut consumed = first.len() + 1;
        for line in lines {
            if line.starts_with("kind,") {
                break;
            }
            consumed += line.len();
            let (k, v) = line
                .trim_end()
                .split_once(' ')
                .ok_or_else(|| bad(format!("malformed header line `{}`", line.trim_end())))?;
            if !HEADER_KEYS.contains(&k) {
                return Err(bad(format!("unknown header key `{k}`")));
            }
            if header.insert(k, v).is_some() {
                return Err(bad(format!("header key `{k}` repeated")));
            }
        }
        if let Some(missing) = HEADER_KEYS.iter().find(|k| !header.contains_key(*k)) {
            return Err(bad(format!("header key `{missing}` missing")));
        }
        let body = text.get(consumed..).unwrap_or_default();
        let digest = format!("{:x}", Sha256::digest(body.as_bytes()));
        if digest != header["body_sha256"] {
            return Err(bad("checksum mismatch: the file is truncated or was modified".into()));
        }

        let int = |k: &str| header[k].parse::<u64>().map_err(|_| bad(format!("`{k}` is not an integer")));
        let float = |k: &str, v: &str| v.parse::<f64>().map_err(|_| bad(format!("`{k}` is not a number: `{v}`")));
        let pair = |k: &str| -> Result<CompensatedSum> {
            let mut it = header[k].split(' ');
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => Ok(CompensatedSum::from_parts(float(k, a)?, float(k, b)?)),
                _ => Err(bad(format!("`{k}` needs a sum and a correction"))),
            }
        };
        let lambdas = header["lambdas"]
            .split(' ')
            .map(|v| float("lambdas", v))
            .collect::<Result<Vec<_>>>()?;
        let fields = AccumulationFields {
            grid_start: float("grid_start", header["grid_start"])?,
            grid_ratio: float("grid_ratio", header["grid_ratio"])?,
            a: float("A", header["A"])?,
            lambdas,
        };
        let config_hash = header["config_hash"].to_string();
        if fields.hash() != config_hash {
            return Err(bad("config_hash does not match the recorded grid fields".into()));
        }
        let state = SumState::from_parts(
            int("state_n")?,
            int("state_last_prime")?,
            pair("state_S")?,
            pair("state_M")?,
            pair("state_E_incremental")?,
        );
        let rows = parse_body(body, path)?;
        if rows.len() as u64 != int("rows")? {
            return Err(bad(format!("header promises {} rows, body has {}", header["rows"], rows.len())));
        }
        let file = Self {
            config_hash,
            fields,
            x_max: int("x_max")?,
            absorbed_through: int("absorbed_through")?,
            state,
            created_by: header["created_by"].to_string(),
            created_unix: int("created_unix")?,
            rows,
        };
        file.check_consistency().map_err(bad)?;
        Ok(file)
    }

    fn check_consistency(&self) -> std::result::Result<(), String> {
        if self.absorbed_through < self.x_max {
            return Err(format!(
                "absorbed_through {} is below x_max {}",
                self.absorbed_through, self.x_max
            ));
        }
        if self.state.last_prime() > self.absorbed_through {
            return Err("state holds a prime beyond absorbed_through".into());
        }
        if self.rows.windows(2).any(|w| !(w[0].checkpoint.x < w[1].checkpoint.x)) {
            return Err("rows are not strictly ascending in x".into());
        }
        if let Some(last) = self.rows.last() {
            if last.checkpoint.x > self.x_max as f64 || last.checkpoint.pi > self.state.n() {
                return Err("last row lies beyond the recorded state".into());
            }
        }
        Ok(())
    }
}

/// The nine value columns shared by checkpoint files and `checkpoints.csv`.
pub fn value_fields(cp: &Checkpoint<f64>) -> [String; 9] {
    let (r_s, r_e_pi, r_e_x, mr) = match cp.ratios {
        Some(r) => (real(r.r_s), real(r.r_e_pi), real(r.r_e_x), real(r.mertens_remainder)),
        None => Default::default(),
    };
    [real(cp.x), cp.pi.to_string(), real(cp.s), real(cp.m), real(cp.e), r_s, r_e_pi, r_e_x, mr]
}

fn body_text(rows: &[TaggedCheckpoint<f64>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("writing to memory");
    for row in rows {
        let values = value_fields(&row.checkpoint);
        w.write_record(std::iter::once(row.kind.as_str()).chain(values.iter().map(String::as_str)))
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV of ASCII fields")
}

fn parse_body(body: &str, path: &Path) -> Result<Vec<TaggedCheckpoint<f64>>> {
    let bad = |m: String| ReportError::format(path, m);
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|source| ReportError::Csv { path: path.to_path_buf(), source })?;
    if headers.iter().ne(COLUMNS) {
        return Err(bad("unexpected column header".into()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| ReportError::Csv { path: path.to_path_buf(), source })?;
        let line = i + 1;
        let f = |j: usize| -> Result<f64> {
            record[j]
                .parse::<f64>()
                .map_err(|_| bad(format!("row {line}: column {} is not a number", COLUMNS[j])))
        };
        let kind = match &record[0] {
            "grid" => PointKind::Grid,
            "probe" => PointKind::Probe,
            other => return Err(bad(format!("row {line}: unknown kind `{other}`"))),
        };
        let pi = record[2].parse::<u64>().map_err(|_| bad(format!("row {line}: pi is not an integer")))?;
        let ratios = if (6..10).all(|j| record[j].is_empty()) {
            None
        } else {
            Some(Ratios { r_s: f(6)?, r_e_pi: f(7)?, r_e_x: f(8)?, mertens_remainder: f(9)? })
        };
        let checkpoint = Checkpoint { x: f(1)?, pi, s: f(3)?, m: f(4)?, e: f(5)?, ratios };
        rows.push(TaggedCheckpoint { kind, checkpoint });
    }
    Ok(rows)
}

/// What is left to do to take a checkpoint file to a new `x_max`.
#[derive(Debug, Clone)]
pub struct ResumePlan {
    pub state: SumState,
    pub absorbed_through: u64,
    /// Scheduled snapshots already in the file, ascending.
    pub recorded: Vec<TaggedCheckpoint<f64>>,
    /// Scheduled points `≤ absorbed_through` the file lacks (the probes of a
    /// new end point close above the old one). Filling them needs a pass from
    /// the first prime, but only up to the largest of them.
    pub refill: Vec<(f64, PointKind)>,
    /// Scheduled points beyond `absorbed_through`.
    pub remaining: Vec<(f64, PointKind)>,
}

impl ResumePlan {
    pub fn is_complete(&self) -> bool {
        self.refill.is_empty() && self.remaining.is_empty()
    }

    /// Runs the plan. The snapshots equal, bit for bit, those a fresh run
    /// with the same settings records.
    pub fn execute(self, cfg: &SweepConfig) -> Result<(SumState, Vec<TaggedCheckpoint<f64>>)> {
        let mut rows = self.recorded;
        if let Some(&(top, _)) = self.refill.last() {
            let upto = (top.ceil() as u64).min(self.absorbed_through);
            let head = SweepConfig { x_max: upto, ..*cfg };
            rows.extend(sweep(&self.refill, &head, SumState::new(), 1, &mut [])?.checkpoints);
            rows.sort_by(|a, b| a.checkpoint.x.total_cmp(&b.checkpoint.x));
        }
        let tail = sweep(&self.remaining, cfg, self.state, self.absorbed_through, &mut [])?;
        rows.extend(tail.checkpoints);
        Ok((tail.state, rows))
    }
}

/// Checks that `file` can be continued under `config` and lays out the rest
/// of the work. A changed grid, `A` or λ set is refused: continuing would mix
/// snapshots from two different schedules.
pub fn resume(file: &CheckpointFile, path: &Path, config: &RunConfig) -> Result<ResumePlan> {
    let refuse = |reason: String| ReportError::ResumeRefused { path: PathBuf::from(path), reason };
    let wanted = config.accumulation_fields();
    if file.config_hash != wanted.hash() {
        let changes = file.fields.differences(&wanted).join("; ");
        return Err(refuse(format!(
            "config hash {} differs from the file's {} ({changes}); start a fresh run instead",
            &wanted.hash()[..12],
            &file.config_hash[..file.config_hash.len().min(12)],
        )));
    }
    if config.x_max < file.x_max {
        return Err(refuse(format!(
            "the file already runs to x = {}, beyond --x-max {}; start a fresh run for a smaller range",
            file.x_max, config.x_max
        )));
    }
    let schedule = config.settings().resumable_schedule()?;
    let have: HashMap<u64, &TaggedCheckpoint<f64>> =
        file.rows.iter().map(|r| (r.checkpoint.x.to_bits(), r)).collect();
    let end = file.absorbed_through as f64;
    let mut plan = ResumePlan {
        state: file.state,
        absorbed_through: file.absorbed_through,
        recorded: Vec::new(),
        refill: Vec::new(),
        remaining: Vec::new(),
    };
    for (x, kind) in schedule {
        if x > end {
            plan.remaining.push((x, kind));
        } else if let Some(row) = have.get(&x.to_bits()) {
            plan.recorded.push(TaggedCheckpoint { kind, checkpoint: row.checkpoint });
        } else {
            plan.refill.push((x, kind));
        }
    }
    Ok(plan)
}
