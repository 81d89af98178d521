use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use prime_sums::asymptotics::{check_mertens_contraction, check_ratios_positive, Series};
use prime_sums::calculus::{check_derivatives, main_term_identity};
use prime_sums::pipeline::{sweep, PointKind, TaggedCheckpoint};
use prime_sums::verify::{check_e_monotone, check_pair_identity_with, check_sums_monotone, first_terms, Relation};
use prime_sums::{Checkpoint, Location, Run, SumState, VerificationRecord};

use crate::bundle::{AbelRow, AnSnRow, BandRow, BlockRow, CheckpointRow, Metadata, RecordRow, ReportBundle, REPORT_SCHEMA};
use crate::checkpoint::{resume, value_fields, CheckpointFile, COLUMNS};
use crate::config::{real, RunConfig, CHECKPOINT_CSV, DEFAULT_TOLERANCES, REPORT_JSON, VERIFICATION_CSV};
use crate::error::{ReportError, Result};

/// Largest `n` the quadratic pair-sum check is run at.
pub const PAIR_CHECK_TERMS: u64 = 5000;
/// Points in the derivative sign scan.
pub const SIGN_GRID_POINTS: usize = 100;
/// Windows compared by the Mertens contraction check, run when `x_max` reaches
/// the end of the late window.
pub const MERTENS_EARLY: (f64, f64) = (1e2, 1e4);
pub const MERTENS_LATE: (f64, f64) = (1e6, 1e8);

#[derive(Debug, Clone, PartialEq)]
pub struct ComputeOutcome {
    pub state: SumState,
    pub rows: usize,
    pub grid_rows: usize,
    /// `x_max` of the file resumed from.
    pub resumed_from: Option<u64>,
    /// The resumed file already covered `x_max`; nothing was sieved.
    pub no_op: bool,
}

/// Sieves to `x_max` (or continues a checkpoint file) and writes
/// `checkpoints.txt` and `checkpoints.csv`.
pub fn cmd_compute(config: &RunConfig) -> Result<ComputeOutcome> {
    config.validate()?;
    create_out_dir(config)?;
    let settings = config.settings();
    let cfg = settings.sweep_config();
    let target = config.checkpoint_path();

    let (state, rows, resumed_from, no_op) = match &config.resume_from {
        Some(path) => {
            let file = CheckpointFile::read(path)?;
            let plan = resume(&file, path, config)?;
            if plan.is_complete() {
                (file.state, plan.recorded, Some(file.x_max), true)
            } else {
                let (state, rows) = plan.execute(&cfg)?;
                (state, rows, Some(file.x_max), false)
            }
        }
        None => {
            let points = settings.resumable_schedule()?;
            let sw = sweep(&points, &cfg, SumState::new(), 1, &mut [])?;
            (sw.state, sw.checkpoints, None, false)
        }
    };

    let same_file = no_op
        && config
            .resume_from
            .as_deref()
            .is_some_and(|p| same_path(p, &target));
    if !same_file {
        CheckpointFile::new(config, config.x_max, state, rows.clone()).write(&target)?;
    }
    let grid: Vec<Checkpoint> = rows.iter().filter(|r| r.kind == PointKind::Grid).map(|r| r.checkpoint).collect();
    write_checkpoint_csv(&config.out_path(CHECKPOINT_CSV), &grid)?;
    Ok(ComputeOutcome { state, rows: rows.len(), grid_rows: grid.len(), resumed_from, no_op })
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub records: Vec<VerificationRecord>,
    pub run: Run,
}

impl VerifyOutcome {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerificationRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Runs every check on a fresh pass to `x_max` and writes
/// `verification.csv`. When a checkpoint file is present (`--resume`, or
/// `checkpoints.txt` in the output directory) its rows are also compared
/// with the fresh pass.
pub fn cmd_verify(config: &RunConfig) -> Result<VerifyOutcome> {
    config.validate()?;
    create_out_dir(config)?;
    let file = optional_checkpoint(config)?;
    let run = Run::execute(config.settings())?;
    let mut records = verification_suite(config, &run)?;
    if let Some(file) = &file {
        records.push(checkpoint_agreement(file, &run));
    }
    write_verification_csv(&config.out_path(VERIFICATION_CSV), &records)?;
    Ok(VerifyOutcome { records, run })
}

/// Reads the checkpoint file, re-runs the checks and writes `report.json`
/// plus one `series_<name>.csv` per ratio series.
pub fn cmd_report(config: &RunConfig) -> Result<ReportBundle> {
    config.validate()?;
    create_out_dir(config)?;
    let started = Instant::now();
    let source = config.checkpoint_source();
    let file = CheckpointFile::read(&source)?;
    check_file_matches(&file, &source, config)?;

    let run = Run::execute(config.settings())?;
    let mut records = verification_suite(config, &run)?;
    records.push(checkpoint_agreement(&file, &run));

    let tolerances: BTreeMap<String, f64> = DEFAULT_TOLERANCES
        .iter()
        .map(|(id, _)| (id.to_string(), config.tolerance(id)))
        .collect();
    let verification: Vec<RecordRow> = records.iter().map(RecordRow::from).collect();
    let failed_records = verification.iter().filter(|r| !r.pass).count();
    let bundle = ReportBundle {
        schema: REPORT_SCHEMA.to_string(),
        config: config.clone(),
        config_hash: config.config_hash(),
        tolerances,
        checkpoints: file.rows.iter().map(CheckpointRow::from).collect(),
        bands: run.bands()?.iter().map(BandRow::from).collect(),
        blocks: run.blocks().iter().map(BlockRow::from).collect(),
        abel: run.abel.iter().map(AbelRow::from).collect(),
        an_s_samples: run.an_sn.samples().iter().map(AnSnRow::from).collect(),
        metadata: Metadata {
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            checkpoint_file: source.display().to_string(),
            checkpoint_created_unix: file.created_unix,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_time_seconds: started.elapsed().as_secs_f64(),
            prime_count: run.state.n(),
            records: verification.len(),
            failed_records,
        },
        verification,
    };

    let json_path = config.out_path(REPORT_JSON);
    let json = serde_json::to_string_pretty(&bundle).map_err(|source| ReportError::Json { path: json_path.clone(), source })?;
    fs::write(&json_path, json + "\n").map_err(|e| ReportError::io(&json_path, e))?;
    write_series_csvs(config, &file.grid(), &run)?;
    Ok(bundle)
}

/// Every check the crate offers, against one fresh run.
pub fn verification_suite(config: &RunConfig, run: &Run) -> Result<Vec<VerificationRecord>> {
    let mut out = Vec::new();
    let n_pair = run.state.n().min(PAIR_CHECK_TERMS);
    let terms = first_terms::<f64>(n_pair)?;
    out.extend(check_pair_identity_with(&terms, &terms, config.tolerance("pair_identity"))?);

    out.push(run.audit.jump_record(config.tolerance("jump_identity")));
    out.push(run.audit.identity_record(config.tolerance("incremental_identity")));
    out.push(run.audit.growth_record());
    out.push(run.audit.weight_record());

    let table = run.table();
    let grid = run.grid_checkpoints();
    out.push(check_e_monotone(&table));
    out.push(check_sums_monotone(&table));
    out.push(check_ratios_positive(&grid));
    out.extend(run.lower_bounds());
    for block in run.blocks() {
        out.extend(block.records());
    }
    let abel_tol = config.tolerance("abel");
    out.extend(run.abel.iter().map(|d| d.record(abel_tol)));
    let main_tol = config.tolerance("main_term");
    for cp in &grid {
        out.push(main_term_identity(cp.x, main_tol)?);
    }
    out.extend(check_derivatives(config.tolerance("derivatives"), SIGN_GRID_POINTS)?);
    if config.x_max as f64 >= MERTENS_LATE.1 {
        // Skipped, not failed, when the grid does not reach into both windows.
        if let Ok(r) = check_mertens_contraction(&grid, MERTENS_EARLY, MERTENS_LATE) {
            out.push(r);
        }
    }
    Ok(out)
}

/// `checkpoint_file`: every row of a fresh run appears in the file with the
/// same bits. The residual counts rows that are missing or differ.
pub fn checkpoint_agreement(file: &CheckpointFile, run: &Run) -> VerificationRecord {
    let stored: HashMap<u64, &TaggedCheckpoint<f64>> =
        file.rows.iter().map(|r| (r.checkpoint.x.to_bits(), r)).collect();
    let mut bad = 0u64;
    let mut first = Location::Whole;
    for fresh in &run.checkpoints {
        let x = fresh.checkpoint.x;
        if x > file.absorbed_through as f64 {
            continue;
        }
        if stored.get(&x.to_bits()).map(|s| s.checkpoint) != Some(fresh.checkpoint) {
            bad += 1;
            if bad == 1 {
                first = Location::At(x);
            }
        }
    }
    let v = bad as f64;
    VerificationRecord::with_residual("checkpoint_file", first, Relation::Equal, v, 0.0, v, 0.0)
}

fn check_file_matches(file: &CheckpointFile, path: &Path, config: &RunConfig) -> Result<()> {
    if file.config_hash != config.config_hash() {
        let changes = file.fields.differences(&config.accumulation_fields()).join("; ");
        return Err(ReportError::format(path, format!("written with a different grid configuration ({changes})")));
    }
    if file.x_max != config.x_max {
        return Err(ReportError::format(
            path,
            format!("covers x_max = {}, but --x-max is {}", file.x_max, config.x_max),
        ));
    }
    Ok(())
}

fn optional_checkpoint(config: &RunConfig) -> Result<Option<CheckpointFile>> {
    let path = config.checkpoint_source();
    if config.resume_from.is_none() && !path.exists() {
        return Ok(None);
    }
    let file = CheckpointFile::read(&path)?;
    check_file_matches(&file, &path, config)?;
    Ok(Some(file))
}

fn create_out_dir(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out_dir).map_err(|e| ReportError::io(&config.out_dir, e))
}

fn same_path(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| ReportError::Csv { path: path.to_path_buf(), source })
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| ReportError::io(path, e))
}

/// `x,pi,S,M,E,r_S,r_E_pi,r_E_x,mertens_remainder`, one row per grid point.
pub fn write_checkpoint_csv(path: &Path, grid: &[Checkpoint]) -> Result<()> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    w.write_record(&COLUMNS[1..]).map_err(csv_err)?;
    for cp in grid {
        w.write_record(value_fields(cp)).map_err(csv_err)?;
    }
    finish(w, path)
}

pub fn write_verification_csv(path: &Path, records: &[VerificationRecord]) -> Result<()> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    w.write_record(["check_id", "location", "relation", "lhs", "rhs", "residual", "tolerance", "pass"])
        .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.check_id.clone(),
            r.location.to_string(),
            r.relation.as_str().to_string(),
            real(r.lhs),
            real(r.rhs),
            real(r.residual),
            real(r.tolerance),
            r.pass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w, path)
}

/// `series_<name>.csv` with columns `x,value` for each checkpoint ratio,
/// and `series_anS.csv` with `n,prime,value`.
fn write_series_csvs(config: &RunConfig, grid: &[Checkpoint], run: &Run) -> Result<()> {
    for series in Series::CHECKPOINT_SERIES {
        let path = config.out_path(format!("series_{}.csv", series.name()));
        let csv_err = |source| ReportError::Csv { path: path.clone(), source };
        let mut w = csv_writer(&path)?;
        w.write_record(["x", "value"]).map_err(csv_err)?;
        for cp in grid {
            if let Some(v) = series.of(cp) {
                w.write_record([real(cp.x), real(v)]).map_err(csv_err)?;
            }
        }
        finish(w, &path)?;
    }
    let path = config.out_path(format!("series_{}.csv", Series::AnS.name()));
    let csv_err = |source| ReportError::Csv { path: path.clone(), source };
    let mut w = csv_writer(&path)?;
    w.write_record(["n", "prime", "value"]).map_err(csv_err)?;
    for s in run.an_sn.samples() {
        w.write_record([s.n.to_string(), s.prime.to_string(), real(s.value)]).map_err(csv_err)?;
    }
    finish(w, &path)
}
