use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use prime_sums::sieve::DEFAULT_SEGMENT_SIZE;

use crate::commands::{cmd_compute, cmd_report, cmd_verify};
use crate::config::{RunConfig, CHECKPOINT_CSV, REPORT_JSON, VERIFICATION_CSV};
use crate::error::{exit, Result};

/// Weighted prime sums S(x), M(x), E(x): compute, verify, report.
#[derive(Debug, Parser)]
#[command(name = "primesums", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sieve to --x-max and write checkpoints.txt and checkpoints.csv.
    Compute(RunArgs),
    /// Run every check and write verification.csv; exit status 1 if any fails.
    Verify(RunArgs),
    /// Write report.json and per-series CSVs from a checkpoint file.
    Report(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Largest x (an integer; `1e6` style is accepted when exact).
    #[arg(long = "x-max", value_parser = parse_count)]
    pub x_max: u64,
    #[arg(long, default_value_t = 100.0)]
    pub grid_start: f64,
    /// Grid spacing [default: 2^(1/4)].
    #[arg(long)]
    pub grid_ratio: Option<f64>,
    /// Odd numbers per sieve window.
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_SEGMENT_SIZE)]
    pub segment_size: u64,
    /// Block ratio of the lower-bound inequality.
    #[arg(long = "A", default_value_t = 8.0)]
    pub a: f64,
    /// Block ratio of the sandwich check; repeat for several [default: 2 4 8].
    #[arg(long = "lambda")]
    pub lambdas: Vec<f64>,
    /// Tolerance override `<check_id>=<value>`; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tolerances: Vec<(String, f64)>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Checkpoint file to continue from (compute) or to read (verify, report).
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Sieve worker threads.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl RunArgs {
    pub fn config(&self) -> RunConfig {
        let mut c = RunConfig::new(self.x_max, self.out.clone());
        c.grid_start = self.grid_start;
        if let Some(r) = self.grid_ratio {
            c.grid_ratio = r;
        }
        c.segment_size = self.segment_size;
        c.a = self.a;
        if !self.lambdas.is_empty() {
            c.lambdas = self.lambdas.clone();
        }
        c.tolerances = self.tolerances.iter().cloned().collect();
        c.resume_from = self.resume.clone();
        c.threads = self.threads;
        c
    }
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (id, value) = s.split_once('=').ok_or_else(|| format!("expected <check_id>=<value>, got `{s}`"))?;
    let value: f64 = value.parse().map_err(|_| format!("tolerance `{value}` is not a number"))?;
    Ok((id.trim().to_string(), value))
}

/// Runs one command, printing a short summary, and returns the exit status.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Compute(args) => {
            let config = args.config();
            let out = cmd_compute(&config)?;
            let s = out.state;
            match (out.resumed_from, out.no_op) {
                (Some(from), true) => println!("checkpoint already covers x = {from}; nothing to do"),
                (Some(from), false) => println!("resumed from x = {from}"),
                _ => {}
            }
            println!("pi({}) = {}", config.x_max, s.n());
            println!("S = {:.16e}\nM = {:.16e}\nE = {:.16e}", s.s(), s.m(), s.e());
            println!(
                "{} snapshots ({} grid rows) -> {}, {}",
                out.rows,
                out.grid_rows,
                config.checkpoint_path().display(),
                config.out_path(CHECKPOINT_CSV).display()
            );
            Ok(exit::OK)
        }
        Command::Verify(args) => {
            let config = args.config();
            let out = cmd_verify(&config)?;
            let failed: Vec<_> = out.failures().collect();
            for r in &failed {
                println!("FAIL {} at {}: residual {:e} > {:e}", r.check_id, r.location, r.residual, r.tolerance);
            }
            println!(
                "{} records, {} failed -> {}",
                out.records.len(),
                failed.len(),
                config.out_path(VERIFICATION_CSV).display()
            );
            Ok(if failed.is_empty() { exit::OK } else { exit::CHECK_FAILED })
        }
        Command::Report(args) => {
            let config = args.config();
            let bundle = cmd_report(&config)?;
            for b in &bundle.bands {
                println!("{:<18} [{:.6}, {:.6}] over [{:e}, {:e}]", b.series, b.inf, b.sup, b.x_min, b.x_max);
            }
            println!(
                "{} records, {} failed -> {}",
                bundle.metadata.records,
                bundle.metadata.failed_records,
                config.out_path(REPORT_JSON).display()
            );
            Ok(exit::OK)
        }
    }
}
