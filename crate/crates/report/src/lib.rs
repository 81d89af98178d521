//! Command-line layer over `prime_sums`: configuration, checkpoint files
//! with resume, and CSV/JSON reports.
//!
//! Output directory layout:
//!
//! * `checkpoints.txt`: versioned checkpoint file (see [`checkpoint`]);
//! * `checkpoints.csv`: `x,pi,S,M,E,r_S,r_E_pi,r_E_x,mertens_remainder`, one
//!   row per grid point;
//! * `verification.csv`: one row per check;
//! * `report.json` and `series_<name>.csv`: see [`bundle`].

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
mod error;

pub use bundle::ReportBundle;
pub use commands::{cmd_compute, cmd_report, cmd_verify, ComputeOutcome, VerifyOutcome};
pub use config::RunConfig;
pub use error::{exit, ReportError, Result};
