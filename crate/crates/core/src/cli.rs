//! Implementation of the `pswl` subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, SweepMatrix};
use crate::sim::{self, ExperimentReport, RunStatus, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_WORN_OUT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => EXIT_FAILURE,
            CliError::Config(_) | CliError::Sim(SimError::Config(_)) => EXIT_INVALID,
            _ => EXIT_FAILURE,
        }
    }
}

pub fn status_exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Completed | RunStatus::Converged => EXIT_OK,
        RunStatus::NonConvergence => EXIT_NON_CONVERGENCE,
        RunStatus::DeviceWornOut => EXIT_WORN_OUT,
    }
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `report.json` and `series.csv` into `out`.
pub fn write_report(report: &ExperimentReport, out: &Path) -> Result<(), CliError> {
    create_dir(out)?;
    write(&out.join("report.json"), &report.to_json())?;
    write(&out.join("series.csv"), &report.series_csv())
}

pub fn cmd_validate(config: &Path) -> Result<Vec<String>, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    Ok(cfg.validate()?)
}

pub fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<ExperimentReport, CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let report = sim::run(&cfg)?;
    write_report(&report, out)?;
    Ok(report)
}

pub const SUMMARY_HEADER: &str = "cell,policy,scheme,raid_level,k_o,k_s,seed,status,events,\
lifetime_stddev,avg_response_time_us,wl_trigger_count,total_io,array_failure_prob,\
converged_event,converged_total_io,error";

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: String,
    pub config: ExperimentConfig,
    pub outcome: Result<ExperimentReport, String>,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let c = &self.config;
        let mut line = format!(
            "{},{},{},{},{},{},{}",
            self.cell,
            c.policy,
            c.scaling_scheme,
            c.raid(),
            c.k_o,
            c.k_s,
            c.seed
        );
        match &self.outcome {
            Ok(r) => {
                let status = serde_json::to_value(r.status)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                let (ce, cio) = r.convergence.map_or((String::new(), String::new()), |cv| {
                    (cv.event_index.to_string(), cv.total_io.to_string())
                });
                let _ = write!(
                    line,
                    ",{status},{},{},{},{},{},{},{ce},{cio},",
                    r.events,
                    r.lifetime_stddev,
                    r.avg_response_time_us,
                    r.wl_trigger_count,
                    r.total_io,
                    r.array_failure_prob
                );
            }
            Err(e) => {
                let msg = e.replace([',', '\n'], ";");
                let _ = write!(line, ",error,,,,,,,,,{msg}");
            }
        }
        line
    }
}

/// Result of a sweep: one row per cell, in matrix order.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }
}

/// Run every cell of a sweep on `jobs` worker threads.
///
/// Each cell gets `out/<cell>/` with its report, series and the exact config
/// used, so it can be rerun on its own. Failing cells are recorded in the
/// summary and do not stop the sweep.
pub fn cmd_sweep(matrix: &Path, out: &Path, jobs: usize) -> Result<SweepSummary, CliError> {
    let (m, base) = SweepMatrix::load(matrix)?;
    let cells = m.cells(&base);
    create_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let dir = out.join(&cell.name);
                let outcome = (|| {
                    create_dir(&dir)?;
                    write(&dir.join("config.toml"), &cell.config.to_toml_string())?;
                    let report = sim::run(&cell.config)?;
                    write_report(&report, &dir)?;
                    Ok::<_, CliError>(report)
                })();
                if let Err(e) = &outcome {
                    log::error!("cell {}: {e}", cell.name);
                } else {
                    log::info!("cell {} done", cell.name);
                }
                SweepRow {
                    cell: cell.name.clone(),
                    config: cell.config.clone(),
                    outcome: outcome.map_err(|e| e.to_string()),
                }
            })
            .collect()
    });
    let summary = SweepSummary { rows };
    write(&out.join("summary.csv"), &summary.to_csv())?;
    Ok(summary)
}
