//! Scripted numerical experiments with CSV records and JSON summaries.

mod boundedness;
mod counterexample;
mod estimates;
mod freeze;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::holder::GridFunction;

pub use boundedness::{run_local_boundedness, BoundednessConfig, BoundednessRecord};
pub use counterexample::{run_counterexample, CounterexampleConfig, CounterexampleRecord};
pub use estimates::{run_ek_sweep, run_schauder, EkConfig, RatioRecord, SchauderConfig};
pub use freeze::{freeze_coefficients_diagnostic, FreezeReport};

/// A row of an experiment table.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn row(&self) -> Vec<String>;
}

/// Shortest decimal that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn to_csv<R: CsvRecord>(records: &[R]) -> String {
    let mut out = R::header().join(",");
    out.push('\n');
    for r in records {
        out.push_str(&r.row().join(","));
        out.push('\n');
    }
    out
}

/// What an experiment run produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub name: &'static str,
    pub csv: String,
    pub summary: serde_json::Value,
    pub passed: bool,
}

impl ExperimentOutput {
    pub fn new<R: CsvRecord, S: Serialize>(name: &'static str, records: &[R], summary: &S, passed: bool) -> Result<Self> {
        let summary = serde_json::to_value(summary).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(ExperimentOutput {
            name,
            csv: to_csv(records),
            summary,
            passed,
        })
    }

    /// Writes `<name>.csv` and `<name>.summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.name));
        let json = dir.join(format!("{}.summary.json", self.name));
        fs::write(&csv, &self.csv)?;
        let text = serde_json::to_string_pretty(&self.summary).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(&json, text + "\n")?;
        Ok((csv, json))
    }
}

/// Samples `u` (window values and exterior rule) on a grid over `[lo, hi]`
/// with the same step and node alignment.
pub(crate) fn resample(u: &GridFunction, lo: f64, hi: f64) -> Result<GridFunction> {
    let h = u.h();
    let k0 = ((lo - u.x0()) / h).floor();
    let k1 = ((hi - u.x0()) / h).ceil();
    let n = (k1 - k0) as usize + 1;
    let x0 = u.x0() + k0 * h;
    let values = (0..n).map(|i| u.eval(x0 + i as f64 * h)).collect();
    GridFunction::new(x0, h, values, u.exterior().clone())
}

/// Runs `f` on a pool of `jobs` threads (all cores when 0).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// `max / min` of positive values, `∞` if any is not positive.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Smooth bump `(1 − t²)³` on `|t| < 1`.
pub(crate) fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - t * t).powi(3)
    } else {
        0.0
    }
}
