use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fmt_f64, resample, CsvRecord, ExperimentOutput};
use crate::error::{Error, Result};
use crate::holder::{seminorm, Exterior};
use crate::kernels::OperatorSpec;
use crate::scale::{make_modulus, make_scale_function, ProductModulus};
use crate::solver::{
    barrier_check, solve, BarrierReport, DirichletProblem, SolverOptions,
};

/// `M⁺u_m = 0` in `(−1, 1)`, `u_m = 0` for `1 ≤ |x| < onset`,
/// `u_m = sign sin(mπx)` for `|x| ≥ onset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub sigma: f64,
    pub psi_alpha: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub m_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub onset: f64,
    /// Radius of the ball where the seminorm is taken.
    pub radius: f64,
    /// Exponent of the `C^α([−2, 2])` bound that is recorded.
    pub holder_alpha: f64,
    pub barrier_p: Vec<f64>,
    pub barrier_eps: Vec<f64>,
    pub solver: SolverOptions,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            sigma: 1.5,
            psi_alpha: 0.05,
            lambda: 1.0,
            big_lambda: 2.0,
            m_values: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            h_values: vec![1.0 / 512.0, 1.0 / 1024.0],
            onset: 2.0,
            radius: 0.5,
            holder_alpha: 0.1,
            barrier_p: vec![0.05, 0.1, 0.2],
            barrier_eps: vec![0.01, 0.02, 0.05, 0.1],
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRecord {
    pub h: f64,
    pub m: f64,
    pub sup_norm: f64,
    pub u_at_zero: f64,
    pub holder_alpha_norm: f64,
    pub seminorm: f64,
    pub argmax_x: f64,
    pub argmax_y: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl CsvRecord for CounterexampleRecord {
    fn header() -> &'static [&'static str] {
        &[
            "h",
            "m",
            "sup_norm",
            "u_at_zero",
            "holder_alpha_norm",
            "seminorm",
            "argmax_x",
            "argmax_y",
            "residual",
            "iterations",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            fmt_f64(self.h),
            fmt_f64(self.m),
            fmt_f64(self.sup_norm),
            fmt_f64(self.u_at_zero),
            fmt_f64(self.holder_alpha_norm),
            fmt_f64(self.seminorm),
            fmt_f64(self.argmax_x),
            fmt_f64(self.argmax_y),
            fmt_f64(self.residual),
            self.iterations.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSummary {
    pub h: f64,
    pub strictly_increasing: bool,
    pub last_over_first: f64,
    pub sup_bounded: bool,
    pub u_at_zero_nonnegative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleSummary {
    pub barrier: BarrierReport,
    pub trends: Vec<TrendSummary>,
    pub trends_agree: bool,
    pub growth_ratio_required: f64,
    pub passed: bool,
}

fn validate(cfg: &CounterexampleConfig) -> Result<()> {
    if cfg.m_values.is_empty() || cfg.m_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("m_values must be nonempty and increasing".into()));
    }
    if cfg.h_values.is_empty() {
        return Err(Error::Config("h_values must not be empty".into()));
    }
    if !(cfg.onset >= 1.0) {
        return Err(Error::Config(format!("onset must be at least 1, got {}", cfg.onset)));
    }
    if !(cfg.radius > 0.0 && cfg.radius < 1.0) {
        return Err(Error::Config(format!("radius must lie in (0, 1), got {}", cfg.radius)));
    }
    Ok(())
}

pub fn run_counterexample(cfg: &CounterexampleConfig) -> Result<(Vec<CounterexampleRecord>, ExperimentOutput)> {
    validate(cfg)?;
    let phi = make_scale_function("power", &[cfg.sigma])?;
    let psi = make_modulus("power", &[cfg.psi_alpha])?;
    let product = ProductModulus::new(phi.clone(), psi)?;
    let holder = make_modulus("power", &[cfg.holder_alpha])?;
    let barrier = barrier_check(&phi, cfg.lambda, cfg.big_lambda, &cfg.barrier_p, &cfg.barrier_eps, 1e-6)?;
    if barrier.best.is_none() {
        return Err(Error::Gate(format!(
            "no barrier exponent in {:?} satisfies the sign condition",
            cfg.barrier_p
        )));
    }
    let op = OperatorSpec::pucci_plus(phi.clone(), cfg.lambda, cfg.big_lambda)?;
    let jobs: Vec<(f64, f64)> = cfg
        .h_values
        .iter()
        .flat_map(|&h| cfg.m_values.iter().map(move |&m| (h, m)))
        .collect();
    let records: Vec<CounterexampleRecord> = jobs
        .par_iter()
        .map(|&(h, m)| -> Result<CounterexampleRecord> {
            let g = Exterior::SignSin {
                m,
                onset: cfg.onset,
                amplitude: 1.0,
            };
            let problem = DirichletProblem::new(op.clone(), -1.0, 1.0, h, g)?;
            let report = solve(&problem, &cfg.solver)?;
            if !report.converged {
                return Err(Error::NotConverged {
                    iterations: report.iterations,
                    residual: report.residual(),
                });
            }
            let u = &report.u;
            let s = seminorm(u, &product, -cfg.radius, cfg.radius)?;
            let wide = resample(u, -2.0, 2.0)?;
            let holder_norm = crate::holder::norm_plain(&wide, &holder, -2.0, 2.0)?;
            Ok(CounterexampleRecord {
                h,
                m,
                sup_norm: u.sup_abs(),
                u_at_zero: u.eval(0.0),
                holder_alpha_norm: holder_norm,
                seminorm: s.value,
                argmax_x: s.argmax_pair.0,
                argmax_y: s.argmax_pair.1,
                residual: report.residual(),
                iterations: report.iterations,
            })
        })
        .collect::<Result<_>>()?;

    let growth_ratio_required = 2.0;
    let trends: Vec<TrendSummary> = cfg
        .h_values
        .iter()
        .map(|&h| {
            let rows: Vec<&CounterexampleRecord> = records.iter().filter(|r| r.h == h).collect();
            let s: Vec<f64> = rows.iter().map(|r| r.seminorm).collect();
            TrendSummary {
                h,
                strictly_increasing: s.windows(2).all(|w| w[1] > w[0]),
                last_over_first: s[s.len() - 1] / s[0],
                sup_bounded: rows.iter().all(|r| r.sup_norm <= 1.0),
                u_at_zero_nonnegative: rows.iter().all(|r| r.u_at_zero >= -1e-6),
            }
        })
        .collect();
    let trends_agree = trends
        .windows(2)
        .all(|w| w[0].strictly_increasing == w[1].strictly_increasing);
    let passed = trends_agree
        && trends.iter().all(|t| {
            t.strictly_increasing
                && t.last_over_first >= growth_ratio_required
                && t.sup_bounded
                && t.u_at_zero_nonnegative
        });
    let summary = CounterexampleSummary {
        barrier,
        trends,
        trends_agree,
        growth_ratio_required,
        passed,
    };
    let out = ExperimentOutput::new("counterexample", &records, &summary, passed)?;
    Ok((records, out))
}
