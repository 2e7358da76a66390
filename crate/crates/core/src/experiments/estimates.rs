use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bump, fmt_f64, freeze_coefficients_diagnostic, resample, spread, CsvRecord, ExperimentOutput, FreezeReport};
use crate::error::{Error, Result};
use crate::holder::{norm_plain, seminorm, Exterior, GridFunction};
use crate::kernels::{BellmanBranch, KernelSpec, Offset, OperatorSpec, QuadratureSpec, Shape};
use crate::scale::{
    log_grid, make_modulus, make_scale_function, validate_index_assumptions, HolderModulus, IndexReport, Modulus,
    ProductModulus, ScaleFunction,
};
use crate::solver::{solve_discrete, DirichletProblem, DiscreteOperator, SolverOptions};

/// One estimate ratio `[u]_{C^{φψ}(B_{1/2})} / (‖u‖ + ‖f‖)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRecord {
    pub label: &'static str,
    pub sigma: f64,
    pub h: f64,
    pub numerator: f64,
    pub u_norm: f64,
    pub f_norm: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Number of family members that attain the minimum somewhere.
    pub active_branches: usize,
}

impl CsvRecord for RatioRecord {
    fn header() -> &'static [&'static str] {
        &[
            "label",
            "sigma",
            "h",
            "numerator",
            "u_norm",
            "f_norm",
            "denominator",
            "ratio",
            "residual",
            "iterations",
            "active_branches",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            self.label.to_string(),
            fmt_f64(self.sigma),
            fmt_f64(self.h),
            fmt_f64(self.numerator),
            fmt_f64(self.u_norm),
            fmt_f64(self.f_norm),
            fmt_f64(self.denominator),
            fmt_f64(self.ratio),
            fmt_f64(self.residual),
            self.iterations.to_string(),
            self.active_branches.to_string(),
        ]
    }
}

/// Right-hand side: two bumps, normalized to unit `C^ψ([−1, 1])` norm on a
/// grid four times finer than the finest solve, then multiplied by `scale`.
fn rhs(psi: &Modulus, h_min: f64, scale: f64) -> Result<impl Fn(f64) -> f64 + Send + Sync + Clone> {
    let raw = |x: f64| bump((x + 0.3) / 0.5) - 0.6 * bump((x - 0.4) / 0.4);
    let fine = GridFunction::on_interval(-1.0, 1.0, h_min / 4.0, raw, Exterior::Zero)?;
    let norm = norm_plain(&fine, psi, -1.0, 1.0)?;
    Ok(move |x: f64| scale * raw(x) / norm)
}

fn check_gate(phi: &ScaleFunction, psi: &Modulus, alpha_bar: f64, sigma0: f64) -> Result<IndexReport> {
    let report = validate_index_assumptions(phi, psi, alpha_bar, sigma0);
    if !report.all_pass() {
        return Err(Error::Gate(format!(
            "{} with {}: {}",
            phi.kind().tag(),
            psi.tag(),
            report.failures().join("; ")
        )));
    }
    Ok(report)
}

struct Measured {
    numerator: f64,
    u_norm: f64,
    u_sup: f64,
    f_norm: f64,
    residual: f64,
    iterations: usize,
    active_branches: usize,
}

fn solve_and_measure(
    op: OperatorSpec,
    h: f64,
    f: impl Fn(f64) -> f64,
    psi: &Modulus,
    product: &ProductModulus,
    solver: &SolverOptions,
) -> Result<Measured> {
    let problem = DirichletProblem::new(op, -1.0, 1.0, h, Exterior::Zero)?.with_rhs(&f)?;
    let discrete = DiscreteOperator::new(&problem.op, -1.0, 1.0, h, &Exterior::Zero, solver.bucket_tol)?;
    let report = solve_discrete(&problem, &discrete, solver)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.residual(),
        });
    }
    let u = &report.u;
    let numerator = seminorm(u, product, -0.5, 0.5)?.value;
    // u vanishes outside [−1, 1] and ψ increases, so [−2, 2] sees every pair
    let mut active = discrete.active_branches(u.values());
    active.sort_unstable();
    active.dedup();
    let u_norm = norm_plain(&resample(u, -2.0, 2.0)?, psi, -2.0, 2.0)?;
    let f_norm = norm_plain(&problem.f, psi, -1.0, 1.0)?;
    Ok(Measured {
        numerator,
        u_norm,
        u_sup: u.sup_abs(),
        f_norm,
        residual: report.residual(),
        iterations: report.iterations,
        active_branches: active.len(),
    })
}

/// Concave Bellman problems `min_a (β_a L_φ u + c_a) = f` in `(−1, 1)`,
/// `u = 0` outside, swept over `φ = r^σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkConfig {
    pub sigma_values: Vec<f64>,
    pub psi_alpha: f64,
    pub alpha_bar: f64,
    pub sigma0: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub family_size: usize,
    pub h_values: Vec<f64>,
    /// Common factor of `f` and the offsets.
    pub scale: f64,
    pub offset_spread: f64,
    pub max_spread: f64,
    pub solver: SolverOptions,
}

impl Default for EkConfig {
    fn default() -> Self {
        EkConfig {
            sigma_values: vec![1.2, 1.5, 1.8, 1.95],
            psi_alpha: 0.03,
            alpha_bar: 0.04,
            sigma0: 1.1,
            lambda: 1.0,
            big_lambda: 2.0,
            family_size: 3,
            h_values: vec![1.0 / 256.0, 1.0 / 512.0],
            scale: 1.0,
            offset_spread: 0.1,
            max_spread: 10.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadSummary {
    pub h: f64,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EkSummary {
    pub gates: Vec<(f64, IndexReport)>,
    pub spreads: Vec<SpreadSummary>,
    pub empirical_constant: f64,
    pub max_spread: f64,
    pub passed: bool,
}

fn offsets(k: usize, spread: f64, scale: f64) -> Vec<f64> {
    if k == 1 {
        return vec![0.0];
    }
    (0..k)
        .map(|a| scale * spread * (1.0 - 2.0 * a as f64 / (k - 1) as f64))
        .collect()
}

fn multipliers(k: usize, lambda: f64, big_lambda: f64) -> Vec<f64> {
    if k == 1 {
        return vec![lambda];
    }
    (0..k)
        .map(|a| lambda + (big_lambda - lambda) * a as f64 / (k - 1) as f64)
        .collect()
}

fn spreads(records: &[RatioRecord], h_values: &[f64], label: &str) -> Vec<SpreadSummary> {
    h_values
        .iter()
        .map(|&h| {
            let r: Vec<f64> = records
                .iter()
                .filter(|r| r.h == h && r.label == label)
                .map(|r| r.ratio)
                .collect();
            SpreadSummary {
                h,
                max_ratio: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                min_ratio: r.iter().copied().fold(f64::INFINITY, f64::min),
                spread: spread(&r),
            }
        })
        .collect()
}

pub fn run_ek_sweep(cfg: &EkConfig) -> Result<(Vec<RatioRecord>, ExperimentOutput)> {
    if cfg.family_size == 0 || cfg.sigma_values.is_empty() || cfg.h_values.is_empty() {
        return Err(Error::Config("ek sweep needs sigma_values, h_values and a nonempty family".into()));
    }
    let psi = make_modulus("power", &[cfg.psi_alpha])?;
    let mut gates = Vec::new();
    let mut setups = Vec::new();
    for &sigma in &cfg.sigma_values {
        let phi = make_scale_function("power", &[sigma])?;
        gates.push((sigma, check_gate(&phi, &psi, cfg.alpha_bar, cfg.sigma0)?));
        let product = ProductModulus::new(phi.clone(), psi)?;
        let family = multipliers(cfg.family_size, cfg.lambda, cfg.big_lambda)
            .into_iter()
            .zip(offsets(cfg.family_size, cfg.offset_spread, cfg.scale))
            .map(|(beta, c)| {
                Ok(BellmanBranch::new(
                    KernelSpec::constant(phi.clone(), cfg.lambda, cfg.big_lambda, beta)?,
                    Offset::Constant(c),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let op = OperatorSpec::bellman(family, phi, cfg.lambda, cfg.big_lambda)?;
        setups.push((sigma, op, product));
    }
    let h_min = cfg.h_values.iter().copied().fold(f64::INFINITY, f64::min);
    let f = rhs(&psi, h_min, cfg.scale)?;
    let jobs: Vec<(usize, f64)> = cfg
        .h_values
        .iter()
        .flat_map(|&h| (0..setups.len()).map(move |k| (k, h)))
        .collect();
    let records: Vec<RatioRecord> = jobs
        .par_iter()
        .map(|&(k, h)| {
            let (sigma, op, product) = &setups[k];
            let m = solve_and_measure(op.clone(), h, f.clone(), &psi, product, &cfg.solver)?;
            let denominator = m.u_norm + m.f_norm;
            Ok(RatioRecord {
                label: "ek",
                sigma: *sigma,
                h,
                numerator: m.numerator,
                u_norm: m.u_norm,
                f_norm: m.f_norm,
                denominator,
                ratio: if denominator > 0.0 { m.numerator / denominator } else { 0.0 },
                residual: m.residual,
                iterations: m.iterations,
                active_branches: m.active_branches,
            })
        })
        .collect::<Result<_>>()?;
    let spreads = spreads(&records, &cfg.h_values, "ek");
    let passed = spreads.iter().all(|s| s.spread <= cfg.max_spread);
    let summary = EkSummary {
        gates,
        empirical_constant: records.iter().map(|r| r.ratio).fold(0.0, f64::max),
        spreads,
        max_spread: cfg.max_spread,
        passed,
    };
    let out = ExperimentOutput::new("ek-sweep", &records, &summary, passed)?;
    Ok((records, out))
}

/// Bellman problems whose kernels `b_a(x) K_φ(y)` depend on `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchauderConfig {
    pub sigma: f64,
    pub psi_alpha: f64,
    pub alpha_bar: f64,
    pub sigma0: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub family_size: usize,
    /// Oscillation of `b_a` as a fraction of `(Λ − λ)/2`.
    pub amplitude: f64,
    pub frequency: f64,
    pub a0: f64,
    pub h_values: Vec<f64>,
    pub scale: f64,
    pub offset_spread: f64,
    /// Largest accepted ratio between the two resolutions.
    pub max_resolution_spread: f64,
    pub solver: SolverOptions,
}

impl Default for SchauderConfig {
    fn default() -> Self {
        SchauderConfig {
            sigma: 1.5,
            psi_alpha: 0.05,
            alpha_bar: 0.1,
            sigma0: 1.1,
            lambda: 1.0,
            big_lambda: 2.0,
            family_size: 2,
            amplitude: 0.2,
            frequency: 1.0,
            a0: 1.0,
            h_values: vec![1.0 / 256.0, 1.0 / 512.0],
            scale: 1.0,
            offset_spread: 0.03,
            max_resolution_spread: 1.5,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchauderSummary {
    pub gate: IndexReport,
    /// Sampled `sup |b_a(x) − b_a(x′)| ∫_{B_2r∖B_r} K_φ / (ψ(|x − x′|) c_φ / φ(r))`.
    pub kernel_oscillation: f64,
    pub freeze: FreezeReport,
    pub a0: f64,
    pub resolution_spread: f64,
    pub bounded_data_resolution_spread: f64,
    pub passed: bool,
}

fn factor_fn(cfg: &SchauderConfig, a: usize) -> impl Fn(f64) -> f64 + Send + Sync + Clone + 'static {
    let k = cfg.family_size as f64;
    let mid = cfg.lambda + (cfg.big_lambda - cfg.lambda) * (a as f64 + 1.0) / (k + 1.0);
    let amp = cfg.amplitude * (cfg.big_lambda - cfg.lambda) / 2.0;
    let freq = cfg.frequency;
    move |x: f64| mid + amp * (freq * x + a as f64).sin()
}

/// Sampled kernel oscillation of `b(x) K_φ(y)` against `ψ`.
pub(crate) fn kernel_oscillation(
    factors: &[Shape],
    phi: &ScaleFunction,
    psi: &Modulus,
) -> Result<f64> {
    let xs: Vec<f64> = (0..=64).map(|k| -1.0 + k as f64 / 32.0).collect();
    let mut x_part = 0.0f64;
    for b in factors {
        for (i, &x) in xs.iter().enumerate() {
            for &x2 in &xs[i + 1..] {
                x_part = x_part.max((b(x) - b(x2)).abs() / psi.eval(x2 - x));
            }
        }
    }
    let m = crate::kernels::KernelMeasure::new(phi, None);
    let mut r_part = 0.0f64;
    for r in log_grid(1e-4, 1e2, 8) {
        r_part = r_part.max(2.0 * m.mass(r, 2.0 * r)? / (phi.c_phi() / phi.eval(r)));
    }
    Ok(x_part * r_part)
}

pub fn run_schauder(cfg: &SchauderConfig) -> Result<(Vec<RatioRecord>, ExperimentOutput)> {
    if cfg.family_size == 0 || cfg.h_values.is_empty() {
        return Err(Error::Config("schauder needs h_values and a nonempty family".into()));
    }
    let phi = make_scale_function("power", &[cfg.sigma])?;
    let psi = make_modulus("power", &[cfg.psi_alpha])?;
    let gate = check_gate(&phi, &psi, cfg.alpha_bar, cfg.sigma0)?;
    let product = ProductModulus::new(phi.clone(), psi)?;
    let offs = offsets(cfg.family_size, cfg.offset_spread, cfg.scale);
    let mut family = Vec::new();
    let mut factors: Vec<Shape> = Vec::new();
    for (a, &c) in offs.iter().enumerate() {
        let b = factor_fn(cfg, a);
        for k in 0..=200 {
            let x = -1.0 + k as f64 / 100.0;
            let v = b(x);
            if !(v >= cfg.lambda && v <= cfg.big_lambda) {
                return Err(Error::Config(format!(
                    "branch {a} multiplier {v} at x = {x} leaves [{}, {}]",
                    cfg.lambda, cfg.big_lambda
                )));
            }
        }
        let shape: Shape = Arc::new(b);
        factors.push(shape.clone());
        family.push(BellmanBranch {
            kernel: KernelSpec::new(phi.clone(), cfg.lambda, cfg.big_lambda, None)?,
            x_factor: Some(shape),
            offset: Offset::Constant(c),
        });
    }
    let op = OperatorSpec::bellman(family, phi.clone(), cfg.lambda, cfg.big_lambda)?;
    let kernel_osc = kernel_oscillation(&factors, &phi, &psi)?;

    let h_min = cfg.h_values.iter().copied().fold(f64::INFINITY, f64::min);
    let f = rhs(&psi, h_min, cfg.scale)?;
    let measured: Vec<(f64, Measured)> = cfg
        .h_values
        .par_iter()
        .map(|&h| Ok((h, solve_and_measure(op.clone(), h, f.clone(), &psi, &product, &cfg.solver)?)))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for (h, m) in &measured {
        for (label, u_norm) in [("schauder", m.u_norm), ("schauder-bounded-data", m.u_sup)] {
            let denominator = u_norm + m.f_norm;
            records.push(RatioRecord {
                label,
                sigma: cfg.sigma,
                h: *h,
                numerator: m.numerator,
                u_norm,
                f_norm: m.f_norm,
                denominator,
                ratio: if denominator > 0.0 { m.numerator / denominator } else { 0.0 },
                residual: m.residual,
                iterations: m.iterations,
                active_branches: m.active_branches,
            });
        }
    }

    // frozen-coefficient oscillation on a fixed family of test functions
    let h0 = cfg.h_values.iter().copied().fold(0.0, f64::max);
    let tests: Vec<GridFunction> = [
        |x: f64| bump(x / 0.8) * (2.0 * x).cos(),
        |x: f64| x * x * bump(x / 0.9),
        |x: f64| (3.0 * x).sin() * bump(x / 0.95),
    ]
    .iter()
    .map(|t| GridFunction::on_interval(-1.0, 1.0, h0, t, Exterior::Zero))
    .collect::<Result<_>>()?;
    let freeze = freeze_coefficients_diagnostic(&op, 0.0, 0.5, &tests, &product, &psi, &QuadratureSpec::with_tol(1e-7))?;

    let by_label = |label: &str| -> f64 {
        let r: Vec<f64> = records.iter().filter(|r| r.label == label).map(|r| r.ratio).collect();
        spread(&r)
    };
    let resolution_spread = by_label("schauder");
    let bounded_data_resolution_spread = by_label("schauder-bounded-data");
    let passed = resolution_spread <= cfg.max_resolution_spread
        && bounded_data_resolution_spread <= cfg.max_resolution_spread
        && kernel_osc <= cfg.a0
        && freeze.value <= cfg.a0;
    let summary = SchauderSummary {
        gate,
        kernel_oscillation: kernel_osc,
        freeze,
        a0: cfg.a0,
        resolution_spread,
        bounded_data_resolution_spread,
        passed,
    };
    let out = ExperimentOutput::new("schauder", &records, &summary, passed)?;
    Ok((records, out))
}
