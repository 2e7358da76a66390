use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bump, fmt_f64, spread, CsvRecord, ExperimentOutput};
use crate::error::{Error, Result};
use crate::holder::Exterior;
use crate::kernels::{weight_norm, OperatorSpec, QuadratureSpec};
use crate::scale::make_scale_function;
use crate::solver::{solve_discrete, DirichletProblem, DiscreteOperator, SolverOptions};

/// Random instances `M⁺u = −c·bump` in `(−1, 1)` with random exterior data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundednessConfig {
    pub sigma_values: Vec<f64>,
    pub instances: usize,
    pub seed: u64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub h_values: Vec<f64>,
    pub max_spread: f64,
    pub solver: SolverOptions,
}

impl Default for BoundednessConfig {
    fn default() -> Self {
        BoundednessConfig {
            sigma_values: vec![1.2, 1.5, 1.8],
            instances: 20,
            seed: 7,
            lambda: 1.0,
            big_lambda: 2.0,
            h_values: vec![1.0 / 128.0, 1.0 / 256.0],
            max_spread: 10.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessRecord {
    pub sigma: f64,
    pub h: f64,
    pub instance: usize,
    pub exterior: String,
    pub forcing: f64,
    pub weight_norm: f64,
    /// `−min` of the discrete `M⁺u` over the interior nodes.
    pub operator_bound: f64,
    pub c0: f64,
    pub sup_half: f64,
    pub ratio: f64,
}

impl CsvRecord for BoundednessRecord {
    fn header() -> &'static [&'static str] {
        &[
            "sigma",
            "h",
            "instance",
            "exterior",
            "forcing",
            "weight_norm",
            "operator_bound",
            "c0",
            "sup_half",
            "ratio",
        ]
    }

    fn row(&self) -> Vec<String> {
        vec![
            fmt_f64(self.sigma),
            fmt_f64(self.h),
            self.instance.to_string(),
            self.exterior.clone(),
            fmt_f64(self.forcing),
            fmt_f64(self.weight_norm),
            fmt_f64(self.operator_bound),
            fmt_f64(self.c0),
            fmt_f64(self.sup_half),
            fmt_f64(self.ratio),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantSummary {
    pub h: f64,
    /// `(σ, max ratio)` per scale function.
    pub empirical_constants: Vec<(f64, f64)>,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessSummary {
    pub constants: Vec<ConstantSummary>,
    pub max_spread: f64,
    pub passed: bool,
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Exterior, f64) {
    let g = match rng.gen_range(0..3) {
        0 => Exterior::Zero,
        1 => Exterior::Constant {
            value: rng.gen_range(-1.0..1.0),
        },
        _ => Exterior::SignSin {
            m: rng.gen_range(1..=8) as f64,
            onset: rng.gen_range(1.0..3.0),
            amplitude: rng.gen_range(0.0..1.0),
        },
    };
    (g, rng.gen_range(0.0..2.0))
}

pub fn run_local_boundedness(cfg: &BoundednessConfig) -> Result<(Vec<BoundednessRecord>, ExperimentOutput)> {
    if cfg.instances == 0 || cfg.sigma_values.is_empty() || cfg.h_values.is_empty() {
        return Err(Error::Config("local boundedness needs sigma_values, h_values and instances".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let instances: Vec<(Exterior, f64)> = (0..cfg.instances).map(|_| random_instance(&mut rng)).collect();
    let ops = cfg
        .sigma_values
        .iter()
        .map(|&s| OperatorSpec::pucci_plus(make_scale_function("power", &[s])?, cfg.lambda, cfg.big_lambda))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for &h in &cfg.h_values {
        for k in 0..ops.len() {
            for i in 0..instances.len() {
                jobs.push((h, k, i));
            }
        }
    }
    let q = QuadratureSpec::with_tol(1e-8);
    let records: Vec<BoundednessRecord> = jobs
        .par_iter()
        .map(|&(h, k, i)| -> Result<BoundednessRecord> {
            let (g, c) = &instances[i];
            let op = &ops[k];
            let problem = DirichletProblem::new(op.clone(), -1.0, 1.0, h, g.clone())?.with_rhs(|x| -c * bump(x))?;
            let discrete = DiscreteOperator::new(op, -1.0, 1.0, h, g, cfg.solver.bucket_tol)?;
            let report = solve_discrete(&problem, &discrete, &cfg.solver)?;
            if !report.converged {
                return Err(Error::NotConverged {
                    iterations: report.iterations,
                    residual: report.residual(),
                });
            }
            let u = &report.u;
            let operator_bound = -discrete
                .apply_all(u.values())
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let wn = weight_norm(u, &op.phi, &q)?;
            let c0 = wn.max(operator_bound);
            let range = u.window_range(-0.5, 0.5)?;
            let sup_half = u.values()[range].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(BoundednessRecord {
                sigma: cfg.sigma_values[k],
                h,
                instance: i,
                exterior: format!("{g:?}").replace(", ", ";"),
                forcing: *c,
                weight_norm: wn,
                operator_bound,
                c0,
                sup_half,
                ratio: if c0 > 0.0 { sup_half / c0 } else { 0.0 },
            })
        })
        .collect::<Result<_>>()?;

    let constants: Vec<ConstantSummary> = cfg
        .h_values
        .iter()
        .map(|&h| {
            let empirical_constants: Vec<(f64, f64)> = cfg
                .sigma_values
                .iter()
                .map(|&s| {
                    let c = records
                        .iter()
                        .filter(|r| r.h == h && r.sigma == s)
                        .map(|r| r.ratio)
                        .fold(f64::NEG_INFINITY, f64::max);
                    (s, c)
                })
                .collect();
            let cs: Vec<f64> = empirical_constants.iter().map(|p| p.1).collect();
            ConstantSummary {
                h,
                spread: spread(&cs),
                empirical_constants,
            }
        })
        .collect();
    let passed = constants.iter().all(|c| c.spread < cfg.max_spread);
    let summary = BoundednessSummary {
        constants,
        max_spread: cfg.max_spread,
        passed,
    };
    let out = ExperimentOutput::new("local-boundedness", &records, &summary, passed)?;
    Ok((records, out))
}
