use serde::Serialize;

use super::{DirichletProblem, DiscreteOperator};
use crate::error::{Error, Result};
use crate::holder::GridFunction;
use crate::kernels::{eval_pucci, ClosedForm, QuadratureSpec, Sign};
use crate::scale::ScaleFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `min_i (I u − I v)(x_i)`; the hypothesis asks for `≥ −tol`.
    pub operator_gap: f64,
    /// `max (u − v)` over sampled exterior points; the hypothesis asks for `≤ 0`.
    pub exterior_gap: f64,
    pub hypotheses_hold: bool,
    /// `max_i (u_i − v_i)` on the window.
    pub max_excess: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Checks `u ≤ v + tol` on the window of `problem` for nodal functions
/// `u`, `v` on its grid, each carrying its own exterior data.
pub fn comparison_check(
    problem: &DirichletProblem,
    u: &GridFunction,
    v: &GridFunction,
    tol: f64,
    bucket_tol: f64,
) -> Result<ComparisonReport> {
    if !u.same_grid(v) || u.len() != problem.nodes() {
        return Err(Error::grid("comparison needs u and v on the grid of the problem"));
    }
    let (a, b, h) = (problem.a, problem.b, problem.h);
    let ou = DiscreteOperator::new(&problem.op, a, b, h, u.exterior(), bucket_tol)?;
    let ov = DiscreteOperator::new(&problem.op, a, b, h, v.exterior(), bucket_tol)?;
    let iu = ou.apply_all(u.values());
    let iv = ov.apply_all(v.values());
    let operator_gap = iu.iter().zip(&iv).map(|(x, y)| x - y).fold(f64::INFINITY, f64::min);
    let n = u.len() - 1;
    let mut exterior_gap = (u.values()[0] - v.values()[0]).max(u.values()[n] - v.values()[n]);
    let width = b - a;
    for k in 1..=4096 {
        let s = width * 4.0 * k as f64 / 4096.0;
        for x in [a - s, b + s] {
            exterior_gap = exterior_gap.max(u.exterior().eval(x) - v.exterior().eval(x));
        }
    }
    let max_excess = (1..n)
        .map(|i| u.values()[i] - v.values()[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let hypotheses_hold = operator_gap >= -tol && exterior_gap <= 0.0;
    Ok(ComparisonReport {
        operator_gap,
        exterior_gap,
        hypotheses_hold,
        max_excess,
        tol,
        holds: max_excess <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximumPrincipleReport {
    pub lower: f64,
    pub upper: f64,
    pub min: f64,
    pub max: f64,
    pub holds: bool,
}

/// `min(inf g, 0) ≤ u ≤ max(sup g, 0)` on the window for a solution of `M⁺u = 0`.
pub fn maximum_principle_check(u: &GridFunction, tol: f64) -> MaximumPrincipleReport {
    let bound = u.exterior().sup_abs();
    let (lower, upper) = match u.exterior() {
        crate::holder::Exterior::Constant { value } => (value.min(0.0), value.max(0.0)),
        _ => (-bound, bound),
    };
    let min = u.values().iter().copied().fold(f64::INFINITY, f64::min);
    let max = u.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    MaximumPrincipleReport {
        lower,
        upper,
        min,
        max,
        holds: min >= lower - tol && max <= upper + tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierRow {
    pub p: f64,
    /// Largest tested band width on which `M⁺ψ ≤ 0` at every sample (0 if none).
    pub eps: f64,
    /// Largest sampled `M⁺ψ` in the accepted band (or in the smallest band if none).
    pub max_value: f64,
    /// `max |M⁺ψ(1/4 + s) − M⁺ψ(−1/4 − s)|`.
    pub symmetry_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub rows: Vec<BarrierRow>,
    /// Largest `p` with a passing band, and that band.
    pub best: Option<(f64, f64)>,
}

/// `ψ(x) = dist(x, [−1/4, 1/4])^p` as a closed-form field.
pub fn barrier_function(p: f64) -> ClosedForm {
    ClosedForm::new(move |x: f64| (x.abs() - 0.25).max(0.0).powf(p))
        .with_second_derivative(move |x: f64| {
            let d = x.abs() - 0.25;
            if d > 0.0 {
                p * (p - 1.0) * d.powf(p - 2.0)
            } else {
                0.0
            }
        })
        .with_kinks(vec![-0.25, 0.25])
        .with_growth(p, 4.0)
}

const BAND_SAMPLES: [f64; 7] = [1.0 / 64.0, 1.0 / 16.0, 0.125, 0.25, 0.5, 0.75, 1.0];

/// Samples `M⁺ψ` in the bands `(1/4, 1/4 + ε)` and `(−1/4 − ε, −1/4)` for each
/// `p`, and reports the widest band from `eps_values` where it is `≤ 0`.
pub fn barrier_check(
    phi: &ScaleFunction,
    lambda: f64,
    big_lambda: f64,
    p_values: &[f64],
    eps_values: &[f64],
    tol: f64,
) -> Result<BarrierReport> {
    let mut eps_sorted: Vec<f64> = eps_values.to_vec();
    eps_sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for &p in p_values {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("barrier exponent must lie in (0, 1), got {p}")));
        }
        let psi = barrier_function(p);
        let mut eps_ok = 0.0;
        let mut max_ok = f64::NEG_INFINITY;
        let mut first_max = f64::NEG_INFINITY;
        let mut symmetry_error = 0.0f64;
        for (k, &eps) in eps_sorted.iter().enumerate() {
            let mut band_max = f64::NEG_INFINITY;
            for &t in &BAND_SAMPLES {
                let s = eps * t;
                let q = QuadratureSpec {
                    h_cut: Some(s / 64.0),
                    r_far: None,
                    tol,
                };
                let right = eval_pucci(&psi, Sign::Plus, phi, lambda, big_lambda, 0.25 + s, &q)?;
                let left = eval_pucci(&psi, Sign::Plus, phi, lambda, big_lambda, -0.25 - s, &q)?;
                symmetry_error = symmetry_error.max((right - left).abs());
                band_max = band_max.max(right).max(left);
            }
            if k == 0 {
                first_max = band_max;
            }
            if band_max <= 0.0 {
                eps_ok = eps;
                max_ok = band_max;
            } else {
                break;
            }
        }
        rows.push(BarrierRow {
            p,
            eps: eps_ok,
            max_value: if eps_ok > 0.0 { max_ok } else { first_max },
            symmetry_error,
        });
    }
    let best = rows
        .iter()
        .filter(|r| r.eps > 0.0)
        .max_by(|a, b| a.p.total_cmp(&b.p))
        .map(|r| (r.p, r.eps));
    Ok(BarrierReport { rows, best })
}
