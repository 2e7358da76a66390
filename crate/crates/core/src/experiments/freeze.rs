use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::holder::{norm_nondim, GridFunction};
use crate::kernels::{eval_linear, OperatorSpec, QuadratureSpec, Variant};
use crate::scale::{HolderModulus, Modulus, ProductModulus};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreezeReport {
    pub center: f64,
    pub radius: f64,
    /// Largest sampled ratio over the whole family.
    pub value: f64,
    /// Largest sampled ratio per test function.
    pub per_function: Vec<f64>,
    pub sample_points: usize,
}

/// Samples `|(I − I_z)u(x) − (I − I_z)u(x′)| / (ψ(|x − x′|) (‖u‖′_{C^{φψ}(B̄_r(z))} + ‖u‖_∞))`
/// on five points of `B_r(z)`, where `I_z` freezes the coefficients at `z`.
pub fn freeze_coefficients_diagnostic(
    op: &OperatorSpec,
    z: f64,
    r: f64,
    family: &[GridFunction],
    product: &ProductModulus,
    psi: &Modulus,
    q: &QuadratureSpec,
) -> Result<FreezeReport> {
    let Variant::Bellman(branches) = &op.variant else {
        return Err(Error::invalid(format!("expected a Bellman operator, got {}", op.name())));
    };
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    const POINTS: usize = 5;
    let xs: Vec<f64> = (0..POINTS)
        .map(|k| z - r + 2.0 * r * k as f64 / (POINTS - 1) as f64)
        .collect();
    let per_function = family
        .par_iter()
        .map(|u| -> Result<f64> {
            let denom = norm_nondim(u, product, z - r, z + r)? + u.sup_abs().max(u.exterior().sup_abs());
            if denom == 0.0 {
                return Ok(0.0);
            }
            let mut diff = Vec::with_capacity(POINTS);
            for &x in &xs {
                let mut full = f64::INFINITY;
                let mut frozen = f64::INFINITY;
                for b in branches {
                    let l = eval_linear(u, &b.kernel, x, q)?;
                    full = full.min(b.factor_at(x) * l + b.offset.eval(x));
                    frozen = frozen.min(b.factor_at(z) * l + b.offset.eval(z));
                }
                diff.push(full - frozen);
            }
            let mut worst = 0.0f64;
            for i in 0..POINTS {
                for j in i + 1..POINTS {
                    worst = worst.max((diff[i] - diff[j]).abs() / psi.eval(xs[j] - xs[i]));
                }
            }
            Ok(worst / denom)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FreezeReport {
        center: z,
        radius: r,
        value: per_function.iter().copied().fold(0.0, f64::max),
        per_function,
        sample_points: POINTS,
    })
}
