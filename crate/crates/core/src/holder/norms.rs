use serde::Serialize;

use super::grid::{Exterior, GridFunction};
use crate::error::{Error, Result};
use crate::scale::{HolderModulus, Rescaled};

/// Derivative of order 0, 1 or 2 by second-order finite differences
/// (central inside, one-sided at the two ends). The result has a zero exterior.
pub fn fd_derivative(u: &GridFunction, order: usize) -> Result<GridFunction> {
    let n = u.len();
    if order > 2 {
        return Err(Error::invalid(format!("derivative order {order} > 2")));
    }
    if order == 0 {
        return Ok(u.clone());
    }
    if n < 5 {
        return Err(Error::grid(format!("need at least 5 nodes for derivatives, got {n}")));
    }
    let v = u.values();
    let h = u.h();
    let mut out = vec![0.0; n];
    match order {
        1 => {
            for i in 1..n - 1 {
                out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
            }
            out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
            out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        }
        _ => {
            let h2 = h * h;
            for i in 1..n - 1 {
                out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
            }
            out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
            out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
        }
    }
    GridFunction::new(u.x0(), h, out, Exterior::Zero)
}

/// Discrete Hölder seminorm over node pairs at least `2h` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeminormReport {
    pub value: f64,
    pub argmax_pair: (f64, f64),
    pub d: usize,
    /// Smallest pair separation taken into account.
    pub pair_floor: f64,
}

/// Smallest separation (in steps) included in every seminorm.
pub const MIN_STEPS: usize = 2;

/// Max over `k ≥ MIN_STEPS`, `i` of `weight(i, i+k) |D[i+k] - D[i]| / w[k]`,
/// returning the value and the lexicographically smallest maximizing pair.
fn pair_sup(
    dv: &[f64],
    w: &[f64],
    pair_weight: Option<(&dyn Fn(usize, usize) -> f64, f64)>,
) -> (f64, (usize, usize)) {
    let n = dv.len();
    let mut best = 0.0f64;
    let mut arg = (0usize, MIN_STEPS.min(n.saturating_sub(1)));
    if n <= MIN_STEPS {
        return (0.0, arg);
    }
    let (lo, hi) = dv
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let osc = hi - lo;
    // suffix minima of the separation weight bound the remaining ratios
    let mut suffix = vec![f64::INFINITY; n + 1];
    for k in (MIN_STEPS..n).rev() {
        suffix[k] = suffix[k + 1].min(w[k]);
    }
    let max_pair_weight = pair_weight.map_or(1.0, |(_, bound)| bound);
    for k in MIN_STEPS..n {
        if osc * max_pair_weight / suffix[k] < best {
            break;
        }
        for i in 0..n - k {
            let mut r = (dv[i + k] - dv[i]).abs() / w[k];
            if let Some((pw, _)) = pair_weight {
                r *= pw(i, i + k);
            }
            if r > best || (r == best && r > 0.0 && (i, i + k) < arg) {
                best = r;
                arg = (i, i + k);
            }
        }
    }
    (best, arg)
}

fn separation_weights<M: HolderModulus + ?Sized>(m: &M, h: f64, n: usize, d: usize) -> Result<Vec<f64>> {
    let mut w = vec![f64::INFINITY; n];
    for (k, wk) in w.iter_mut().enumerate().skip(MIN_STEPS) {
        let r = k as f64 * h;
        let psi = m.eval(r);
        if !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::invalid(format!("modulus vanishes or is not finite at r = {r}")));
        }
        *wk = psi * r.powi(-(d as i32));
    }
    Ok(w)
}

struct Prepared {
    derivs: Vec<Vec<f64>>,
    x0: f64,
    h: f64,
    d: usize,
}

fn prepare<M: HolderModulus + ?Sized>(u: &GridFunction, m: &M, a: f64, b: f64) -> Result<Prepared> {
    let d = m.order()?;
    let range = u.window_range(a, b)?;
    if range.len() <= MIN_STEPS {
        return Err(Error::grid(format!(
            "window [{a}, {b}] holds {} node(s); no pair is at least {MIN_STEPS}h apart",
            range.len()
        )));
    }
    let mut derivs = Vec::with_capacity(d + 1);
    for i in 0..=d {
        let di = fd_derivative(u, i)?;
        derivs.push(di.values()[range.clone()].to_vec());
    }
    Ok(Prepared {
        derivs,
        x0: u.x(range.start),
        h: u.h(),
        d,
    })
}

/// `[u]` over the window `[a, b]` with derivative order taken from the modulus.
pub fn seminorm<M: HolderModulus + ?Sized>(u: &GridFunction, m: &M, a: f64, b: f64) -> Result<SeminormReport> {
    let p = prepare(u, m, a, b)?;
    let n = p.derivs[0].len();
    let w = separation_weights(m, p.h, n, p.d)?;
    let (value, (i, j)) = pair_sup(&p.derivs[p.d], &w, None);
    Ok(SeminormReport {
        value,
        argmax_pair: (p.x0 + i as f64 * p.h, p.x0 + j as f64 * p.h),
        d: p.d,
        pair_floor: MIN_STEPS as f64 * p.h,
    })
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `Σ_{i ≤ d} sup |D^i u| + [u]`.
pub fn norm_plain<M: HolderModulus + ?Sized>(u: &GridFunction, m: &M, a: f64, b: f64) -> Result<f64> {
    let p = prepare(u, m, a, b)?;
    let s = seminorm(u, m, a, b)?;
    Ok(p.derivs.iter().map(|d| sup_abs(d)).sum::<f64>() + s.value)
}

/// `Σ_{i ≤ d} diam^i sup |D^i u| + ψ(diam) [u]`.
pub fn norm_nondim<M: HolderModulus + ?Sized>(u: &GridFunction, m: &M, a: f64, b: f64) -> Result<f64> {
    let p = prepare(u, m, a, b)?;
    let s = seminorm(u, m, a, b)?;
    let diam = b - a;
    let mut total = 0.0;
    for (i, d) in p.derivs.iter().enumerate() {
        total += diam.powi(i as i32) * sup_abs(d);
    }
    Ok(total + m.eval(diam) * s.value)
}

/// Interior norm: `Σ sup d_x^i |D^i u| + sup ψ(min(d_x, d_y)) (pair ratio)`
/// with `d_x` the distance to the window boundary.
pub fn norm_interior<M: HolderModulus + ?Sized>(u: &GridFunction, m: &M, a: f64, b: f64) -> Result<f64> {
    let p = prepare(u, m, a, b)?;
    let n = p.derivs[0].len();
    let dist: Vec<f64> = (0..n)
        .map(|i| {
            let x = p.x0 + i as f64 * p.h;
            (x - a).min(b - x).max(0.0)
        })
        .collect();
    let mut total = 0.0;
    for (i, d) in p.derivs.iter().enumerate() {
        total += d
            .iter()
            .zip(&dist)
            .fold(0.0f64, |acc, (v, dx)| acc.max(dx.powi(i as i32) * v.abs()));
    }
    let w = separation_weights(m, p.h, n, p.d)?;
    let psi_d: Vec<f64> = dist.iter().map(|&r| m.eval(r)).collect();
    let bound = psi_d.iter().copied().fold(0.0, f64::max);
    let pw = |i: usize, j: usize| psi_d[i].min(psi_d[j]);
    let (semi, _) = pair_sup(&p.derivs[p.d], &w, Some((&pw, bound)));
    Ok(total + semi)
}

/// Both sides of the two rescaling identities on matched grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryReport {
    pub seminorm_original: f64,
    pub seminorm_rescaled: f64,
    pub seminorm_rel_error: f64,
    pub nondim_original: f64,
    pub nondim_rescaled: f64,
    pub nondim_rel_error: f64,
}

fn rel_err(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Compares `[ū]_{ψ̄;B₁}` with `[u]_{ψ;B_ρ(z)}` for `ū(x̄) = u(z+ρx̄)/ψ(ρ)`, and
/// `‖ū‖'_{ψ̄;B₁}` with `‖u‖'_{ψ;B_ρ(z)}` for `ū(x̄) = u(z+ρx̄)`. Both `z ± ρ`
/// must be nodes of `u`.
pub fn rescale_isometry_check<M: HolderModulus + ?Sized>(
    u: &GridFunction,
    m: &M,
    rho: f64,
    z: f64,
) -> Result<IsometryReport> {
    if !(rho > 0.0) {
        return Err(Error::invalid("rho must be positive"));
    }
    let (a, b) = (z - rho, z + rho);
    let (ia, ib) = match (u.node_of(a), u.node_of(b)) {
        (Some(ia), Some(ib)) => (ia, ib),
        _ => {
            return Err(Error::grid(format!(
                "ball ends {a} and {b} are not grid nodes"
            )))
        }
    };
    let local: Vec<f64> = u.values()[ia..=ib].to_vec();
    let orig = GridFunction::new(u.x(ia), u.h(), local.clone(), Exterior::Zero)?;
    let h_bar = u.h() / rho;
    let psi_rho = m.eval(rho);
    let scaled: Vec<f64> = local.iter().map(|v| v / psi_rho).collect();
    let bar = GridFunction::new(-1.0, h_bar, scaled, Exterior::Zero)?;
    let bar_plain = GridFunction::new(-1.0, h_bar, local, Exterior::Zero)?;
    let m_bar = Rescaled::new(m, rho);
    let s_orig = seminorm(&orig, m, a, b)?.value;
    let s_bar = seminorm(&bar, &m_bar, -1.0, 1.0)?.value;
    let n_orig = norm_nondim(&orig, m, a, b)?;
    let n_bar = norm_nondim(&bar_plain, &m_bar, -1.0, 1.0)?;
    Ok(IsometryReport {
        seminorm_original: s_orig,
        seminorm_rescaled: s_bar,
        seminorm_rel_error: rel_err(s_orig, s_bar),
        nondim_original: n_orig,
        nondim_rescaled: n_bar,
        nondim_rel_error: rel_err(n_orig, n_bar),
    })
}

/// Smallest `C` making `‖u‖'_{ψ₁} ≤ C‖u‖₀ + ε‖u‖_{ψ₂}` hold for each member
/// of a test family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub needed: Vec<f64>,
    pub max_needed: f64,
}

pub fn interpolation_check<M1, M2>(
    family: &[GridFunction],
    psi1: &M1,
    psi2: &M2,
    eps: f64,
    a: f64,
    b: f64,
) -> Result<InterpolationReport>
where
    M1: HolderModulus + ?Sized,
    M2: HolderModulus + ?Sized,
{
    if !(psi1.upper_index() < psi2.lower_index()) {
        return Err(Error::invalid(format!(
            "need M_psi1 = {} < m_psi2 = {}",
            psi1.upper_index(),
            psi2.lower_index()
        )));
    }
    let mut needed = Vec::with_capacity(family.len());
    for u in family {
        let r = u.window_range(a, b)?;
        let sup = sup_abs(&u.values()[r]);
        let lhs = norm_nondim(u, psi1, a, b)?;
        let rhs = eps * norm_plain(u, psi2, a, b)?;
        let c = if lhs <= rhs {
            0.0
        } else if sup > 0.0 {
            (lhs - rhs) / sup
        } else {
            f64::INFINITY
        };
        needed.push(c);
    }
    let max_needed = needed.iter().copied().fold(0.0, f64::max);
    Ok(InterpolationReport { needed, max_needed })
}
