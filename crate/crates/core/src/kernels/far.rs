//! Exact handling of exterior data in the far field.
//!
//! For piecewise-constant exteriors the integral of any response of
//! `Σ_p c_p δ(u, p, y)` over `y ≥ Y` only depends on the masses of the sets
//! where the exterior values `g(p ± y)` are constant. Those sets are
//! enumerated explicitly up to a radius `Y_far` and averaged over one period
//! beyond it, with a first-moment correction.

use crate::error::Result;
use crate::holder::Exterior;
use crate::quad::Quadrature;

use super::measure::KernelMeasure;

/// Mass of the `y`-set on which `g(p+y) + g(p-y) = key[p]` for every point.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub key: Vec<f64>,
    pub mass: f64,
}

fn add(buckets: &mut Vec<Bucket>, key: &[f64], mass: f64) {
    if mass == 0.0 {
        return;
    }
    if let Some(b) = buckets.iter_mut().find(|b| b.key == key) {
        b.mass += mass;
    } else {
        buckets.push(Bucket {
            key: key.to_vec(),
            mass,
        });
    }
}

fn keys_at(points: &[f64], ext: &Exterior, y: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(points.iter().map(|&p| ext.eval(p + y) + ext.eval(p - y)));
}

/// Jump points of a sign-sin exterior hit by `p ± y` for `y ∈ (lo, hi)`.
pub(crate) fn sign_sin_breaks(points: &[f64], m: f64, onset: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    out.clear();
    for &p in points {
        for s in [-onset, onset] {
            for y in [s - p, p - s] {
                if y > lo && y < hi {
                    out.push(y);
                }
            }
        }
        // p + y = k/m
        let k0 = (m * (p + lo)).floor() as i64 + 1;
        let k1 = (m * (p + hi)).ceil() as i64;
        for k in k0..k1 {
            let y = k as f64 / m - p;
            if y > lo && y < hi {
                out.push(y);
            }
        }
        // p - y = k/m
        let k0 = (m * (p - hi)).floor() as i64;
        let k1 = (m * (p - lo)).ceil() as i64;
        for k in k0..=k1 {
            let y = p - k as f64 / m;
            if y > lo && y < hi {
                out.push(y);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
}

/// Buckets over `[y0, ∞)`; `tol` bounds the total mass error.
pub fn tail_buckets(
    points: &[f64],
    y0: f64,
    ext: &Exterior,
    measure: &KernelMeasure,
    tol: f64,
) -> Result<Vec<Bucket>> {
    let mut buckets = Vec::new();
    match ext {
        Exterior::Zero | Exterior::Constant { .. } => {
            let g = ext.eval(0.0);
            let key = vec![2.0 * g; points.len()];
            add(&mut buckets, &key, measure.tail(y0)?);
        }
        Exterior::SignSin { m, onset, .. } => {
            let (m, onset) = (*m, *onset);
            let period = 2.0 / m;
            let reach = points.iter().fold(0.0f64, |r, p| r.max(p.abs())) + onset;
            let base = y0.max(reach) + period;
            // remainder after periodic averaging is about P² |K'(Y)| per unit response
            let sigma = measure.phi().sigma2();
            let mut y_far = base;
            while period * period * (1.0 + sigma) * measure.density(y_far) / y_far > tol
                && y_far < 1e9
            {
                y_far *= 1.5;
            }
            let mut breaks = Vec::new();
            let mut key = Vec::with_capacity(points.len());
            sign_sin_breaks(points, m, onset, y0, y_far, &mut breaks);
            let mut lo = y0;
            for &b in breaks.iter().chain(std::iter::once(&y_far)) {
                keys_at(points, ext, 0.5 * (lo + b), &mut key);
                add(&mut buckets, &key, measure.mass(lo, b)?);
                lo = b;
            }
            // one period beyond y_far, then the averaged remainder
            sign_sin_breaks(points, m, onset, y_far, y_far + period, &mut breaks);
            let tail = measure.tail(y_far)?;
            let k_far = measure.density(y_far);
            let mut period_parts: Vec<(Vec<f64>, f64, f64)> = Vec::new();
            let mut lo = y_far;
            for &b in breaks.iter().chain(std::iter::once(&(y_far + period))) {
                keys_at(points, ext, 0.5 * (lo + b), &mut key);
                let len = b - lo;
                let m1 = 0.5 * ((b - y_far).powi(2) - (lo - y_far).powi(2));
                if let Some(part) = period_parts.iter_mut().find(|p| p.0 == key) {
                    part.1 += len;
                    part.2 += m1;
                } else {
                    period_parts.push((key.clone(), len, m1));
                }
                lo = b;
            }
            for (key, len, m1) in period_parts {
                let frac = len / period;
                let mu = m1 - frac * period * period / 2.0;
                add(&mut buckets, &key, frac * tail - mu / period * k_far);
            }
        }
        Exterior::Custom { .. } => {
            // one bucket per node of a fixed composite rule in t = (y0/y)^decay
            let decay = measure.decay();
            let q = 1.0 / decay;
            let panels = 128;
            let mut key = Vec::with_capacity(points.len());
            for k in 0..panels {
                let (a, b) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
                for (t, w) in gauss_nodes(a, b) {
                    let y = y0 * t.powf(-q);
                    let jac = y0 * q * t.powf(-q - 1.0);
                    let mass = w * jac * measure.density(y);
                    if mass.is_finite() && mass > 0.0 {
                        keys_at(points, ext, y, &mut key);
                        buckets.push(Bucket {
                            key: key.clone(),
                            mass,
                        });
                    }
                }
            }
        }
    }
    Ok(buckets)
}

/// 7-point Gauss–Legendre nodes and weights on `[a, b]`.
fn gauss_nodes(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    const X: [f64; 4] = [
        0.949_107_912_342_758_5,
        0.741_531_185_599_394_4,
        0.405_845_151_377_397_2,
        0.0,
    ];
    const W: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (0..7).map(move |i| {
        let (x, w) = if i < 3 {
            (-X[i], W[i])
        } else if i == 3 {
            (0.0, W[3])
        } else {
            (X[6 - i], W[6 - i])
        };
        (c + h * x, h * w)
    })
}

/// Pieces `(value, lo, hi)` of the exterior on `[lo, hi]` in `x`.
pub fn exterior_pieces(ext: &Exterior, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
    match ext {
        Exterior::Zero | Exterior::Constant { .. } => vec![(ext.eval(lo), lo, hi)],
        Exterior::SignSin { m, onset, .. } => {
            let mut cuts = vec![lo];
            for s in [-onset, *onset] {
                if s > lo && s < hi {
                    cuts.push(s);
                }
            }
            let k0 = (m * lo).floor() as i64 + 1;
            let k1 = (m * hi).ceil() as i64;
            for k in k0..k1 {
                let x = k as f64 / m;
                if x > lo && x < hi {
                    cuts.push(x);
                }
            }
            cuts.push(hi);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.windows(2)
                .map(|w| (ext.eval(0.5 * (w[0] + w[1])), w[0], w[1]))
                .collect()
        }
        Exterior::Custom { .. } => {
            let n = 8;
            let step = (hi - lo) / n as f64;
            (0..n)
                .map(|k| {
                    let a = lo + k as f64 * step;
                    (ext.eval(a + 0.5 * step), a, a + step)
                })
                .collect()
        }
    }
}

/// `∫ |g| w` over the complement of `[x0, x1]` for a weight `w` with the
/// given decay at infinity.
pub fn exterior_weighted_abs(
    ext: &Exterior,
    x0: f64,
    x1: f64,
    weight: &(dyn Fn(f64) -> f64 + Sync),
    decay: f64,
    tol: f64,
) -> Result<f64> {
    let q = Quadrature {
        abs_tol: tol,
        rel_tol: 0.0,
        max_intervals: 4000,
    };
    // ∫_{x1}^∞ and ∫_{-∞}^{x0} of f, splitting at the origin when needed
    let sides = |f: &dyn Fn(f64) -> f64, breaks: &[f64]| -> Result<f64> {
        let mut total = 0.0;
        for (start, sign) in [(x1, 1.0), (-x0, -1.0)] {
            let g = |s: f64| f(sign * s);
            let a = start.max(1.0);
            if start < a {
                let mut pts = vec![start, a];
                pts.extend(breaks.iter().map(|b| sign * b).filter(|&b| b > start && b < a));
                if start < 0.0 {
                    pts.push(0.0);
                }
                total += q.integrate(g, &pts)?.value;
            }
            let tail_breaks: Vec<f64> = breaks.iter().map(|b| sign * b).filter(|&b| b > a).collect();
            total += q.integrate_to_infinity(g, a, decay, &tail_breaks)?.value;
        }
        Ok(total)
    };
    match ext {
        Exterior::Zero => Ok(0.0),
        Exterior::Constant { value } => Ok(value.abs() * sides(&|s| weight(s), &[])?),
        Exterior::SignSin { onset, amplitude, .. } => {
            let full = sides(&|s| weight(s), &[-onset, *onset])?;
            // subtract the part of (-onset, onset) outside [x0, x1]
            let mut inner = 0.0;
            if -onset < x0 {
                let hi = x0.min(*onset);
                inner += q.integrate(weight, &[-onset, 0.0f64.clamp(-onset, hi), hi])?.value;
            }
            if *onset > x1 {
                let lo = x1.max(-onset);
                inner += q.integrate(weight, &[lo, 0.0f64.clamp(lo, *onset), *onset])?.value;
            }
            Ok(amplitude.abs() * (full - inner))
        }
        Exterior::Custom { .. } => sides(&|s| ext.eval(s).abs() * weight(s), &[]),
    }
}
