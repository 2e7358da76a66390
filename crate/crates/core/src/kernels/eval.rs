use std::sync::Arc;

use serde::Serialize;

use super::far::{sign_sin_breaks, tail_buckets};
use super::measure::KernelMeasure;
use super::{KernelSpec, OperatorSpec, QuadratureSpec, Variant};
use crate::error::{Error, Result};
use crate::holder::{Exterior, GridFunction};
use crate::quad::Quadrature;
use crate::scale::{log_grid, HolderModulus, ScaleFunction};

/// A function on the line that the operators can be applied to.
pub trait Field: Sync {
    fn at(&self, x: f64) -> f64;
    /// Second derivative used below the inner cutoff.
    fn curvature(&self, x: f64) -> f64;
    /// Values of `y > 0` at which `y ↦ u(x ± y)` may fail to be smooth.
    fn kinks(&self, x: f64, out: &mut Vec<f64>);
    /// Radius beyond which `u(x ± y)` is given by `exterior()`.
    fn far_start(&self, x: f64) -> f64;
    fn exterior(&self) -> Option<&Exterior>;
    /// Algebraic growth rate at infinity (only used without an exterior).
    fn growth(&self) -> f64 {
        0.0
    }
    /// Natural inner cutoff.
    fn step(&self) -> Option<f64>;
}

impl GridFunction {
    fn second_difference(&self, i: usize) -> f64 {
        let v = self.values();
        let n = v.len();
        let h2 = self.h() * self.h();
        if n < 4 {
            let i = i.clamp(1, n - 2);
            return (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
        }
        if i == 0 {
            (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
        } else if i == n - 1 {
            (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2
        } else {
            (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2
        }
    }
}

impl Field for GridFunction {
    fn at(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn curvature(&self, x: f64) -> f64 {
        if let Some(i) = self.node_of(x) {
            return self.second_difference(i);
        }
        let t = self.position(x).clamp(0.0, (self.len() - 1) as f64);
        let i = (t.floor() as usize).min(self.len() - 2);
        let s = t - i as f64;
        (1.0 - s) * self.second_difference(i) + s * self.second_difference(i + 1)
    }

    fn kinks(&self, x: f64, out: &mut Vec<f64>) {
        for i in 0..self.len() {
            let y = (self.x(i) - x).abs();
            if y > 0.0 {
                out.push(y);
            }
        }
    }

    fn far_start(&self, x: f64) -> f64 {
        (self.x_end() - x).max(x - self.x0())
    }

    fn exterior(&self) -> Option<&Exterior> {
        Some(GridFunction::exterior(self))
    }

    fn step(&self) -> Option<f64> {
        Some(self.h())
    }
}

type Fun = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function given by a formula, optionally replaced by exterior data
/// outside a support interval.
#[derive(Clone)]
pub struct ClosedForm {
    f: Fun,
    d2: Option<Fun>,
    kinks: Vec<f64>,
    growth: f64,
    support: Option<(f64, f64, Exterior)>,
    far: f64,
}

impl ClosedForm {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ClosedForm {
            f: Arc::new(f),
            d2: None,
            kinks: Vec::new(),
            growth: 0.0,
            support: None,
            far: 4.0,
        }
    }

    pub fn with_second_derivative(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// Points `x` where the formula is not smooth.
    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    /// Growth `|u(x)| ≲ |x|^growth` with the tail starting at `far`.
    pub fn with_growth(mut self, growth: f64, far: f64) -> Self {
        self.growth = growth;
        self.far = far;
        self
    }

    /// Use `exterior` outside `[lo, hi]`.
    pub fn with_support(mut self, lo: f64, hi: f64, exterior: Exterior) -> Self {
        self.support = Some((lo, hi, exterior));
        self
    }
}

impl Field for ClosedForm {
    fn at(&self, x: f64) -> f64 {
        match &self.support {
            Some((lo, hi, ext)) if x < *lo || x > *hi => ext.eval(x),
            _ => (self.f)(x),
        }
    }

    fn curvature(&self, x: f64) -> f64 {
        match &self.d2 {
            Some(d2) => d2(x),
            None => {
                let e = 1e-4 * (1.0 + x.abs());
                ((self.f)(x + e) - 2.0 * (self.f)(x) + (self.f)(x - e)) / (e * e)
            }
        }
    }

    fn kinks(&self, x: f64, out: &mut Vec<f64>) {
        let extra = self.support.as_ref().map(|(lo, hi, _)| [*lo, *hi]);
        for &k in self.kinks.iter().chain(extra.iter().flatten()) {
            let y = (k - x).abs();
            if y > 0.0 {
                out.push(y);
            }
        }
    }

    fn far_start(&self, x: f64) -> f64 {
        match &self.support {
            Some((lo, hi, _)) => (hi - x).max(x - lo),
            None => self.far,
        }
    }

    fn exterior(&self) -> Option<&Exterior> {
        self.support.as_ref().map(|s| &s.2)
    }

    fn growth(&self) -> f64 {
        self.growth
    }

    fn step(&self) -> Option<f64> {
        None
    }
}

/// `δ(u, x, y) = u(x+y) + u(x−y) − 2u(x)`.
pub fn delta<F: Field + ?Sized>(u: &F, x: f64, y: f64) -> f64 {
    u.at(x + y) + u.at(x - y) - 2.0 * u.at(x)
}

/// Positively homogeneous scalar response applied to the increment.
#[derive(Debug, Clone, Copy)]
enum Response {
    Linear,
    Plus(f64, f64),
    Minus(f64, f64),
    PositivePart,
    NegativePart,
}

impl Response {
    #[inline]
    fn apply(self, d: f64) -> f64 {
        match self {
            Response::Linear => d,
            Response::Plus(l, u) => (u * d).max(l * d),
            Response::Minus(l, u) => (u * d).min(l * d),
            Response::PositivePart => d.max(0.0),
            Response::NegativePart => (-d).max(0.0),
        }
    }

    fn lipschitz(self) -> f64 {
        match self {
            Response::Plus(_, u) | Response::Minus(_, u) => u,
            _ => 1.0,
        }
    }
}

/// `∫_ℝ F(Σ_p c_p δ(u, p, y)) dμ(y)` split into an inner Taylor part,
/// an adaptive middle part and an exterior-driven far part.
fn combo_integral<F: Field + ?Sized>(
    u: &F,
    combo: &[(f64, f64)],
    resp: Response,
    measure: &KernelMeasure,
    q: &QuadratureSpec,
) -> Result<f64> {
    q.validate()?;
    let h_cut = match q.h_cut.or_else(|| u.step()) {
        Some(h) => h,
        None => {
            return Err(Error::invalid(
                "an inner cutoff is required for functions without a grid step",
            ))
        }
    };
    let curv: f64 = combo.iter().map(|&(p, c)| c * u.curvature(p)).sum();
    let inner = resp.apply(curv) * measure.second_moment(h_cut)?;

    let base: f64 = combo.iter().map(|&(p, c)| c * 2.0 * u.at(p)).sum();
    let far = combo.iter().fold(0.0f64, |r, &(p, _)| r.max(u.far_start(p)));
    let r = match u.exterior() {
        Some(_) => far.max(q.r_far.unwrap_or(0.0)),
        None => q.r_far.unwrap_or(far),
    }
    .max(h_cut);

    let mut kinks = Vec::new();
    for &(p, _) in combo {
        u.kinks(p, &mut kinks);
    }
    let points: Vec<f64> = combo.iter().map(|c| c.0).collect();
    if let Some(Exterior::SignSin { m, onset, .. }) = u.exterior() {
        let mut jumps = Vec::new();
        sign_sin_breaks(&points, *m, *onset, h_cut, r, &mut jumps);
        kinks.extend(jumps);
    }
    kinks.retain(|&k| k > h_cut && k < r);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();

    let pair = |y: f64| -> f64 {
        let s: f64 = combo.iter().map(|&(p, c)| c * (u.at(p + y) + u.at(p - y))).sum();
        resp.apply(s - base)
    };
    let part_tol = q.tol / 6.0;
    let middle = measure.integrate(pair, h_cut, r, &kinks, part_tol)?;

    let outer = match u.exterior() {
        Some(ext) => {
            let scale: f64 = combo
                .iter()
                .map(|&(p, c)| c.abs() * 2.0 * (ext.sup_abs() + u.at(p).abs()))
                .sum::<f64>()
                * resp.lipschitz();
            let mass_tol = part_tol / scale.max(1e-300);
            let buckets = tail_buckets(&points, r, ext, measure, mass_tol)?;
            let mut total = 0.0;
            for b in &buckets {
                let s: f64 = combo.iter().zip(&b.key).map(|(&(_, c), g)| c * g).sum();
                total += resp.apply(s - base) * b.mass;
            }
            total
        }
        None => measure.integrate_tail(pair, r, u.growth(), &[], part_tol)?,
    };
    Ok(2.0 * (inner + middle + outer))
}

/// `L u(x) = ∫ δ(u, x, y) K(y) dy`.
pub fn eval_linear<F: Field + ?Sized>(u: &F, k: &KernelSpec, x: f64, q: &QuadratureSpec) -> Result<f64> {
    combo_integral(u, &[(x, 1.0)], Response::Linear, &k.measure(), q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Extremal operators `M^±` over `L₀(φ)` with constants `λ ≤ Λ`.
pub fn eval_pucci<F: Field + ?Sized>(
    u: &F,
    sign: Sign,
    phi: &ScaleFunction,
    lambda: f64,
    big_lambda: f64,
    x: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    let resp = match sign {
        Sign::Plus => Response::Plus(lambda, big_lambda),
        Sign::Minus => Response::Minus(lambda, big_lambda),
    };
    combo_integral(u, &[(x, 1.0)], resp, &KernelMeasure::new(phi, None), q)
}

/// `min_a (b_a(x) L_a u(x) + c_a(x))`.
pub fn eval_bellman<F: Field + ?Sized>(u: &F, op: &OperatorSpec, x: f64, q: &QuadratureSpec) -> Result<f64> {
    let Variant::Bellman(family) = &op.variant else {
        return Err(Error::invalid(format!("expected a Bellman operator, got {}", op.name())));
    };
    let mut best = f64::INFINITY;
    for branch in family {
        let v = branch.factor_at(x) * eval_linear(u, &branch.kernel, x, q)? + branch.offset.eval(x);
        best = best.min(v);
    }
    Ok(best)
}

/// `I(u, x)` for any operator variant.
pub fn eval_operator<F: Field + ?Sized>(u: &F, op: &OperatorSpec, x: f64, q: &QuadratureSpec) -> Result<f64> {
    match &op.variant {
        Variant::Linear(k) => eval_linear(u, k, x, q),
        Variant::PucciPlus => eval_pucci(u, Sign::Plus, &op.phi, op.lambda, op.big_lambda, x, q),
        Variant::PucciMinus => eval_pucci(u, Sign::Minus, &op.phi, op.lambda, op.big_lambda, x, q),
        Variant::Bellman(_) => eval_bellman(u, op, x, q),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichReport {
    pub lower: f64,
    pub difference: f64,
    pub upper: f64,
    pub slack_lower: f64,
    pub slack_upper: f64,
    pub tol: f64,
    pub ok: bool,
}

/// Evaluates `M⁻(u−v)(x) ≤ I(u,x) − I(v,x) ≤ M⁺(u−v)(x)`.
pub fn ellipticity_sandwich_check(
    op: &OperatorSpec,
    u: &GridFunction,
    v: &GridFunction,
    x: f64,
    q: &QuadratureSpec,
) -> Result<SandwichReport> {
    if matches!(op.variant, Variant::PucciPlus | Variant::PucciMinus) {
        return Err(Error::invalid("the sandwich check applies to linear and Bellman operators"));
    }
    let w = u.lin_comb(1.0, v, -1.0)?;
    let difference = eval_operator(u, op, x, q)? - eval_operator(v, op, x, q)?;
    let lower = eval_pucci(&w, Sign::Minus, &op.phi, op.lambda, op.big_lambda, x, q)?;
    let upper = eval_pucci(&w, Sign::Plus, &op.phi, op.lambda, op.big_lambda, x, q)?;
    let tol = 4.0 * q.tol;
    let slack_lower = difference - lower;
    let slack_upper = upper - difference;
    Ok(SandwichReport {
        lower,
        difference,
        upper,
        slack_lower,
        slack_upper,
        tol,
        ok: slack_lower >= -tol && slack_upper >= -tol,
    })
}

/// `(P, N)`: the positive and negative parts of `δ(u, x_ref+h, ·) − δ(u, x_ref, ·)`
/// integrated against `K_φ`.
pub fn pn_functionals<F: Field + ?Sized>(
    u: &F,
    phi: &ScaleFunction,
    x_ref: f64,
    h: f64,
    q: &QuadratureSpec,
) -> Result<(f64, f64)> {
    if h == 0.0 {
        return Ok((0.0, 0.0));
    }
    let combo = [(x_ref + h, 1.0), (x_ref, -1.0)];
    let m = KernelMeasure::new(phi, None);
    let p = combo_integral(u, &combo, Response::PositivePart, &m, q)?;
    let n = combo_integral(u, &combo, Response::NegativePart, &m, q)?;
    Ok((p, n))
}

/// `∫ |u| ω` with `ω(y) = c_φ / (1 + |y| φ(|y|))`.
pub fn weight_norm(u: &GridFunction, phi: &ScaleFunction, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    let c = phi.c_phi();
    let omega = move |y: f64| {
        let r = y.abs();
        if r == 0.0 {
            c
        } else {
            c / (1.0 + r * phi.eval(r))
        }
    };
    let mut pts: Vec<f64> = (0..u.len()).map(|i| u.x(i)).collect();
    if 0.0 > u.x0() && 0.0 < u.x_end() {
        pts.push(0.0);
    }
    let span = Quadrature {
        abs_tol: q.tol / 2.0,
        rel_tol: 0.0,
        max_intervals: 4 * pts.len() + 2000,
    }
    .integrate(|y| u.eval(y).abs() * omega(y), &pts)?
    .value;
    let tail = super::far::exterior_weighted_abs(
        GridFunction::exterior(u),
        u.x0(),
        u.x_end(),
        &omega,
        phi.sigma1(),
        q.tol / 4.0,
    )?;
    Ok(span + tail)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LPsiReport {
    /// `(r, sampled seminorm / allowed bound)` per annulus.
    pub ratios: Vec<(f64, f64)>,
    pub worst: f64,
}

/// Samples `[K]_{C^ψ(ℝ∖B_r)}` on annuli `r ≤ |y| ≤ 8r` and compares it with
/// `Λ c_φ / (r φ(r) ψ(r))`.
pub fn l_psi_check<M: HolderModulus + ?Sized>(k: &KernelSpec, psi: &M, radii: &[f64]) -> LPsiReport {
    let c = k.phi.c_phi();
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let ys = log_grid(r, 8.0 * r, 48);
        let mut sup = 0.0f64;
        for (i, &y1) in ys.iter().enumerate() {
            for &y2 in &ys[i + 1..] {
                let v = (k.density(y1) - k.density(y2)).abs() / psi.eval(y2 - y1);
                sup = sup.max(v);
            }
        }
        let bound = k.big_lambda * c / (r * k.phi.eval(r) * psi.eval(r));
        ratios.push((r, sup / bound));
    }
    let worst = ratios.iter().fold(0.0f64, |w, r| w.max(r.1));
    LPsiReport { ratios, worst }
}
