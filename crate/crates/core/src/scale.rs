//! Scale functions `φ` (the order of the kernel) and Hölder moduli `ψ`.
//!
//! A scale function is built from a Bernstein function `φ_B` through
//! `φ(r) = 1 / φ_B(r^{-2})` and normalized so that `φ(1) = 1`. Everything is
//! evaluated in the log domain, which keeps the log-type entries accurate far
//! from `r = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Quadrature;

/// Log-grid used to certify the weak-scaling constant.
pub const CERT_LO: f64 = 1e-6;
pub const CERT_HI: f64 = 1e6;
pub const CERT_PER_DECADE: usize = 64;
const CERT_PAD: f64 = 1.05;
const C_PHI_TOL: f64 = 1e-12;

/// Catalogue entries for `φ`, with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScaleKind {
    /// `φ_B(λ) = λ^{σ/2}`
    Power { sigma: f64 },
    /// `φ_B(λ) = λ^{s1/2} + λ^{s2/2}`
    TwoPower { s1: f64, s2: f64 },
    /// `φ_B(λ) = (λ + m^{2/σ})^{σ/2} - m`
    Relativistic { sigma: f64, m: f64 },
    /// `φ_B(λ) = λ^{s1/2} log(1+λ)^{(s2-s1)/2}`
    LogLower { s1: f64, s2: f64 },
    /// `φ_B(λ) = λ^{s2/2} log(1+λ)^{(s1-s2)/2}`
    LogUpper { s1: f64, s2: f64 },
}

impl ScaleKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ScaleKind::Power { .. } => "power",
            ScaleKind::TwoPower { .. } => "two-power",
            ScaleKind::Relativistic { .. } => "relativistic",
            ScaleKind::LogLower { .. } => "log-lower",
            ScaleKind::LogUpper { .. } => "log-upper",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            ScaleKind::Power { sigma } => vec![sigma],
            ScaleKind::TwoPower { s1, s2 }
            | ScaleKind::LogLower { s1, s2 }
            | ScaleKind::LogUpper { s1, s2 } => vec![s1, s2],
            ScaleKind::Relativistic { sigma, m } => vec![sigma, m],
        }
    }

    /// Indices `(σ₁, σ₂)` assigned in closed form.
    fn indices(&self) -> (f64, f64) {
        match *self {
            ScaleKind::Power { sigma } => (sigma, sigma),
            ScaleKind::Relativistic { sigma, .. } => (sigma, 1.0),
            ScaleKind::TwoPower { s1, s2 }
            | ScaleKind::LogLower { s1, s2 }
            | ScaleKind::LogUpper { s1, s2 } => (s1, s2),
        }
    }

    /// `ln φ_B(e^L)`.
    fn ln_bernstein(&self, l: f64) -> f64 {
        match *self {
            ScaleKind::Power { sigma } => 0.5 * sigma * l,
            ScaleKind::TwoPower { s1, s2 } => log_add_exp(0.5 * s1 * l, 0.5 * s2 * l),
            ScaleKind::Relativistic { sigma, m } => {
                if m == 0.0 {
                    return 0.5 * sigma * l;
                }
                let ln_c = (2.0 / sigma) * m.ln();
                if l < ln_c {
                    // λ below the mass scale: m((1 + λ/c)^{σ/2} - 1)
                    let t = (0.5 * sigma * (l - ln_c).exp().ln_1p()).exp_m1();
                    m.ln() + t.ln()
                } else {
                    let t = 0.5 * sigma * log_add_exp(l, ln_c);
                    t + (-(m.ln() - t).exp_m1()).ln()
                }
            }
            ScaleKind::LogLower { s1, s2 } => 0.5 * s1 * l + 0.5 * (s2 - s1) * ln_softplus(l),
            ScaleKind::LogUpper { s1, s2 } => 0.5 * s2 * l + 0.5 * (s1 - s2) * ln_softplus(l),
        }
    }

    /// Unnormalized `ln φ(r)`.
    fn ln_raw(&self, r: f64) -> f64 {
        match *self {
            ScaleKind::Power { sigma } => sigma * r.ln(),
            _ => -self.ln_bernstein(-2.0 * r.ln()),
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln ln(1 + e^L)`.
fn ln_softplus(l: f64) -> f64 {
    if l < -30.0 {
        l
    } else if l > 30.0 {
        (l + (-l).exp().ln_1p()).ln()
    } else {
        l.exp().ln_1p().ln()
    }
}

fn check_exponent(name: &str, s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {s} must lie in (0, 2)")))
    }
}

/// Anything usable as a Hölder modulus: a positive function with indices.
pub trait HolderModulus: Send + Sync {
    fn eval(&self, r: f64) -> f64;
    fn lower_index(&self) -> f64;
    fn upper_index(&self) -> f64;

    /// Derivative order `d = ⌊m⌋`; integer lower indices are rejected.
    fn order(&self) -> Result<usize> {
        let m = self.lower_index();
        if (m - m.round()).abs() < 1e-12 {
            return Err(Error::invalid(format!(
                "lower index {m} is an integer; the derivative order is ambiguous"
            )));
        }
        let d = m.floor();
        if !(0.0..=2.0).contains(&d) {
            return Err(Error::invalid(format!("lower index {m} gives order outside 0..=2")));
        }
        Ok(d as usize)
    }
}

/// A scale function with its weak-scaling certificate and cached `c_φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFunction {
    kind: ScaleKind,
    rho: f64,
    ln_rho_raw: f64,
    sigma1: f64,
    sigma2: f64,
    a: f64,
    c_phi: f64,
}

/// Outcome of a weak-scaling sweep. `worst_ratio` is the largest of
/// `actual / allowed` over both inequalities, so `ok` means `worst_ratio ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakScalingReport {
    pub ok: bool,
    pub worst_ratio: f64,
    pub worst_pair: (f64, f64),
}

/// `n` log-spaced points per decade covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|k| lo * 10f64.powf(decades * k as f64 / n as f64))
        .collect()
}

/// Largest values of `ln(φ(R)/φ(r)) - s2 ln(R/r)` and `s1 ln(R/r) - ln(φ(R)/φ(r))`
/// over ordered pairs of the sorted points, with the attaining pairs.
fn scaling_slack(
    ln_phi: impl Fn(f64) -> f64,
    pts: &[f64],
    s1: f64,
    s2: f64,
) -> ((f64, (f64, f64)), (f64, (f64, f64))) {
    let mut up = (f64::NEG_INFINITY, (pts[0], pts[0]));
    let mut low = (f64::NEG_INFINITY, (pts[0], pts[0]));
    let mut min_up = (f64::INFINITY, pts[0]);
    let mut max_low = (f64::NEG_INFINITY, pts[0]);
    for &r in pts {
        let g = ln_phi(r);
        let l = r.ln();
        let hu = g - s2 * l;
        let hl = g - s1 * l;
        if hu < min_up.0 {
            min_up = (hu, r);
        }
        if hl > max_low.0 {
            max_low = (hl, r);
        }
        if hu - min_up.0 > up.0 {
            up = (hu - min_up.0, (min_up.1, r));
        }
        if max_low.0 - hl > low.0 {
            low = (max_low.0 - hl, (max_low.1, r));
        }
    }
    (up, low)
}

/// Builds a catalogue scale function from its tag and parameter list.
pub fn make_scale_function(kind: &str, params: &[f64]) -> Result<ScaleFunction> {
    let want = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "scale kind {kind} takes {n} parameter(s), got {}",
                params.len()
            )))
        }
    };
    let k = match kind {
        "power" => {
            want(1)?;
            ScaleKind::Power { sigma: params[0] }
        }
        "two-power" => {
            want(2)?;
            ScaleKind::TwoPower {
                s1: params[0],
                s2: params[1],
            }
        }
        "relativistic" => {
            want(2)?;
            ScaleKind::Relativistic {
                sigma: params[0],
                m: params[1],
            }
        }
        "log-lower" => {
            want(2)?;
            ScaleKind::LogLower {
                s1: params[0],
                s2: params[1],
            }
        }
        "log-upper" => {
            want(2)?;
            ScaleKind::LogUpper {
                s1: params[0],
                s2: params[1],
            }
        }
        other => return Err(Error::invalid(format!("unknown scale kind {other:?}"))),
    };
    ScaleFunction::new(k)
}

impl ScaleFunction {
    pub fn new(kind: ScaleKind) -> Result<Self> {
        match kind {
            ScaleKind::Power { sigma } => check_exponent("sigma", sigma)?,
            ScaleKind::TwoPower { s1, s2 } | ScaleKind::LogUpper { s1, s2 } => {
                check_exponent("s1", s1)?;
                check_exponent("s2", s2)?;
                if s1 > s2 {
                    return Err(Error::invalid(format!("need s1 <= s2, got {s1} > {s2}")));
                }
            }
            ScaleKind::LogLower { s1, s2 } => {
                check_exponent("s1", s1)?;
                check_exponent("s2", s2)?;
                check_exponent("s2 - s1", s2 - s1)?;
            }
            ScaleKind::Relativistic { sigma, m } => {
                check_exponent("sigma", sigma)?;
                if sigma > 1.0 {
                    return Err(Error::invalid(format!(
                        "relativistic entry needs sigma <= 1 (upper index 1), got {sigma}"
                    )));
                }
                if !(m.is_finite() && m >= 0.0) {
                    return Err(Error::invalid(format!("mass m = {m} must be >= 0")));
                }
            }
        }
        let (sigma1, sigma2) = kind.indices();
        let mut phi = ScaleFunction {
            kind,
            rho: 1.0,
            ln_rho_raw: kind.ln_raw(1.0),
            sigma1,
            sigma2,
            a: 1.0,
            c_phi: 1.0,
        };
        phi.a = phi.estimate_a();
        phi.c_phi = compute_c_phi(&phi, C_PHI_TOL)?;
        Ok(phi)
    }

    fn estimate_a(&self) -> f64 {
        let pts = log_grid(CERT_LO, CERT_HI, CERT_PER_DECADE);
        let ((up, _), (low, _)) = scaling_slack(|r| self.ln_eval(r), &pts, self.sigma1, self.sigma2);
        let ln_a = up.max(low);
        if ln_a <= 0.0 {
            1.0
        } else {
            ln_a.exp() * CERT_PAD
        }
    }

    /// `ln φ(r)`.
    pub fn ln_eval(&self, r: f64) -> f64 {
        // power laws are scale invariant
        if let ScaleKind::Power { sigma } = self.kind {
            return sigma * r.ln();
        }
        self.kind.ln_raw(self.rho * r) - self.ln_rho_raw
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.ln_eval(r).exp()
    }

    pub fn kind(&self) -> ScaleKind {
        self.kind
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }

    /// Some(σ) when `φ(r) = r^σ` exactly.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            ScaleKind::Power { sigma } => Some(sigma),
            ScaleKind::Relativistic { sigma, m } if m == 0.0 => Some(sigma),
            _ => None,
        }
    }

    /// Replaces the declared certificate. The function itself is unchanged.
    pub fn with_certificate(mut self, sigma1: f64, sigma2: f64, a: f64) -> Result<Self> {
        check_exponent("sigma1", sigma1)?;
        check_exponent("sigma2", sigma2)?;
        if sigma1 > sigma2 || !(a >= 1.0) {
            return Err(Error::invalid("certificate needs sigma1 <= sigma2 and a >= 1"));
        }
        self.sigma1 = sigma1;
        self.sigma2 = sigma2;
        self.a = a;
        Ok(self)
    }
}

impl HolderModulus for ScaleFunction {
    fn eval(&self, r: f64) -> f64 {
        ScaleFunction::eval(self, r)
    }
    fn lower_index(&self) -> f64 {
        self.sigma1
    }
    fn upper_index(&self) -> f64 {
        self.sigma2
    }
}

/// `(∫₀¹ r/φ(r) dr)⁻¹` with absolute error at most `tol`.
pub fn compute_c_phi(phi: &ScaleFunction, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let integral = |rel: f64| {
        Quadrature {
            abs_tol: 0.0,
            rel_tol: rel,
            max_intervals: 2000,
        }
        .integrate_graded(|r| r / phi.eval(r), 1.0, phi.sigma2, &[])
    };
    let rough = integral(1e-6)?;
    let c0 = 1.0 / rough.value;
    let rel = (0.5 * tol / c0).clamp(1e-15, 1e-6);
    let fine = integral(rel)?;
    Ok(1.0 / fine.value)
}

/// Checks both weak-scaling inequalities with the stored certificate at
/// every ordered pair of `points`.
pub fn verify_weak_scaling(phi: &ScaleFunction, points: &[f64]) -> WeakScalingReport {
    let mut pts: Vec<f64> = points.iter().copied().filter(|r| *r > 0.0).collect();
    pts.sort_by(f64::total_cmp);
    if pts.is_empty() {
        return WeakScalingReport {
            ok: true,
            worst_ratio: 0.0,
            worst_pair: (0.0, 0.0),
        };
    }
    let ((up, up_pair), (low, low_pair)) =
        scaling_slack(|r| phi.ln_eval(r), &pts, phi.sigma1, phi.sigma2);
    let ln_a = phi.a.ln();
    let (ln_worst, pair) = if up >= low {
        (up - ln_a, up_pair)
    } else {
        (low - ln_a, low_pair)
    };
    let worst_ratio = ln_worst.exp();
    WeakScalingReport {
        ok: worst_ratio <= 1.0 + 1e-12,
        worst_ratio,
        worst_pair: pair,
    }
}

/// `φ̄(r) = φ(ρr)/φ(ρ)` with the same certificate.
pub fn rescaled_scale(phi: &ScaleFunction, rho: f64) -> Result<ScaleFunction> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho = {rho} must be positive")));
    }
    let mut out = phi.clone();
    out.rho = phi.rho * rho;
    out.ln_rho_raw = phi.kind.ln_raw(out.rho);
    out.c_phi = if matches!(phi.kind, ScaleKind::Power { .. }) {
        phi.c_phi
    } else {
        compute_c_phi(&out, C_PHI_TOL)?
    };
    Ok(out)
}

/// `φ(ρ) c_φ̄ / c_φ`, the factor multiplying the rescaled operator.
pub fn scaling_factor(phi: &ScaleFunction, rho: f64) -> Result<f64> {
    let bar = rescaled_scale(phi, rho)?;
    Ok(phi.eval(rho) * bar.c_phi / phi.c_phi)
}

/// `Φ(R) = (∫₀¹ r/φ(r) dr) / (∫₀¹ r/φ(rR) dr)`.
pub fn capital_phi(phi: &ScaleFunction, r_big: f64, tol: f64) -> Result<f64> {
    if !(r_big > 0.0) {
        return Err(Error::invalid("R must be positive"));
    }
    let bar = rescaled_scale(phi, r_big)?;
    let c_bar = compute_c_phi(&bar, tol)?;
    let c = compute_c_phi(phi, tol)?;
    Ok(phi.eval(r_big) * c_bar / c)
}

/// Largest observed `r φ'(r)/φ(r)` on the certification grid (a diagnostic
/// estimate of the constant `C` in `rφ' ≤ Cφ`).
pub fn log_derivative_bound(phi: &ScaleFunction) -> f64 {
    let pts = log_grid(CERT_LO, CERT_HI, CERT_PER_DECADE);
    pts.windows(2)
        .map(|w| (phi.ln_eval(w[1]) - phi.ln_eval(w[0])) / (w[1] / w[0]).ln())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Catalogue moduli `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModulusKind {
    /// `r^α`
    Power { alpha: f64 },
    /// `r^α |log(2/r)| / log 2`
    PowerLog { alpha: f64 },
    /// `(r^α + r^β) / 2`
    TwoPower { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    kind: ModulusKind,
    m_psi: f64,
    big_m_psi: f64,
}

/// Closed-form indices `(m_ψ, M_ψ)` of a catalogue modulus.
pub fn index_catalogue(kind: &str, params: &[f64]) -> Result<(f64, f64)> {
    let m = make_modulus(kind, params)?;
    Ok((m.m_psi, m.big_m_psi))
}

pub fn make_modulus(kind: &str, params: &[f64]) -> Result<Modulus> {
    let k = match (kind, params) {
        ("power", [alpha]) => ModulusKind::Power { alpha: *alpha },
        ("power-log", [alpha]) => ModulusKind::PowerLog { alpha: *alpha },
        ("two-power", [alpha, beta]) => ModulusKind::TwoPower {
            alpha: *alpha,
            beta: *beta,
        },
        ("power" | "power-log" | "two-power", _) => {
            return Err(Error::invalid(format!(
                "wrong parameter count {} for modulus kind {kind}",
                params.len()
            )))
        }
        (other, _) => return Err(Error::invalid(format!("unknown modulus kind {other:?}"))),
    };
    Modulus::new(k)
}

impl Modulus {
    pub fn new(kind: ModulusKind) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v} must be positive")))
            }
        };
        let (m, big_m) = match kind {
            ModulusKind::Power { alpha } | ModulusKind::PowerLog { alpha } => {
                positive("alpha", alpha)?;
                (alpha, alpha)
            }
            ModulusKind::TwoPower { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                (alpha.min(beta), alpha.max(beta))
            }
        };
        Ok(Modulus {
            kind,
            m_psi: m,
            big_m_psi: big_m,
        })
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }
    pub fn m_psi(&self) -> f64 {
        self.m_psi
    }
    pub fn big_m_psi(&self) -> f64 {
        self.big_m_psi
    }
    pub fn tag(&self) -> &'static str {
        match self.kind {
            ModulusKind::Power { .. } => "power",
            ModulusKind::PowerLog { .. } => "power-log",
            ModulusKind::TwoPower { .. } => "two-power",
        }
    }
    pub fn params(&self) -> Vec<f64> {
        match self.kind {
            ModulusKind::Power { alpha } | ModulusKind::PowerLog { alpha } => vec![alpha],
            ModulusKind::TwoPower { alpha, beta } => vec![alpha, beta],
        }
    }
}

impl HolderModulus for Modulus {
    fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ModulusKind::Power { alpha } => r.powf(alpha),
            ModulusKind::PowerLog { alpha } => {
                r.powf(alpha) * (2.0 / r).ln().abs() / std::f64::consts::LN_2
            }
            ModulusKind::TwoPower { alpha, beta } => 0.5 * (r.powf(alpha) + r.powf(beta)),
        }
    }
    fn lower_index(&self) -> f64 {
        self.m_psi
    }
    fn upper_index(&self) -> f64 {
        self.big_m_psi
    }
}

/// The product modulus `φψ` with derivative order `d = ⌊m_φ + m_ψ⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductModulus {
    pub phi: ScaleFunction,
    pub psi: Modulus,
    pub d: usize,
}

impl ProductModulus {
    pub fn new(phi: ScaleFunction, psi: Modulus) -> Result<Self> {
        let m = phi.sigma1 + psi.m_psi;
        let big_m = phi.sigma2 + psi.big_m_psi;
        if m.floor() != big_m.floor() || m.fract() == 0.0 || big_m.fract() == 0.0 {
            return Err(Error::Gate(format!(
                "index interval [{m}, {big_m}] of the product modulus meets an integer"
            )));
        }
        if m >= 3.0 {
            return Err(Error::invalid(format!("product index {m} needs more than two derivatives")));
        }
        Ok(ProductModulus {
            d: m.floor() as usize,
            phi,
            psi,
        })
    }
}

impl HolderModulus for ProductModulus {
    fn eval(&self, r: f64) -> f64 {
        self.phi.eval(r) * self.psi.eval(r)
    }
    fn lower_index(&self) -> f64 {
        self.phi.sigma1 + self.psi.m_psi
    }
    fn upper_index(&self) -> f64 {
        self.phi.sigma2 + self.psi.big_m_psi
    }
    fn order(&self) -> Result<usize> {
        Ok(self.d)
    }
}

/// `ψ(ρr)/ψ(ρ)`, which keeps the indices of `ψ`.
pub struct Rescaled<'a, M: HolderModulus + ?Sized> {
    pub inner: &'a M,
    pub rho: f64,
    norm: f64,
}

impl<'a, M: HolderModulus + ?Sized> Rescaled<'a, M> {
    pub fn new(inner: &'a M, rho: f64) -> Self {
        Rescaled {
            inner,
            rho,
            norm: inner.eval(rho),
        }
    }
}

impl<M: HolderModulus + ?Sized> HolderModulus for Rescaled<'_, M> {
    fn eval(&self, r: f64) -> f64 {
        self.inner.eval(self.rho * r) / self.norm
    }
    fn lower_index(&self) -> f64 {
        self.inner.lower_index()
    }
    fn upper_index(&self) -> f64 {
        self.inner.upper_index()
    }
    fn order(&self) -> Result<usize> {
        self.inner.order()
    }
}

/// One clause of the index assumptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub clauses: Vec<Clause>,
}

impl IndexReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.clauses
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect()
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-12
}

/// Checks the five index clauses for the pair `(φ, ψ)` separately.
pub fn validate_index_assumptions(
    phi: &ScaleFunction,
    psi: &Modulus,
    alpha_bar: f64,
    sigma0: f64,
) -> IndexReport {
    let (m_phi, big_m_phi) = (phi.sigma1, phi.sigma2);
    let (m_psi, big_m_psi) = (psi.m_psi, psi.big_m_psi);
    let m_prod = m_phi + m_psi;
    let big_m_prod = big_m_phi + big_m_psi;
    let clause = |name, pass, detail: String| Clause { name, pass, detail };
    let no_integer = !is_integer(m_prod)
        && !is_integer(big_m_prod)
        && m_prod.floor() == big_m_prod.floor();
    IndexReport {
        clauses: vec![
            clause(
                "phi-range",
                sigma0 <= m_phi && big_m_phi < 2.0,
                format!("I_phi = [{m_phi}, {big_m_phi}] against [{sigma0}, 2)"),
            ),
            clause(
                "psi-range",
                m_psi > 0.0 && big_m_psi < alpha_bar,
                format!("I_psi = [{m_psi}, {big_m_psi}] against (0, {alpha_bar})"),
            ),
            clause(
                "product-non-integer",
                no_integer,
                format!("I_phipsi = [{m_prod}, {big_m_prod}]"),
            ),
            clause(
                "shift-non-integer",
                !is_integer(m_phi + alpha_bar),
                format!("m_phi + alpha_bar = {}", m_phi + alpha_bar),
            ),
            clause(
                "same-floor",
                (m_phi + alpha_bar).floor() == m_prod.floor(),
                format!(
                    "floor({}) vs floor({m_prod})",
                    m_phi + alpha_bar
                ),
            ),
        ],
    }
}

/// `α = m_ψ - (m_φψ - ⌊m_φψ⌋)/2`, checked against the ordering chain
/// `⌊m_φ + ᾱ⌋ = ⌊m_φψ⌋ < m_φ + α < m_φψ`.
pub fn admissible_alpha(phi: &ScaleFunction, psi: &Modulus, alpha_bar: f64) -> Result<f64> {
    let m_phi = phi.sigma1;
    let m_prod = m_phi + psi.m_psi;
    let alpha = psi.m_psi - 0.5 * (m_prod - m_prod.floor());
    if !(alpha > 0.0 && alpha < psi.m_psi) {
        return Err(Error::Gate(format!(
            "alpha = {alpha} is not in (0, m_psi = {})",
            psi.m_psi
        )));
    }
    let floor_prod = m_prod.floor();
    let chain = (m_phi + alpha_bar).floor() == floor_prod
        && floor_prod < m_phi + alpha
        && m_phi + alpha < m_prod;
    if !chain {
        return Err(Error::Gate(format!(
            "ordering chain fails: floor(m_phi + alpha_bar) = {}, floor(m_phipsi) = {floor_prod}, m_phi + alpha = {}, m_phipsi = {m_prod}",
            (m_phi + alpha_bar).floor(),
            m_phi + alpha
        )));
    }
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_is_normalized_and_exact() {
        let phi = make_scale_function("power", &[1.0]).unwrap();
        assert_eq!(phi.eval(2.0), 2.0);
        assert_eq!(phi.a(), 1.0);
        let r = verify_weak_scaling(&phi, &log_grid(1e-3, 1e3, 8));
        assert!(r.ok);
        assert_eq!(r.worst_ratio, 1.0);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(make_scale_function("power", &[2.5]).is_err());
        assert!(make_scale_function("power", &[0.0]).is_err());
        assert!(make_scale_function("log-lower", &[1.5, 1.0]).is_err());
        assert!(make_scale_function("nope", &[1.0]).is_err());
    }

    #[test]
    fn relativistic_small_lambda_branch_is_continuous() {
        let phi = make_scale_function("relativistic", &[0.5, 1.0]).unwrap();
        let k = phi.kind();
        let ln_c = 0.0;
        let below = k.ln_bernstein(ln_c - 1e-9);
        let above = k.ln_bernstein(ln_c + 1e-9);
        assert!((below - above).abs() < 1e-8);
    }

    #[test]
    fn power_certificate_violation() {
        let phi = make_scale_function("power", &[1.5])
            .unwrap()
            .with_certificate(1.0, 1.0, 1.0)
            .unwrap();
        assert!(!verify_weak_scaling(&phi, &log_grid(1e-2, 1e2, 4)).ok);
    }

    #[test]
    fn alpha_examples() {
        let phi = make_scale_function("power", &[1.95]).unwrap();
        let psi = make_modulus("power", &[0.1]).unwrap();
        let a = admissible_alpha(&phi, &psi, 0.12).unwrap();
        assert!((a - 0.075).abs() < 1e-12);
        let phi = make_scale_function("power", &[1.55]).unwrap();
        assert!(admissible_alpha(&phi, &psi, 0.12).is_err());
    }
}
