use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{gk15, Quadrature};
use crate::scale::ScaleFunction;

/// Even multiplier `b(y)` applied to `K_φ`.
pub type Shape = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The measure `b(y) c_φ / (|y| φ(|y|)) dy` on `(0, ∞)`, with closed forms
/// for pure power laws.
#[derive(Clone)]
pub struct KernelMeasure {
    phi: ScaleFunction,
    c: f64,
    power: Option<f64>,
    shape: Option<Shape>,
}

impl fmt::Debug for KernelMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelMeasure")
            .field("phi", &self.phi.kind())
            .field("c", &self.c)
            .field("shaped", &self.shape.is_some())
            .finish()
    }
}

impl KernelMeasure {
    pub fn new(phi: &ScaleFunction, shape: Option<Shape>) -> Self {
        let power = match phi.kind() {
            crate::scale::ScaleKind::Power { sigma } => Some(sigma),
            _ => None,
        };
        KernelMeasure {
            c: phi.c_phi(),
            phi: phi.clone(),
            power,
            shape,
        }
    }

    pub fn phi(&self) -> &ScaleFunction {
        &self.phi
    }

    pub fn is_shaped(&self) -> bool {
        self.shape.is_some()
    }

    pub fn shape_at(&self, y: f64) -> f64 {
        self.shape.as_ref().map_or(1.0, |b| b(y))
    }

    /// `K(y)` for `y > 0`.
    pub fn density(&self, y: f64) -> f64 {
        let base = match self.power {
            Some(s) => self.c * y.powf(-1.0 - s),
            None => self.c / (y * self.phi.eval(y)),
        };
        base * self.shape_at(y)
    }

    /// Decay exponent of the density at infinity (`K ≲ y^{-1-decay}`).
    pub fn decay(&self) -> f64 {
        self.phi.sigma1()
    }

    /// `∫_p^q K`.
    pub fn mass(&self, p: f64, q: f64) -> Result<f64> {
        if !(q > p) {
            return Ok(0.0);
        }
        if let (Some(s), None) = (self.power, &self.shape) {
            // c (p^{-s} - q^{-s}) / s without cancellation
            let r = ((q - p) / p).ln_1p();
            return Ok(self.c * p.powf(-s) * (-(-s * r).exp_m1()) / s);
        }
        // y = e^t turns K dy into b(y) c / φ(y) dt
        let (lp, lq) = (p.ln(), q.ln());
        let mut g = |t: f64| {
            let y = t.exp();
            self.density(y) * y
        };
        if lq - lp <= 0.25 && self.shape.is_none() {
            return Ok(gk15(&mut g, lp, lq).0);
        }
        let est = Quadrature {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 400,
        }
        .integrate(g, &[lp, lq])?;
        Ok(est.value)
    }

    /// `∫_p^q y² K`.
    pub fn moment2(&self, p: f64, q: f64) -> Result<f64> {
        if !(q > p) {
            return Ok(0.0);
        }
        if let (Some(s), None) = (self.power, &self.shape) {
            let e = 2.0 - s;
            let r = ((q - p) / p).ln_1p();
            return Ok(self.c * p.powf(e) * (e * r).exp_m1() / e);
        }
        let (lp, lq) = (p.ln(), q.ln());
        let mut g = |t: f64| {
            let y = t.exp();
            self.density(y) * y * y * y
        };
        if lq - lp <= 0.25 && self.shape.is_none() {
            return Ok(gk15(&mut g, lp, lq).0);
        }
        let est = Quadrature {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 400,
        }
        .integrate(g, &[lp, lq])?;
        Ok(est.value)
    }

    /// `∫_y^∞ K`.
    pub fn tail(&self, y: f64) -> Result<f64> {
        if let (Some(s), None) = (self.power, &self.shape) {
            return Ok(self.c * y.powf(-s) / s);
        }
        let est = Quadrature {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
        .integrate_to_infinity(|t| self.density(t), y, self.decay(), &[])?;
        Ok(est.value)
    }

    /// `∫_0^h y² K`.
    pub fn second_moment(&self, h: f64) -> Result<f64> {
        if let (Some(s), None) = (self.power, &self.shape) {
            return Ok(self.c * h.powf(2.0 - s) / (2.0 - s));
        }
        let est = Quadrature {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
        .integrate_graded(|y| y * y * self.density(y), h, self.phi.sigma2(), &[])?;
        Ok(est.value)
    }

    /// Adaptive `∫_p^q f(y) K(y) dy` for a bounded `f` with the given kinks.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, p: f64, q: f64, kinks: &[f64], tol: f64) -> Result<f64> {
        if !(q > p) {
            return Ok(0.0);
        }
        let mut pts = Vec::with_capacity(kinks.len() + 2);
        pts.push(p);
        pts.extend(kinks.iter().copied().filter(|&k| k > p && k < q));
        pts.push(q);
        let budget = 4 * pts.len() + 2000;
        let est = Quadrature {
            abs_tol: tol,
            rel_tol: 0.0,
            max_intervals: budget,
        }
        .integrate(|y| f(y) * self.density(y), &pts)?;
        Ok(est.value)
    }

    /// `∫_p^∞ f(y) K(y) dy` for `f` growing at most like `y^growth`.
    pub fn integrate_tail(&self, f: impl Fn(f64) -> f64, p: f64, growth: f64, kinks: &[f64], tol: f64) -> Result<f64> {
        let decay = self.decay() - growth;
        if !(decay > 0.0) {
            return Err(Error::Tail(format!(
                "growth {growth} is not integrable against a kernel of order {}",
                self.decay()
            )));
        }
        let est = Quadrature {
            abs_tol: tol,
            rel_tol: 0.0,
            max_intervals: 4000,
        }
        .integrate_to_infinity(|y| f(y) * self.density(y), p, decay, kinks)?;
        Ok(est.value)
    }
}
