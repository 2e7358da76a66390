//! Kernels, second-order increments and the nonlocal operators built on them.

mod eval;
mod far;
mod measure;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holder::GridFunction;
use crate::scale::{log_grid, ScaleFunction};

pub use eval::{
    delta, ellipticity_sandwich_check, eval_bellman, eval_linear, eval_operator, eval_pucci,
    l_psi_check, pn_functionals, weight_norm, ClosedForm, Field, LPsiReport, SandwichReport, Sign,
};
pub use far::{exterior_pieces, tail_buckets, Bucket};
pub use measure::{KernelMeasure, Shape};

/// A symmetric kernel `b(y) K_φ(y)` with its ellipticity envelope.
#[derive(Clone)]
pub struct KernelSpec {
    pub phi: ScaleFunction,
    pub lambda: f64,
    pub big_lambda: f64,
    pub shape: Option<Shape>,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("phi", &self.phi.kind())
            .field("lambda", &self.lambda)
            .field("big_lambda", &self.big_lambda)
            .field("shaped", &self.shape.is_some())
            .finish()
    }
}

fn check_bounds(lambda: f64, big_lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite() && big_lambda >= lambda && big_lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "ellipticity constants must satisfy 0 < λ ≤ Λ, got λ = {lambda}, Λ = {big_lambda}"
        )));
    }
    Ok(())
}

impl KernelSpec {
    /// Validates `λ ≤ b(y) ≤ Λ` on a log grid of `y`.
    pub fn new(phi: ScaleFunction, lambda: f64, big_lambda: f64, shape: Option<Shape>) -> Result<Self> {
        check_bounds(lambda, big_lambda)?;
        let slack = 1e-12 * big_lambda;
        match &shape {
            None => {
                if lambda > 1.0 + slack || big_lambda < 1.0 - slack {
                    return Err(Error::invalid(format!(
                        "the unshaped kernel leaves the envelope [{lambda}, {big_lambda}]"
                    )));
                }
            }
            Some(b) => {
                for y in log_grid(1e-6, 1e6, 16) {
                    let v = b(y);
                    if !(v >= lambda - slack && v <= big_lambda + slack) {
                        return Err(Error::invalid(format!(
                            "kernel multiplier {v} at y = {y} leaves the envelope [{lambda}, {big_lambda}]"
                        )));
                    }
                }
            }
        }
        Ok(KernelSpec {
            phi,
            lambda,
            big_lambda,
            shape,
        })
    }

    /// `K_φ` itself.
    pub fn standard(phi: ScaleFunction) -> Self {
        KernelSpec {
            phi,
            lambda: 1.0,
            big_lambda: 1.0,
            shape: None,
        }
    }

    /// `c K_φ` for a constant `c` inside the envelope.
    pub fn constant(phi: ScaleFunction, lambda: f64, big_lambda: f64, c: f64) -> Result<Self> {
        if c == 1.0 {
            return KernelSpec::new(phi, lambda, big_lambda, None);
        }
        KernelSpec::new(phi, lambda, big_lambda, Some(std::sync::Arc::new(move |_| c)))
    }

    pub fn measure(&self) -> KernelMeasure {
        KernelMeasure::new(&self.phi, self.shape.clone())
    }

    /// `K(y)`, even in `y`.
    pub fn density(&self, y: f64) -> f64 {
        let y = y.abs();
        let b = self.shape.as_ref().map_or(1.0, |b| b(y));
        b * self.phi.c_phi() / (y * self.phi.eval(y))
    }
}

/// Additive term `c_a(x)` of a Bellman branch.
#[derive(Debug, Clone)]
pub enum Offset {
    Constant(f64),
    Grid(GridFunction),
}

impl Offset {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Offset::Constant(c) => *c,
            Offset::Grid(g) => g.eval(x),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Offset::Constant(c) => c.is_finite(),
            Offset::Grid(g) => g.values().iter().all(|v| v.is_finite()),
        }
    }
}

/// One member `b_a(x) ∫ δ K_a + c_a(x)` of a Bellman family.
#[derive(Clone)]
pub struct BellmanBranch {
    pub kernel: KernelSpec,
    pub x_factor: Option<Shape>,
    pub offset: Offset,
}

impl fmt::Debug for BellmanBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BellmanBranch")
            .field("kernel", &self.kernel)
            .field("x_dependent", &self.x_factor.is_some())
            .field("offset", &self.offset)
            .finish()
    }
}

impl BellmanBranch {
    pub fn new(kernel: KernelSpec, offset: Offset) -> Self {
        BellmanBranch {
            kernel,
            x_factor: None,
            offset,
        }
    }

    pub fn factor_at(&self, x: f64) -> f64 {
        self.x_factor.as_ref().map_or(1.0, |b| b(x))
    }
}

#[derive(Debug, Clone)]
pub enum Variant {
    Linear(KernelSpec),
    PucciPlus,
    PucciMinus,
    Bellman(Vec<BellmanBranch>),
}

/// A translation-invariant or Bellman operator over the class `L₀(φ)`.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub variant: Variant,
    pub phi: ScaleFunction,
    pub lambda: f64,
    pub big_lambda: f64,
}

impl OperatorSpec {
    pub fn new(variant: Variant, phi: ScaleFunction, lambda: f64, big_lambda: f64) -> Result<Self> {
        check_bounds(lambda, big_lambda)?;
        if let Variant::Bellman(family) = &variant {
            if family.is_empty() {
                return Err(Error::invalid("a Bellman family needs at least one branch"));
            }
            if let Some(k) = family.iter().position(|b| !b.offset.is_finite()) {
                return Err(Error::invalid(format!("branch {k} has a non-finite offset")));
            }
        }
        Ok(OperatorSpec {
            variant,
            phi,
            lambda,
            big_lambda,
        })
    }

    pub fn linear(kernel: KernelSpec) -> Result<Self> {
        let (phi, l, u) = (kernel.phi.clone(), kernel.lambda, kernel.big_lambda);
        OperatorSpec::new(Variant::Linear(kernel), phi, l, u)
    }

    pub fn pucci_plus(phi: ScaleFunction, lambda: f64, big_lambda: f64) -> Result<Self> {
        OperatorSpec::new(Variant::PucciPlus, phi, lambda, big_lambda)
    }

    pub fn pucci_minus(phi: ScaleFunction, lambda: f64, big_lambda: f64) -> Result<Self> {
        OperatorSpec::new(Variant::PucciMinus, phi, lambda, big_lambda)
    }

    pub fn bellman(
        family: Vec<BellmanBranch>,
        phi: ScaleFunction,
        lambda: f64,
        big_lambda: f64,
    ) -> Result<Self> {
        OperatorSpec::new(Variant::Bellman(family), phi, lambda, big_lambda)
    }

    pub fn name(&self) -> &'static str {
        match self.variant {
            Variant::Linear(_) => "linear",
            Variant::PucciPlus => "pucci-plus",
            Variant::PucciMinus => "pucci-minus",
            Variant::Bellman(_) => "bellman",
        }
    }
}

/// Quadrature controls. `h_cut` defaults to the grid step of the argument,
/// `r_far` to the distance after which both `x ± y` leave the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub h_cut: Option<f64>,
    pub r_far: Option<f64>,
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            h_cut: None,
            r_far: None,
            tol: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureSpec {
            tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("quadrature tolerance must be positive, got {}", self.tol)));
        }
        if let Some(h) = self.h_cut {
            if !(h > 0.0) {
                return Err(Error::invalid(format!("h_cut must be positive, got {h}")));
            }
            if let Some(r) = self.r_far {
                if !(r > h) {
                    return Err(Error::invalid(format!("r_far = {r} must exceed h_cut = {h}")));
                }
            }
        }
        Ok(())
    }
}
