//! TOML run configuration (`schema = 1`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{BoundednessConfig, CounterexampleConfig, EkConfig, SchauderConfig};
use crate::holder::Exterior;
use crate::kernels::{KernelSpec, OperatorSpec};
use crate::scale::{make_modulus, make_scale_function, Modulus, ModulusKind, ScaleFunction, ScaleKind};
use crate::solver::{DirichletProblem, SolverOptions};

pub const SCHEMA: u32 = 1;

/// Environment variable that overrides `output_dir`.
pub const OUT_DIR_ENV: &str = "VARORDER_OUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub solve: Option<SolveConfig>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleConfig>,
    #[serde(default, rename = "ek-sweep")]
    pub ek_sweep: Option<EkConfig>,
    #[serde(default)]
    pub schauder: Option<SchauderConfig>,
    #[serde(default, rename = "local-boundedness")]
    pub local_boundedness: Option<BoundednessConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `L_φ` with the standard kernel `c_φ / (|y| φ(|y|))`.
    Linear,
    PucciPlus,
    PucciMinus,
}

/// Seminorm diagnostic attached to a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormConfig {
    pub modulus: ModulusKind,
    /// Multiply the modulus by `φ` of the solve.
    #[serde(default)]
    pub times_phi: bool,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub phi: ScaleKind,
    pub operator: OperatorKind,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "two")]
    pub big_lambda: f64,
    #[serde(default = "unit_window")]
    pub window: [f64; 2],
    pub h: f64,
    #[serde(default = "zero_exterior")]
    pub exterior: Exterior,
    /// Constant right-hand side.
    #[serde(default)]
    pub rhs: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub seminorm: Option<SeminormConfig>,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn unit_window() -> [f64; 2] {
    [-1.0, 1.0]
}

fn zero_exterior() -> Exterior {
    Exterior::Zero
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn check_steps(name: &str, hs: &[f64]) -> Result<()> {
    check(!hs.is_empty(), || format!("{name}.h_values must not be empty"))?;
    for &h in hs {
        check(h > 0.0 && h < 1.0, || format!("{name}.h_values entry {h} must lie in (0, 1)"))?;
    }
    Ok(())
}

fn check_solver(name: &str, s: &SolverOptions) -> Result<()> {
    check(s.tol > 0.0, || format!("{name}.solver.tol must be positive"))?;
    check(s.bucket_tol > 0.0, || format!("{name}.solver.bucket_tol must be positive"))
}

fn check_envelope(name: &str, l: f64, big: f64) -> Result<()> {
    check(l > 0.0 && l <= big && big.is_finite(), || {
        format!("{name}: need 0 < lambda <= big_lambda, got {l} and {big}")
    })
}

fn check_sigmas(name: &str, sigmas: &[f64]) -> Result<()> {
    check(!sigmas.is_empty(), || format!("{name}.sigma_values must not be empty"))?;
    for &s in sigmas {
        make_scale_function("power", &[s]).map_err(|e| Error::Config(format!("{name}: {e}")))?;
    }
    Ok(())
}

fn check_psi(name: &str, alpha: f64) -> Result<()> {
    make_modulus("power", &[alpha])
        .map(|_| ())
        .map_err(|e| Error::Config(format!("{name}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// `$VARORDER_OUT_DIR`, else `output_dir`, else `out`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(self.schema == SCHEMA, || {
            format!("unsupported schema {} (expected {SCHEMA})", self.schema)
        })?;
        if let Some(s) = &self.solve {
            s.validate()?;
        }
        if let Some(c) = &self.counterexample {
            check_sigmas("counterexample", &[c.sigma])?;
            check_psi("counterexample", c.psi_alpha)?;
            check_envelope("counterexample", c.lambda, c.big_lambda)?;
            check_steps("counterexample", &c.h_values)?;
            check_solver("counterexample", &c.solver)?;
            check(!c.m_values.is_empty() && c.m_values.iter().all(|&m| m > 0.0), || {
                "counterexample.m_values must be positive and nonempty".into()
            })?;
        }
        if let Some(c) = &self.ek_sweep {
            check_sigmas("ek-sweep", &c.sigma_values)?;
            check_psi("ek-sweep", c.psi_alpha)?;
            check_envelope("ek-sweep", c.lambda, c.big_lambda)?;
            check_steps("ek-sweep", &c.h_values)?;
            check_solver("ek-sweep", &c.solver)?;
            check(c.family_size > 0, || "ek-sweep.family_size must be positive".into())?;
        }
        if let Some(c) = &self.schauder {
            check_sigmas("schauder", &[c.sigma])?;
            check_psi("schauder", c.psi_alpha)?;
            check_envelope("schauder", c.lambda, c.big_lambda)?;
            check_steps("schauder", &c.h_values)?;
            check_solver("schauder", &c.solver)?;
            check(c.family_size > 0, || "schauder.family_size must be positive".into())?;
            check(c.a0 > 0.0, || "schauder.a0 must be positive".into())?;
        }
        if let Some(c) = &self.local_boundedness {
            check_sigmas("local-boundedness", &c.sigma_values)?;
            check_envelope("local-boundedness", c.lambda, c.big_lambda)?;
            check_steps("local-boundedness", &c.h_values)?;
            check_solver("local-boundedness", &c.solver)?;
            check(c.instances > 0, || "local-boundedness.instances must be positive".into())?;
        }
        Ok(())
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let ctx = |e: Error| Error::Config(format!("solve: {e}"));
        ScaleFunction::new(self.phi).map_err(ctx)?;
        check_envelope("solve", self.lambda, self.big_lambda)?;
        let [a, b] = self.window;
        check(a < b, || format!("solve.window [{a}, {b}] is empty"))?;
        check(self.h > 0.0, || format!("solve.h must be positive, got {}", self.h))?;
        check(self.rhs.is_finite(), || "solve.rhs must be finite".into())?;
        check_solver("solve", &self.solver)?;
        if let Exterior::Custom { .. } = self.exterior {
            return Err(Error::Config("solve.exterior must be zero, constant or sign-sin".into()));
        }
        if let Some(s) = &self.seminorm {
            Modulus::new(s.modulus).map_err(ctx)?;
            check(s.window[0] < s.window[1], || "solve.seminorm.window is empty".into())?;
        }
        Ok(())
    }

    pub fn phi(&self) -> Result<ScaleFunction> {
        ScaleFunction::new(self.phi)
    }

    pub fn operator(&self) -> Result<OperatorSpec> {
        let phi = self.phi()?;
        match self.operator {
            OperatorKind::Linear => OperatorSpec::linear(KernelSpec::standard(phi)),
            OperatorKind::PucciPlus => OperatorSpec::pucci_plus(phi, self.lambda, self.big_lambda),
            OperatorKind::PucciMinus => OperatorSpec::pucci_minus(phi, self.lambda, self.big_lambda),
        }
    }

    pub fn problem(&self) -> Result<DirichletProblem> {
        let rhs = self.rhs;
        DirichletProblem::new(self.operator()?, self.window[0], self.window[1], self.h, self.exterior.clone())?
            .with_rhs(|_| rhs)
    }
}
