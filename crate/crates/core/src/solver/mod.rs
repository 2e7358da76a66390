//! Monotone discretization and solution of nonlocal Dirichlet problems
//! `I(u, x) = f(x)` in `(a, b)`, `u = g` outside.

mod checks;
mod scheme;

use faer::linalg::solvers::Solve;
use faer::{Col, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holder::{Exterior, GridFunction};
use crate::kernels::OperatorSpec;

pub use checks::{
    barrier_check, barrier_function, comparison_check, maximum_principle_check, BarrierReport, BarrierRow,
    ComparisonReport, MaximumPrincipleReport,
};
pub use scheme::{apply_operator, discretize_weights, DiscreteOperator, WeightTable};

use scheme::{Kind, NONE};

/// `I u = f` in `(a, b)` on the nodes `a + i h`, with `u = g` outside.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub op: OperatorSpec,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub g: Exterior,
    /// Right-hand side sampled at the nodes.
    pub f: GridFunction,
}

impl DirichletProblem {
    pub fn new(op: OperatorSpec, a: f64, b: f64, h: f64, g: Exterior) -> Result<Self> {
        let n = scheme::cell_count(a, b, h)?;
        let f = GridFunction::new(a, h, vec![0.0; n + 1], Exterior::Zero)?;
        Ok(DirichletProblem { op, a, b, h, g, f })
    }

    pub fn with_rhs(mut self, f: impl Fn(f64) -> f64) -> Result<Self> {
        for i in 0..self.f.len() {
            let x = self.f.x(i);
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::invalid(format!("right-hand side is not finite at x = {x}")));
            }
            self.f.values_mut()[i] = v;
        }
        Ok(self)
    }

    pub fn nodes(&self) -> usize {
        self.f.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Policy iteration with a dense LU solve per policy.
    #[default]
    Howard,
    /// Explicit Jacobi pseudo-time stepping `u ← u + τ (I u − f)`.
    PseudoTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    /// Bound on the far-field mass error per node.
    pub bucket_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Howard,
            tol: 1e-9,
            max_iter: 100,
            bucket_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Solution on the nodes of `[a, b]` with exterior `g`.
    pub u: GridFunction,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// The stable pseudo-time step `0.9 / (2 max_i Λ Σ w)`.
    pub tau: f64,
    pub converged: bool,
    pub method: Method,
    pub comparison_certificate: Option<ComparisonReport>,
}

impl SolveReport {
    pub fn residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

fn sup_residual(op: &DiscreteOperator, u: &[f64], f: &[f64]) -> (Vec<f64>, f64) {
    let r: Vec<f64> = op.apply_all(u).iter().zip(&f[1..]).map(|(a, b)| a - b).collect();
    let s = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (r, s)
}

fn check_divergence(history: &[f64], tol: f64) -> Result<()> {
    let Some(&last) = history.last() else {
        return Ok(());
    };
    let min = history.iter().copied().fold(f64::INFINITY, f64::min);
    if !last.is_finite() || (last > 2.0 * min && last > tol) {
        return Err(Error::Divergence {
            iteration: history.len() - 1,
            residual: last,
            minimum: min,
        });
    }
    Ok(())
}

/// Coefficient multiplying the term `t` under the current policy.
#[derive(Clone, PartialEq)]
enum Policy {
    /// One coefficient per term of the single scheme.
    Terms(Vec<f64>),
    /// One branch per interior node.
    Branches(Vec<usize>),
}

fn choose_policy(op: &DiscreteOperator, u: &[f64]) -> Policy {
    match op.kind {
        Kind::Linear => Policy::Branches(vec![0; op.n - 1]),
        Kind::Plus(l, big) | Kind::Minus(l, big) => {
            let plus = matches!(op.kind, Kind::Plus(..));
            let s = &op.schemes[0];
            let coefs = (1..op.n)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let ui = u[i];
                    s.row(i).iter().map(move |t| {
                        let d = t.delta(u, ui);
                        if (d > 0.0) == plus {
                            big
                        } else {
                            l
                        }
                    })
                })
                .collect();
            Policy::Terms(coefs)
        }
        Kind::Bellman => {
            let best = (1..op.n)
                .into_par_iter()
                .map(|i| {
                    let mut arg = 0;
                    let mut val = f64::INFINITY;
                    for k in 0..op.schemes.len() {
                        let v = op.branch(k, u, i);
                        if v < val {
                            val = v;
                            arg = k;
                        }
                    }
                    arg
                })
                .collect();
            Policy::Branches(best)
        }
    }
}

/// Solves the linear system of one policy; boundary nodes stay fixed.
fn solve_policy(op: &DiscreteOperator, policy: &Policy, u: &[f64], f: &[f64]) -> Vec<f64> {
    let m = op.n - 1;
    let mut a = Mat::<f64>::zeros(m, m);
    let mut rhs = Col::<f64>::zeros(m);
    for i in 1..op.n {
        let r = i - 1;
        let (k, coefs): (usize, Option<&[f64]>) = match policy {
            Policy::Terms(c) => {
                let s = &op.schemes[0];
                (0, Some(&c[s.rows[r]..s.rows[r + 1]]))
            }
            Policy::Branches(b) => (b[r], None),
        };
        let factor = op.factors[k][r];
        let mut b = f[i] - op.offsets[k][r];
        let mut diag = 0.0;
        for (t_idx, t) in op.schemes[k].row(i).iter().enumerate() {
            let c = factor * coefs.map_or(1.0, |c| c[t_idx]) * t.mass;
            diag -= 2.0 * c;
            b -= c * t.g;
            for idx in [t.plus, t.minus] {
                if idx == NONE {
                    continue;
                }
                let j = idx as usize;
                if j == 0 || j == op.n {
                    b -= c * u[j];
                } else {
                    a[(r, j - 1)] += c;
                }
            }
        }
        a[(r, r)] += diag;
        rhs[r] = b;
    }
    let x = a.partial_piv_lu().solve(&rhs);
    let mut out = u.to_vec();
    for r in 0..m {
        out[r + 1] = x[r];
    }
    out
}

/// Solves the discrete Dirichlet problem.
pub fn solve(problem: &DirichletProblem, options: &SolverOptions) -> Result<SolveReport> {
    let op = DiscreteOperator::new(
        &problem.op,
        problem.a,
        problem.b,
        problem.h,
        &problem.g,
        options.bucket_tol,
    )?;
    solve_discrete(problem, &op, options)
}

/// As [`solve`], reusing a prepared discretization of `problem`.
pub fn solve_discrete(problem: &DirichletProblem, op: &DiscreteOperator, options: &SolverOptions) -> Result<SolveReport> {
    if !(options.tol > 0.0) {
        return Err(Error::invalid(format!("solver tolerance must be positive, got {}", options.tol)));
    }
    let n = op.n;
    let f = problem.f.values();
    let tau = 0.9 / (2.0 * op.max_diagonal());
    // initial guess: window average of the exterior rule
    let mean = (0..=n).map(|i| problem.g.eval(op.x(i))).sum::<f64>() / (n + 1) as f64;
    let mut u = vec![mean; n + 1];
    u[0] = problem.g.eval(problem.a);
    u[n] = problem.g.eval(problem.b);

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    match options.method {
        Method::Howard => {
            let mut last: Option<Policy> = None;
            loop {
                let (_, res) = sup_residual(op, &u, f);
                history.push(res);
                // policy iteration is monotone in u, not in the residual
                if !res.is_finite() {
                    check_divergence(&history, options.tol)?;
                }
                if res <= options.tol {
                    converged = true;
                    break;
                }
                if iterations >= options.max_iter {
                    break;
                }
                let policy = choose_policy(op, &u);
                if last.as_ref() == Some(&policy) {
                    // the policy is stable, so rounding limits the residual
                    break;
                }
                u = solve_policy(op, &policy, &u, f);
                last = Some(policy);
                iterations += 1;
            }
        }
        Method::PseudoTime => loop {
            let (r, res) = sup_residual(op, &u, f);
            history.push(res);
            check_divergence(&history, options.tol)?;
            if res <= options.tol {
                converged = true;
                break;
            }
            if iterations >= options.max_iter {
                break;
            }
            for (k, ri) in r.iter().enumerate() {
                u[k + 1] += tau * ri;
            }
            iterations += 1;
        },
    }
    let u = GridFunction::new(problem.a, problem.h, u, problem.g.clone())?;
    Ok(SolveReport {
        u,
        residual_history: history,
        iterations,
        tau,
        converged,
        method: options.method,
        comparison_certificate: None,
    })
}
