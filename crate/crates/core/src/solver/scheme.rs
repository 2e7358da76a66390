use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::holder::Exterior;
use crate::kernels::{exterior_pieces, tail_buckets, KernelMeasure, OperatorSpec, Variant};

/// Weights `w_j` of the cells `[(j−½)h, (j+½)h]`, `j ≥ 1`, counted on both
/// sides of the origin. They match second moments, `w_j (jh)² = 2∫_cell y² K`,
/// and the first cell also carries `[0, h/2]`, so the scheme is exact on
/// quadratics. `mass` holds the plain cell masses `2∫_cell K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTable {
    pub h: f64,
    pub w: Vec<f64>,
    pub mass: Vec<f64>,
}

impl WeightTable {
    /// `w_j`, `j ≥ 1`.
    pub fn cell(&self, j: usize) -> f64 {
        self.w[j - 1]
    }

    /// `2∫_cell K`, `j ≥ 1`.
    pub fn cell_mass(&self, j: usize) -> f64 {
        self.mass[j - 1]
    }
}

fn cell_weights(measure: &KernelMeasure, h: f64, jmax: usize) -> Result<WeightTable> {
    if !(h > 0.0) || jmax == 0 {
        return Err(Error::invalid(format!("need h > 0 and at least one cell, got h = {h}")));
    }
    let mut w = Vec::with_capacity(jmax);
    let mut mass = Vec::with_capacity(jmax);
    for j in 1..=jmax {
        let lo = (j as f64 - 0.5) * h;
        let hi = (j as f64 + 0.5) * h;
        let y = j as f64 * h;
        w.push(2.0 * measure.moment2(lo, hi)? / (y * y));
        mass.push(2.0 * measure.mass(lo, hi)?);
    }
    w[0] += 2.0 * measure.second_moment(0.5 * h)? / (h * h);
    Ok(WeightTable { h, w, mass })
}

fn measures(op: &OperatorSpec) -> Vec<KernelMeasure> {
    match &op.variant {
        Variant::Linear(k) => vec![k.measure()],
        Variant::PucciPlus | Variant::PucciMinus => vec![KernelMeasure::new(&op.phi, None)],
        Variant::Bellman(family) => family.iter().map(|b| b.kernel.measure()).collect(),
    }
}

/// One weight table per kernel of `op` (one for linear and Pucci operators,
/// one per branch for Bellman families).
pub fn discretize_weights(op: &OperatorSpec, h: f64, jmax: usize) -> Result<Vec<WeightTable>> {
    measures(op).iter().map(|m| cell_weights(m, h, jmax)).collect()
}

pub(crate) const NONE: u32 = u32::MAX;

/// `δ ≈ u[plus] + u[minus] + g − 2u[i]` (missing indices contribute 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Term {
    pub plus: u32,
    pub minus: u32,
    pub g: f64,
    pub mass: f64,
}

impl Term {
    #[inline]
    pub fn delta(&self, u: &[f64], ui: f64) -> f64 {
        let up = if self.plus == NONE { 0.0 } else { u[self.plus as usize] };
        let um = if self.minus == NONE { 0.0 } else { u[self.minus as usize] };
        up + um + self.g - 2.0 * ui
    }
}

/// Terms of one kernel for every interior node, in row-compressed form.
#[derive(Debug, Clone)]
pub(crate) struct Scheme {
    /// `rows[k]..rows[k+1]` are the terms of node `k + 1`.
    pub rows: Vec<usize>,
    pub terms: Vec<Term>,
    /// `Σ mass` per interior node.
    pub diag: Vec<f64>,
}

impl Scheme {
    pub fn row(&self, i: usize) -> &[Term] {
        &self.terms[self.rows[i - 1]..self.rows[i]]
    }
}

fn node_terms(
    i: usize,
    n: usize,
    a: f64,
    table: &WeightTable,
    measure: &KernelMeasure,
    g: &Exterior,
    bucket_tol: f64,
) -> Result<Vec<Term>> {
    let h = table.h;
    let xi = a + i as f64 * h;
    let reach = i.max(n - i);
    let mut out = Vec::with_capacity(reach + 8);
    for j in 1..=reach {
        let w = table.cell(j);
        let plus_in = i + j <= n;
        let minus_in = j <= i;
        if plus_in && minus_in {
            out.push(Term {
                plus: (i + j) as u32,
                minus: (i - j) as u32,
                g: 0.0,
                mass: w,
            });
            continue;
        }
        let (node, lo, hi) = if plus_in {
            (i + j, xi - (j as f64 + 0.5) * h, xi - (j as f64 - 0.5) * h)
        } else {
            (i - j, xi + (j as f64 - 0.5) * h, xi + (j as f64 + 0.5) * h)
        };
        let (plus, minus) = if plus_in { (node as u32, NONE) } else { (NONE, node as u32) };
        let pieces = exterior_pieces(g, lo, hi);
        if pieces.len() == 1 {
            out.push(Term {
                plus,
                minus,
                g: pieces[0].0,
                mass: table.cell_mass(j),
            });
            continue;
        }
        for (value, plo, phi) in pieces {
            let (ylo, yhi) = ((plo - xi).abs(), (phi - xi).abs());
            let mass = 2.0 * measure.mass(ylo.min(yhi), ylo.max(yhi))?;
            out.push(Term {
                plus,
                minus,
                g: value,
                mass,
            });
        }
    }
    let y0 = (reach as f64 + 0.5) * h;
    for b in tail_buckets(&[xi], y0, g, measure, bucket_tol)? {
        out.push(Term {
            plus: NONE,
            minus: NONE,
            g: b.key[0],
            mass: 2.0 * b.mass,
        });
    }
    Ok(out)
}

/// Builds the scheme of one kernel on the nodes `a + i h`, `i = 0..=n`.
pub(crate) fn build_scheme(
    n: usize,
    a: f64,
    table: &WeightTable,
    measure: &KernelMeasure,
    g: &Exterior,
    bucket_tol: f64,
) -> Result<Scheme> {
    let rows: Vec<Vec<Term>> = (1..n)
        .into_par_iter()
        .map(|i| node_terms(i, n, a, table, measure, g, bucket_tol))
        .collect::<Result<_>>()?;
    let mut offsets = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(rows.iter().map(Vec::len).sum());
    let mut diag = Vec::with_capacity(n - 1);
    offsets.push(0);
    for r in rows {
        diag.push(r.iter().map(|t| t.mass).sum());
        terms.extend(r);
        offsets.push(terms.len());
    }
    Ok(Scheme {
        rows: offsets,
        terms,
        diag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kind {
    Linear,
    Plus(f64, f64),
    Minus(f64, f64),
    Bellman,
}

/// An operator discretized on a fixed grid with fixed exterior data.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub(crate) kind: Kind,
    pub(crate) schemes: Vec<Scheme>,
    /// Per branch, per interior node: `b_a(x_i)` and `c_a(x_i)`.
    pub(crate) factors: Vec<Vec<f64>>,
    pub(crate) offsets: Vec<Vec<f64>>,
    pub(crate) tables: Vec<WeightTable>,
    pub a: f64,
    pub h: f64,
    pub n: usize,
}

/// Number of cells `n` with `a + n h = b`.
pub(crate) fn cell_count(a: f64, b: f64, h: f64) -> Result<usize> {
    if !(b > a) || !(h > 0.0) {
        return Err(Error::grid(format!("invalid window [{a}, {b}] with h = {h}")));
    }
    let t = (b - a) / h;
    let n = t.round();
    if (t - n).abs() > 1e-9 * t.max(1.0) || n < 2.0 {
        return Err(Error::grid(format!(
            "h = {h} does not divide the window [{a}, {b}] into at least two cells"
        )));
    }
    Ok(n as usize)
}

impl DiscreteOperator {
    /// Discretizes `op` on `[a, b]` with step `h` and exterior data `g`.
    /// `bucket_tol` bounds the far-field mass error per node.
    pub fn new(op: &OperatorSpec, a: f64, b: f64, h: f64, g: &Exterior, bucket_tol: f64) -> Result<Self> {
        let n = cell_count(a, b, h)?;
        let ms = measures(op);
        let tables: Vec<WeightTable> = ms.iter().map(|m| cell_weights(m, h, n)).collect::<Result<_>>()?;
        let mut schemes = Vec::with_capacity(ms.len());
        for (m, t) in ms.iter().zip(&tables) {
            schemes.push(build_scheme(n, a, t, m, g, bucket_tol)?);
        }
        let xs: Vec<f64> = (1..n).map(|i| a + i as f64 * h).collect();
        let (kind, factors, offsets) = match &op.variant {
            Variant::Linear(_) => (Kind::Linear, vec![vec![1.0; n - 1]], vec![vec![0.0; n - 1]]),
            Variant::PucciPlus => (
                Kind::Plus(op.lambda, op.big_lambda),
                vec![vec![1.0; n - 1]],
                vec![vec![0.0; n - 1]],
            ),
            Variant::PucciMinus => (
                Kind::Minus(op.lambda, op.big_lambda),
                vec![vec![1.0; n - 1]],
                vec![vec![0.0; n - 1]],
            ),
            Variant::Bellman(family) => (
                Kind::Bellman,
                family.iter().map(|br| xs.iter().map(|&x| br.factor_at(x)).collect()).collect(),
                family.iter().map(|br| xs.iter().map(|&x| br.offset.eval(x)).collect()).collect(),
            ),
        };
        Ok(DiscreteOperator {
            kind,
            schemes,
            factors,
            offsets,
            tables,
            a,
            h,
            n,
        })
    }

    pub fn weight_tables(&self) -> &[WeightTable] {
        &self.tables
    }

    pub fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h
    }

    /// Value of branch `k` at interior node `i`.
    pub(crate) fn branch(&self, k: usize, u: &[f64], i: usize) -> f64 {
        let ui = u[i];
        let s: f64 = self.schemes[k].row(i).iter().map(|t| t.mass * t.delta(u, ui)).sum();
        self.factors[k][i - 1] * s + self.offsets[k][i - 1]
    }

    /// Index of the smallest branch at each interior node (all zero unless
    /// the operator is a Bellman family).
    pub fn active_branches(&self, u: &[f64]) -> Vec<usize> {
        (1..self.n)
            .map(|i| {
                (0..self.schemes.len())
                    .map(|k| (k, self.branch(k, u, i)))
                    .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
                    .0
            })
            .collect()
    }

    /// The discrete operator at interior node `i` (`1 ≤ i < n`) for nodal
    /// values `u` on all `n + 1` nodes.
    pub fn apply(&self, u: &[f64], i: usize) -> f64 {
        match self.kind {
            Kind::Linear => self.branch(0, u, i),
            Kind::Plus(l, big) => {
                let ui = u[i];
                self.schemes[0]
                    .row(i)
                    .iter()
                    .map(|t| {
                        let d = t.delta(u, ui);
                        t.mass * (big * d).max(l * d)
                    })
                    .sum()
            }
            Kind::Minus(l, big) => {
                let ui = u[i];
                self.schemes[0]
                    .row(i)
                    .iter()
                    .map(|t| {
                        let d = t.delta(u, ui);
                        t.mass * (big * d).min(l * d)
                    })
                    .sum()
            }
            Kind::Bellman => (0..self.schemes.len())
                .map(|k| self.branch(k, u, i))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// The operator at every interior node.
    pub fn apply_all(&self, u: &[f64]) -> Vec<f64> {
        (1..self.n).into_par_iter().map(|i| self.apply(u, i)).collect()
    }

    /// Largest `Λ Σ w` over interior nodes, the Lipschitz constant in `u_i`
    /// up to the factor 2.
    pub fn max_diagonal(&self) -> f64 {
        let top = match self.kind {
            Kind::Plus(_, big) | Kind::Minus(_, big) => big,
            _ => 1.0,
        };
        let mut d = 0.0f64;
        for (s, f) in self.schemes.iter().zip(&self.factors) {
            for (v, c) in s.diag.iter().zip(f) {
                d = d.max(top * c.abs() * v);
            }
        }
        d
    }
}

/// `I u(x_i)` for `1 ≤ i < n` on a prepared discretization.
pub fn apply_operator(op: &DiscreteOperator, u: &[f64], i: usize) -> f64 {
    op.apply(u, i)
}
