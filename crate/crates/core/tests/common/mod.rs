//! Independent oracles shared by the integration tests. Nothing here calls
//! the quadrature or kernel code of the crate.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use varorder::holder::{Exterior, GridFunction};
use varorder::kernels::ClosedForm;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre with `panels` equal panels.
pub fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        total += rule.iter().map(|&(x, wt)| wt * f(mid + 0.5 * w * x)).sum::<f64>() * 0.5 * w;
    }
    total
}

/// `1 / ∫₀¹ r/φ(r) dr` in the variable `t = −ln r`, given `ln φ` as a
/// function of `ln r`, with a local power-law estimate of the remainder
/// past `t = 400`.
pub fn c_phi_oracle(ln_phi: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(16);
    let g = |t: f64| (-2.0 * t - ln_phi(-t)).exp();
    let t_end = 400.0;
    let body = composite(g, 0.0, t_end, 8000, &rule);
    let slope = (g(t_end - 1.0) / g(t_end)).ln();
    1.0 / (body + g(t_end) / slope)
}

/// Explicit scale functions normalized by `φ(1) = 1`.
#[derive(Debug, Clone, Copy)]
pub enum Phi {
    Power(f64),
    /// `2 / (r^{−s1} + r^{−s2})`
    TwoPower(f64, f64),
}

impl Phi {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Phi::Power(s) => r.powf(s),
            Phi::TwoPower(s1, s2) => 2.0 / (r.powf(-s1) + r.powf(-s2)),
        }
    }

    pub fn c(&self) -> f64 {
        match *self {
            Phi::Power(s) => 2.0 - s,
            Phi::TwoPower(s1, s2) => c_phi_oracle(|l| {
                let (a, b) = (-s1 * l, -s2 * l);
                let m = a.max(b);
                std::f64::consts::LN_2 - m - ((a - m).exp() + (b - m).exp()).ln()
            }),
        }
    }

    /// `∫₀^ε y² / (y φ(y)) dy`
    fn inner_moment(&self, eps: f64) -> f64 {
        match *self {
            Phi::Power(s) => eps.powf(2.0 - s) / (2.0 - s),
            Phi::TwoPower(s1, s2) => 0.5 * (eps.powf(2.0 - s1) / (2.0 - s1) + eps.powf(2.0 - s2) / (2.0 - s2)),
        }
    }

    /// `∫_Y^∞ 1 / (y φ(y)) dy`
    fn tail_mass(&self, y: f64) -> f64 {
        match *self {
            Phi::Power(s) => y.powf(-s) / s,
            Phi::TwoPower(s1, s2) => 0.5 * (y.powf(-s1) / s1 + y.powf(-s2) / s2),
        }
    }

    pub fn make(&self) -> varorder::scale::ScaleFunction {
        match *self {
            Phi::Power(s) => varorder::scale::make_scale_function("power", &[s]).unwrap(),
            Phi::TwoPower(s1, s2) => varorder::scale::make_scale_function("two-power", &[s1, s2]).unwrap(),
        }
    }
}

/// How the increment enters the integrand.
#[derive(Debug, Clone, Copy)]
pub enum Resp {
    Linear,
    /// `Λ δ⁺ − λ δ⁻`
    Plus(f64, f64),
    /// `λ δ⁺ − Λ δ⁻`
    Minus(f64, f64),
}

impl Resp {
    fn apply(&self, d: f64) -> f64 {
        match *self {
            Resp::Linear => d,
            Resp::Plus(l, big) => {
                if d > 0.0 {
                    big * d
                } else {
                    l * d
                }
            }
            Resp::Minus(l, big) => {
                if d > 0.0 {
                    l * d
                } else {
                    big * d
                }
            }
        }
    }
}

/// Sum of Gaussian bumps `Σ a exp(−((x − c)/w)²)` with its second derivative.
#[derive(Debug, Clone)]
pub struct Bumps(pub Vec<(f64, f64, f64)>);

impl Bumps {
    pub fn random(rng: &mut ChaCha8Rng, count: usize) -> Bumps {
        Bumps(
            (0..count)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..0.8)))
                .collect(),
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0
            .iter()
            .map(|&(a, c, w)| {
                let s = (x - c) / w;
                a * (-s * s).exp()
            })
            .sum()
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.0
            .iter()
            .map(|&(a, c, w)| {
                let s = (x - c) / w;
                a * (-s * s).exp() * (4.0 * s * s - 2.0) / (w * w)
            })
            .sum()
    }

    pub fn field(&self) -> ClosedForm {
        let (f, g) = (self.clone(), self.clone());
        ClosedForm::new(move |x| f.eval(x)).with_second_derivative(move |x| g.d2(x))
    }

    pub fn grid(&self, a: f64, b: f64, h: f64, ext: Exterior) -> GridFunction {
        let f = self.clone();
        GridFunction::on_interval(a, b, h, move |x| f.eval(x), ext).unwrap()
    }
}

/// Brute-force `2 ∫₀^∞ resp(δ(u, x, y)) c_φ / (y φ(y)) dy` for a Gaussian
/// sum: Taylor expansion below `1e−3`, `panels` Gauss panels in `ln y` up to
/// `1e8` with every sign change of `δ` located by bisection, and the exact
/// tail past `1e8` where `u(x ± y)` vanishes.
pub fn pucci_oracle(u: &Bumps, phi: Phi, resp: Resp, x: f64, panels: usize) -> f64 {
    let c = phi.c();
    let rule = gauss_legendre(10);
    let ux = u.eval(x);
    let delta = |y: f64| u.eval(x + y) + u.eval(x - y) - 2.0 * ux;
    let eps: f64 = 1e-3;
    let y_end: f64 = 1e8;
    let inner = resp.apply(u.d2(x)) * phi.inner_moment(eps);
    let f = |t: f64| {
        let y = t.exp();
        resp.apply(delta(y)) / phi.eval(y)
    };
    let (t0, t1) = (eps.ln(), y_end.ln());
    let w = (t1 - t0) / panels as f64;
    let mut middle = 0.0;
    for p in 0..panels {
        let (a, b) = (t0 + p as f64 * w, t0 + (p + 1) as f64 * w);
        let mut cuts = vec![a];
        let samples = 4;
        for k in 0..samples {
            let (s0, s1) = (a + (b - a) * k as f64 / samples as f64, a + (b - a) * (k + 1) as f64 / samples as f64);
            let (d0, d1) = (delta(s0.exp()), delta(s1.exp()));
            if d0 * d1 < 0.0 {
                let (mut lo, mut hi) = (s0, s1);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if delta(lo.exp()) * delta(mid.exp()) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                cuts.push(0.5 * (lo + hi));
            }
        }
        cuts.push(b);
        for pair in cuts.windows(2) {
            middle += composite(f, pair[0], pair[1], 1, &rule);
        }
    }
    let outer = resp.apply(-2.0 * ux) * phi.tail_mass(y_end);
    2.0 * c * (inner + middle + outer)
}

/// Random nodal values with a random smooth part and small noise.
pub fn random_grid(rng: &mut ChaCha8Rng, a: f64, b: f64, h: f64, ext: Exterior) -> GridFunction {
    let smooth = Bumps::random(rng, 3);
    let mut u = smooth.grid(a, b, h, ext);
    for v in u.values_mut() {
        *v += rng.gen_range(-0.05..0.05);
    }
    u
}

pub fn random_exterior(rng: &mut ChaCha8Rng) -> Exterior {
    match rng.gen_range(0..3) {
        0 => Exterior::Zero,
        1 => Exterior::Constant {
            value: rng.gen_range(-1.0..1.0),
        },
        _ => Exterior::SignSin {
            m: rng.gen_range(1..=6) as f64,
            onset: rng.gen_range(1.0..3.0),
            amplitude: rng.gen_range(0.1..1.0),
        },
    }
}
