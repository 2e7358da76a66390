use varorder::holder::{Exterior, GridFunction};
use varorder::kernels::{eval_pucci, ClosedForm, Field, KernelSpec, OperatorSpec, QuadratureSpec, Sign};
use varorder::scale::{make_scale_function, rescaled_scale, scaling_factor, ScaleFunction};
use varorder::solver::{
    apply_operator, barrier_check, comparison_check, discretize_weights, maximum_principle_check, solve,
    DirichletProblem, DiscreteOperator, Method, SolverOptions,
};

fn power(sigma: f64) -> ScaleFunction {
    make_scale_function("power", &[sigma]).unwrap()
}

fn plus(phi: ScaleFunction) -> OperatorSpec {
    OperatorSpec::pucci_plus(phi, 1.0, 2.0).unwrap()
}

#[test]
fn second_moments_of_the_weights() {
    for sigma in [0.5, 1.0, 1.5, 1.9] {
        let h = 1.0 / 64.0;
        let op = OperatorSpec::linear(KernelSpec::standard(power(sigma))).unwrap();
        let t = &discretize_weights(&op, h, 64).unwrap()[0];
        assert!(t.w.iter().chain(&t.mass).all(|&w| w > 0.0));
        let moment: f64 = (1..=64).map(|j| t.cell(j) * (j as f64 * h).powi(2)).sum();
        // ∫_{|y| < R} y² (2−σ)/|y|^{1+σ} dy = 2 R^{2−σ} with R = 1 + h/2
        let want = 2.0 * (1.0 + 0.5 * h).powf(2.0 - sigma);
        assert!((moment - want).abs() < 1e-10, "sigma {sigma}: {moment} vs {want}");
        for j in [2, 10, 64] {
            let (lo, hi) = ((j as f64 - 0.5) * h, (j as f64 + 0.5) * h);
            let mass = 2.0 * (2.0 - sigma) / sigma * (lo.powf(-sigma) - hi.powf(-sigma));
            assert!((t.cell_mass(j) - mass).abs() < 1e-10 * mass);
        }
    }
}

#[test]
fn affine_and_quadratic_data() {
    let h = 1.0 / 32.0;
    let phi = power(1.3);
    let d = DiscreteOperator::new(&plus(phi.clone()), -1.0, 1.0, h, &Exterior::Zero, 1e-12).unwrap();
    let nodes: Vec<f64> = (0..=64).map(|i| -1.0 + i as f64 * h).collect();
    // affine data needs an affine exterior, so only the central node sees no boundary
    let u: Vec<f64> = nodes.iter().map(|x| x * x).collect();
    let q = QuadratureSpec {
        h_cut: Some(1e-3),
        r_far: None,
        tol: 1e-10,
    };
    let quad = ClosedForm::new(|x| x * x)
        .with_second_derivative(|_| 2.0)
        .with_support(-1.0, 1.0, Exterior::Zero);
    for i in [16, 32, 48] {
        let want = eval_pucci(&quad, Sign::Plus, &phi, 1.0, 2.0, nodes[i], &q).unwrap();
        let got = apply_operator(&d, &u, i);
        assert!((got - want).abs() < 0.05 * want.abs(), "node {i}: {got} vs {want}");
    }
}

#[test]
fn trivial_solutions() {
    let opts = SolverOptions::default();
    let p = DirichletProblem::new(plus(power(1.5)), -1.0, 1.0, 1.0 / 32.0, Exterior::Zero).unwrap();
    let r = solve(&p, &opts).unwrap();
    assert!(r.converged && r.u.values().iter().all(|&v| v == 0.0));
    let p = DirichletProblem::new(plus(power(0.7)), -1.0, 1.0, 1.0 / 32.0, Exterior::Constant { value: 1.0 }).unwrap();
    let r = solve(&p, &opts).unwrap();
    assert!(r.converged && r.u.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn methods_agree() {
    let op = OperatorSpec::pucci_minus(power(1.2), 1.0, 2.0).unwrap();
    let p = DirichletProblem::new(op, -1.0, 1.0, 1.0 / 32.0, Exterior::Constant { value: -0.5 })
        .unwrap()
        .with_rhs(|x| (3.0 * x).cos())
        .unwrap();
    let howard = solve(&p, &SolverOptions::default()).unwrap();
    let explicit = solve(
        &p,
        &SolverOptions {
            method: Method::PseudoTime,
            tol: 1e-10,
            max_iter: 200_000,
            ..SolverOptions::default()
        },
    )
    .unwrap();
    assert!(howard.converged && explicit.converged);
    assert!(explicit.residual_history.len() > howard.residual_history.len());
    let diff = howard.u.lin_comb(1.0, &explicit.u, -1.0).unwrap().sup_abs();
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn iteration_cap_is_reported() {
    let p = DirichletProblem::new(plus(power(1.5)), -1.0, 1.0, 1.0 / 32.0, Exterior::Zero)
        .unwrap()
        .with_rhs(|x| x)
        .unwrap();
    let r = solve(
        &p,
        &SolverOptions {
            max_iter: 1,
            ..SolverOptions::default()
        },
    )
    .unwrap();
    assert!(!r.converged);
    assert!(r.residual() > 1e-9);
}

#[test]
fn counterexample_start_is_grid_stable() {
    let g = Exterior::SignSin {
        m: 1.0,
        onset: 2.0,
        amplitude: 1.0,
    };
    let u0: Vec<f64> = [1.0 / 128.0, 1.0 / 256.0]
        .iter()
        .map(|&h| {
            let p = DirichletProblem::new(plus(power(1.5)), -1.0, 1.0, h, g.clone()).unwrap();
            let r = solve(&p, &SolverOptions::default()).unwrap();
            assert!(r.converged);
            assert!(r.u.sup_abs() <= 1.0);
            r.u.eval(0.0)
        })
        .collect();
    assert!(u0[0] >= 0.0 && u0[1] >= 0.0, "{u0:?}");
    assert!((u0[0] - u0[1]).abs() <= 0.02 * u0[1].abs().max(1e-3), "{u0:?}");
}

#[test]
fn shifted_constants_are_ordered() {
    let opts = SolverOptions::default();
    let p = DirichletProblem::new(plus(power(1.1)), -1.0, 1.0, 1.0 / 32.0, Exterior::Constant { value: 0.3 })
        .unwrap()
        .with_rhs(|x| -x.cos())
        .unwrap();
    let u = solve(&p, &opts).unwrap().u;
    let mut v = u.clone().with_exterior(Exterior::Constant { value: 0.8 });
    v.values_mut().iter_mut().for_each(|x| *x += 0.5);
    let r = comparison_check(&p, &u, &v, 1e-12, opts.bucket_tol).unwrap();
    assert!(r.hypotheses_hold && r.holds, "{r:?}");
    let back = comparison_check(&p, &v, &u, 1e-12, opts.bucket_tol).unwrap();
    assert!(!back.hypotheses_hold && !back.holds);
}

#[test]
fn maximum_principle_for_oscillating_data() {
    for m in [1.0, 3.0, 8.0] {
        let g = Exterior::SignSin {
            m,
            onset: 1.0,
            amplitude: 0.7,
        };
        let p = DirichletProblem::new(plus(power(1.6)), -1.0, 1.0, 1.0 / 64.0, g).unwrap();
        let r = solve(&p, &SolverOptions::default()).unwrap();
        let mp = maximum_principle_check(&r.u, 1e-12);
        assert!(mp.holds && mp.max <= 0.7 && mp.min >= -0.7, "{mp:?}");
    }
}

/// `exp(1 − 1/(1 − s²))` with `s = x/c`, supported in `(−c, c)`.
fn smooth_bump(c: f64) -> ClosedForm {
    let f = move |x: f64| {
        let s = x / c;
        if s.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    };
    let d2 = move |x: f64| {
        let s = x / c;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let t = 1.0 - s * s;
        let g1 = -2.0 * s / (t * t);
        let g2 = -(2.0 + 6.0 * s * s) / (t * t * t);
        (1.0 - 1.0 / t).exp() * (g1 * g1 + g2) / (c * c)
    };
    ClosedForm::new(f).with_second_derivative(d2).with_support(-1.0, 1.0, Exterior::Zero)
}

#[test]
fn consistency_with_the_quadrature() {
    let phi = power(1.4);
    let bump = smooth_bump(0.8);
    let q = QuadratureSpec {
        h_cut: Some(1e-4),
        r_far: None,
        tol: 1e-11,
    };
    let points = [-0.5, 0.0, 0.25];
    let exact: Vec<f64> = points
        .iter()
        .map(|&x| eval_pucci(&bump, Sign::Plus, &phi, 1.0, 2.0, x, &q).unwrap())
        .collect();
    let errors: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&h| {
            let d = DiscreteOperator::new(&plus(phi.clone()), -1.0, 1.0, h, &Exterior::Zero, 1e-13).unwrap();
            let u = GridFunction::on_interval(-1.0, 1.0, h, |x| bump.at(x), Exterior::Zero).unwrap();
            points
                .iter()
                .zip(&exact)
                .map(|(&x, e)| (apply_operator(&d, u.values(), u.node_of(x).unwrap()) - e).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.0, "errors {errors:?}");
    }
}

#[test]
fn translation_invariance() {
    let opts = SolverOptions::default();
    let h = 1.0 / 32.0;
    let f = |x: f64| (2.0 * x).sin() - 0.3;
    let g = Exterior::Constant { value: 0.4 };
    let p = DirichletProblem::new(plus(power(1.3)), -1.0, 1.0, h, g.clone()).unwrap().with_rhs(f).unwrap();
    let q = DirichletProblem::new(plus(power(1.3)), 1.0, 3.0, h, g).unwrap().with_rhs(|x| f(x - 2.0)).unwrap();
    let (u, v) = (solve(&p, &opts).unwrap().u, solve(&q, &opts).unwrap().u);
    let diff = u.values().iter().zip(v.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-13, "{diff}");
}

#[test]
fn rescaled_problem_maps_back() {
    let opts = SolverOptions {
        tol: 1e-12,
        ..SolverOptions::default()
    };
    let rho = 0.25;
    let h = rho / 32.0;
    let f = |x: f64| 1.0 + 4.0 * x;
    for phi in [power(1.5), make_scale_function("two-power", &[0.8, 1.7]).unwrap()] {
        let g = Exterior::Constant { value: 0.2 };
        let orig = DirichletProblem::new(plus(phi.clone()), -rho, rho, h, g.clone()).unwrap().with_rhs(f).unwrap();
        let s = scaling_factor(&phi, rho).unwrap();
        let bar = DirichletProblem::new(plus(rescaled_scale(&phi, rho).unwrap()), -1.0, 1.0, h / rho, g)
            .unwrap()
            .with_rhs(|x| s * f(rho * x))
            .unwrap();
        let (u, ub) = (solve(&orig, &opts).unwrap().u, solve(&bar, &opts).unwrap().u);
        let diff = u.values().iter().zip(ub.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-8, "{phi:?}: {diff}");
    }
}

#[test]
fn barrier_has_a_band() {
    let r = barrier_check(&power(1.5), 1.0, 2.0, &[0.05, 0.1, 0.2], &[0.01, 0.02, 0.05, 0.1], 1e-6).unwrap();
    assert!(r.best.is_some(), "{r:?}");
    assert!(r.rows.iter().all(|row| row.symmetry_error < 1e-6), "{r:?}");
}
