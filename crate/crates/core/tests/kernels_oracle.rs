mod common;

use common::{pucci_oracle, random_exterior, random_grid, Bumps, Phi, Resp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varorder::holder::{Exterior, GridFunction};
use varorder::kernels::{
    ellipticity_sandwich_check, eval_linear, eval_pucci, pn_functionals, weight_norm, BellmanBranch, KernelSpec,
    Offset, OperatorSpec, QuadratureSpec, Sign,
};
use varorder::scale::make_scale_function;

fn closed_form_quadrature(tol: f64) -> QuadratureSpec {
    QuadratureSpec {
        h_cut: Some(1e-3),
        r_far: None,
        tol,
    }
}

fn phi_for(k: usize) -> Phi {
    match k % 4 {
        0 => Phi::Power(0.6),
        1 => Phi::Power(1.5),
        2 => Phi::Power(1.9),
        _ => Phi::TwoPower(0.8, 1.7),
    }
}

#[test]
fn linear_and_pucci_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q = closed_form_quadrature(1e-9);
    for k in 0..20 {
        let phi = phi_for(k);
        let u = Bumps::random(&mut rng, 3);
        let x = rng.gen_range(-0.9..0.9);
        let (f, sf) = (u.field(), phi.make());
        let got = [
            eval_linear(&f, &KernelSpec::standard(sf.clone()), x, &q).unwrap(),
            eval_pucci(&f, Sign::Plus, &sf, 1.0, 2.0, x, &q).unwrap(),
            eval_pucci(&f, Sign::Minus, &sf, 1.0, 2.0, x, &q).unwrap(),
        ];
        let want = [
            pucci_oracle(&u, phi, Resp::Linear, x, 4000),
            pucci_oracle(&u, phi, Resp::Plus(1.0, 2.0), x, 4000),
            pucci_oracle(&u, phi, Resp::Minus(1.0, 2.0), x, 4000),
        ];
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-8 * (1.0 + w.abs()), "{phi:?} x = {x}: {g} vs {w}");
        }
    }
}

#[test]
fn sign_flip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = QuadratureSpec::with_tol(1e-8);
    for k in 0..10 {
        let phi = phi_for(k).make();
        let ext = random_exterior(&mut rng);
        let u = random_grid(&mut rng, -1.0, 1.0, 1.0 / 32.0, ext);
        let x = rng.gen_range(-0.9..0.9);
        let plus = eval_pucci(&u.neg(), Sign::Plus, &phi, 0.5, 3.0, x, &q).unwrap();
        let minus = eval_pucci(&u, Sign::Minus, &phi, 0.5, 3.0, x, &q).unwrap();
        assert_eq!(plus.to_bits(), (-minus).to_bits());
    }
}

#[test]
fn bellman_differences_are_sandwiched() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = QuadratureSpec::with_tol(1e-8);
    let phi = make_scale_function("power", &[1.4]).unwrap();
    for _ in 0..10 {
        let family = (0..3)
            .map(|_| {
                let c = rng.gen_range(1.0..2.0);
                BellmanBranch::new(
                    KernelSpec::constant(phi.clone(), 1.0, 2.0, c).unwrap(),
                    Offset::Constant(rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let op = OperatorSpec::bellman(family, phi.clone(), 1.0, 2.0).unwrap();
        let u = random_grid(&mut rng, -1.0, 1.0, 1.0 / 32.0, Exterior::Zero);
        let ext = random_exterior(&mut rng);
        let v = random_grid(&mut rng, -1.0, 1.0, 1.0 / 32.0, ext);
        let r = ellipticity_sandwich_check(&op, &u, &v, rng.gen_range(-0.8..0.8), &q).unwrap();
        assert!(r.ok, "{r:?}");
    }
}

#[test]
fn pn_difference_is_the_linear_increment() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let q = closed_form_quadrature(1e-10);
    let phi = make_scale_function("power", &[1.3]).unwrap();
    let k = KernelSpec::standard(phi.clone());
    for _ in 0..5 {
        let u = Bumps::random(&mut rng, 2).field();
        let (x, h) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3));
        let (p, n) = pn_functionals(&u, &phi, x, h, &q).unwrap();
        let diff = eval_linear(&u, &k, x + h, &q).unwrap() - eval_linear(&u, &k, x, &q).unwrap();
        assert!(p >= 0.0 && n >= 0.0);
        assert!((p - n - diff).abs() < 1e-7, "{p} - {n} vs {diff}");
    }
}

#[test]
fn weight_norm_of_constants() {
    for sigma in [0.5, 1.0, 1.7] {
        let phi = make_scale_function("power", &[sigma]).unwrap();
        let u = GridFunction::on_interval(-1.0, 1.0, 1.0 / 16.0, |_| 0.75, Exterior::Constant { value: 0.75 }).unwrap();
        let got = weight_norm(&u, &phi, &QuadratureSpec::with_tol(1e-9)).unwrap();
        // ∫ dy / (1 + |y|^{1+σ}) = 2π / ((1+σ) sin(π/(1+σ)))
        let p = 1.0 + sigma;
        let want = 0.75 * (2.0 - sigma) * 2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin());
        assert!((got - want).abs() < 1e-7, "sigma {sigma}: {got} vs {want}");
    }
}
