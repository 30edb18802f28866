use crlab::fieldcalc::{
    bracket_taylor, exterior_derivative, jet_eval, lie_bracket, surface_integral, wedge_eval, Arity, FieldExpr, KForm,
    Point,
};
use crlab::forms::Form;
use crlab::heisenberg::{
    complex_frame_components, flat_theta, frame_components, frame_vector, jl_extremal, jl_extremal_field,
    rho_power_field, ExtremalParams, FrameIndex, HeisPoint,
};
use crlab::mass::unit_sphere_identity;
use crlab::quadrature::QuadratureSpec;
use crlab::taylor::Taylor;
use crlab::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn values(v: &[Taylor]) -> Vec<C64> {
    v.iter().map(|t| t.value()).collect()
}

/// Complex scalar with nonzero third derivatives in every direction.
fn wavy_field(dim: usize) -> FieldExpr {
    FieldExpr::everywhere("wavy", Arity::Scalar, dim, move |x| {
        let sp = x[0].space();
        let mut s = Taylor::real(sp, 0.3);
        for (k, xk) in x.iter().enumerate() {
            s = s + xk * (0.4 + 0.1 * k as f64);
        }
        let phase = (&x[0] * &x[dim - 1]).scale(C64::new(0.0, 1.0)).exp();
        vec![&s.sin() * &phase + s.powi(3)]
    })
}

/// Polynomial vector field with seeded coefficients.
fn poly_vector(dim: usize, seed: u64) -> FieldExpr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<(f64, f64, f64)> =
        (0..dim).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    FieldExpr::everywhere("poly", Arity::Vector, dim, move |x| {
        (0..dim)
            .map(|k| {
                let (a, b, c) = coef[k];
                let i = (k + 1) % dim;
                let j = (k + 2) % dim;
                &x[i] * &x[j] * a + &x[k] * &x[k] * &x[i] * b + Taylor::real(x[0].space(), c)
            })
            .collect()
    })
}

/// `dθ̊ = 4 Σ dx_k ∧ dy_k` with coefficients in the space of `x`.
fn flat_dtheta(n: usize, x: &[Taylor]) -> Form<Taylor> {
    let sp = x[0].space();
    let terms = (0..n).map(|k| ((1u32 << k) | (1u32 << (n + k)), Taylor::real(sp, 4.0))).collect();
    Form::from_terms(2 * n + 1, 2, terms)
}

fn max_d1_error(a: &crlab::fieldcalc::Jet, b: &crlab::fieldcalc::Jet) -> f64 {
    a.d1.iter().flatten().zip(b.d1.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn finite_differences_converge_to_exact_jets_at_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in 1..=2 {
        let dim = 2 * n + 1;
        let fields = [wavy_field(dim), jl_extremal_field(ExtremalParams::new(n, 1.3).unwrap()), rho_power_field(n, -2.0 * n as f64)];
        for f in &fields {
            for _ in 0..5 {
                let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.3..0.9)).collect();
                let exact = jet_eval(f, &Point::new(p.clone()).unwrap(), 2).unwrap();
                let coarse = max_d1_error(&exact, &f.fd_jet(&p, 2e-2).unwrap());
                let fine = max_d1_error(&exact, &f.fd_jet(&p, 1e-2).unwrap());
                let order = (coarse / fine).log2();
                assert!((1.8..=2.2).contains(&order), "{} at {:?}: order {}", f.name, p, order);
            }
        }
    }
}

#[test]
fn exact_hessians_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for n in 1..=3 {
        let dim = 2 * n + 1;
        for f in [wavy_field(dim), jl_extremal_field(ExtremalParams::new(n, 0.7).unwrap())] {
            for _ in 0..20 {
                let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let j = jet_eval(&f, &Point::new(p).unwrap(), 2).unwrap();
                let size = j.d2.iter().flatten().flatten().map(|v| v.norm()).fold(1.0, f64::max);
                assert!(j.symmetry_defect() <= 1e-13 * size);
            }
        }
    }
}

#[test]
fn extremal_is_one_at_the_origin() {
    let p = ExtremalParams::new(2, 1.0).unwrap();
    assert_eq!(jl_extremal(p, &HeisPoint::from_coords(&[0.0; 5]).unwrap()), 1.0);
    let j = jet_eval(&jl_extremal_field(p), &Point::new(vec![0.0; 5]).unwrap(), 1).unwrap();
    assert!((j.value[0].re - 1.0).abs() < 1e-15);
    assert!(j.d1[0].iter().all(|v| v.norm() < 1e-15));
}

#[test]
fn invalid_evaluations_are_errors() {
    let f = rho_power_field(2, -4.0);
    let origin = Point::new(vec![0.0; 5]).unwrap();
    assert!(jet_eval(&f, &origin, 1).is_err());
    assert!(f.value(&[0.0; 5]).is_err());
    assert!(jet_eval(&f, &Point::new(vec![1.0; 5]).unwrap(), 3).is_err());
    let scalar = wavy_field(3);
    let v = frame_vector(1, FrameIndex::T).unwrap();
    assert!(lie_bracket(&scalar, &v, &Point::new(vec![0.0; 3]).unwrap()).is_err());
    assert!(frame_vector(1, FrameIndex::E(3)).is_err());
    let theta = KForm::from_form("theta", 3, 1, |x| flat_theta(1, x));
    assert!(exterior_derivative(&theta, &Point::new(vec![0.0; 3]).unwrap(), &[vec![C64::new(1.0, 0.0); 3]]).is_err());
    assert!(surface_integral(&theta, &QuadratureSpec::sphere(1, 1.0)).is_err());
}

#[test]
fn frame_brackets() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in 1..=3 {
        let dim = 2 * n + 1;
        for _ in 0..10 {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let pt = Point::new(p.clone()).unwrap();
            for a in 1..=n {
                let e = frame_vector(n, FrameIndex::E(a)).unwrap();
                let f = frame_vector(n, FrameIndex::E(n + a)).unwrap();
                let b = lie_bracket(&e, &f, &pt).unwrap();
                for (k, v) in b.iter().enumerate() {
                    let want = if k == 2 * n { -2.0 } else { 0.0 };
                    assert!((v - C64::new(want, 0.0)).norm() < 1e-14, "n={} a={} {:?}", n, a, b);
                }
                let t = frame_vector(n, FrameIndex::T).unwrap();
                assert!(lie_bracket(&e, &t, &pt).unwrap().iter().all(|v| v.norm() < 1e-14));
            }
            let x = Taylor::vars(&p, 1);
            for b in 0..n {
                for c in 0..n {
                    let zb = complex_frame_components(n, b, false, &x);
                    let zc = complex_frame_components(n, c, false, &x);
                    assert!(values(&bracket_taylor(&zb, &zc)).iter().all(|v| v.norm() < 1e-14));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_identity(n in 1usize..=2, seeds in (any::<u64>(), any::<u64>(), any::<u64>()), raw in prop::collection::vec(-1.5f64..1.5, 5)) {
        let dim = 2 * n + 1;
        let p = &raw[..dim];
        let [x, y, z] = [seeds.0, seeds.1, seeds.2].map(|s| poly_vector(dim, s).taylor(p, 2).unwrap());
        let cyc = [(&x, &y, &z), (&y, &z, &x), (&z, &x, &y)];
        let mut total = vec![C64::new(0.0, 0.0); dim];
        let mut size: f64 = 1.0;
        for (a, b, c) in cyc {
            let inner = bracket_taylor(b, c);
            let v = values(&bracket_taylor(a, &inner));
            for k in 0..dim {
                total[k] += v[k];
                size = size.max(v[k].norm());
            }
        }
        prop_assert!(total.iter().all(|v| v.norm() < 1e-12 * size), "{:?}", total);
    }

    #[test]
    fn exterior_derivative_squares_to_zero(n in 1usize..=2, raw in prop::collection::vec(-1.5f64..1.5, 5), degree in 0usize..=2) {
        let dim = 2 * n + 1;
        let w = KForm::from_form("w", dim, degree, move |x| {
            let mut terms = Vec::new();
            for m in crlab::fieldcalc::multi_indices(dim, degree) {
                let s = x.iter().enumerate().fold(Taylor::real(x[0].space(), m as f64 * 0.1), |acc, (k, xk)| {
                    acc + xk * (0.2 * (k as f64 + 1.0) + 0.05 * m as f64)
                });
                terms.push((m, &s.sin() * &s.exp() + s.powi(3)));
            }
            Form::from_terms(dim, degree, terms)
        });
        let tf = w.taylor_form(&raw[..dim], 2).unwrap();
        let size = tf.d().value().max_abs().max(1.0);
        prop_assert!(tf.d().d().value().max_abs() < 1e-12 * size);
    }
}

#[test]
fn exterior_derivative_matches_form_calculus() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for n in 1..=2 {
        let dim = 2 * n + 1;
        let theta = KForm::from_form("theta", dim, 1, move |x| flat_theta(n, x));
        for _ in 0..100 {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let pt = Point::new(p.clone()).unwrap();
            let u: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let a = exterior_derivative(&theta, &pt, &[u.clone(), v.clone()]).unwrap();
            let b = theta.taylor_form(&p, 1).unwrap().d().value().eval(&[u, v]).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn levi_form_of_flat_contact_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for n in 1..=3 {
        let dim = 2 * n + 1;
        let theta = KForm::from_form("theta", dim, 1, move |x| flat_theta(n, x));
        for _ in 0..10 {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = Taylor::vars(&p, 0);
            let pt = Point::new(p).unwrap();
            for a in 0..n {
                for b in 0..n {
                    let za = values(&complex_frame_components(n, a, false, &x));
                    let zb = values(&complex_frame_components(n, b, true, &x));
                    let v = exterior_derivative(&theta, &pt, &[za.clone(), zb]).unwrap();
                    let want = if a == b { C64::new(0.0, 1.0) } else { C64::new(0.0, 0.0) };
                    assert!((v - want).norm() < 1e-14, "n={} {} {} {}", n, a, b, v);
                    assert!(theta.eval(&pt, &[za]).unwrap().norm() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn contact_volume_on_the_frame() {
    // θ̊ ∧ (dθ̊)^n (T̊, e̊_1, …, e̊_2n) = ±2^n n!, the sign from interleaving the pairs
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for n in 1..=3 {
        let dim = 2 * n + 1;
        let theta = KForm::from_form("theta", dim, 1, move |x| flat_theta(n, x));
        let dtheta_n = KForm::from_form("dtheta^n", dim, 2 * n, move |x| {
            flat_dtheta(n, x).power(n, Taylor::real(x[0].space(), 1.0))
        });
        let fact: f64 = (1..=n).product::<usize>() as f64;
        let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        for _ in 0..5 {
            let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = Taylor::vars(&p, 0);
            let mut vs = vec![values(&frame_components(n, FrameIndex::T, &x).unwrap())];
            for a in 1..=2 * n {
                vs.push(values(&frame_components(n, FrameIndex::E(a), &x).unwrap()));
            }
            let v = wedge_eval(&theta, &dtheta_n, &Point::new(p).unwrap(), &vs).unwrap();
            let want = sign * 2f64.powi(n as i32) * fact;
            assert!((v - C64::new(want, 0.0)).norm() < 1e-11 * want.abs(), "n={} got {} want {}", n, v, want);
        }
    }
}

#[test]
fn wedge_is_graded_commutative() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let dim = 5;
    let theta = KForm::from_form("theta", dim, 1, |x| flat_theta(2, x));
    let dtheta = KForm::from_form("dtheta", dim, 2, |x| flat_dtheta(2, x));
    let other = KForm::from_form("x1 dt", dim, 1, |x| {
        let sp = x[0].space();
        let mut c = vec![Taylor::zero(sp); 5];
        c[4] = x[0].clone();
        c[1] = x[3].sin();
        Form::one_form(c)
    });
    for _ in 0..20 {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let pt = Point::new(p).unwrap();
        let vs: Vec<Vec<C64>> =
            (0..3).map(|_| (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect()).collect();
        let a = wedge_eval(&theta, &dtheta, &pt, &vs).unwrap();
        let b = wedge_eval(&dtheta, &theta, &pt, &vs).unwrap();
        assert!((a - b).norm() < 1e-12);
        let c = wedge_eval(&theta, &other, &pt, &vs[..2]).unwrap();
        let d = wedge_eval(&other, &theta, &pt, &vs[..2]).unwrap();
        assert!((c + d).norm() < 1e-12);
        assert!(wedge_eval(&theta, &theta, &pt, &vs[..2]).unwrap().norm() < 1e-12);
    }
}

#[test]
fn stokes_on_the_rank_one_sphere() {
    // ∫_{S_Λ} x dy∧dt = vol{ρ < Λ} = Λ⁴ π²/2 in chart coordinates
    let w = KForm::from_form("x dy^dt", 3, 2, |x| Form::from_terms(3, 2, vec![(0b110, x[0].clone())]));
    for r in [0.5, 1.0, 2.0] {
        let v = surface_integral(&w, &QuadratureSpec::sphere(1, r)).unwrap();
        let want = r.powi(4) * PI * PI / 2.0;
        assert!((v.re - want).abs() < 1e-6 * want && v.im.abs() < 1e-12, "radius {}: {} vs {}", r, v, want);
    }
    // an exact form integrates to zero
    let exact = KForm::from_form("d(exp(xy) dt)", 3, 2, |x| {
        let e = (&x[0] * &x[1]).exp();
        Form::from_terms(3, 2, vec![(0b101, &e * &x[1]), (0b110, &e * &x[0])])
    });
    assert!(surface_integral(&exact, &QuadratureSpec::sphere(1, 1.3)).unwrap().norm() < 1e-9);
}

#[test]
fn sphere_identity_is_stable_under_refinement() {
    for n in 1..=2 {
        let r = unit_sphere_identity(n).unwrap();
        assert!(r.refinement_change < 1e-8, "n={} change {}", n, r.refinement_change);
        assert!(r.gap < 1e-6, "n={} gap {}", n, r.gap);
    }
}
