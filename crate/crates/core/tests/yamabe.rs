use crlab::fieldcalc::{Arity, FieldExpr};
use crlab::heisenberg::{b_n, green_constant, jl_extremal_field, ExtremalParams};
use crlab::pseudohermitian::CoframeModel;
use crlab::quadrature::ShellSpec;
use crlab::yamabe::{
    binomial_bounds, containment_check, default_betas, energy_quotient, energy_terms, extremal_branch, gammas,
    level_set_contains, power_law_fit, test_function, LevelSetSpec, TAIL_START,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn level_sets_sit_between_the_two_balls(n in 1usize..=3, k in 0usize..5, seed in any::<u64>()) {
        let r = 4.0;
        let beta = default_betas(r)[k];
        let spec = LevelSetSpec::new(n, beta, r).unwrap();
        let rep = containment_check(&spec, 2000, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(rep.violations(), 0);
    }

    #[test]
    fn binomial_bounds_hold(n in 1usize..=6, beta_scale in 1.0f64..200.0, r in 0.1f64..10.0) {
        let beta = r.sqrt() * beta_scale;
        let b = binomial_bounds(n, beta, r).unwrap();
        prop_assert!(b.holds(), "{:?}", b);
    }

    #[test]
    fn test_function_is_continuous_across_level_set(n in 1usize..=3, psi in 0.0f64..std::f64::consts::PI, beta in 5.0f64..50.0) {
        let spec = LevelSetSpec::new(n, beta, 4.0).unwrap();
        let p = spec.boundary_point(psi);
        let v = extremal_branch(&spec, &p);
        prop_assert!((v - spec.cap()).abs() < 1e-9 * spec.cap());
    }
}

#[test]
fn binomial_bounds_rank_three() {
    let (g1, g2) = gammas(3);
    assert_eq!((g1, g2), (5.0 / 9.0, 2.0 / 3.0));
    for beta in [10.0, 20.0, 40.0] {
        let b = binomial_bounds(3, beta, 4.0).unwrap();
        assert!(b.holds(), "{:?}", b);
        assert!(b.lower < b.value && b.value < b.upper);
    }
    assert!(binomial_bounds(3, 1.0, 4.0).is_err());
}

#[test]
fn test_function_cap_and_gradient() {
    let spec = LevelSetSpec::new(2, 16.0, 4.0).unwrap();
    // U_β(∞) is the outer region; the cap fills the small set around the origin
    let near = [0.1, 0.2, -0.1, 0.3, 0.5];
    assert!(!level_set_contains(&spec, &near));
    let v = test_function(&spec, &near).unwrap();
    assert_eq!(v.value, spec.cap());
    assert_eq!(v.gradient_norm_sqr(), 0.0);
    let far = [1e3, 0.0, 0.0, 0.0, 0.0];
    let w = test_function(&spec, &far).unwrap();
    assert!(w.inside && w.value < spec.cap() && w.gradient_norm_sqr() > 0.0);
}

#[test]
fn quotient_is_invariant_under_scaling() {
    let n = 1;
    let params = ExtremalParams::new(n, 1.0).unwrap();
    let u = jl_extremal_field(params);
    let cu = {
        let u = u.clone();
        FieldExpr::everywhere("3.7 u", Arity::Scalar, 3, move |x| vec![&u.apply(x)[0] * 3.7])
    };
    let flat = CoframeModel::flat(n).unwrap();
    let region = ShellSpec::ball(n, 1e3);
    let q = energy_quotient(&u, &flat, &region).unwrap();
    let qc = energy_quotient(&cu, &flat, &region).unwrap();
    assert!((q - qc).abs() < 1e-10 * q.abs(), "{} vs {}", q, qc);
}

#[test]
fn extremal_quotient_is_the_yamabe_constant() {
    for n in 1..=2 {
        let q = energy_quotient(
            &jl_extremal_field(ExtremalParams::new(n, 1.0).unwrap()),
            &CoframeModel::flat(n).unwrap(),
            &ShellSpec::ball(n, 1e4),
        )
        .unwrap();
        let y = b_n(n) * (n * n) as f64 * PI;
        assert!((q - y).abs() < 1e-4 * y, "n={} Q={} Y={}", n, q, y);
    }
}

#[test]
fn energy_terms_decompose_consistently() {
    for n in 1..=2 {
        let a_n = green_constant(n, &[1.0]).unwrap().a_mean;
        let y = b_n(n) * (n * n) as f64 * PI;
        for beta in default_betas(4.0) {
            let t = energy_terms(n, a_n, 1.0, beta, 4.0, TAIL_START).unwrap();
            assert!(t.decomposition_residual < 1e-8, "n={} beta={} residual {}", n, beta, t.decomposition_residual);
            assert!(t.holder_margin >= 0.0, "n={} beta={} margin {}", n, beta, t.holder_margin);
            assert!((t.y_num - y).abs() < 1e-6 * y, "n={} Y_num={} Y={}", n, t.y_num, y);
        }
    }
}

#[test]
fn deficit_vanishes_without_mass_term() {
    // with A_p = 0 the test function cannot beat the sphere
    let a_n = green_constant(2, &[1.0]).unwrap().a_mean;
    for beta in default_betas(4.0) {
        let t = energy_terms(2, a_n, 0.0, beta, 4.0, TAIL_START).unwrap();
        assert!(t.d <= 1e-12 * t.e.abs(), "beta={} D={}", beta, t.d);
    }
}

#[test]
fn power_law_fit_recovers_exponent() {
    let x = [2.0, 4.0, 8.0, 16.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-4.0)).collect();
    let (p, c) = power_law_fit(&x, &y).unwrap();
    assert!((p - 4.0).abs() < 1e-12 && (c - 3.0).abs() < 1e-10);
    assert!(power_law_fit(&x, &[1.0, -1.0, 1.0, 1.0]).is_none());
}
