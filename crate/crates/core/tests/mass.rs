use crlab::mass::{
    alpha, alpha_quadrature, ball_volume, extrapolate, fitted_exponent, mass_report, pmass_closed_form, pmass_quadrature,
    pmt7_boundary_sum, real_mass_quadrature, sphere_identity_closed_form, sphere_identity_integral, MassKind,
};
use crlab::pseudohermitian::CoframeModel;
use crlab::quadrature::QuadratureSpec;
use proptest::prelude::*;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

#[test]
fn wallis_constants_match_beta_function() {
    for n in 1..=12 {
        let b = beta(0.5, (n as f64 + 1.0) / 2.0);
        assert!((alpha(n).unwrap() - b).abs() < 1e-12 * b, "n={}", n);
        assert!((alpha_quadrature(n).unwrap() - b).abs() < 1e-10 * b);
    }
}

#[test]
fn ball_volume_matches_gamma_function() {
    for n in 1..=10 {
        let v = std::f64::consts::PI.powi(n as i32) / gamma(n as f64 + 1.0);
        assert!((ball_volume(n) - v).abs() < 1e-12 * v);
    }
}

#[test]
fn sphere_identity_is_radius_independent() {
    // the weight ρ^{-(2n+4)} makes the integrand scale-invariant under dilation
    let closed = sphere_identity_closed_form(1).unwrap();
    for r in [0.5, 1.0, 3.0, 10.0] {
        let v = sphere_identity_integral(&QuadratureSpec::sphere(1, r)).unwrap();
        assert!((v.re - closed).abs() < 1e-6 * closed, "radius {}: {} vs {}", r, v.re, closed);
        assert!(v.im.abs() < 1e-9 * closed);
    }
}

#[test]
fn rank_one_complex_mass_with_analytic_constants() {
    // u = 1 + Aρ^{-2} gives c_1 = 2 and c̃_1 = 1 exactly
    for a in [0.5, 2.0] {
        let m = CoframeModel::asymptotic(1, a).unwrap();
        let r = mass_report(&m, &[5.0, 10.0, 20.0, 40.0], MassKind::Complex).unwrap();
        let closed = pmass_closed_form(1, a, 2.0, 1.0).unwrap();
        assert!((r.extrapolated - closed).abs() < 1e-2 * closed, "A={} m={} closed={}", a, r.extrapolated, closed);
        assert!((r.c_n - 2.0).abs() < 1e-6 && (r.c_tilde_n - 1.0).abs() < 1e-6);
    }
}

#[test]
fn mass_integrals_vanish_on_flat_model() {
    for n in 1..=2 {
        let m = CoframeModel::flat(n).unwrap();
        for l in [1.0, 5.0] {
            let spec = QuadratureSpec::sphere(n, l);
            assert!(pmass_quadrature(&m, &spec).unwrap().norm() < 1e-9);
            assert!(real_mass_quadrature(&m, &spec).unwrap().norm() < 1e-9);
        }
    }
    let spec = QuadratureSpec::sphere(2, 5.0);
    assert!(pmt7_boundary_sum(&CoframeModel::flat(2).unwrap(), &spec).unwrap().norm() < 1e-9);
    assert!(pmt7_boundary_sum(&CoframeModel::flat(1).unwrap(), &QuadratureSpec::sphere(1, 5.0)).is_err());
}

#[test]
fn masses_are_linear_in_a() {
    let spec = QuadratureSpec::sphere(2, 10.0);
    let one = CoframeModel::asymptotic(2, 1.0).unwrap();
    let two = CoframeModel::asymptotic(2, 2.0).unwrap();
    let a1 = pmass_quadrature(&one, &spec).unwrap().re;
    let a2 = pmass_quadrature(&two, &spec).unwrap().re;
    // the A² contribution decays like Λ^{-2n}
    assert!((a2 / a1 - 2.0).abs() < 0.02, "{}", a2 / a1);
    let b1 = real_mass_quadrature(&one, &spec).unwrap().re;
    let b2 = real_mass_quadrature(&two, &spec).unwrap().re;
    assert!((b2 / b1 - 2.0).abs() < 0.02, "{}", b2 / b1);
}

#[test]
fn invalid_radius_is_rejected() {
    let m = CoframeModel::asymptotic(1, 1.0).unwrap();
    assert!(pmass_quadrature(&m, &QuadratureSpec::sphere(1, 0.0)).is_err());
    assert!(mass_report(&m, &[], MassKind::Complex).is_err());
}

proptest! {
    #[test]
    fn extrapolation_recovers_limit(limit in -10.0f64..10.0, amp in 0.1f64..10.0, p in 0.5f64..4.0) {
        let l = [5.0, 10.0, 20.0, 40.0];
        let v: Vec<f64> = l.iter().map(|x: &f64| limit + amp * x.powf(-p)).collect();
        let fitted = fitted_exponent(&l, &v).unwrap();
        prop_assert!((fitted - p).abs() < 1e-8);
        let e = extrapolate(&l, &v, Some(fitted)).unwrap();
        prop_assert!((e - limit).abs() < 1e-9 * (1.0 + limit.abs() + amp));
    }

    #[test]
    fn polynomial_extrapolation_is_exact_in_inverse_radius(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0) {
        let l = [4.0, 8.0, 16.0];
        let v: Vec<f64> = l.iter().map(|x: &f64| c0 + c1 / x + c2 / (x * x)).collect();
        prop_assert!((extrapolate(&l, &v, None).unwrap() - c0).abs() < 1e-10);
    }
}
