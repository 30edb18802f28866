use crlab::heisenberg::{
    b_n, dilation, frame_components, group_inverse, group_mul, jl_extremal, jl_extremal_field, rho_of, rho_power_field,
    second_derivative_scale, sublaplacian, sublaplacian_real, yamabe_ratio, ExtremalParams, FrameIndex, HeisPoint,
};
use crlab::taylor::Taylor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2 * n + 1)
}

fn rank_and_points() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|n| (Just(n), point(n), point(n), point(n)))
}

proptest! {
    #[test]
    fn group_law_is_associative((_n, p, q, r) in rank_and_points()) {
        let a = group_mul(&group_mul(&p, &q).unwrap(), &r).unwrap();
        let b = group_mul(&p, &group_mul(&q, &r).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let e = group_mul(&p, &group_inverse(&p)).unwrap();
        prop_assert!(e.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn dilation_scales_homogeneous_norm((_n, p, q, _r) in rank_and_points(), a in 0.1f64..10.0) {
        let dp = dilation(a, &p).unwrap();
        prop_assert!((rho_of(&dp) - a * rho_of(&p)).abs() < 1e-12 * (1.0 + a * rho_of(&p)));
        // dilations are group automorphisms
        let lhs = dilation(a, &group_mul(&p, &q).unwrap()).unwrap();
        let rhs = group_mul(&dp, &dilation(a, &q).unwrap()).unwrap();
        for (x, y) in lhs.iter().zip(&rhs) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn left_translation_pushes_frame_forward((n, p, q, _r) in rank_and_points(), a in 1usize..=6) {
        let a = 1 + (a - 1) % (2 * n);
        let dim = 2 * n + 1;
        // L_q is affine, so unit differences give its Jacobian exactly
        let base = group_mul(&q, &p).unwrap();
        let jac: Vec<Vec<f64>> = (0..dim)
            .map(|k| {
                let mut pk = p.clone();
                pk[k] += 1.0;
                let img = group_mul(&q, &pk).unwrap();
                (0..dim).map(|i| img[i] - base[i]).collect()
            })
            .collect();
        let at = |x: &[f64]| -> Vec<f64> {
            frame_components(n, FrameIndex::E(a), &Taylor::vars(x, 0)).unwrap().iter().map(|c| c.value().re).collect()
        };
        let ep = at(&p);
        let eq = at(&base);
        for i in 0..dim {
            let pushed: f64 = (0..dim).map(|k| jac[k][i] * ep[k]).sum();
            prop_assert!((pushed - eq[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn complex_and_real_sublaplacians_agree((n, p, _q, _r) in rank_and_points(), beta in 0.3f64..3.0) {
        let u = jl_extremal_field(ExtremalParams::new(n, beta).unwrap());
        let c = sublaplacian(&u, &p).unwrap();
        let r = sublaplacian_real(&u, &p).unwrap();
        prop_assert!((c - r).abs() <= 1e-10 * (1.0 + c.abs()));
    }
}

/// `−½ Σ_a d²/ds² u(p ∘ s v_a)` by Richardson-extrapolated central differences,
/// using that `e̊_a` is left-invariant with value `v_a` at the origin.
fn fd_sublaplacian(n: usize, f: &dyn Fn(&[f64]) -> f64, p: &[f64]) -> f64 {
    let dim = 2 * n + 1;
    let second = |h: f64, v: &[f64]| {
        let step = |s: f64| -> Vec<f64> { group_mul(p, &v.iter().map(|c| c * s).collect::<Vec<_>>()).unwrap() };
        (f(&step(h)) - 2.0 * f(p) + f(&step(-h))) / (h * h)
    };
    let mut acc = 0.0;
    for a in 1..=2 * n {
        let v: Vec<f64> = frame_components(n, FrameIndex::E(a), &Taylor::vars(&vec![0.0; dim], 0))
            .unwrap()
            .iter()
            .map(|c| c.value().re)
            .collect();
        let h = 1e-2;
        acc += (4.0 * second(h / 2.0, &v) - second(h, &v)) / 3.0;
    }
    -0.5 * acc
}

#[test]
fn sublaplacian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3 {
        for beta in [0.7, 1.0, 1.6] {
            let params = ExtremalParams::new(n, beta).unwrap();
            let u = jl_extremal_field(params);
            let f = |x: &[f64]| jl_extremal(params, &HeisPoint::from_coords(x).unwrap());
            for _ in 0..10 {
                let p: Vec<f64> = (0..2 * n + 1).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let ad = sublaplacian(&u, &p).unwrap();
                let fd = fd_sublaplacian(n, &f, &p);
                let scale = second_derivative_scale(&u, &p).unwrap();
                assert!((ad - fd).abs() < 1e-6 * scale, "n={} ad={} fd={}", n, ad, fd);
            }
        }
    }
}

#[test]
fn yamabe_ratio_equals_finite_difference_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=2 {
        let params = ExtremalParams::new(n, 1.0).unwrap();
        let f = |x: &[f64]| jl_extremal(params, &HeisPoint::from_coords(x).unwrap());
        let points: Vec<Vec<f64>> = (0..20).map(|_| (0..2 * n + 1).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let stats = yamabe_ratio(params, &points).unwrap();
        for p in &points {
            let fd = b_n(n) * fd_sublaplacian(n, &f, p) / f(p).powf(1.0 + 2.0 / n as f64);
            assert!((fd - stats.mean).abs() < 1e-6 * stats.mean.abs(), "n={} fd={} mean={}", n, fd, stats.mean);
        }
    }
}

#[test]
fn power_of_rho_is_harmonic_away_from_origin() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for n in 1..=3 {
        let g = rho_power_field(n, -2.0 * n as f64);
        for _ in 0..500 {
            let raw: Vec<f64> = (0..2 * n + 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let target = rng.gen_range(0.5..10.0);
            let p = dilation(target / rho_of(&raw), &raw).unwrap();
            let lap = sublaplacian(&g, &p).unwrap();
            assert!(lap.abs() < 1e-8 * second_derivative_scale(&g, &p).unwrap(), "n={} rho={}", n, target);
        }
    }
}
