use crlab::clifford::{apply_word, grade_projection, Parity, Spinor};
use crlab::heisenberg::{dilation, frame_components, jl_extremal_field, rho_of, ExtremalParams, FrameIndex};
use crlab::pseudohermitian::{CoframeModel, FrameSel};
use crlab::spinconn::{
    dirac, leibniz_residual, weitzenbock, weitzenbock_residual, witten_boundary_operator, SpinConnection, SpinorField,
};
use crlab::taylor::Taylor;
use crlab::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn annulus_point<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..2 * n + 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    dilation(rng.gen_range(lo..hi) / rho_of(&raw), &raw).unwrap()
}

fn conformal_models(n: usize) -> Vec<CoframeModel> {
    vec![
        CoframeModel::asymptotic_with_tail(n, 1.0, 0.5).unwrap(),
        CoframeModel::conformal(n, jl_extremal_field(ExtremalParams::new(n, 1.0).unwrap())).unwrap(),
    ]
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn apply(m: &[C64], v: &[C64]) -> Vec<C64> {
    let d = v.len();
    (0..d).map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum()).collect()
}

#[test]
fn dirac_flips_parity() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in 1..=2 {
        let conns: Vec<SpinConnection> = std::iter::once(CoframeModel::flat(n).unwrap())
            .chain(conformal_models(n))
            .map(|m| SpinConnection::new(m).unwrap())
            .collect();
        for k in 0..100 {
            let parity = if k % 2 == 0 { Parity::Even } else { Parity::Odd };
            let psi = SpinorField::random_polynomial(n, 3, 2.0, Some(parity), &mut rng);
            let p = annulus_point(n, 0.7, 2.0, &mut rng);
            let conn = &conns[k % conns.len()];
            let d = dirac(conn, &psi, &p).unwrap();
            let same = grade_projection(&d, parity);
            assert!(same.norm_sqr() <= 1e-24 * d.norm_sqr().max(1e-30), "n={} {}", n, conn.model.name);
            assert!(d.norm_sqr() > 0.0);
        }
    }
}

#[test]
fn dirac_of_t_on_flat_rank_two() {
    let n = 2;
    let conn = SpinConnection::new(CoframeModel::flat(n).unwrap()).unwrap();
    let one = Spinor::monomial(n, &[]);
    let psi = SpinorField::scalar_times(n, "t", move |x| x[2 * n].clone(), one.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let p: Vec<f64> = (0..2 * n + 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
        // e̊_a t is the t-component of the left-invariant frame at p
        let mut expected = Spinor::zero(n);
        for a in 1..=2 * n {
            let c = frame_components(n, FrameIndex::E(a), &Taylor::vars(&p, 0)).unwrap()[2 * n].value();
            expected = expected.add(&apply_word(&[a], &one).unwrap().scale(c));
        }
        let d = dirac(&conn, &psi, &p).unwrap();
        assert!(dist(&d.coeffs, &expected.coeffs) < 1e-12, "{:?} vs {:?}", d.coeffs, expected.coeffs);
    }
}

#[test]
fn leibniz_rule_on_conformal_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for n in 1..=2 {
        for m in conformal_models(n) {
            let conn = SpinConnection::new(m).unwrap();
            for _ in 0..5 {
                let psi = SpinorField::random_polynomial(n, 2, 2.0, None, &mut rng);
                let p = annulus_point(n, 0.7, 2.0, &mut rng);
                let scale = psi.scale(&p).unwrap().max(1e-3);
                let mut dirs: Vec<FrameSel> = (1..=2 * n).map(FrameSel::E).collect();
                dirs.push(FrameSel::T);
                for x in dirs {
                    let xv = x.coefficients(n).unwrap();
                    for b in 1..=2 * n {
                        let r = leibniz_residual(&conn, &xv, b, &psi, &p).unwrap();
                        assert!(r < 1e-8 * scale, "{} X={:?} b={} residual {}", conn.model.name, x, b, r);
                    }
                }
            }
        }
    }
}

#[test]
fn spin_connection_is_skew_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for n in 1..=2 {
        for m in conformal_models(n) {
            let conn = SpinConnection::new(m).unwrap();
            let p = annulus_point(n, 0.7, 2.0, &mut rng);
            let f = conn.at(&p).unwrap();
            let s = 1usize << n;
            for x in &f.real_frame {
                let mut m = vec![C64::new(0.0, 0.0); s * s];
                for (c, xc) in x.iter().enumerate() {
                    for (o, v) in m.iter_mut().zip(&f.sigma[c]) {
                        *o += xc * v.value();
                    }
                }
                let size = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
                for i in 0..s {
                    for j in 0..s {
                        assert!((m[i * s + j] + m[j * s + i].conj()).norm() < 1e-12 * size.max(1.0));
                    }
                }
            }
        }
    }
}

#[test]
fn witten_operator_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for n in 1..=2 {
        let conns = [SpinConnection::new(CoframeModel::flat(n).unwrap()).unwrap(), SpinConnection::new(conformal_models(n).remove(0)).unwrap()];
        for conn in &conns {
            for _ in 0..50 {
                let psi = SpinorField::random_polynomial(n, 3, 2.0, None, &mut rng);
                let p = annulus_point(n, 0.7, 2.0, &mut rng);
                let f = conn.at(&p).unwrap();
                let t = psi.taylor(&p, 1).unwrap();
                let scale = psi.scale(&p).unwrap().max(1e-3);
                for i in 1..=2 * n {
                    let op = witten_boundary_operator(n, i).unwrap();
                    let a = op.apply_dirac_form(&f, &t);
                    let b = op.apply_commutator_form(&f, &t);
                    assert!(dist(&a, &b) < 1e-9 * scale, "{} i={}", conn.model.name, i);
                }
            }
        }
        // constant spinors are annihilated on the flat model
        let conn = &conns[0];
        let psi = SpinorField::scalar_times(n, "1", |x| Taylor::real(x[0].space(), 1.0), Spinor::monomial(n, &[1]));
        let p = annulus_point(n, 0.7, 2.0, &mut rng);
        let f = conn.at(&p).unwrap();
        let t = psi.taylor(&p, 1).unwrap();
        for i in 1..=2 * n {
            let v = witten_boundary_operator(n, i).unwrap().apply_dirac_form(&f, &t);
            assert!(v.iter().all(|c| c.norm() < 1e-14));
        }
    }
    assert!(witten_boundary_operator(2, 5).is_err());
}

#[test]
fn curvature_representation_matches_spin_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for n in 1..=2 {
        for m in conformal_models(n) {
            let conn = SpinConnection::new(m).unwrap();
            for _ in 0..3 {
                let p = annulus_point(n, 0.7, 2.0, &mut rng);
                let f = conn.at(&p).unwrap();
                let riem = f.geom.curvature_tensor().unwrap();
                let mut largest: f64 = 0.0;
                let d = 2 * n + 1;
                let basis: Vec<Vec<C64>> = (0..d)
                    .map(|i| (0..d).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
                    .collect();
                for x in &basis {
                    for y in &basis {
                        let a = f.spin_curvature_on(x, y);
                        let b = f.curvature_representation(x, y, &riem);
                        let size = a.iter().chain(&b).map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
                        largest = largest.max(a.iter().map(|v| v.norm()).fold(0.0, f64::max));
                        for _ in 0..3 {
                            let v: Vec<C64> =
                                (0..1 << n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                            let r = dist(&apply(&a, &v), &apply(&b, &v));
                            assert!(r < 1e-6 * size, "{} residual {}", conn.model.name, r);
                        }
                    }
                }
                assert!(largest > 1e-3, "{}: spin curvature vanishes ({})", conn.model.name, largest);
            }
        }
    }
}

#[test]
fn scalar_term_equals_w() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for n in 1..=2 {
        let s = 1usize << n;
        let flat = SpinConnection::new(CoframeModel::flat(n).unwrap()).unwrap();
        let p = annulus_point(n, 0.7, 2.0, &mut rng);
        assert!(flat.at(&p).unwrap().scalar_term().iter().all(|v| v.norm() < 1e-14));
        for m in conformal_models(n) {
            let conn = SpinConnection::new(m).unwrap();
            let p = annulus_point(n, 0.7, 2.0, &mut rng);
            let f = conn.at(&p).unwrap();
            let w = f.geom.curvature_data().unwrap().w;
            let r = f.scalar_term();
            for i in 0..s {
                for j in 0..s {
                    let e = if i == j { w } else { 0.0 };
                    assert!((r[i * s + j] - C64::new(e, 0.0)).norm() <= 1e-5 * w.abs(), "{}", conn.model.name);
                }
            }
        }
    }
}

#[test]
fn weitzenbock_formula_on_flat_rank_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    let conn = SpinConnection::new(CoframeModel::flat(2).unwrap()).unwrap();
    for k in 0..50 {
        let parity = if k % 2 == 0 { Some(Parity::Even) } else { None };
        let psi = SpinorField::random_polynomial(2, 3, 2.0, parity, &mut rng);
        let p: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let scale = psi.scale(&p).unwrap();
        let terms = weitzenbock(&conn, &psi, &p).unwrap();
        assert!(terms.full_residual() < 1e-8 * scale);
        if parity.is_some() {
            assert!(terms.reduced_residual() < 1e-8 * scale, "reduced {}", terms.reduced_residual());
        }
    }
}

#[test]
fn weitzenbock_formula_on_conformal_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    for n in 1..=2 {
        for m in conformal_models(n) {
            let conn = SpinConnection::new(m).unwrap();
            for _ in 0..5 {
                let psi = SpinorField::random_polynomial(n, 3, 2.0, None, &mut rng);
                let p = annulus_point(n, 0.7, 2.0, &mut rng);
                let r = weitzenbock_residual(&conn, &psi, &p).unwrap();
                assert!(r < 1e-8 * psi.scale(&p).unwrap(), "{} residual {}", conn.model.name, r);
            }
        }
    }
}

#[test]
fn rank_one_keeps_the_t_term() {
    let n = 1;
    let conn = SpinConnection::new(CoframeModel::flat(n).unwrap()).unwrap();
    let psi = SpinorField::scalar_times(n, "t exp(-rho^4/2)", |x| &x[2] * &(crlab::heisenberg::rho4(1, x) * -0.5).exp(), Spinor::monomial(1, &[]));
    let p = [0.3, -0.2, 0.5];
    let terms = weitzenbock(&conn, &psi, &p).unwrap();
    let scale = psi.scale(&p).unwrap();
    assert!(terms.full_residual() < 1e-10 * scale);
    assert!(terms.reduced_residual() > 1e-3 * scale, "reduced residual {}", terms.reduced_residual());
}
