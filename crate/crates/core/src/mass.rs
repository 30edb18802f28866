//! Pseudohermitian mass: boundary integrals over Heisenberg spheres, their
//! closed forms, and the spinor-weighted boundary sum of the `n = 2`
//! Witten-type argument.

use crate::clifford::{apply_word, Spinor};
use crate::error::{Error, Result};
use crate::fieldcalc::surface_integral_with;
use crate::forms::Form;
use crate::heisenberg::{flat_theta, rho_of};
use crate::pseudohermitian::{asymptotic_coefficients, real_frame_coefficients, CoframeModel, PointGeometry};
pub use crate::quadrature::{extrapolate, fitted_exponent, richardson};
use crate::quadrature::{gl_interval, QuadratureSpec};
use crate::taylor::Taylor;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, PI};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `α_n = ∫_{-1}^{1} (1 − t²)^{(n−1)/2} dt` by the Wallis recursion.
pub fn alpha(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("alpha needs n ≥ 1".into()));
    }
    if n % 2 == 1 {
        let m = (n - 1) / 2;
        Ok(2.0 * (1..=m).map(|k| (2 * k) as f64 / (2 * k + 1) as f64).product::<f64>())
    } else {
        let m = n / 2;
        Ok(FRAC_PI_2 * (2..=m).map(|k| (2 * k - 1) as f64 / (2 * k) as f64).product::<f64>())
    }
}

/// `α_n = 2∫_0^{π/2} cos^n s ds` by Gauss–Legendre.
pub fn alpha_quadrature(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("alpha needs n ≥ 1".into()));
    }
    Ok(2.0 * gl_interval(48, 0.0, FRAC_PI_2).iter().map(|&(s, w)| w * s.cos().powi(n as i32)).sum::<f64>())
}

/// Euclidean volume of the unit ball of `Cⁿ`, `πⁿ/n!`.
pub fn ball_volume(n: usize) -> f64 {
    PI.powi(n as i32) / factorial(n)
}

/// `2^{2n} n! α_n Ω_n`.
pub fn sphere_identity_closed_form(n: usize) -> Result<f64> {
    Ok(4f64.powi(n as i32) * factorial(n) * alpha(n)? * ball_volume(n))
}

/// `n! 2^{2n} n² (n c̃ + c) α_n Ω_n A`.
pub fn pmass_closed_form(n: usize, a: f64, c: f64, c_tilde: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(factorial(n) * 4f64.powi(n as i32) * nf * nf * (nf * c_tilde + c) * alpha(n)? * ball_volume(n) * a)
}

/// `2^{n+3/2} n² (c̃ + n c) α_n Ω_n A`.
pub fn real_mass_closed_form(n: usize, a: f64, c: f64, c_tilde: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(2f64.powf(nf + 1.5) * nf * nf * (c_tilde + nf * c) * alpha(n)? * ball_volume(n) * a)
}

/// `16 (c_2 − c̃_2) α_2 Ω_2 A`.
pub fn pmt7_closed_form(a: f64, c: f64, c_tilde: f64) -> f64 {
    16.0 * (c - c_tilde) * FRAC_PI_2 * ball_volume(2) * a
}

/// `16 [(2√2 + 1) c_2 + (√2 − 1) c̃_2] α_2 Ω_2 A`.
pub fn witten_closed_form(a: f64, c: f64, c_tilde: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    16.0 * ((2.0 * s + 1.0) * c + (s - 1.0) * c_tilde) * FRAC_PI_2 * ball_volume(2) * a
}

fn coordinate_one_form(c: Vec<C64>) -> Form<C64> {
    Form::one_form(c)
}

/// `Σ_β (z̄^β ω̄ dz^β + z^β ω dz^β̄) ∧ θ̊ ∧ (dθ̊)^{n−1}` at `p`, weighted by `ρ^{-(2n+4)}`.
fn sphere_identity_form(n: usize, p: &[f64], dth_pow: &Form<C64>) -> Form<C64> {
    let dim = 2 * n + 1;
    let z2: f64 = (0..n).map(|k| p[k] * p[k] + p[n + k] * p[n + k]).sum();
    let omega = C64::new(p[2 * n], z2);
    let mut c = vec![ZERO; dim];
    for b in 0..n {
        let z = C64::new(p[b], p[n + b]);
        let f = z.conj() * omega.conj();
        let g = z * omega;
        // dz = dx + i dy, dz̄ = dx − i dy
        c[b] += f + g;
        c[n + b] += I * (f - g);
    }
    let w = rho_of(p).powi(-(2 * n as i32) - 4);
    let one = coordinate_one_form(c.into_iter().map(|v| v * w).collect());
    let th = flat_theta(n, &Taylor::vars(p, 0)).value();
    one.wedge(&th).wedge(dth_pow)
}

fn flat_dtheta_power(n: usize, k: usize) -> Form<C64> {
    let x = Taylor::vars(&vec![0.0; 2 * n + 1], 1);
    flat_theta(n, &x).d().value().power(k, C64::new(1.0, 0.0))
}

/// Weighted sphere identity integral over the sphere described by `spec`.
pub fn sphere_identity_integral(spec: &QuadratureSpec) -> Result<C64> {
    let n = spec.n;
    let dp = flat_dtheta_power(n, n - 1);
    surface_integral_with(spec, |p| Ok(sphere_identity_form(n, p, &dp)))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SphereIdentityReport {
    pub n: usize,
    pub quadrature: f64,
    pub refined: f64,
    pub closed_form: f64,
    pub gap: f64,
    pub refinement_change: f64,
}

/// Quadrature of the unit-sphere identity against `2^{2n} n! α_n Ω_n`.
pub fn unit_sphere_identity(n: usize) -> Result<SphereIdentityReport> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("sphere identity implemented for n ≤ 3, got {}", n)));
    }
    let spec = QuadratureSpec::sphere(n, 1.0);
    let q = sphere_identity_integral(&spec)?;
    let refined = if n < 3 { sphere_identity_integral(&spec.refined())?.re } else { q.re };
    let closed = sphere_identity_closed_form(n)?;
    let gap = (q.re - closed).abs() / closed;
    if !gap.is_finite() {
        return Err(Error::Quadrature("sphere identity quadrature is not finite".into()));
    }
    Ok(SphereIdentityReport {
        n,
        quadrature: q.re,
        refined,
        closed_form: closed,
        gap,
        refinement_change: (refined - q.re).abs() / closed,
    })
}

fn check_sphere(model: &CoframeModel, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositive { what: "Lambda".into(), value: lambda });
    }
    let mut p = vec![0.0; model.dim()];
    p[2 * model.n] = lambda * lambda;
    if !model.in_domain(&p) {
        return Err(Error::Domain { field: model.name.clone(), point: p });
    }
    Ok(())
}

fn contact_forms(g: &PointGeometry) -> (Form<C64>, Form<C64>) {
    let th = Form::one_form(g.coframe[0].clone());
    (th.value(), th.d().value())
}

/// `n i ∮_{S_Λ} Σ_γ θ_γ^γ ∧ θ ∧ (dθ)^{n−1}`.
pub fn pmass_quadrature(model: &CoframeModel, spec: &QuadratureSpec) -> Result<C64> {
    check_sphere(model, spec.radius)?;
    let n = model.n;
    surface_integral_with(spec, |p| {
        let g = model.geometry(p, 1)?;
        let tr = coordinate_one_form(g.trace_connection_form());
        let (th, dth) = contact_forms(&g);
        let f = tr.wedge(&th).wedge(&dth.power(n - 1, C64::new(1.0, 0.0)));
        Ok(f.scale(&(I * n as f64)))
    })
}

/// `dV = θ ∧ (dθ)^n / (2^n n!)` at a point.
fn volume_form(g: &PointGeometry) -> Form<C64> {
    let n = g.n;
    let (th, dth) = contact_forms(g);
    th.wedge(&dth.power(n, C64::new(1.0, 0.0))).scale(&C64::new(1.0 / (2f64.powi(n as i32) * factorial(n)), 0.0))
}

/// `∮_{S_Λ} Σ_{j,k} ω_j^k(e_j) e_k ⌟ dV`.
pub fn real_mass_quadrature(model: &CoframeModel, spec: &QuadratureSpec) -> Result<C64> {
    check_sphere(model, spec.radius)?;
    let n = model.n;
    let e = real_frame_coefficients(n);
    surface_integral_with(spec, |p| {
        let g = model.geometry(p, 1)?;
        let mut v = vec![ZERO; 2 * n + 1];
        for k in 0..2 * n {
            let c: C64 = (0..2 * n).map(|j| g.real_omega_on(&e[j], j, k)).sum();
            for (vi, ei) in v.iter_mut().zip(&e[k]) {
                *vi += c * ei;
            }
        }
        let coords = g.to_coordinates(&v);
        Ok(volume_form(&g).interior(&coords))
    })
}

/// `Re⟨ψ_0, E_iE_kE_lE_m ψ_0⟩` over the index set with all four indices distinct.
fn quartic_table(psi0: &Spinor) -> Result<Vec<((usize, usize, usize, usize), f64)>> {
    let n = psi0.n;
    let mut out = Vec::new();
    for i in 1..=2 * n {
        for k in 1..=2 * n {
            for l in 1..=2 * n {
                for m in 1..=2 * n {
                    let idx = [i, k, l, m];
                    let distinct = (0..4).all(|a| (a + 1..4).all(|b| idx[a] != idx[b]));
                    if !distinct {
                        continue;
                    }
                    let q = psi0.inner(&apply_word(&idx, psi0)?).re;
                    if q != 0.0 {
                        out.push(((i, k, l, m), q));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Σ_{(i,k,l,m) distinct} ∮ ¼ ω_l^m(e_k) Re⟨ψ_0, e_ie_ke_le_m ψ_0⟩ e_i ⌟ dV` for `n = 2`,
/// with the constant positive spinor `ψ_0 = 1`.
pub fn pmt7_boundary_sum(model: &CoframeModel, spec: &QuadratureSpec) -> Result<C64> {
    if model.n != 2 {
        return Err(Error::InvalidArgument("the boundary-sum identity is asserted only for n = 2".into()));
    }
    check_sphere(model, spec.radius)?;
    let n = 2;
    let table = quartic_table(&Spinor::monomial(2, &[]))?;
    let e = real_frame_coefficients(n);
    surface_integral_with(spec, |p| {
        let g = model.geometry(p, 1)?;
        let mut coef = [ZERO; 4];
        for &((i, k, l, m), q) in &table {
            coef[i - 1] += g.real_omega_on(&e[k - 1], l - 1, m - 1) * (0.25 * q);
        }
        let mut v = vec![ZERO; 2 * n + 1];
        for i in 0..2 * n {
            for (vi, ei) in v.iter_mut().zip(&e[i]) {
                *vi += coef[i] * ei;
            }
        }
        Ok(volume_form(&g).interior(&g.to_coordinates(&v)))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum MassKind {
    Complex,
    Real,
    BoundarySum,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MassReport {
    pub kind: MassKind,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: f64,
    pub lambdas: Vec<f64>,
    pub m_quad_re: Vec<f64>,
    pub m_quad_im: Vec<f64>,
    pub extrapolated: f64,
    pub closed_form: f64,
    pub rel_gap: f64,
    pub c_n: f64,
    pub c_tilde_n: f64,
    pub fitted_exponent: Option<f64>,
    pub max_imag_ratio: f64,
}

impl MassReport {
    /// Gap of each radius to the closed form.
    pub fn gaps(&self) -> Vec<f64> {
        self.m_quad_re.iter().map(|m| rel_gap(*m, self.closed_form)).collect()
    }
}

fn rel_gap(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        x.abs()
    } else {
        (x - reference).abs() / reference.abs()
    }
}

/// Measured `(c_n, c̃_n)` per unit `A` (zeros for a model without `A`).
pub fn measured_constants(model: &CoframeModel) -> Result<(f64, f64)> {
    match model.mass_coefficient {
        Some(a) if a != 0.0 => {
            let (ca, cta) = asymptotic_coefficients(model, &[10.0, 20.0, 40.0, 80.0])?;
            Ok((ca / a, cta / a))
        }
        _ => Ok((0.0, 0.0)),
    }
}

/// Quadrature over every radius, extrapolation to `Λ → ∞` in `Λ^{-p}` with the
/// decay order `p` fitted from the last three radii, and comparison with the
/// closed form for `kind`.
pub fn mass_report(model: &CoframeModel, lambdas: &[f64], kind: MassKind) -> Result<MassReport> {
    mass_report_with(model, lambdas, kind, |n, l| QuadratureSpec::sphere(n, l))
}

pub fn mass_report_with<F>(model: &CoframeModel, lambdas: &[f64], kind: MassKind, spec_for: F) -> Result<MassReport>
where
    F: Fn(usize, f64) -> QuadratureSpec,
{
    if lambdas.is_empty() {
        return Err(Error::Empty("lambdas".into()));
    }
    let n = model.n;
    let a = model.mass_coefficient.unwrap_or(0.0);
    let (c, ct) = measured_constants(model)?;
    let mut re = Vec::with_capacity(lambdas.len());
    let mut im = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let spec = spec_for(n, l);
        let v = match kind {
            MassKind::Complex => pmass_quadrature(model, &spec)?,
            MassKind::Real => real_mass_quadrature(model, &spec)?,
            MassKind::BoundarySum => pmt7_boundary_sum(model, &spec)?,
        };
        re.push(v.re);
        im.push(v.im);
    }
    let exponent = fitted_exponent(lambdas, &re);
    let extrapolated = extrapolate(lambdas, &re, exponent)?;
    let closed = match kind {
        MassKind::Complex => pmass_closed_form(n, a, c, ct)?,
        MassKind::Real => real_mass_closed_form(n, a, c, ct)?,
        MassKind::BoundarySum => pmt7_closed_form(a, c, ct),
    };
    let max_imag_ratio = re.iter().zip(&im).map(|(r, i)| i.abs() / (r.abs() + 1e-12)).fold(0.0, f64::max);
    Ok(MassReport {
        kind,
        n,
        a,
        lambdas: lambdas.to_vec(),
        m_quad_re: re.clone(),
        m_quad_im: im,
        extrapolated,
        closed_form: closed,
        rel_gap: rel_gap(extrapolated, closed),
        c_n: c,
        c_tilde_n: ct,
        fitted_exponent: exponent,
        max_imag_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(1).unwrap(), 2.0);
        assert!((alpha(2).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((alpha(3).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(alpha(0).is_err());
        for n in 1..=8 {
            assert!((alpha(n).unwrap() - alpha_quadrature(n).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(pmass_closed_form(2, 0.0, 1.0, 0.5).unwrap(), 0.0);
        let m = pmass_closed_form(2, 1.0, 1.0, 0.5).unwrap();
        assert!((m - 64.0 * PI.powi(3)).abs() < 1e-9);
        assert!((pmass_closed_form(2, 2.0, 1.0, 0.5).unwrap() - 2.0 * m).abs() < 1e-9);
        // blow-up constants with a_1 = 1: c = 4π, c̃ = 2π
        let b = pmass_closed_form(1, 1.0, 4.0 * PI, 2.0 * PI).unwrap();
        assert!((b - 4.0 * 6.0 * PI * 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn witten_constant_assembly() {
        let (c, ct) = (1.3, 0.4);
        let half = 0.5 * real_mass_closed_form(2, 1.0, c, ct).unwrap();
        assert!((half + pmt7_closed_form(1.0, c, ct) - witten_closed_form(1.0, c, ct)).abs() < 1e-10);
    }

    #[test]
    fn richardson_exact_on_polynomials() {
        let h = [0.2, 0.1, 0.05];
        let y: Vec<f64> = h.iter().map(|x| 3.0 + 2.0 * x - x * x).collect();
        assert!((richardson(&h, &y).unwrap() - 3.0).abs() < 1e-12);
        let l = [5.0, 10.0, 20.0];
        let v: Vec<f64> = l.iter().map(|x: &f64| 1.0 + 4.0 * x.powf(-1.3)).collect();
        assert!((fitted_exponent(&l, &v).unwrap() - 1.3).abs() < 1e-8);
    }

    #[test]
    fn sphere_identity_low_rank() {
        let r = unit_sphere_identity(1).unwrap();
        assert!((r.closed_form - 8.0 * PI).abs() < 1e-12);
        assert!(r.gap < 1e-6, "{:?}", r);
    }

    #[test]
    fn flat_mass_vanishes() {
        let m = CoframeModel::flat(1).unwrap();
        let v = pmass_quadrature(&m, &QuadratureSpec::sphere(1, 5.0)).unwrap();
        assert!(v.norm() < 1e-9);
    }
}
