//! The flat Heisenberg group `H_n`: group law, left-invariant frames, the
//! homogeneous norm, dilations, the sublaplacian, Jerison–Lee extremals and
//! the normalization constant of the Green kernel `ρ^{-2n}`.
//!
//! Chart coordinates are `(x_1..x_n, y_1..y_n, t)` with `z = x + iy`.
//! `θ̊ = dt + 2Σ(x dy − y dx)`, `e̊_β = (∂_{x_β} + 2y_β∂_t)/√2`,
//! `e̊_{n+β} = (∂_{y_β} − 2x_β∂_t)/√2`, `Z̊_α = (∂_{z_α} + i z̄_α∂_t)/√2`, `T̊ = ∂_t`.

use crate::error::{Error, Result};
use crate::fieldcalc::{surface_integral_with, Arity, FieldExpr};
use crate::forms::Form;
use crate::quadrature::QuadratureSpec;
use crate::taylor::{self, Taylor};
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Point of `H_n` in complex form.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisPoint {
    pub z: Vec<C64>,
    pub t: f64,
}

impl HeisPoint {
    pub fn new(z: Vec<C64>, t: f64) -> HeisPoint {
        HeisPoint { z, t }
    }

    pub fn from_coords(x: &[f64]) -> Result<HeisPoint> {
        if x.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!("chart dimension {} is even", x.len())));
        }
        let n = (x.len() - 1) / 2;
        Ok(HeisPoint { z: (0..n).map(|k| C64::new(x[k], x[n + k])).collect(), t: x[2 * n] })
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.z.iter().map(|z| z.re).collect();
        v.extend(self.z.iter().map(|z| z.im));
        v.push(self.t);
        v
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z_norm_sqr(&self) -> f64 {
        self.z.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `ω = t + i|z|²`.
    pub fn omega(&self) -> C64 {
        C64::new(self.t, self.z_norm_sqr())
    }

    /// Homogeneous norm `ρ = (|z|⁴ + t²)^{1/4}`.
    pub fn rho(&self) -> f64 {
        let z2 = self.z_norm_sqr();
        (z2 * z2 + self.t * self.t).powf(0.25)
    }
}

pub fn rho_of(x: &[f64]) -> f64 {
    let n = (x.len() - 1) / 2;
    let z2: f64 = (0..n).map(|k| x[k] * x[k] + x[n + k] * x[n + k]).sum();
    (z2 * z2 + x[2 * n] * x[2 * n]).powf(0.25)
}

/// Group law `(x, y, t)∘(x', y', t') = (x + x', y + y', t + t' + 2Σ(y x' − x y'))`.
pub fn group_mul(p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    if p.len() != q.len() {
        return Err(Error::RankMismatch { expected: p.len(), got: q.len() });
    }
    let n = (p.len() - 1) / 2;
    let mut out: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
    let twist: f64 = (0..n).map(|k| p[n + k] * q[k] - p[k] * q[n + k]).sum();
    out[2 * n] += 2.0 * twist;
    Ok(out)
}

pub fn group_inverse(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| -x).collect()
}

/// Non-isotropic dilation `τ_a(z, t) = (az, a²t)`.
pub fn dilation(a: f64, p: &[f64]) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::NonPositive { what: "dilation factor".into(), value: a });
    }
    let n = (p.len() - 1) / 2;
    let mut out: Vec<f64> = p.iter().map(|x| a * x).collect();
    out[2 * n] = a * a * p[2 * n];
    Ok(out)
}

/// Selector of a flat frame vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameIndex {
    /// `e̊_a`, `1 ≤ a ≤ 2n`
    E(usize),
    /// `T̊ = ∂_t`
    T,
}

/// Components of `e̊_a` or `T̊` as Taylor polynomials in chart coordinates.
pub fn frame_components(n: usize, a: FrameIndex, x: &[Taylor]) -> Result<Vec<Taylor>> {
    let sp = x[0].space();
    let mut v = vec![Taylor::zero(sp); 2 * n + 1];
    match a {
        FrameIndex::T => v[2 * n] = Taylor::real(sp, 1.0),
        FrameIndex::E(a) => {
            if a == 0 || a > 2 * n {
                return Err(Error::IndexOutOfRange { index: a, max: 2 * n });
            }
            if a <= n {
                let b = a - 1;
                v[b] = Taylor::real(sp, FRAC_1_SQRT_2);
                v[2 * n] = &x[n + b] * (2.0 * FRAC_1_SQRT_2);
            } else {
                let b = a - n - 1;
                v[n + b] = Taylor::real(sp, FRAC_1_SQRT_2);
                v[2 * n] = &x[b] * (-2.0 * FRAC_1_SQRT_2);
            }
        }
    }
    Ok(v)
}

pub fn frame_vector(n: usize, a: FrameIndex) -> Result<FieldExpr> {
    let sp = taylor::space(2 * n + 1, 0);
    frame_components(n, a, &vec![Taylor::zero(sp); 2 * n + 1])?;
    let name = match a {
        FrameIndex::T => "T".to_string(),
        FrameIndex::E(a) => format!("e{}", a),
    };
    Ok(FieldExpr::everywhere(&name, Arity::Vector, 2 * n + 1, move |x| {
        frame_components(n, a, x).expect("validated index")
    }))
}

/// `Z̊_α` (`conj = false`) or `Z̊_ᾱ` (`conj = true`), `α` zero-based.
pub fn complex_frame_components(n: usize, alpha: usize, conj: bool, x: &[Taylor]) -> Vec<Taylor> {
    let sp = x[0].space();
    let h = FRAC_1_SQRT_2;
    let s = if conj { 1.0 } else { -1.0 };
    let mut v = vec![Taylor::zero(sp); 2 * n + 1];
    // ∂_z = (∂_x − i∂_y)/2, ∂_z̄ = (∂_x + i∂_y)/2
    v[alpha] = Taylor::real(sp, 0.5 * h);
    v[n + alpha] = Taylor::constant(sp, C64::new(0.0, 0.5 * h * s));
    // i z̄ ∂_t for Z, −i z ∂_t for Z̄
    let xr = &x[alpha];
    let yi = &x[n + alpha];
    let i = C64::new(0.0, 1.0);
    v[2 * n] = if conj {
        (xr * (-i) + yi.clone()) * h
    } else {
        (xr * i + yi.clone()) * h
    };
    v
}

/// Flat contact form `θ̊` with Taylor coefficients.
pub fn flat_theta(n: usize, x: &[Taylor]) -> Form<Taylor> {
    let sp = x[0].space();
    let mut c = vec![Taylor::zero(sp); 2 * n + 1];
    for k in 0..n {
        c[k] = &x[n + k] * -2.0;
        c[n + k] = &x[k] * 2.0;
    }
    c[2 * n] = Taylor::real(sp, 1.0);
    Form::one_form(c)
}

/// Flat unitary coframe `θ̊^α = √2 dz^α`.
pub fn flat_theta_alpha(n: usize, alpha: usize, x: &[Taylor]) -> Form<Taylor> {
    let sp = x[0].space();
    let mut c = vec![Taylor::zero(sp); 2 * n + 1];
    c[alpha] = Taylor::real(sp, std::f64::consts::SQRT_2);
    c[n + alpha] = Taylor::constant(sp, C64::new(0.0, std::f64::consts::SQRT_2));
    Form::one_form(c)
}

/// `|z|²` in Taylor arithmetic.
pub fn z_norm_sqr(n: usize, x: &[Taylor]) -> Taylor {
    taylor::sum((0..n).map(|k| &x[k] * &x[k] + &x[n + k] * &x[n + k])).expect("n ≥ 1")
}

/// `ρ⁴ = |z|⁴ + t²`.
pub fn rho4(n: usize, x: &[Taylor]) -> Taylor {
    let z2 = z_norm_sqr(n, x);
    &z2 * &z2 + &x[2 * n] * &x[2 * n]
}

/// `ρ^k` for real `k`.
pub fn rho_pow(n: usize, x: &[Taylor], k: f64) -> Taylor {
    rho4(n, x).powf(k / 4.0)
}

/// Scalar field `ρ^k` (singular at the origin when `k < 0`).
pub fn rho_power_field(n: usize, k: f64) -> FieldExpr {
    let dim = 2 * n + 1;
    FieldExpr::new(
        &format!("rho^{}", k),
        Arity::Scalar,
        dim,
        move |x| vec![rho_pow(n, x, k)],
        move |p| k >= 0.0 || rho_of(p) > 0.0,
    )
}

/// `b_n = 2 + 2/n`.
pub fn b_n(n: usize) -> f64 {
    2.0 + 2.0 / n as f64
}

fn apply_vector(v: &[Taylor], f: &Taylor) -> Taylor {
    f.directional(v)
}

/// `Δ̊_b u = −Σ_α (Z̊_αZ̊_ᾱ + Z̊_ᾱZ̊_α) u` from an order-2 expansion.
pub fn sublaplacian_taylor(n: usize, x: &[Taylor], u: &Taylor) -> Taylor {
    let mut acc: Option<Taylor> = None;
    for a in 0..n {
        let z = complex_frame_components(n, a, false, x);
        let zb = complex_frame_components(n, a, true, x);
        let t = apply_vector(&z, &apply_vector(&zb, u)) + apply_vector(&zb, &apply_vector(&z, u));
        acc = Some(match acc {
            None => t,
            Some(s) => s + t,
        });
    }
    -acc.expect("n ≥ 1")
}

/// `−(1/2) Σ_a e̊_a e̊_a u`.
pub fn sublaplacian_real_taylor(n: usize, x: &[Taylor], u: &Taylor) -> Taylor {
    let mut acc: Option<Taylor> = None;
    for a in 1..=2 * n {
        let e = frame_components(n, FrameIndex::E(a), x).expect("valid index");
        let t = apply_vector(&e, &apply_vector(&e, u));
        acc = Some(match acc {
            None => t,
            Some(s) => s + t,
        });
    }
    acc.expect("n ≥ 1") * -0.5
}

fn scalar_check(u: &FieldExpr) -> Result<usize> {
    if u.arity != Arity::Scalar || u.dim % 2 == 0 {
        return Err(Error::InvalidArgument(format!("{} is not a scalar field on H_n", u.name)));
    }
    Ok((u.dim - 1) / 2)
}

/// Sublaplacian of a scalar field in the complex frame.
pub fn sublaplacian(u: &FieldExpr, p: &[f64]) -> Result<f64> {
    let n = scalar_check(u)?;
    u.check_domain(p)?;
    let x = Taylor::vars(p, 2);
    let ut = &u.apply(&x)[0];
    Ok(sublaplacian_taylor(n, &x, ut).value().re)
}

/// Sublaplacian of a scalar field in the real frame.
pub fn sublaplacian_real(u: &FieldExpr, p: &[f64]) -> Result<f64> {
    let n = scalar_check(u)?;
    u.check_domain(p)?;
    let x = Taylor::vars(p, 2);
    let ut = &u.apply(&x)[0];
    Ok(sublaplacian_real_taylor(n, &x, ut).value().re)
}

/// Largest second partial derivative of a scalar field, a size reference.
pub fn second_derivative_scale(u: &FieldExpr, p: &[f64]) -> Result<f64> {
    let t = &u.taylor(p, 2)?[0];
    let d = p.len();
    let mut s: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            s = s.max(t.d2(i, j).norm());
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ExtremalParams {
    pub beta: f64,
    pub n: usize,
}

impl ExtremalParams {
    pub fn new(n: usize, beta: f64) -> Result<ExtremalParams> {
        if !(beta > 0.0) {
            return Err(Error::NonPositive { what: "beta".into(), value: beta });
        }
        if n == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        Ok(ExtremalParams { beta, n })
    }
}

/// `u_β = β^n |ω + iβ²|^{-n}` in Taylor arithmetic.
pub fn jl_extremal_taylor(params: ExtremalParams, x: &[Taylor]) -> Taylor {
    let n = params.n;
    let b2 = params.beta * params.beta;
    let w = z_norm_sqr(n, x).add_const(C64::new(b2, 0.0));
    let t = &x[2 * n];
    let m2 = &(t * t) + &(&w * &w);
    m2.powf(-(n as f64) / 2.0) * params.beta.powi(n as i32)
}

pub fn jl_extremal_field(params: ExtremalParams) -> FieldExpr {
    FieldExpr::everywhere(
        &format!("u_beta(beta={})", params.beta),
        Arity::Scalar,
        2 * params.n + 1,
        move |x| vec![jl_extremal_taylor(params, x)],
    )
}

/// `u_β(p)`.
pub fn jl_extremal(params: ExtremalParams, p: &HeisPoint) -> f64 {
    let w = p.omega() + C64::new(0.0, params.beta * params.beta);
    params.beta.powi(params.n as i32) * w.norm().powf(-(params.n as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RatioStats {
    pub mean: f64,
    pub stdev: f64,
    pub count: usize,
}

/// Statistics of `b_n Δ̊_b u_β / u_β^{1+2/n}` over the given chart points.
pub fn yamabe_ratio(params: ExtremalParams, points: &[Vec<f64>]) -> Result<RatioStats> {
    if points.is_empty() {
        return Err(Error::Empty("point set".into()));
    }
    let n = params.n;
    let bn = b_n(n);
    let mut vals = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != 2 * n + 1 {
            return Err(Error::RankMismatch { expected: 2 * n + 1, got: p.len() });
        }
        let x = Taylor::vars(p, 2);
        let u = jl_extremal_taylor(params, &x);
        let lap = sublaplacian_taylor(n, &x, &u).value().re;
        vals.push(bn * lap / u.value().re.powf(1.0 + 2.0 / n as f64));
    }
    let m = vals.len() as f64;
    let mean = crate::quadrature::compensated_sum(vals.iter().cloned()) / m;
    let var = crate::quadrature::compensated_sum(vals.iter().map(|v| (v - mean) * (v - mean))) / m;
    Ok(RatioStats { mean, stdev: var.sqrt(), count: vals.len() })
}

/// Flat volume form `θ̊ ∧ (dθ̊)^n` (constant `4^n n! dx_1∧dy_1∧…∧dt`).
pub fn flat_volume_form(n: usize, x: &[Taylor]) -> Form<Taylor> {
    let th = flat_theta(n, x);
    let dth = th.d();
    th.wedge(&dth.power(n, Taylor::real(x[0].space(), 1.0)))
}

/// `θ̊ ∧ (dθ̊)^n` evaluated once (its coefficients are constant).
pub fn flat_volume_constant(n: usize) -> Form<C64> {
    flat_volume_form(n, &Taylor::vars(&vec![0.0; 2 * n + 1], 1)).value()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GreenReport {
    pub n: usize,
    pub radii: Vec<f64>,
    pub flux: Vec<f64>,
    pub a_n: Vec<f64>,
    pub a_mean: f64,
    pub spread: f64,
}

/// Flux `∮_{S_Λ} (Σ_a (e̊_a ρ^{-2n}) e̊_a) ⌟ θ̊∧(dθ̊)^n` through the outward sphere.
pub fn green_flux(spec: &QuadratureSpec) -> Result<f64> {
    let n = spec.n;
    let vol = flat_volume_constant(n);
    let v = surface_integral_with(spec, |p| {
        if rho_of(p) == 0.0 {
            return Err(Error::Domain { field: "rho^-2n".into(), point: p.to_vec() });
        }
        let x = Taylor::vars(p, 1);
        let f = rho_pow(n, &x, -2.0 * n as f64);
        let mut grad = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for a in 1..=2 * n {
            let e = frame_components(n, FrameIndex::E(a), &x)?;
            let ef = f.directional(&e).value();
            for k in 0..2 * n + 1 {
                grad[k] += ef * e[k].value();
            }
        }
        Ok(vol.interior(&grad))
    })?;
    Ok(v.re)
}

/// `a_n` from `∫_{B_Λ} Δ̊_b ρ^{-2n} dV = 32π/(a_n b_n)` and
/// `∫_{B_Λ} Δ̊_b f dV = −(1/2) × flux`.
pub fn green_constant(n: usize, radii: &[f64]) -> Result<GreenReport> {
    if radii.is_empty() {
        return Err(Error::Empty("radii".into()));
    }
    let mut flux = Vec::new();
    let mut a = Vec::new();
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::NonPositive { what: "radius".into(), value: r });
        }
        let f = green_flux(&QuadratureSpec::sphere(n, r))?;
        flux.push(f);
        a.push(-64.0 * PI / (b_n(n) * f));
    }
    let a_mean = a.iter().sum::<f64>() / a.len() as f64;
    let spread = a.iter().map(|v| (v - a_mean).abs()).fold(0.0, f64::max) / a_mean.abs();
    if spread > 1e-6 {
        return Err(Error::Quadrature(format!("a_n varies across radii by {:.3e}", spread)));
    }
    Ok(GreenReport { n, radii: radii.to_vec(), flux, a_n: a, a_mean, spread })
}
