//! CR Yamabe quotient, the capped-extremal test functions and the energy
//! expansion scan.
//!
//! The scan works in the non-isotropic rescaling `ẑ = z/β`, `t̂ = t/β²`, where
//! the extremal becomes `û = σ^{-n}` with `σ² = t̂² + (|ẑ|² + 1)²` and every
//! quantity of the scan is invariant. Functions of `(w, t̂)` with `w = |ẑ|²`
//! are integrated in polar coordinates `w = q sin ψ`, `t̂ = q cos ψ`, where
//! `dV̊ = C_n q^n sin^{n−1}ψ dq dψ` with `C_n = 4^n n πⁿ` and the horizontal
//! inner product of two such functions is `w (∂_w f ∂_w g + ∂_t f ∂_t g)`.

use crate::error::{Error, Result};
use crate::fieldcalc::{standard_orientation, volume_integral, Arity, FieldExpr};
use crate::forms::Form;
use crate::heisenberg::{b_n, frame_components, green_constant, FrameIndex};
use crate::pseudohermitian::{real_frame_coefficients, CoframeModel, ModelKind};
use crate::quadrature::{compensated_sum, gl_composite, gl_interval, ShellSpec};
use crate::taylor::Taylor;
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

/// Level set `{u_β = β^{-n}(1+ε)^{-1}}` with `ε = Rβ^{-2}`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LevelSetSpec {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub epsilon: f64,
}

impl LevelSetSpec {
    pub fn new(n: usize, beta: f64, r: f64) -> Result<LevelSetSpec> {
        if n == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if !(beta > 0.0) {
            return Err(Error::NonPositive { what: "beta".into(), value: beta });
        }
        if !(r > 0.0) {
            return Err(Error::NonPositive { what: "R".into(), value: r });
        }
        Ok(LevelSetSpec { n, beta, r, epsilon: r / (beta * beta) })
    }

    /// `(1+ε)^{2/n} − 1`.
    pub fn delta(&self) -> f64 {
        ((2.0 / self.n as f64) * self.epsilon.ln_1p()).exp_m1()
    }

    /// Value of the test function outside `U_β(∞)`.
    pub fn cap(&self) -> f64 {
        self.beta.powi(-(self.n as i32)) / (1.0 + self.epsilon)
    }

    /// `f_β = (t/β²)² + 2|z/β|² + |z/β|⁴`.
    pub fn f_beta(&self, p: &[f64]) -> f64 {
        let n = self.n;
        let b2 = self.beta * self.beta;
        let w: f64 = (0..n).map(|k| p[k] * p[k] + p[n + k] * p[n + k]).sum::<f64>() / b2;
        let t = p[2 * n] / b2;
        t * t + 2.0 * w + w * w
    }

    /// Point of the level set over the direction `ψ` of the `(|ẑ|², t̂)` half-plane.
    pub fn boundary_point(&self, psi: f64) -> Vec<f64> {
        let n = self.n;
        let q = q_min(psi, self.delta());
        let mut p = vec![0.0; 2 * n + 1];
        p[0] = self.beta * (q * psi.sin()).max(0.0).sqrt();
        p[2 * n] = self.beta * self.beta * q * psi.cos();
        p
    }
}

/// True iff `p` lies on the `U_β(∞)` side of the level set.
pub fn level_set_contains(spec: &LevelSetSpec, p: &[f64]) -> bool {
    spec.f_beta(p) > spec.delta()
}

/// `(γ_1, γ_2)` with `β^{-2}Rγ_1 ≤ (1+ε)^{2/n} − 1 ≤ β^{-2}Rγ_2` for `β ≥ √R`.
pub fn gammas(n: usize) -> (f64, f64) {
    match n {
        // 2ε + ε² = β^{-2}R(2 + ε) with ε ≤ 1
        1 => (2.0, 3.0),
        2 => (1.0, 1.0),
        _ => {
            let nf = n as f64;
            ((nf + 2.0) / (nf * nf), 2.0 / nf)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BinomialBounds {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl BinomialBounds {
    pub fn holds(&self) -> bool {
        let slack = 1e-14 * self.value.abs();
        self.lower <= self.value + slack && self.value <= self.upper + slack
    }
}

pub fn binomial_bounds(n: usize, beta: f64, r: f64) -> Result<BinomialBounds> {
    let spec = LevelSetSpec::new(n, beta, r)?;
    if beta < r.sqrt() {
        return Err(Error::InvalidArgument(format!("binomial bounds need beta ≥ √R, got beta = {}, R = {}", beta, r)));
    }
    let (g1, g2) = gammas(n);
    let scale = r / (beta * beta);
    Ok(BinomialBounds { lower: scale * g1, value: spec.delta(), upper: scale * g2, gamma1: g1, gamma2: g2 })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ContainmentReport {
    pub n: usize,
    pub beta: f64,
    pub samples: usize,
    pub inside: usize,
    /// `|z|² > Rγ_2/2` but outside `U_β(∞)`.
    pub outer_violations: usize,
    /// Inside `U_β(∞)` with `ρ² ≤ −β² + √(β⁴ + Rγ_1β²)`.
    pub inner_violations: usize,
    /// Inside `U_β(∞)` with `ρ² < Rγ_1/2` (the `β → ∞` form of the bound).
    pub asymptotic_inner_violations: usize,
}

impl ContainmentReport {
    pub fn violations(&self) -> usize {
        self.outer_violations + self.inner_violations
    }
}

/// Seeded check of both inclusions on points drawn around the level set.
pub fn containment_check<R: Rng>(spec: &LevelSetSpec, samples: usize, rng: &mut R) -> ContainmentReport {
    let n = spec.n;
    let (g1, g2) = gammas(n);
    let b2 = spec.beta * spec.beta;
    let exact_inner = -b2 + (b2 * b2 + spec.r * g1 * b2).sqrt();
    let zmax = (2.0 * spec.r * g2).sqrt();
    let tmax = 2.0 * spec.beta * (spec.r * g2).sqrt();
    let mut rep = ContainmentReport {
        n,
        beta: spec.beta,
        samples,
        inside: 0,
        outer_violations: 0,
        inner_violations: 0,
        asymptotic_inner_violations: 0,
    };
    for _ in 0..samples {
        let mut p = vec![0.0; 2 * n + 1];
        for c in p.iter_mut().take(2 * n) {
            *c = rng.gen_range(-zmax..zmax);
        }
        p[2 * n] = rng.gen_range(-tmax..tmax);
        let z2: f64 = p[..2 * n].iter().map(|c| c * c).sum();
        let rho2 = (z2 * z2 + p[2 * n] * p[2 * n]).sqrt();
        let inside = level_set_contains(spec, &p);
        if inside {
            rep.inside += 1;
            if rho2 <= exact_inner {
                rep.inner_violations += 1;
            }
            if rho2 < 0.5 * spec.r * g1 {
                rep.asymptotic_inner_violations += 1;
            }
        } else if z2 > 0.5 * spec.r * g2 {
            rep.outer_violations += 1;
        }
    }
    rep
}

/// Test function value with its real horizontal derivatives `e̊_a φ`, `a = 1..2n`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TestFunctionValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub inside: bool,
}

impl TestFunctionValue {
    /// `|∇_b φ|² = ½ Σ_a (e̊_a φ)²`.
    pub fn gradient_norm_sqr(&self) -> f64 {
        0.5 * self.gradient.iter().map(|g| g * g).sum::<f64>()
    }
}

fn extremal_jet(spec: &LevelSetSpec, x: &[Taylor]) -> Taylor {
    let n = spec.n;
    let b2 = spec.beta * spec.beta;
    let w = crate::heisenberg::z_norm_sqr(n, x).add_const(C64::new(b2, 0.0));
    let t = &x[2 * n];
    (&(t * t) + &(&w * &w)).powf(-(n as f64) / 2.0) * spec.beta.powi(n as i32)
}

/// `φ_β`: the extremal on `U_β(∞)`, the cap value elsewhere.
pub fn test_function(spec: &LevelSetSpec, p: &[f64]) -> Result<TestFunctionValue> {
    let n = spec.n;
    if p.len() != 2 * n + 1 {
        return Err(Error::RankMismatch { expected: 2 * n + 1, got: p.len() });
    }
    if !level_set_contains(spec, p) {
        return Ok(TestFunctionValue { value: spec.cap(), gradient: vec![0.0; 2 * n], inside: false });
    }
    let x = Taylor::vars(p, 1);
    let u = extremal_jet(spec, &x);
    let mut gradient = Vec::with_capacity(2 * n);
    for a in 1..=2 * n {
        let e = frame_components(n, FrameIndex::E(a), &x)?;
        gradient.push(u.directional(&e).value().re);
    }
    Ok(TestFunctionValue { value: u.value().re, gradient, inside: true })
}

/// Inside branch `u_β` evaluated regardless of the level set.
pub fn extremal_branch(spec: &LevelSetSpec, p: &[f64]) -> f64 {
    extremal_jet(spec, &Taylor::vars(p, 0)).value().re
}

/// `φ_β` as a scalar field (the branch is chosen at the expansion point).
pub fn test_function_field(spec: LevelSetSpec) -> FieldExpr {
    let n = spec.n;
    FieldExpr::everywhere(&format!("phi_beta(beta={})", spec.beta), Arity::Scalar, 2 * n + 1, move |x| {
        let p: Vec<f64> = x.iter().map(|c| c.value().re).collect();
        if level_set_contains(&spec, &p) {
            vec![extremal_jet(&spec, x)]
        } else {
            vec![Taylor::real(x[0].space(), spec.cap())]
        }
    })
}

fn top_coefficient(n: usize, th: &Form<C64>, dth: &Form<C64>) -> Result<f64> {
    let vol = th.wedge(&dth.power(n, C64::new(1.0, 0.0)));
    let dim = 2 * n + 1;
    let basis: Vec<Vec<C64>> =
        (0..dim).map(|i| (0..dim).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
    let flat = standard_orientation(n).eval(&basis)?.re;
    Ok(vol.eval(&basis)?.re / flat)
}

/// `(∫ b_n|∇_b v|² + W v² dV) / (∫ v^{2+2/n} dV)^{n/(n+1)}` with `dV = θ ∧ (dθ)^n`
/// of the model, evaluated on a shell rule.
pub fn energy_quotient(v: &FieldExpr, model: &CoframeModel, region: &ShellSpec) -> Result<f64> {
    let n = model.n;
    if v.arity != Arity::Scalar || v.dim != 2 * n + 1 {
        return Err(Error::InvalidArgument(format!("{} is not a scalar field on H_{}", v.name, n)));
    }
    if region.sphere.n != n {
        return Err(Error::RankMismatch { expected: n, got: region.sphere.n });
    }
    let bn = b_n(n);
    let s = bn;
    let flat = matches!(model.kind, ModelKind::Flat);
    let efr = real_frame_coefficients(n);
    let density = |p: &[f64]| -> Result<(f64, f64)> {
        let x = Taylor::vars(p, 1);
        let vt = &v.apply(&x)[0];
        let val = vt.value().re;
        if val <= 0.0 {
            return Err(Error::NonPositive { what: v.name.clone(), value: val });
        }
        if flat {
            let mut g2 = 0.0;
            for a in 1..=2 * n {
                let e = frame_components(n, FrameIndex::E(a), &x)?;
                g2 += vt.directional(&e).value().re.powi(2);
            }
            return Ok((bn * 0.5 * g2, val.powf(s)));
        }
        let g = model.geometry(p, 2)?;
        let curv = g.curvature_data()?;
        let grad: Vec<C64> = (0..2 * n + 1).map(|k| vt.d1(k)).collect();
        let mut g2 = 0.0;
        for e in efr.iter().take(2 * n) {
            let coords = g.to_coordinates(e);
            let ev: C64 = coords.iter().zip(&grad).map(|(a, b)| a * b).sum();
            g2 += ev.re * ev.re;
        }
        let th = Form::one_form(g.coframe[0].clone());
        let jac = top_coefficient(n, &th.value(), &th.d().value())?;
        Ok(((bn * 0.5 * g2 + curv.w * val * val) * jac, val.powf(s) * jac))
    };
    let num = volume_integral(region, |p| density(p).map(|d| d.0))?;
    let den = volume_integral(region, |p| density(p).map(|d| d.1))?;
    if !(den > 0.0) {
        return Err(Error::Quadrature("vanishing denominator".into()));
    }
    Ok(num / den.powf(2.0 / s))
}

/// `q` at which the direction `ψ` meets the level set `σ² = 1 + δ`.
pub fn q_min(psi: f64, delta: f64) -> f64 {
    let s = psi.sin();
    delta / ((s * s + delta).sqrt() + s)
}

fn c_n(n: usize) -> f64 {
    4f64.powi(n as i32) * n as f64 * PI.powi(n as i32)
}

/// Weighted nodes `(q, ψ, weight)` on `[0, π/2]` (the other half follows from `t ↦ −t`).
struct PolarRule {
    region: Vec<(f64, f64, f64)>,
    complement: Vec<(f64, f64, f64)>,
}

const PANEL_NODES: usize = 12;

fn psi_breaks(delta: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = delta.sqrt() / 8.0;
    while x < FRAC_PI_2 / 1.5 {
        b.push(x);
        x *= 2.0;
    }
    b.push(FRAC_PI_2);
    b
}

fn polar_rule(n: usize, delta: f64, tail_start: f64) -> PolarRule {
    let cn = 2.0 * c_n(n);
    let ni = n as i32;
    let mut region = Vec::new();
    let mut complement = Vec::new();
    // q ∈ [1/v_0, ∞) through q = 1/v, dq = dv/v²
    let tail = gl_interval(2 * PANEL_NODES, 0.0, 1.0 / tail_start);
    for (psi, wpsi) in gl_composite(PANEL_NODES, &psi_breaks(delta)) {
        let ang = wpsi * psi.sin().powi(ni - 1) * cn;
        let q0 = q_min(psi, delta);
        let mut breaks = vec![q0];
        let mut q = q0;
        while q * 4.0 < tail_start {
            q *= 4.0;
            breaks.push(q);
        }
        breaks.push(tail_start.max(q0 * 2.0));
        let last = *breaks.last().expect("nonempty");
        for (q, wq) in gl_composite(PANEL_NODES, &breaks) {
            region.push((q, psi, ang * wq * q.powi(ni)));
        }
        for &(v, wv) in &tail {
            if v * last < 1.0 {
                let q = 1.0 / v;
                region.push((q, psi, ang * wv * q.powi(ni + 2)));
            }
        }
        for (q, wq) in gl_interval(PANEL_NODES, 0.0, q0) {
            complement.push((q, psi, ang * wq * q.powi(ni)));
        }
    }
    PolarRule { region, complement }
}

/// Sum of `f` over nodes with compensated accumulation.
fn reduce<F: Fn(f64, f64) -> f64 + Sync>(nodes: &[(f64, f64, f64)], f: F) -> f64 {
    compensated_sum(nodes.iter().map(|&(q, psi, w)| w * f(q, psi)))
}

/// Integrals of one scan radius in the rescaled chart.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnergyTerms {
    pub beta: f64,
    /// `κ' = (a_n/2π) A_p β^{-2n}`.
    pub kappa: f64,
    pub e: f64,
    pub norm_s: f64,
    pub y_num: f64,
    pub k_n: f64,
    pub bulk: f64,
    pub crucial: f64,
    pub boundary: f64,
    pub decomposition_residual: f64,
    pub d: f64,
    pub holder_margin: f64,
    /// Beyond `q = ρ̂²` of this value the integrals run to infinity through `q ↦ 1/q`.
    pub tail_start_q: f64,
    /// The same radius in the original chart, `β √q`.
    pub tail_start_rho: f64,
}

/// Start of the mapped tail panel in `q = ρ̂²`.
pub const TAIL_START: f64 = 64.0;

/// All terms of the energy expansion at one `β`.
pub fn energy_terms(n: usize, a_n: f64, a_p: f64, beta: f64, r: f64, tail_start: f64) -> Result<EnergyTerms> {
    let spec = LevelSetSpec::new(n, beta, r)?;
    let nf = n as f64;
    let ni = n as i32;
    let s = b_n(n);
    let bn = s;
    let delta = spec.delta();
    let kappa = a_n / (2.0 * PI) * a_p * beta.powi(-2 * ni);
    let c = 1.0 / (1.0 + spec.epsilon);
    let rule = polar_rule(n, delta, tail_start);

    let sigma2 = |q: f64, psi: f64| q * q + 2.0 * q * psi.sin() + 1.0;
    let u = |q: f64, psi: f64| sigma2(q, psi).powf(-nf / 2.0);
    let us = |q: f64, psi: f64| sigma2(q, psi).powf(-nf - 1.0);
    let g2 = |q: f64, psi: f64| nf * nf * q * psi.sin() * sigma2(q, psi).powf(-nf - 1.0);
    let hm1 = |q: f64| kappa * q.powi(-ni);
    let cross = |q: f64, psi: f64| {
        let w = q * psi.sin();
        nf * nf * w * sigma2(q, psi).powf(-nf / 2.0 - 1.0) * (q * q + w) * q.powi(-ni - 2)
    };

    let reg = &rule.region;
    let e0 = reduce(reg, |q, p| bn * g2(q, p));
    let e1 = reduce(reg, |q, p| bn * g2(q, p) * q.powi(-ni));
    let e2 = reduce(reg, |q, p| bn * g2(q, p) * q.powi(-2 * ni));
    let s_u = reduce(reg, us);
    let x_u = reduce(reg, |q, p| us(q, p) * (s * hm1(q).ln_1p()).exp_m1());
    let h2m1 = |q: f64| hm1(q) * (2.0 + hm1(q));
    let bulk_excess = reduce(reg, |q, p| us(q, p) * h2m1(q));
    let flux0 = reduce(reg, |q, p| bn * (g2(q, p) - nf * nf * us(q, p)));
    let crucial = reduce(reg, |q, p| bn * u(q, p) * 2.0 * (1.0 + hm1(q)) * kappa * cross(q, p));

    let comp = &rule.complement;
    let e_c = reduce(comp, |q, p| bn * g2(q, p));
    let s_c = reduce(comp, us);
    let v_c = reduce(comp, |_, _| 1.0);

    let e = e0 + kappa * (2.0 * e1 + kappa * e2);
    let e_full = e0 + e_c;
    let k_s = s_u + s_c;
    let x = (x_u + c.powf(s) * v_c - s_c) / k_s;
    let growth = e_full * ((2.0 / s) * x.ln_1p()).exp_m1();
    let d = growth + e_c - kappa * (2.0 * e1 + kappa * e2);
    let bulk = bn * nf * nf * (s_u + bulk_excess);
    let holder_margin = growth + e_c + flux0 - bn * nf * nf * bulk_excess;

    // inner boundary σ = σ_0: w = σ_0 sin φ − 1, t̂ = σ_0 cos φ, φ ∈ [φ_0, π − φ_0]
    let sigma0 = (1.0 + spec.epsilon).powf(1.0 / nf);
    let phi0 = (1.0 / sigma0).asin();
    let arc = gl_composite(2 * PANEL_NODES, &arc_breaks(phi0));
    let boundary = 2.0
        * bn
        * c_n(n)
        * nf
        * c
        * sigma0.powi(-ni)
        * compensated_sum(arc.iter().map(|&(phi, w)| {
            let ww = sigma0 * phi.sin() - 1.0;
            let t = sigma0 * phi.cos();
            let h = 1.0 + hm1((ww * ww + t * t).sqrt());
            w * ww.powi(ni) * h * h
        }));

    let assembled = bulk - crucial + boundary;
    let decomposition_residual = (e - assembled).abs() / e.abs();
    let k_n = k_s.powf(1.0 / s);
    let norm_s = (s_u + x_u + c.powf(s) * v_c).powf(1.0 / s);
    let terms = EnergyTerms {
        beta,
        kappa,
        e,
        norm_s,
        y_num: e_full / (k_n * k_n),
        k_n,
        bulk,
        crucial,
        boundary,
        decomposition_residual,
        d,
        holder_margin,
        tail_start_q: tail_start,
        tail_start_rho: beta * tail_start.sqrt(),
    };
    let all = [e, norm_s, d, bulk, crucial, boundary, holder_margin];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite energy terms at beta = {}", beta)));
    }
    Ok(terms)
}

fn arc_breaks(phi0: f64) -> Vec<f64> {
    let span = FRAC_PI_2 - phi0;
    let mut b = vec![phi0];
    let mut x = span / 64.0;
    while x < span / 2.0 {
        b.push(phi0 + x);
        x *= 2.0;
    }
    b.push(FRAC_PI_2);
    b
}

/// Least-squares fit of `y ≈ c x^{-p}` in log-log coordinates; `(p, c)`.
pub fn power_law_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let sign = y[0].signum();
    if sign == 0.0 || y.iter().any(|v| v.signum() != sign || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let m = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((-slope, sign * (my - slope * mx).exp()))
}

/// Least-squares fit of `y β^{k} ≈ c + c_1/β`, i.e. `y ≈ cβ^{-k} + c_1β^{-k-1}`; `(c, c_1)`.
pub fn leading_order_fit(betas: &[f64], y: &[f64], k: f64) -> Option<(f64, f64)> {
    if betas.len() != y.len() || betas.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = betas.iter().map(|b| 1.0 / b).collect();
    let ys: Vec<f64> = betas.iter().zip(y).map(|(b, v)| v * b.powf(k)).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, v)| (x - mx) * (v - my)).sum();
    let c1 = sxy / sxx;
    Some((my - c1 * mx, c1))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnergyReport {
    pub n: usize,
    #[serde(rename = "A_p")]
    pub a_p: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub a_n: f64,
    pub betas: Vec<f64>,
    pub terms: Vec<EnergyTerms>,
    pub y_num: f64,
    pub k_n: f64,
    /// Free decay exponent of `D(β)` from a log-log fit.
    pub fit_exponent: Option<f64>,
    /// `c` of `D(β) ≈ cβ^{-2n} + c_1β^{-2n-1}`.
    pub fit_coeff: Option<f64>,
    pub fit_subleading: Option<f64>,
    pub crucial_exponent: Option<f64>,
    pub crucial_coeff: Option<f64>,
    pub boundary_exponent: Option<f64>,
}

impl EnergyReport {
    pub fn deficits(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.d).collect()
    }
}

/// Default grid: five geometric radii from `8√R` to `128√R`.
pub fn default_betas(r: f64) -> Vec<f64> {
    (0..5).map(|k| 8.0 * r.sqrt() * 2f64.powi(k)).collect()
}

/// Energy expansion scan with `h = 1 + (a_n/2π)A_pρ^{-2n}`.
pub fn energy_scan(n: usize, a_p: f64, betas: &[f64], r: f64) -> Result<EnergyReport> {
    let a_n = green_constant(n, &[1.0])?.a_mean;
    energy_scan_with(n, a_n, a_p, betas, r, TAIL_START)
}

pub fn energy_scan_with(n: usize, a_n: f64, a_p: f64, betas: &[f64], r: f64, tail_start: f64) -> Result<EnergyReport> {
    if betas.len() < 5 {
        return Err(Error::InvalidArgument(format!("energy scan needs at least 5 betas, got {}", betas.len())));
    }
    if !a_p.is_finite() {
        return Err(Error::InvalidArgument("A_p must be finite".into()));
    }
    let terms: Vec<EnergyTerms> =
        betas.par_iter().map(|&b| energy_terms(n, a_n, a_p, b, r, tail_start)).collect::<Result<_>>()?;
    let d: Vec<f64> = terms.iter().map(|t| t.d).collect();
    let cr: Vec<f64> = terms.iter().map(|t| t.crucial).collect();
    let bd: Vec<f64> = terms.iter().map(|t| t.boundary).collect();
    let fit = power_law_fit(betas, &d);
    let lead = leading_order_fit(betas, &d, 2.0 * n as f64);
    let cfit = power_law_fit(betas, &cr);
    Ok(EnergyReport {
        n,
        a_p,
        r,
        a_n,
        betas: betas.to_vec(),
        y_num: terms[0].y_num,
        k_n: terms[0].k_n,
        terms,
        fit_exponent: fit.map(|f| f.0),
        fit_coeff: lead.map(|f| f.0),
        fit_subleading: lead.map(|f| f.1),
        crucial_exponent: cfit.map(|f| f.0),
        crucial_coeff: cfit.map(|f| f.1),
        boundary_exponent: power_law_fit(betas, &bd).map(|f| f.0),
    })
}
