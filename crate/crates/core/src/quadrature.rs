//! Product quadrature rules on Heisenberg spheres and shells, plus
//! compensated summation in a fixed order.
//!
//! The sphere `S_Λ = {|z|⁴ + t² = Λ⁴}` is parametrized by
//! `t = Λ² sin s`, `|z| = Λ (cos s)^{1/2}`, `z = |z| φ` with `φ` on the unit
//! sphere of `Cⁿ`. The substitution in `t` removes the square-root endpoint
//! behaviour of `(Λ⁴ − t²)^{1/4}` so Gauss–Legendre converges spectrally.
//! The unit sphere of `Cⁿ` uses
//! `φ_k = (∏_{j<k} sin χ_j) cos χ_k e^{iα_k}` (`χ_j ∈ [0, π/2]`, `φ_n` without the
//! cosine), Gauss–Legendre in each `χ_j` and the trapezoid rule in each `α_k`.

use crate::error::{Error, Result};
use crate::taylor::Taylor;
use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static [(f64, f64)]>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = cache.lock().expect("rule cache poisoned");
    g.entry(m).or_insert_with(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(m.max(1)).unwrap());
        let mut v: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Box::leak(v.into_boxed_slice())
    })
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gl_interval(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    gauss_legendre(m).iter().map(|&(x, w)| (c + h * x, h * w)).collect()
}

/// Composite Gauss–Legendre rule over consecutive panels given by `breaks`.
pub fn gl_composite(m: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    breaks.windows(2).flat_map(|w| gl_interval(m, w[0], w[1])).collect()
}

/// Neumaier-compensated sum of reals in the given order.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSumC {
    re: KahanSum,
    im: KahanSum,
}

impl KahanSumC {
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::default();
    for x in it {
        s.add(x);
    }
    s.value()
}

pub fn compensated_sum_c<I: IntoIterator<Item = C64>>(it: I) -> C64 {
    let mut s = KahanSumC::default();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Parametrized Heisenberg sphere with a tensor product rule.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct QuadratureSpec {
    pub n: usize,
    pub radius: f64,
    pub t_nodes: usize,
    pub chi_nodes: usize,
    pub alpha_nodes: usize,
}

/// One quadrature node: chart point, parameter tangents, parameter weight.
#[derive(Clone, Debug)]
pub struct SurfaceNode {
    pub point: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
    pub weight: f64,
}

impl QuadratureSpec {
    /// Default resolution for the sphere `S_Λ`.
    pub fn sphere(n: usize, radius: f64) -> QuadratureSpec {
        let (t, chi, alpha) = match n {
            1 => (64, 1, 8),
            2 => (64, 8, 4),
            _ => (48, 6, 4),
        };
        QuadratureSpec { n, radius, t_nodes: t, chi_nodes: chi, alpha_nodes: alpha }
    }

    /// Every direction refined by a factor of two.
    pub fn refined(&self) -> QuadratureSpec {
        QuadratureSpec {
            t_nodes: self.t_nodes * 2,
            chi_nodes: if self.n > 1 { self.chi_nodes * 2 } else { 1 },
            alpha_nodes: self.alpha_nodes * 2,
            ..self.clone()
        }
    }

    pub fn with_radius(&self, radius: f64) -> QuadratureSpec {
        QuadratureSpec { radius, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.radius > 0.0) || self.t_nodes == 0 || self.alpha_nodes == 0 {
            return Err(Error::InvalidArgument(format!("bad quadrature spec {:?}", self)));
        }
        Ok(())
    }

    /// Parameter-space product rule: `(parameters, weight)` in fixed order
    /// `(s, χ_1..χ_{n−1}, α_1..α_n)`.
    pub fn parameter_rule(&self) -> Vec<(Vec<f64>, f64)> {
        let n = self.n;
        let s_rule = gl_interval(self.t_nodes, -FRAC_PI_2, FRAC_PI_2);
        let chi_rule = gl_interval(self.chi_nodes, 0.0, FRAC_PI_2);
        let na = self.alpha_nodes;
        let alpha_rule: Vec<(f64, f64)> = (0..na)
            .map(|k| (2.0 * PI * k as f64 / na as f64, 2.0 * PI / na as f64))
            .collect();
        let mut out = vec![(Vec::new(), 1.0)];
        let mut extend = |rule: &[(f64, f64)]| {
            let mut next = Vec::with_capacity(out.len() * rule.len());
            for (p, w) in &out {
                for &(x, wx) in rule {
                    let mut q = p.clone();
                    q.push(x);
                    next.push((q, w * wx));
                }
            }
            out = next;
        };
        extend(&s_rule);
        for _ in 1..n {
            extend(&chi_rule);
        }
        for _ in 0..n {
            extend(&alpha_rule);
        }
        out
    }

    /// Chart point of the sphere of radius `Λ` as Taylor polynomials in the
    /// `2n` surface parameters (order 1 gives the tangents).
    pub fn embed(n: usize, radius: f64, params: &[Taylor]) -> Vec<Taylor> {
        let s = &params[0];
        let t = s.sin() * (radius * radius);
        let r = s.cos().sqrt() * radius;
        let (z_re, z_im) = unit_sphere_point(n, &params[1..], &r);
        let mut out = z_re;
        out.extend(z_im);
        out.push(t);
        out
    }

    pub fn nodes(&self) -> Vec<SurfaceNode> {
        let n = self.n;
        self.parameter_rule()
            .into_iter()
            .map(|(p, w)| {
                let vars = Taylor::vars(&p, 1);
                let x = QuadratureSpec::embed(n, self.radius, &vars);
                let point: Vec<f64> = x.iter().map(|c| c.value().re).collect();
                let tangents: Vec<Vec<f64>> =
                    (0..2 * n).map(|j| x.iter().map(|c| c.d1(j).re).collect()).collect();
                SurfaceNode { point, tangents, weight: w }
            })
            .collect()
    }
}

/// `r φ(χ, α)` split into real and imaginary parts of each `z^k`.
fn unit_sphere_point(n: usize, angles: &[Taylor], r: &Taylor) -> (Vec<Taylor>, Vec<Taylor>) {
    let chis = &angles[..n - 1];
    let alphas = &angles[n - 1..];
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    let mut prefix = r.clone();
    for k in 0..n {
        let amp = if k + 1 < n { &prefix * &chis[k].cos() } else { prefix.clone() };
        re.push(&amp * &alphas[k].cos());
        im.push(&amp * &alphas[k].sin());
        if k + 1 < n {
            prefix = &prefix * &chis[k].sin();
        }
    }
    (re, im)
}

/// Heisenberg shell `ρ ∈ [ρ_0, ρ_1]` as a `(2n+1)`-parameter volume rule:
/// composite Gauss–Legendre in `ρ` times the sphere rule.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ShellSpec {
    pub sphere: QuadratureSpec,
    pub radial_breaks: Vec<f64>,
    pub radial_nodes: usize,
}

impl ShellSpec {
    /// Ball `ρ ≤ L` with geometric panels `[0, 1], [1, 2], [2, 4], …, [.., L]`.
    pub fn ball(n: usize, l: f64) -> ShellSpec {
        let mut breaks = vec![0.0];
        let mut b = 1.0_f64.min(l);
        while b < l {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.push(l);
        let mut sphere = QuadratureSpec::sphere(n, 1.0);
        sphere.t_nodes = 32;
        if n == 1 {
            sphere.alpha_nodes = 4;
        } else {
            sphere.chi_nodes = 6;
            sphere.alpha_nodes = 2;
        }
        ShellSpec { sphere, radial_breaks: breaks, radial_nodes: 16 }
    }

    /// Nodes carrying the chart point, the `2n+1` parameter tangents
    /// `(∂_ρ, ∂_s, ∂_χ, ∂_α)` and the parameter weight.
    pub fn nodes(&self) -> Vec<SurfaceNode> {
        let n = self.sphere.n;
        let radial = gl_composite(self.radial_nodes, &self.radial_breaks);
        let ang = self.sphere.parameter_rule();
        let mut out = Vec::with_capacity(radial.len() * ang.len());
        for &(rho, wr) in &radial {
            for (p, w) in &ang {
                let mut all = vec![rho];
                all.extend_from_slice(p);
                let vars = Taylor::vars(&all, 1);
                let x = embed_shell(n, &vars);
                let point: Vec<f64> = x.iter().map(|c| c.value().re).collect();
                let tangents: Vec<Vec<f64>> =
                    (0..2 * n + 1).map(|j| x.iter().map(|c| c.d1(j).re).collect()).collect();
                out.push(SurfaceNode { point, tangents, weight: wr * w });
            }
        }
        out
    }
}

fn embed_shell(n: usize, params: &[Taylor]) -> Vec<Taylor> {
    let rho = &params[0];
    let s = &params[1];
    let t = &s.sin() * &(rho * rho);
    let r = &s.cos().sqrt() * rho;
    let (z_re, z_im) = unit_sphere_point(n, &params[2..], &r);
    let mut out = z_re;
    out.extend(z_im);
    out.push(t);
    out
}

/// Polynomial extrapolation to `h = 0` through `(h_i, y_i)` (Neville).
pub fn richardson(h: &[f64], y: &[f64]) -> Result<f64> {
    if h.len() != y.len() || h.len() < 2 {
        return Err(Error::InvalidArgument("extrapolation needs at least two samples".into()));
    }
    let mut p = y.to_vec();
    let k = h.len();
    for level in 1..k {
        for i in 0..k - level {
            let j = i + level;
            p[i] = (h[j] * p[i] - h[i] * p[i + 1]) / (h[j] - h[i]);
        }
    }
    Ok(p[0])
}

/// Decay exponent of `m(Λ) − m_∞` from the last three radii (any spacing).
pub fn fitted_exponent(lambdas: &[f64], values: &[f64]) -> Option<f64> {
    let k = lambdas.len();
    if k < 3 {
        return None;
    }
    let (l1, l2, l3) = (lambdas[k - 3], lambdas[k - 2], lambdas[k - 1]);
    let (m1, m2, m3) = (values[k - 3], values[k - 2], values[k - 1]);
    let r = (m1 - m2) / (m2 - m3);
    if !(r > 0.0) || !r.is_finite() {
        return None;
    }
    // (l1^-p − l2^-p)/(l2^-p − l3^-p) = r, solved by bisection in p
    let f = |p: f64| (l1.powf(-p) - l2.powf(-p)) / (l2.powf(-p) - l3.powf(-p)) - r;
    let (mut lo, mut hi) = (1e-3, 20.0);
    if f(lo).signum() == f(hi).signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == f(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Richardson extrapolation in `1/Λ`: with a fitted decay order `p` the last two
/// radii are combined in `Λ^{-p}`, otherwise a polynomial in `1/Λ` through all radii.
pub fn extrapolate(lambdas: &[f64], values: &[f64], order: Option<f64>) -> Result<f64> {
    let k = lambdas.len();
    match (k, order) {
        (0, _) => Err(Error::Empty("lambdas".into())),
        (1, _) => Ok(values[0]),
        (_, Some(p)) => {
            let (l1, l2) = (lambdas[k - 2], lambdas[k - 1]);
            let (m1, m2) = (values[k - 2], values[k - 1]);
            Ok(m2 - (m1 - m2) / ((l2 / l1).powf(p) - 1.0))
        }
        (_, None) => {
            let h: Vec<f64> = lambdas.iter().map(|l| 1.0 / l).collect();
            richardson(&h, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let r = gl_interval(5, 0.0, 2.0);
        let s: f64 = r.iter().map(|&(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-10);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn sphere_nodes_lie_on_sphere() {
        for n in 1..=3 {
            let spec = QuadratureSpec { n, radius: 2.5, t_nodes: 6, chi_nodes: 3, alpha_nodes: 3 };
            for node in spec.nodes() {
                let z2: f64 = (0..n).map(|k| node.point[k].powi(2) + node.point[n + k].powi(2)).sum();
                let rho4 = z2 * z2 + node.point[2 * n].powi(2);
                assert!((rho4 - 2.5f64.powi(4)).abs() < 1e-10);
                // tangent vectors are tangent to the level set of ρ⁴
                for tv in &node.tangents {
                    let mut d = 2.0 * node.point[2 * n] * tv[2 * n];
                    for k in 0..n {
                        d += 4.0 * z2 * (node.point[k] * tv[k] + node.point[n + k] * tv[n + k]);
                    }
                    assert!(d.abs() < 1e-9);
                }
            }
        }
    }
}
