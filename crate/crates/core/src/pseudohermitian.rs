//! Pointwise pseudohermitian geometry of closed-form coframe models.
//!
//! Frame and coframe indices share one layout: `0 = T`, `1..=n` are `Z_α`,
//! `n+1..=2n` are `Z_ᾱ` (and `θ`, `θ^α`, `θ^ᾱ` for the coframe). All
//! quantities are Taylor polynomials in chart coordinates around the
//! evaluation point, so derivatives of connection coefficients come for free.
//!
//! The connection is read off the commutators
//! `[Z_β̄, Z_α] = iδ_αβ T + θ_α^γ(Z_β̄) Z_γ − θ_β̄^γ̄(Z_α) Z_γ̄`,
//! `[Z_α, T] = A^γ̄_α Z_γ̄ − θ_α^γ(T) Z_γ`, with `θ_α^γ(Z_β)` fixed by the
//! skew-hermitian relation. Every relation not used in the extraction is
//! reported as a residual.

use crate::error::{Error, Result};
use crate::fieldcalc::{bracket_taylor, Arity, FieldExpr};
use crate::forms::Form;
use crate::heisenberg::{b_n, complex_frame_components, flat_theta, flat_theta_alpha, rho_of, rho_pow, sublaplacian};
use crate::quadrature::{extrapolate, fitted_exponent};
use crate::taylor::{self, Taylor};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::SQRT_2;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Largest admissible condition number of the coframe matrix.
pub const MAX_CONDITION: f64 = 1e8;

/// Frame order needed for curvature, Bianchi and second spinor derivatives.
pub const CURVATURE_ORDER: usize = 2;

#[derive(Clone, Debug)]
pub enum ModelKind {
    Flat,
    /// `θ = u^{2/n} θ̊` with the adapted unitary coframe.
    Conformal(FieldExpr),
}

/// Closed-form pseudohermitian structure on a chart of `H_n`.
#[derive(Clone, Debug)]
pub struct CoframeModel {
    pub n: usize,
    pub name: String,
    pub kind: ModelKind,
    /// `A` when the conformal factor is `1 + Aρ^{-2n} + …`.
    pub mass_coefficient: Option<f64>,
}

/// Selector of a frame vector: `T`, `Z_α`, `Z_ᾱ` (zero-based `α`) or the
/// real horizontal vector `e_a` (`1 ≤ a ≤ 2n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameSel {
    T,
    Z(usize),
    Zbar(usize),
    E(usize),
}

impl FrameSel {
    /// Components in the `(T, Z_α, Z_ᾱ)` basis.
    pub fn coefficients(self, n: usize) -> Result<Vec<C64>> {
        let mut v = vec![ZERO; 2 * n + 1];
        let check = |a: usize, max: usize| {
            if a >= max {
                Err(Error::IndexOutOfRange { index: a, max: max.saturating_sub(1) })
            } else {
                Ok(())
            }
        };
        match self {
            FrameSel::T => v[0] = ONE,
            FrameSel::Z(a) => {
                check(a, n)?;
                v[1 + a] = ONE;
            }
            FrameSel::Zbar(a) => {
                check(a, n)?;
                v[1 + n + a] = ONE;
            }
            FrameSel::E(a) => {
                if a == 0 || a > 2 * n {
                    return Err(Error::IndexOutOfRange { index: a, max: 2 * n });
                }
                if a <= n {
                    v[a] = ONE;
                    v[n + a] = ONE;
                } else {
                    let b = a - n;
                    v[b] = I;
                    v[n + b] = -I;
                }
            }
        }
        Ok(v)
    }
}

/// Real frame `e_1..e_2n` followed by `T`, in the `(T, Z, Z̄)` basis.
pub fn real_frame_coefficients(n: usize) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> =
        (1..=2 * n).map(|a| FrameSel::E(a).coefficients(n).expect("valid index")).collect();
    out.push(FrameSel::T.coefficients(n).expect("valid index"));
    out
}

/// Real coframe `ω^1..ω^{2n}` followed by `θ`, as covectors on the `(T, Z, Z̄)` basis.
pub fn real_coframe_coefficients(n: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(2 * n + 1);
    for b in 0..n {
        let mut w = vec![ZERO; 2 * n + 1];
        w[1 + b] = C64::new(0.5, 0.0);
        w[1 + n + b] = C64::new(0.5, 0.0);
        out.push(w);
    }
    for b in 0..n {
        let mut w = vec![ZERO; 2 * n + 1];
        w[1 + b] = C64::new(0.0, -0.5);
        w[1 + n + b] = C64::new(0.0, 0.5);
        out.push(w);
    }
    let mut th = vec![ZERO; 2 * n + 1];
    th[0] = ONE;
    out.push(th);
    out
}

fn conj_index(n: usize, a: usize) -> usize {
    if a == 0 {
        0
    } else if a <= n {
        a + n
    } else {
        a - n
    }
}

impl CoframeModel {
    pub fn flat(n: usize) -> Result<CoframeModel> {
        if n == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        Ok(CoframeModel { n, name: format!("flat({})", n), kind: ModelKind::Flat, mass_coefficient: None })
    }

    /// Conformal rescaling of the flat structure by a positive factor `u`.
    /// `u` is probed on a fixed set of chart points inside its domain.
    pub fn conformal(n: usize, u: FieldExpr) -> Result<CoframeModel> {
        if n == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if u.arity != Arity::Scalar || u.dim != 2 * n + 1 {
            return Err(Error::InvalidArgument(format!("{} is not a scalar field on H_{}", u.name, n)));
        }
        for p in probe_points(n) {
            if !u.in_domain(&p) {
                continue;
            }
            let v = u.value(&p)?[0];
            if !(v.re > 0.0) || v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
                return Err(Error::NonPositive { what: format!("{} at {:?}", u.name, p), value: v.re });
            }
        }
        Ok(CoframeModel { n, name: format!("conformal({}, {})", n, u.name), kind: ModelKind::Conformal(u), mass_coefficient: None })
    }

    /// `u = 1 + Aρ^{-2n}` on `ρ > 0`.
    pub fn asymptotic(n: usize, a: f64) -> Result<CoframeModel> {
        CoframeModel::asymptotic_with_tail(n, a, 0.0)
    }

    /// `u = 1 + Aρ^{-2n} + Bρ^{-2n-1}` on `ρ > 0`; the `B` term produces the
    /// generic `Λ^{-1}` approach of boundary integrals.
    pub fn asymptotic_with_tail(n: usize, a: f64, b: f64) -> Result<CoframeModel> {
        let k = 2.0 * n as f64;
        let u = FieldExpr::new(
            &format!("1+{}rho^-{}+{}rho^-{}", a, k, b, k + 1.0),
            Arity::Scalar,
            2 * n + 1,
            move |x| {
                let r4 = crate::heisenberg::rho4(n, x);
                let mut v = (r4.powf(-k / 4.0) * a).add_const(ONE);
                if b != 0.0 {
                    v += r4.powf(-(k + 1.0) / 4.0) * b;
                }
                vec![v]
            },
            move |p| rho_of(p) > 0.0,
        );
        let mut m = CoframeModel::conformal(n, u)?;
        m.mass_coefficient = Some(a);
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn in_domain(&self, p: &[f64]) -> bool {
        match &self.kind {
            ModelKind::Flat => true,
            ModelKind::Conformal(u) => u.in_domain(p),
        }
    }

    pub fn conformal_factor(&self) -> Option<&FieldExpr> {
        match &self.kind {
            ModelKind::Flat => None,
            ModelKind::Conformal(u) => Some(u),
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::RankMismatch { expected: self.dim(), got: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) || !self.in_domain(p) {
            return Err(Error::Domain { field: self.name.clone(), point: p.to_vec() });
        }
        Ok(())
    }

    /// Coframe rows `θ, θ^α, θ^ᾱ` as coordinate covectors, Taylor order `order`.
    pub fn coframe(&self, p: &[f64], order: usize) -> Result<Vec<Vec<Taylor>>> {
        self.check_point(p)?;
        let n = self.n;
        let dim = self.dim();
        let x = Taylor::vars(p, order + 1);
        let u = match &self.kind {
            ModelKind::Flat => Taylor::real(taylor::space(dim, order + 1), 1.0),
            ModelKind::Conformal(f) => {
                let t = f.taylor(p, order + 1)?.remove(0);
                let v = t.value();
                if !(v.re > 0.0) {
                    return Err(Error::NonPositive { what: format!("{} at {:?}", f.name, p), value: v.re });
                }
                t
            }
        };
        let ell = u.ln() * (1.0 / n as f64);
        let s2 = u.powf(2.0 / n as f64).truncate(order);
        let s1 = u.powf(1.0 / n as f64).truncate(order);
        let xk: Vec<Taylor> = x.iter().map(|c| c.truncate(order)).collect();
        let th0 = dense(&flat_theta(n, &xk), dim, &xk[0]);
        let mut rows = Vec::with_capacity(dim);
        rows.push(th0.iter().map(|c| c * &s2).collect::<Vec<_>>());
        let mut hol = Vec::with_capacity(n);
        for a in 0..n {
            let zb = complex_frame_components(n, a, true, &x);
            let g = ell.directional(&zb) * (2.0 * I);
            let ta = dense(&flat_theta_alpha(n, a, &xk), dim, &xk[0]);
            let row: Vec<Taylor> = (0..dim).map(|k| &(&ta[k] + &(&g * &th0[k])) * &s1).collect();
            hol.push(row);
        }
        let anti: Vec<Vec<Taylor>> = hol.iter().map(|r| r.iter().map(|c| c.conj()).collect()).collect();
        rows.extend(hol);
        rows.extend(anti);
        Ok(rows)
    }

    /// Geometry at `p` with frame jets of the given order (`≥ 1`).
    pub fn geometry(&self, p: &[f64], order: usize) -> Result<PointGeometry> {
        PointGeometry::build(self, p, order, None)
    }
}

fn dense(f: &Form<Taylor>, dim: usize, like: &Taylor) -> Vec<Taylor> {
    let mut v = vec![Taylor::zero(like.space()); dim];
    for (m, c) in &f.terms {
        v[m.trailing_zeros() as usize] = c.clone();
    }
    v
}

fn probe_points(n: usize) -> Vec<Vec<f64>> {
    let dim = 2 * n + 1;
    let mut out = Vec::new();
    for &r in &[0.5, 1.0, 3.0, 10.0] {
        for k in 0..dim {
            let mut p = vec![0.0; dim];
            p[k] = if k == 2 * n { r * r } else { r };
            out.push(p);
        }
    }
    out
}

/// Inverse of a square Taylor matrix by Gauss–Jordan elimination with
/// partial pivoting on values. `row_order` permutes the elimination order.
pub fn invert_taylor(m: &[Vec<Taylor>], row_order: &[usize]) -> Result<Vec<Vec<Taylor>>> {
    let d = m.len();
    let sp = m[0][0].space();
    let mut a: Vec<Vec<Taylor>> = row_order.iter().map(|&r| m[r].clone()).collect();
    let mut inv: Vec<Vec<Taylor>> = (0..d)
        .map(|r| {
            (0..d).map(|c| if row_order[r] == c { Taylor::real(sp, 1.0) } else { Taylor::zero(sp) }).collect()
        })
        .collect();
    for col in 0..d {
        let piv = (col..d)
            .max_by(|&i, &j| a[i][col].value().norm().partial_cmp(&a[j][col].value().norm()).unwrap())
            .expect("non-empty");
        if a[piv][col].value().norm() == 0.0 {
            return Err(Error::IllConditioned { cond: f64::INFINITY });
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip();
        a[col] = a[col].iter().map(|c| c * &r).collect();
        inv[col] = inv[col].iter().map(|c| c * &r).collect();
        for row in 0..d {
            if row == col || a[row][col].max_abs() == 0.0 {
                continue;
            }
            let f = a[row][col].clone();
            for c in 0..d {
                let s = &f * &a[col][c];
                a[row][c] -= &s;
                let s = &f * &inv[col][c];
                inv[row][c] -= &s;
            }
        }
    }
    Ok(refine_inverse(m, inv))
}

/// One Newton step `X ← X + X(I − MX)`, which squares the relative residual.
fn refine_inverse(m: &[Vec<Taylor>], x: Vec<Vec<Taylor>>) -> Vec<Vec<Taylor>> {
    let d = m.len();
    let mat_mul = |a: &[Vec<Taylor>], b: &[Vec<Taylor>]| -> Vec<Vec<Taylor>> {
        (0..d).map(|i| (0..d).map(|j| taylor::sum((0..d).map(|k| &a[i][k] * &b[k][j])).expect("d ≥ 1")).collect()).collect()
    };
    let mut r = mat_mul(m, &x);
    for (i, row) in r.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = -&*c;
            if i == j {
                *c = c.add_const(C64::new(1.0, 0.0));
            }
        }
    }
    let corr = mat_mul(&x, &r);
    x.into_iter().zip(corr).map(|(xr, cr)| xr.into_iter().zip(cr).map(|(a, b)| &a + &b).collect()).collect()
}

/// Ratio of extreme singular values of a complex matrix.
pub fn condition_number(m: &[Vec<C64>]) -> f64 {
    let d = m.len();
    let mat = DMatrix::from_fn(d, d, |i, j| m[i][j]);
    let s = mat.singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Frame, brackets and connection coefficients around one point.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub n: usize,
    pub point: Vec<f64>,
    pub order: usize,
    /// `coframe[r][k]`: coordinate components of `θ, θ^α, θ^ᾱ`.
    pub coframe: Vec<Vec<Taylor>>,
    /// `frame[a][k]`: coordinate components of `T, Z_α, Z_ᾱ`.
    pub frame: Vec<Vec<Taylor>>,
    /// `bracket[a][b][c] = θ^c([E_a, E_b])`.
    pub bracket: Vec<Vec<Vec<Taylor>>>,
    /// `gamma[a][c][d] = θ_c^d(E_a)`, so `∇_{E_a} E_c = Σ_d gamma[a][c][d] E_d`.
    pub gamma: Vec<Vec<Vec<Taylor>>>,
    pub cond: f64,
}

impl PointGeometry {
    /// `row_order` permutes the coframe rows during inversion (defaults to identity).
    pub fn build(model: &CoframeModel, p: &[f64], order: usize, row_order: Option<&[usize]>) -> Result<PointGeometry> {
        if order == 0 {
            return Err(Error::InvalidArgument("frame jets need order ≥ 1".into()));
        }
        let n = model.n;
        let d = model.dim();
        let coframe = model.coframe(p, order)?;
        let vals: Vec<Vec<C64>> = coframe.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
        let cond = condition_number(&vals);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned { cond });
        }
        let identity: Vec<usize> = (0..d).collect();
        let ord = row_order.unwrap_or(&identity);
        if ord.len() != d {
            return Err(Error::RankMismatch { expected: d, got: ord.len() });
        }
        let inv = invert_taylor(&coframe, ord)?;
        let frame: Vec<Vec<Taylor>> = (0..d).map(|a| (0..d).map(|k| inv[k][a].clone()).collect()).collect();

        let sp = taylor::space(d, order - 1);
        let zero = Taylor::zero(sp);
        let mut bracket = vec![vec![vec![zero.clone(); d]; d]; d];
        for a in 0..d {
            for b in a + 1..d {
                let v = bracket_taylor(&frame[a], &frame[b]);
                for c in 0..d {
                    let comp = taylor::sum((0..d).map(|k| &coframe[c][k] * &v[k])).expect("d ≥ 1");
                    bracket[b][a][c] = -&comp;
                    bracket[a][b][c] = comp;
                }
            }
        }

        let z = |a: usize| 1 + a;
        let zb = |a: usize| 1 + n + a;
        let mut gamma = vec![vec![vec![zero.clone(); d]; d]; d];
        for al in 0..n {
            for ga in 0..n {
                gamma[0][z(al)][z(ga)] = -&bracket[z(al)][0][z(ga)];
                for be in 0..n {
                    gamma[zb(be)][z(al)][z(ga)] = bracket[zb(be)][z(al)][z(ga)].clone();
                    gamma[z(be)][z(al)][z(ga)] = -bracket[zb(be)][z(ga)][z(al)].conj();
                }
            }
        }
        for a in 0..d {
            let ca = conj_index(n, a);
            for al in 0..n {
                for ga in 0..n {
                    gamma[a][zb(al)][zb(ga)] = gamma[ca][z(al)][z(ga)].conj();
                }
            }
        }
        Ok(PointGeometry { n, point: p.to_vec(), order, coframe, frame, bracket, gamma, cond })
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    fn z(&self, a: usize) -> usize {
        1 + a
    }

    fn zb(&self, a: usize) -> usize {
        1 + self.n + a
    }

    /// `A^γ̄_α = θ^γ̄([Z_α, T])`, indexed `[γ][α]`.
    pub fn torsion_coefficients(&self) -> Vec<Vec<C64>> {
        let n = self.n;
        (0..n).map(|g| (0..n).map(|a| self.bracket[self.z(a)][0][self.zb(g)].value()).collect()).collect()
    }

    /// `θ_c^d(X)` for `X` given in the `(T, Z, Z̄)` basis.
    pub fn connection_on(&self, x: &[C64], c: usize, d: usize) -> C64 {
        (0..self.dim()).map(|a| x[a] * self.gamma[a][c][d].value()).sum()
    }

    /// `ω_A^B(X)` with `A, B` over `e_1..e_2n, T` (zero-based).
    pub fn real_omega_on(&self, x: &[C64], a: usize, b: usize) -> C64 {
        let e = real_frame_coefficients(self.n);
        let w = real_coframe_coefficients(self.n);
        self.real_omega_with(&e, &w, x, a, b)
    }

    fn real_omega_with(&self, e: &[Vec<C64>], w: &[Vec<C64>], x: &[C64], a: usize, b: usize) -> C64 {
        let d = self.dim();
        let mut acc = ZERO;
        for c in 0..d {
            if e[a][c] == ZERO {
                continue;
            }
            for dd in 0..d {
                if w[b][dd] == ZERO {
                    continue;
                }
                acc += e[a][c] * self.connection_on(x, c, dd) * w[b][dd];
            }
        }
        acc
    }

    /// Summary of the connection with all structure-equation residuals.
    pub fn connection_data(&self) -> ConnectionData {
        let n = self.n;
        let d = self.dim();
        let v = |t: &Taylor| t.value();
        let mut gamma = vec![vec![vec![ZERO; d]; n]; n];
        for al in 0..n {
            for ga in 0..n {
                for a in 0..d {
                    gamma[al][ga][a] = v(&self.gamma[a][self.z(al)][self.z(ga)]);
                }
            }
        }
        let torsion = self.torsion_coefficients();

        let mut bracket_res: f64 = 0.0;
        for al in 0..n {
            for be in 0..n {
                let b1 = &self.bracket[self.zb(be)][self.z(al)];
                let delta = if al == be { I } else { ZERO };
                bracket_res = bracket_res.max((v(&b1[0]) - delta).norm());
                for ga in 0..n {
                    let other = v(&self.bracket[self.zb(al)][self.z(be)][self.z(ga)]).conj();
                    bracket_res = bracket_res.max((v(&b1[self.zb(ga)]) + other).norm());
                }
                let b2 = &self.bracket[self.z(be)][self.z(al)];
                bracket_res = bracket_res.max(v(&b2[0]).norm());
                for ga in 0..n {
                    bracket_res = bracket_res.max(v(&b2[self.zb(ga)]).norm());
                    let expect = v(&self.gamma[self.z(be)][self.z(al)][self.z(ga)])
                        - v(&self.gamma[self.z(al)][self.z(be)][self.z(ga)]);
                    bracket_res = bracket_res.max((v(&b2[self.z(ga)]) - expect).norm());
                }
            }
            bracket_res = bracket_res.max(v(&self.bracket[self.z(al)][0][0]).norm());
        }

        let mut skew: f64 = 0.0;
        for a in 0..d {
            for al in 0..n {
                for be in 0..n {
                    let s = v(&self.gamma[a][self.z(al)][self.z(be)]) + v(&self.gamma[a][self.zb(be)][self.zb(al)]);
                    skew = skew.max(s.norm());
                }
            }
        }
        let mut sym: f64 = 0.0;
        for g in 0..n {
            for a in 0..n {
                sym = sym.max((torsion[g][a] - torsion[a][g]).norm());
            }
        }

        let e = real_frame_coefficients(n);
        let w = real_coframe_coefficients(n);
        let mut real_omega = vec![vec![vec![0.0; 2 * n + 1]; 2 * n]; 2 * n];
        let mut real_imag: f64 = 0.0;
        for (c, x) in e.iter().enumerate() {
            for a in 0..2 * n {
                for b in 0..2 * n {
                    let val = self.real_omega_with(&e, &w, x, a, b);
                    real_imag = real_imag.max(val.im.abs());
                    real_omega[a][b][c] = val.re;
                }
            }
        }
        ConnectionData {
            n,
            point: self.point.clone(),
            gamma,
            torsion,
            real_omega,
            bracket_residual: bracket_res,
            skew_residual: skew,
            torsion_symmetry_residual: sym,
            real_imaginary_part: real_imag,
            cond: self.cond,
        }
    }

    /// `R(E_a, E_b)E_c = Σ_d curv[a][b][c][d] E_d` at the point (needs `order ≥ 2`).
    pub fn curvature_tensor(&self) -> Result<Vec<Vec<Vec<Vec<C64>>>>> {
        if self.order < 2 {
            return Err(Error::OrderTooHigh(self.order));
        }
        let d = self.dim();
        let fv: Vec<Vec<C64>> = self.frame.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
        let g: Vec<Vec<Vec<C64>>> =
            self.gamma.iter().map(|m| m.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect()).collect();
        let bv: Vec<Vec<Vec<C64>>> =
            self.bracket.iter().map(|m| m.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect()).collect();
        // E_a(gamma[b][c][e])
        let deriv = |a: usize, t: &Taylor| -> C64 { (0..d).map(|k| fv[a][k] * t.d1(k)).sum() };
        let mut r = vec![vec![vec![vec![ZERO; d]; d]; d]; d];
        for a in 0..d {
            for b in 0..d {
                if a == b {
                    continue;
                }
                if b < a {
                    for c in 0..d {
                        for e in 0..d {
                            r[a][b][c][e] = -r[b][a][c][e];
                        }
                    }
                    continue;
                }
                for c in 0..d {
                    for dd in 0..d {
                        let mut s = deriv(a, &self.gamma[b][c][dd]) - deriv(b, &self.gamma[a][c][dd]);
                        for e in 0..d {
                            s += g[b][c][e] * g[a][e][dd] - g[a][c][e] * g[b][e][dd];
                            s -= bv[a][b][e] * g[e][c][dd];
                        }
                        r[a][b][c][dd] = s;
                    }
                }
            }
        }
        Ok(r)
    }

    /// Torsion `Tor(E_a, E_b)` in the frame basis as Taylor coefficients.
    pub fn torsion_frame(&self, a: usize, b: usize) -> Vec<Taylor> {
        (0..self.dim()).map(|dd| &(&self.gamma[a][b][dd] - &self.gamma[b][a][dd]) - &self.bracket[a][b][dd]).collect()
    }

    /// Curvature summary: holomorphic components, Ricci, `W`, real scalar curvature.
    pub fn curvature_data(&self) -> Result<CurvatureData> {
        let n = self.n;
        let r = self.curvature_tensor()?;
        let mut riem = vec![vec![vec![vec![ZERO; n]; n]; n]; n];
        for al in 0..n {
            for be in 0..n {
                for rh in 0..n {
                    for si in 0..n {
                        riem[al][be][rh][si] = r[self.z(rh)][self.zb(si)][self.z(al)][self.z(be)];
                    }
                }
            }
        }
        let ricci: Vec<Vec<C64>> =
            (0..n).map(|rh| (0..n).map(|si| (0..n).map(|g| riem[g][g][rh][si]).sum()).collect()).collect();
        let w: C64 = (0..n).map(|rh| ricci[rh][rh]).sum();
        let mut herm: f64 = 0.0;
        for rh in 0..n {
            for si in 0..n {
                herm = herm.max((ricci[rh][si] - ricci[si][rh].conj()).norm());
            }
        }
        let e = real_frame_coefficients(n);
        let wc = real_coframe_coefficients(n);
        let d = self.dim();
        let mut rr = ZERO;
        for bb in 0..2 * n {
            for aa in 0..2 * n {
                // ω^B(R(e_B, e_A) e_A)
                for a in 0..d {
                    if e[bb][a] == ZERO {
                        continue;
                    }
                    for b in 0..d {
                        if e[aa][b] == ZERO {
                            continue;
                        }
                        for c in 0..d {
                            if e[aa][c] == ZERO {
                                continue;
                            }
                            let coef = e[bb][a] * e[aa][b] * e[aa][c];
                            for dd in 0..d {
                                rr += coef * r[a][b][c][dd] * wc[bb][dd];
                            }
                        }
                    }
                }
            }
        }
        Ok(CurvatureData {
            n,
            point: self.point.clone(),
            riem,
            ricci,
            w: w.re,
            w_imag: w.im,
            r_real: rr.re,
            r_real_imag: rr.im,
            ricci_hermitian_residual: herm,
        })
    }

    /// Coordinate components of a frame-basis vector at the point.
    pub fn to_coordinates(&self, x: &[C64]) -> Vec<C64> {
        let d = self.dim();
        (0..d).map(|k| (0..d).map(|a| x[a] * self.frame[a][k].value()).sum()).collect()
    }

    /// `Tor(X, Y)` in the frame basis.
    pub fn torsion_vector(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let mut out = vec![ZERO; d];
        for a in 0..d {
            for b in 0..d {
                let c = x[a] * y[b];
                if c == ZERO || a == b {
                    continue;
                }
                for (dd, t) in self.torsion_frame(a, b).iter().enumerate() {
                    out[dd] += c * t.value();
                }
            }
        }
        out
    }

    /// First Bianchi identity with torsion,
    /// `Σ_cyc R(X,Y)Z − Tor(Tor(X,Y),Z) − (∇_X Tor)(Y,Z)`, frame components.
    /// With `mod_t` the `T` component is dropped.
    pub fn bianchi_residual(&self, x: &[C64], y: &[C64], z: &[C64], mod_t: bool) -> Result<f64> {
        let d = self.dim();
        let r = self.curvature_tensor()?;
        let fv: Vec<Vec<C64>> = self.frame.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
        let g: Vec<Vec<Vec<C64>>> =
            self.gamma.iter().map(|m| m.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect()).collect();
        let tor: Vec<Vec<Vec<Taylor>>> = (0..d).map(|a| (0..d).map(|b| self.torsion_frame(a, b)).collect()).collect();
        let tv = |a: usize, b: usize, c: usize| tor[a][b][c].value();
        // (∇_{E_a} Tor)(E_b, E_c)^e
        let nabla_tor = |a: usize, b: usize, c: usize, e: usize| -> C64 {
            let mut s: C64 = (0..d).map(|k| fv[a][k] * tor[b][c][e].d1(k)).sum();
            for f in 0..d {
                s += g[a][f][e] * tv(b, c, f);
                s -= g[a][b][f] * tv(f, c, e);
                s -= g[a][c][f] * tv(b, f, e);
            }
            s
        };
        let mut out = vec![ZERO; d];
        let triples = [(x, y, z), (y, z, x), (z, x, y)];
        for (p, q, s) in triples {
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        let coef = p[a] * q[b] * s[c];
                        if coef == ZERO {
                            continue;
                        }
                        for e in 0..d {
                            let mut term = r[a][b][c][e] - nabla_tor(a, b, c, e);
                            for f in 0..d {
                                term -= tv(a, b, f) * tv(f, c, e);
                            }
                            out[e] += coef * term;
                        }
                    }
                }
            }
        }
        let start = if mod_t { 1 } else { 0 };
        Ok(out[start..].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
    }

    /// Residual of `dθ^β = θ^α∧θ_α^β + θ∧τ^β` and `dθ = iΣθ^α∧θ^ᾱ` on all frame
    /// pairs, relative to the largest term.
    pub fn structure_equation_residual(&self) -> f64 {
        let n = self.n;
        let d = self.dim();
        let fv: Vec<Vec<C64>> = self.frame.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
        let tor = self.torsion_coefficients();
        // τ^β(E_c): A^β_γ̄ = conj(A^β̄_γ) on Z_γ̄
        let tau = |be: usize, c: usize| -> C64 {
            if c > n {
                tor[be][c - 1 - n].conj()
            } else {
                ZERO
            }
        };
        let delta = |a: usize, b: usize| if a == b { ONE } else { ZERO };
        let mut res: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for be in 0..n {
            let row = self.z(be);
            let dform = Form::one_form(self.coframe[row].clone()).d().value();
            for a in 0..d {
                for b in a + 1..d {
                    let lhs = dform.eval(&[fv[a].clone(), fv[b].clone()]).expect("degree 2");
                    let mut rhs = ZERO;
                    for al in 0..n {
                        let za = self.z(al);
                        rhs += delta(za, a) * self.gamma[b][za][row].value() - delta(za, b) * self.gamma[a][za][row].value();
                    }
                    rhs += delta(0, a) * tau(be, b) - delta(0, b) * tau(be, a);
                    res = res.max((lhs - rhs).norm());
                    scale = scale.max(lhs.norm());
                }
            }
        }
        let dth = Form::one_form(self.coframe[0].clone()).d().value();
        for a in 0..d {
            for b in a + 1..d {
                let lhs = dth.eval(&[fv[a].clone(), fv[b].clone()]).expect("degree 2");
                let mut rhs = ZERO;
                for al in 0..n {
                    rhs += I * (delta(self.z(al), a) * delta(self.zb(al), b) - delta(self.z(al), b) * delta(self.zb(al), a));
                }
                res = res.max((lhs - rhs).norm());
            }
        }
        res / scale
    }

    /// Duality residual `max |θ^r(E_a) − δ|` at the point.
    pub fn duality_residual(&self) -> f64 {
        let d = self.dim();
        let mut r: f64 = 0.0;
        for row in 0..d {
            for a in 0..d {
                let v: C64 = (0..d).map(|k| self.coframe[row][k].value() * self.frame[a][k].value()).sum();
                let e = if row == a { ONE } else { ZERO };
                r = r.max((v - e).norm());
            }
        }
        r
    }

    /// Coordinate matrix of `J = Σ i Z_α⊗θ^α − i Z_ᾱ⊗θ^ᾱ`, `[i][j]`.
    pub fn j_tensor(&self) -> Vec<Vec<Taylor>> {
        let n = self.n;
        let d = self.dim();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        taylor::sum((0..n).map(|al| {
                            &(&self.frame[self.z(al)][i] * &self.coframe[self.z(al)][j]) * I
                                - &(&self.frame[self.zb(al)][i] * &self.coframe[self.zb(al)][j]) * I
                        }))
                        .expect("n ≥ 1")
                    })
                    .collect()
            })
            .collect()
    }

    /// `max |L_T J − (2iA^β_ᾱ θ^ᾱ⊗Z_β − 2iA^β̄_α θ^α⊗Z_β̄)|` in coordinates, and the size of `L_T J`.
    pub fn lie_derivative_residual(&self) -> (f64, f64) {
        let n = self.n;
        let d = self.dim();
        let j = self.j_tensor();
        let t = &self.frame[0];
        let tv: Vec<C64> = t.iter().map(|c| c.value()).collect();
        let tor = self.torsion_coefficients();
        let mut res: f64 = 0.0;
        let mut size: f64 = 0.0;
        for i in 0..d {
            for jj in 0..d {
                let mut l: C64 = (0..d).map(|k| tv[k] * j[i][jj].d1(k)).sum();
                for k in 0..d {
                    l -= j[k][jj].value() * t[i].d1(k);
                    l += j[i][k].value() * t[k].d1(jj);
                }
                let mut pred = ZERO;
                for be in 0..n {
                    for al in 0..n {
                        // A^β_ᾱ = conj(A^β̄_α)
                        pred += 2.0 * I * tor[be][al].conj()
                            * self.frame[self.z(be)][i].value()
                            * self.coframe[self.zb(al)][jj].value();
                        pred -= 2.0 * I * tor[be][al]
                            * self.frame[self.zb(be)][i].value()
                            * self.coframe[self.z(al)][jj].value();
                    }
                }
                res = res.max((l - pred).norm());
                size = size.max(l.norm());
            }
        }
        (res, size)
    }

    /// `Σ_γ θ_γ^γ` as a coordinate covector at the point.
    pub fn trace_connection_form(&self) -> Vec<C64> {
        let d = self.dim();
        let n = self.n;
        (0..d)
            .map(|k| {
                (0..d)
                    .map(|c| {
                        let g: C64 = (0..n).map(|al| self.gamma[c][self.z(al)][self.z(al)].value()).sum();
                        g * self.coframe[c][k].value()
                    })
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConnectionData {
    pub n: usize,
    pub point: Vec<f64>,
    /// `gamma[α][γ][a] = θ_α^γ(E_a)` over the frame `T, Z, Z̄`.
    pub gamma: Vec<Vec<Vec<C64>>>,
    /// `torsion[γ][α] = A^γ̄_α`.
    pub torsion: Vec<Vec<C64>>,
    /// `real_omega[A][B][C] = ω_A^B(e_C)`, `C` over `e_1..e_2n, T`.
    pub real_omega: Vec<Vec<Vec<f64>>>,
    pub bracket_residual: f64,
    pub skew_residual: f64,
    pub torsion_symmetry_residual: f64,
    pub real_imaginary_part: f64,
    pub cond: f64,
}

impl ConnectionData {
    pub fn max_coefficient(&self) -> f64 {
        let g = self.gamma.iter().flatten().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        let t = self.torsion.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        g.max(t)
    }

    /// Residuals of `ω_A^B + ω_B^A = 0` and the block relations
    /// `ω_α^β = ω_{n+α}^{n+β}`, `ω_α^{n+β} = −ω_{n+α}^β`.
    pub fn real_symmetry_residuals(&self) -> (f64, f64) {
        let n = self.n;
        let w = &self.real_omega;
        let mut anti: f64 = 0.0;
        let mut block: f64 = 0.0;
        for c in 0..2 * n + 1 {
            for a in 0..2 * n {
                for b in 0..2 * n {
                    anti = anti.max((w[a][b][c] + w[b][a][c]).abs());
                }
            }
            for a in 0..n {
                for b in 0..n {
                    block = block.max((w[a][b][c] - w[n + a][n + b][c]).abs());
                    block = block.max((w[a][n + b][c] + w[n + a][b][c]).abs());
                }
            }
        }
        (anti, block)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CurvatureData {
    pub n: usize,
    pub point: Vec<f64>,
    /// `riem[α][β][ρ][σ] = R_α^β_{ρσ̄}`.
    pub riem: Vec<Vec<Vec<Vec<C64>>>>,
    /// `ricci[ρ][σ] = R_{ρσ̄}`.
    pub ricci: Vec<Vec<C64>>,
    pub w: f64,
    pub w_imag: f64,
    pub r_real: f64,
    pub r_real_imag: f64,
    pub ricci_hermitian_residual: f64,
}

pub fn solve_connection(model: &CoframeModel, p: &[f64]) -> Result<ConnectionData> {
    Ok(model.geometry(p, 1)?.connection_data())
}

pub fn curvature(model: &CoframeModel, p: &[f64]) -> Result<CurvatureData> {
    model.geometry(p, CURVATURE_ORDER)?.curvature_data()
}

pub fn real_connection(model: &CoframeModel, p: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    Ok(solve_connection(model, p)?.real_omega)
}

/// `Tor(X, Y)` in coordinate components.
pub fn torsion_tensor(model: &CoframeModel, x: FrameSel, y: FrameSel, p: &[f64]) -> Result<Vec<C64>> {
    let g = model.geometry(p, 1)?;
    let v = g.torsion_vector(&x.coefficients(model.n)?, &y.coefficients(model.n)?);
    Ok(g.to_coordinates(&v))
}

pub fn bianchi_residual(model: &CoframeModel, x: FrameSel, y: FrameSel, z: FrameSel, p: &[f64], mod_t: bool) -> Result<f64> {
    let n = model.n;
    model.geometry(p, CURVATURE_ORDER)?.bianchi_residual(&x.coefficients(n)?, &y.coefficients(n)?, &z.coefficients(n)?, mod_t)
}

/// `Ŵ = b_n Δ̊_b u / u^{1+2/n}` for `θ̂ = u^{2/n} θ̊`.
pub fn conformal_w_oracle(u: &FieldExpr, p: &[f64], n: usize) -> Result<f64> {
    let v = u.value(p)?[0].re;
    if !(v > 0.0) {
        return Err(Error::NonPositive { what: u.name.clone(), value: v });
    }
    Ok(b_n(n) * sublaplacian(u, p)? / v.powf(1.0 + 2.0 / n as f64))
}

/// Measured `(c_n A, c̃_n A)` from `θ(∂_t) − 1` and `θ^1(∂_{x_1})/√2 − 1` along
/// the `x_1` axis, Richardson-extrapolated in `ρ^{-2n}` between the two radii.
pub fn asymptotic_coefficients(model: &CoframeModel, radii: &[f64]) -> Result<(f64, f64)> {
    if radii.len() < 3 {
        return Err(Error::InvalidArgument("coefficient fit needs at least three radii".into()));
    }
    let n = model.n;
    let k = 2 * n as i32;
    let mut a = Vec::with_capacity(radii.len());
    let mut b = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut p = vec![0.0; model.dim()];
        p[0] = r;
        let cf = model.coframe(&p, 0)?;
        a.push((cf[0][2 * n].value().re - 1.0) * r.powi(k));
        b.push((cf[1][0].value().re / SQRT_2 - 1.0) * r.powi(k));
    }
    let fit = |v: &[f64]| extrapolate(radii, v, fitted_exponent(radii, v));
    Ok((fit(&a)?, fit(&b)?))
}

/// Leading `dz^β`, `dz^β̄` coefficients of `Σ_γ θ_γ^γ` predicted from the measured
/// constants: `−iK z̄^β ω̄ ρ^{-2n-4}` and `−iK z^β ω ρ^{-2n-4}` with `K = (n²c̃ + nc)A`.
pub fn trace_connection_leading(n: usize, ca: f64, cta: f64, p: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let z2: f64 = (0..n).map(|k| p[k] * p[k] + p[n + k] * p[n + k]).sum();
    let omega = C64::new(p[2 * n], z2);
    let r = rho_of(p);
    let kk = (n * n) as f64 * cta + n as f64 * ca;
    let s = r.powi(-(2 * n as i32) - 4) * kk;
    let mut dz = Vec::with_capacity(n);
    let mut dzb = Vec::with_capacity(n);
    for b in 0..n {
        let zb = C64::new(p[b], p[n + b]);
        dz.push(-I * s * zb.conj() * omega.conj());
        dzb.push(-I * s * zb * omega);
    }
    (dz, dzb)
}

/// Split a real-chart covector into `dz^β` and `dz^β̄` coefficients.
pub fn complex_components(n: usize, w: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let dz = (0..n).map(|b| (w[b] - I * w[n + b]) * 0.5).collect();
    let dzb = (0..n).map(|b| (w[b] + I * w[n + b]) * 0.5).collect();
    (dz, dzb)
}

/// `ρ^k` as a conformal factor (singular at the origin).
pub fn rho_power_factor(n: usize, k: f64) -> FieldExpr {
    FieldExpr::new(&format!("rho^{}", k), Arity::Scalar, 2 * n + 1, move |x| vec![rho_pow(n, x, k)], move |p| rho_of(p) > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(n: usize, s: f64) -> Vec<f64> {
        (0..2 * n + 1).map(|k| s * (0.3 + 0.17 * k as f64) * if k % 2 == 0 { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn flat_connection_vanishes() {
        for n in 1..=3 {
            let m = CoframeModel::flat(n).unwrap();
            let c = solve_connection(&m, &pt(n, 1.3)).unwrap();
            assert!(c.max_coefficient() < 1e-14);
            assert!(c.bracket_residual < 1e-14);
        }
    }

    #[test]
    fn flat_torsion_real_version() {
        let m = CoframeModel::flat(2).unwrap();
        let p = pt(2, 0.7);
        let v = torsion_tensor(&m, FrameSel::E(1), FrameSel::E(3), &p).unwrap();
        assert!((v[4] - C64::new(2.0, 0.0)).norm() < 1e-13);
        assert!(v[..4].iter().all(|c| c.norm() < 1e-13));
        let w = torsion_tensor(&m, FrameSel::Z(0), FrameSel::T, &p).unwrap();
        assert!(w.iter().all(|c| c.norm() < 1e-13));
    }

    #[test]
    fn unit_factor_is_flat() {
        let u = FieldExpr::everywhere("1", Arity::Scalar, 5, |x| vec![Taylor::real(x[0].space(), 1.0)]);
        let m = CoframeModel::conformal(2, u).unwrap();
        let f = CoframeModel::flat(2).unwrap();
        let p = pt(2, 1.1);
        let a = m.coframe(&p, 1).unwrap();
        let b = f.coframe(&p, 1).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nonpositive_factor_rejected() {
        let u = FieldExpr::everywhere("t", Arity::Scalar, 3, |x| vec![x[2].clone()]);
        assert!(matches!(CoframeModel::conformal(1, u), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn conformal_structure_equations() {
        for n in 1..=2 {
            let m = CoframeModel::asymptotic(n, 1.0).unwrap();
            let g = m.geometry(&pt(n, 1.0), 2).unwrap();
            assert!(g.duality_residual() < 1e-12);
            assert!(g.structure_equation_residual() < 1e-10, "{}", g.structure_equation_residual());
            let c = g.connection_data();
            assert!(c.bracket_residual < 1e-10);
            assert!(c.skew_residual < 1e-10);
            assert!(c.torsion_symmetry_residual < 1e-10);
            let (a, b) = c.real_symmetry_residuals();
            assert!(a < 1e-10 && b < 1e-10);
        }
    }

    #[test]
    fn scalar_curvature_matches_oracle() {
        for n in 1..=2 {
            let ext = crate::heisenberg::jl_extremal_field(crate::heisenberg::ExtremalParams::new(n, 1.0).unwrap());
            let models = [CoframeModel::asymptotic_with_tail(n, 1.0, 0.5).unwrap(), CoframeModel::conformal(n, ext).unwrap()];
            for m in &models {
                let p = pt(n, 1.2);
                let cd = curvature(m, &p).unwrap();
                let w = conformal_w_oracle(m.conformal_factor().unwrap(), &p, n).unwrap();
                assert!(w.abs() > 1e-3);
                assert!((cd.w - w).abs() <= 1e-6 * w.abs(), "n={} W={} oracle={}", n, cd.w, w);
                assert!((cd.w - cd.r_real / 4.0).abs() <= 1e-8 * cd.w.abs());
                assert!(cd.ricci_hermitian_residual < 1e-9);
            }
        }
    }

    #[test]
    fn elimination_order_does_not_matter() {
        let m = CoframeModel::asymptotic(2, 1.0).unwrap();
        let p = pt(2, 0.9);
        let a = PointGeometry::build(&m, &p, 1, None).unwrap().connection_data();
        let b = PointGeometry::build(&m, &p, 1, Some(&[4, 2, 0, 3, 1])).unwrap().connection_data();
        for (x, y) in a.gamma.iter().flatten().flatten().zip(b.gamma.iter().flatten().flatten()) {
            assert!((x - y).norm() < 1e-10);
        }
    }
}
