//! Spin connection, contact Dirac operator and the Weitzenbock-type formula
//! on frame-trivialized spinor fields.
//!
//! With `∇e_b = Σ_a ω_b^a e_a` the spin connection acts by
//! `ω_σ(X) = ¼ Σ_{a,b} ω_b^a(X) e_b e_a`, which is the sign that makes
//! `[ω_σ(X), e_c] = ∇_X e_c` (Clifford Leibniz rule). Its curvature then equals
//! `¼ Σ ⟨R^{p.h.}_{XY} e_a, e_b⟩ e_a e_b`.

use crate::clifford::{CliffordTables, Parity, Spinor};
use crate::error::{Error, Result};
use crate::fieldcalc::{Arity, FieldExpr};
use crate::heisenberg::rho4;
use crate::pseudohermitian::{
    real_coframe_coefficients, real_frame_coefficients, CoframeModel, CurvatureData, PointGeometry, CURVATURE_ORDER,
};
use crate::taylor::{self, Taylor};
use num_complex::Complex64 as C64;
use rand::Rng;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Spinor-valued field in the frame trivialization.
#[derive(Clone, Debug)]
pub struct SpinorField {
    pub n: usize,
    pub field: FieldExpr,
}

impl SpinorField {
    pub fn new(field: FieldExpr) -> Result<SpinorField> {
        match field.arity {
            Arity::Spinor(n) if field.dim == 2 * n + 1 => Ok(SpinorField { n, field }),
            _ => Err(Error::InvalidArgument(format!("{} is not a spinor field", field.name))),
        }
    }

    /// `f · s` for a scalar field `f` and a constant spinor `s`.
    pub fn scalar_times(n: usize, name: &str, f: impl Fn(&[Taylor]) -> Taylor + Send + Sync + 'static, s: Spinor) -> SpinorField {
        let field = FieldExpr::everywhere(name, Arity::Spinor(n), 2 * n + 1, move |x| {
            let v = f(x);
            s.coeffs.iter().map(|&c| &v * c).collect()
        });
        SpinorField { n, field }
    }

    /// Seeded polynomial of degree `≤ degree` times `exp(−ρ⁴/σ)`, supported on
    /// the components of the given parity (all components for `None`).
    pub fn random_polynomial<R: Rng>(n: usize, degree: usize, sigma: f64, parity: Option<Parity>, rng: &mut R) -> SpinorField {
        let dim = 2 * n + 1;
        let exps = exponents(dim, degree);
        let comps: Vec<Vec<(Vec<u8>, C64)>> = (0..1usize << n)
            .map(|m| {
                if parity.map_or(true, |p| Parity::of(m) == p) {
                    exps.iter()
                        .map(|e| (e.clone(), C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        let field = FieldExpr::everywhere("polynomial*exp(-rho^4/sigma)", Arity::Spinor(n), dim, move |x| {
            let sp = x[0].space();
            let env = (rho4(n, x) * (-1.0 / sigma)).exp();
            comps
                .iter()
                .map(|terms| {
                    let mut acc = Taylor::zero(sp);
                    for (e, c) in terms {
                        let mut m = Taylor::constant(sp, *c);
                        for (k, &p) in e.iter().enumerate() {
                            if p > 0 {
                                m = &m * &x[k].powi(p as u32);
                            }
                        }
                        acc += m;
                    }
                    &acc * &env
                })
                .collect()
        });
        SpinorField { n, field }
    }

    pub fn taylor(&self, p: &[f64], order: usize) -> Result<Vec<Taylor>> {
        self.field.taylor(p, order)
    }

    /// Largest coefficient of the order-2 jet at `p`.
    pub fn scale(&self, p: &[f64]) -> Result<f64> {
        Ok(self.taylor(p, 2)?.iter().map(|t| t.max_abs()).fold(0.0, f64::max))
    }
}

fn exponents(dim: usize, degree: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; dim]];
    for _ in 0..degree {
        let mut next = Vec::new();
        for e in &out {
            let last = e.iter().rposition(|&x| x > 0).unwrap_or(0);
            for k in last..dim {
                let mut f = e.clone();
                f[k] += 1;
                next.push(f);
            }
        }
        out.extend(next.into_iter().filter(|e| e.iter().map(|&x| x as usize).sum::<usize>() <= degree));
        out.sort();
        out.dedup();
    }
    out
}

fn mat_apply(m: &[C64], v: &[Taylor]) -> Vec<Taylor> {
    let d = v.len();
    (0..d)
        .map(|i| {
            let mut acc = Taylor::zero(v[0].space());
            for j in 0..d {
                let c = m[i * d + j];
                if c != ZERO {
                    acc += &v[j] * c;
                }
            }
            acc
        })
        .collect()
}

fn tmat_apply(m: &[Taylor], v: &[Taylor]) -> Vec<Taylor> {
    let d = v.len();
    (0..d).map(|i| taylor::sum((0..d).map(|j| &m[i * d + j] * &v[j])).expect("d ≥ 1")).collect()
}

fn values(v: &[Taylor]) -> Vec<C64> {
    v.iter().map(|t| t.value()).collect()
}

/// Spin connection over a coframe model.
#[derive(Clone, Debug)]
pub struct SpinConnection {
    pub model: CoframeModel,
    pub tables: CliffordTables,
}

impl SpinConnection {
    pub fn new(model: CoframeModel) -> Result<SpinConnection> {
        let tables = CliffordTables::new(model.n)?;
        Ok(SpinConnection { model, tables })
    }

    /// Spin-connection data around `p` (frame jets of curvature order).
    pub fn at(&self, p: &[f64]) -> Result<SpinFrame<'_>> {
        let geom = self.model.geometry(p, CURVATURE_ORDER)?;
        let n = self.model.n;
        let d = geom.dim();
        let s = 1usize << n;
        let e = real_frame_coefficients(n);
        let w = real_coframe_coefficients(n);
        let sp = taylor::space(d, geom.order - 1);
        // omega[c][b][a] = ω_b^a(E_c)
        let mut omega = vec![vec![vec![Taylor::zero(sp); 2 * n]; 2 * n]; d];
        for c in 0..d {
            for b in 0..2 * n {
                for a in 0..2 * n {
                    let mut acc = Taylor::zero(sp);
                    for cc in 0..d {
                        if e[b][cc] == ZERO {
                            continue;
                        }
                        for dd in 0..d {
                            if w[a][dd] == ZERO {
                                continue;
                            }
                            acc += &geom.gamma[c][cc][dd] * (e[b][cc] * w[a][dd]);
                        }
                    }
                    omega[c][b][a] = acc;
                }
            }
        }
        let mut sigma = Vec::with_capacity(d);
        for c in 0..d {
            let mut m = vec![Taylor::zero(sp); s * s];
            for b in 0..2 * n {
                for a in 0..2 * n {
                    if a == b {
                        continue;
                    }
                    let pair = &self.tables.pairs[b][a];
                    for (k, entry) in m.iter_mut().enumerate() {
                        if pair[k] != ZERO {
                            *entry += &omega[c][b][a] * (pair[k] * 0.25);
                        }
                    }
                }
            }
            sigma.push(m);
        }
        Ok(SpinFrame { conn: self, geom, omega, sigma, real_frame: e })
    }
}

/// Precomputed connection matrices at one point.
pub struct SpinFrame<'a> {
    pub conn: &'a SpinConnection,
    pub geom: PointGeometry,
    /// `omega[c][b][a] = ω_b^a(E_c)` over the `(T, Z, Z̄)` frame.
    pub omega: Vec<Vec<Vec<Taylor>>>,
    /// `sigma[c] = ω_σ(E_c)` as a row-major spinor matrix.
    pub sigma: Vec<Vec<Taylor>>,
    /// Real frame `e_1..e_2n, T` in the `(T, Z, Z̄)` basis.
    pub real_frame: Vec<Vec<C64>>,
}

impl<'a> SpinFrame<'a> {
    pub fn n(&self) -> usize {
        self.geom.n
    }

    /// `∇_X ψ` for `X` in the `(T, Z, Z̄)` basis (one order lower than `ψ`).
    pub fn nabla(&self, psi: &[Taylor], x: &[C64]) -> Vec<Taylor> {
        let d = self.geom.dim();
        let sp = taylor::space(d, psi[0].order().saturating_sub(1).min(self.geom.order - 1));
        let mut out = vec![Taylor::zero(sp); psi.len()];
        for c in 0..d {
            if x[c] == ZERO {
                continue;
            }
            let dir: Vec<Taylor> = psi.iter().map(|t| t.directional(&self.geom.frame[c])).collect();
            let rot = tmat_apply(&self.sigma[c], psi);
            for k in 0..psi.len() {
                out[k] += (&dir[k] + &rot[k]) * x[c];
            }
        }
        out
    }

    /// `e_a · ψ` for the real frame index `a` (1-based).
    pub fn clifford(&self, a: usize, psi: &[Taylor]) -> Vec<Taylor> {
        mat_apply(&self.conn.tables.gens[a - 1], psi)
    }

    /// `D_ξ ψ = Σ_a e_a · ∇_{e_a} ψ`.
    pub fn dirac(&self, psi: &[Taylor]) -> Vec<Taylor> {
        let n = self.n();
        let mut acc: Option<Vec<Taylor>> = None;
        for a in 1..=2 * n {
            let t = self.clifford(a, &self.nabla(psi, &self.real_frame[a - 1]));
            acc = Some(match acc {
                None => t,
                Some(s) => s.iter().zip(&t).map(|(x, y)| x + y).collect(),
            });
        }
        acc.expect("n ≥ 1")
    }

    /// `∇_X e_b` in the `(T, Z, Z̄)` basis at the point.
    pub fn nabla_frame(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let d = self.geom.dim();
        let mut out = vec![ZERO; d];
        for a in 0..d {
            for c in 0..d {
                let k = x[a] * y[c];
                if k == ZERO {
                    continue;
                }
                for dd in 0..d {
                    out[dd] += k * self.geom.gamma[a][c][dd].value();
                }
            }
        }
        out
    }

    /// `∇²_{V,W} ψ = ∇_V ∇_W ψ − ∇_{∇_V W} ψ` at the point.
    pub fn second(&self, psi: &[Taylor], v: &[C64], w: &[C64]) -> Vec<C64> {
        let inner = self.nabla(psi, w);
        let outer = values(&self.nabla(&inner, v));
        let corr = values(&self.nabla(psi, &self.nabla_frame(v, w)));
        outer.iter().zip(&corr).map(|(a, b)| a - b).collect()
    }

    /// `∇*∇ψ = −Σ_a ∇²_{e_a,e_a} ψ`.
    pub fn rough_laplacian(&self, psi: &[Taylor]) -> Vec<C64> {
        let n = self.n();
        let mut out = vec![ZERO; psi.len()];
        for a in 0..2 * n {
            let s = self.second(psi, &self.real_frame[a], &self.real_frame[a]);
            for k in 0..out.len() {
                out[k] -= s[k];
            }
        }
        out
    }

    /// Terms of `D_ξ² ψ = ∇*∇ψ + Wψ − 2Σ_β e_β e_{n+β} ∇_T ψ` at the point.
    pub fn weitzenbock_terms(&self, psi: &[Taylor], curv: &CurvatureData) -> WeitzenbockTerms {
        let n = self.n();
        let d2 = values(&self.dirac(&self.dirac(psi)));
        let lap = self.rough_laplacian(psi);
        let w: Vec<C64> = values(psi).iter().map(|c| c * curv.w).collect();
        let nt = self.nabla(psi, &self.real_frame[2 * n]);
        let mut tterm = vec![ZERO; psi.len()];
        for b in 1..=n {
            let v = values(&self.clifford(b, &self.clifford(n + b, &nt)));
            for k in 0..tterm.len() {
                tterm[k] -= v[k] * 2.0;
            }
        }
        WeitzenbockTerms { dirac_squared: d2, rough_laplacian: lap, curvature: w, t_term: tterm }
    }

    /// Spin curvature `R_{E_a E_b}` from `ω_σ` jets.
    pub fn spin_curvature(&self, a: usize, b: usize) -> Vec<C64> {
        let d = self.geom.dim();
        let s = 1usize << self.n();
        let fa: Vec<C64> = values(&self.geom.frame[a]);
        let fb: Vec<C64> = values(&self.geom.frame[b]);
        let deriv = |f: &[C64], t: &Taylor| -> C64 { (0..d).map(|k| f[k] * t.d1(k)).sum() };
        let sa: Vec<C64> = values(&self.sigma[a]);
        let sb: Vec<C64> = values(&self.sigma[b]);
        let mut out = vec![ZERO; s * s];
        for i in 0..s {
            for j in 0..s {
                let mut v = deriv(&fa, &self.sigma[b][i * s + j]) - deriv(&fb, &self.sigma[a][i * s + j]);
                for k in 0..s {
                    v += sa[i * s + k] * sb[k * s + j] - sb[i * s + k] * sa[k * s + j];
                }
                for f in 0..d {
                    v -= self.geom.bracket[a][b][f].value() * self.sigma[f][i * s + j].value();
                }
                out[i * s + j] = v;
            }
        }
        out
    }

    /// `R_{XY}` for `X, Y` in the `(T, Z, Z̄)` basis, from the spin connection.
    pub fn spin_curvature_on(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let d = self.geom.dim();
        let s = 1usize << self.n();
        let mut out = vec![ZERO; s * s];
        for a in 0..d {
            for b in 0..d {
                let k = x[a] * y[b];
                if k == ZERO || a == b {
                    continue;
                }
                let r = self.spin_curvature(a, b);
                for (o, v) in out.iter_mut().zip(&r) {
                    *o += k * v;
                }
            }
        }
        out
    }

    /// `¼ Σ_{a,b} ⟨R^{p.h.}_{XY} e_a, e_b⟩ e_a e_b`.
    pub fn curvature_representation(&self, x: &[C64], y: &[C64], riem: &[Vec<Vec<Vec<C64>>>]) -> Vec<C64> {
        let n = self.n();
        let d = self.geom.dim();
        let s = 1usize << n;
        let w = real_coframe_coefficients(n);
        let mut out = vec![ZERO; s * s];
        for a in 0..2 * n {
            // R(X,Y) e_a in the frame basis
            let mut v = vec![ZERO; d];
            for i in 0..d {
                for j in 0..d {
                    let k = x[i] * y[j];
                    if k == ZERO {
                        continue;
                    }
                    for c in 0..d {
                        let kc = k * self.real_frame[a][c];
                        if kc == ZERO {
                            continue;
                        }
                        for dd in 0..d {
                            v[dd] += kc * riem[i][j][c][dd];
                        }
                    }
                }
            }
            for b in 0..2 * n {
                let coef: C64 = (0..d).map(|dd| w[b][dd] * v[dd]).sum::<C64>() * 0.25;
                if coef == ZERO {
                    continue;
                }
                for (o, p) in out.iter_mut().zip(&self.conn.tables.pairs[a][b]) {
                    *o += coef * p;
                }
            }
        }
        out
    }

    /// `𝓡 = ½ Σ_{a,b} e_a e_b R_{e_a e_b}` from the spin curvature, as a matrix.
    pub fn scalar_term(&self) -> Vec<C64> {
        let n = self.n();
        let s = 1usize << n;
        let mut out = vec![ZERO; s * s];
        for a in 0..2 * n {
            for b in 0..2 * n {
                if a == b {
                    continue;
                }
                let r = self.spin_curvature_on(&self.real_frame[a], &self.real_frame[b]);
                let p = &self.conn.tables.pairs[a][b];
                for i in 0..s {
                    for j in 0..s {
                        let v: C64 = (0..s).map(|k| p[i * s + k] * r[k * s + j]).sum();
                        out[i * s + j] += v * 0.5;
                    }
                }
            }
        }
        out
    }
}

/// The four terms of the Weitzenbock-type formula at a point.
#[derive(Clone, Debug)]
pub struct WeitzenbockTerms {
    pub dirac_squared: Vec<C64>,
    pub rough_laplacian: Vec<C64>,
    pub curvature: Vec<C64>,
    pub t_term: Vec<C64>,
}

impl WeitzenbockTerms {
    /// `|D²ψ − (∇*∇ψ + Wψ − 2Σ e_β e_{n+β} ∇_T ψ)|`.
    pub fn full_residual(&self) -> f64 {
        norm((0..self.dirac_squared.len())
            .map(|k| self.dirac_squared[k] - self.rough_laplacian[k] - self.curvature[k] - self.t_term[k]))
    }

    /// `|D²ψ − (∇*∇ψ + Wψ)|`, the identity with the `∇_T` term dropped.
    pub fn reduced_residual(&self) -> f64 {
        norm((0..self.dirac_squared.len()).map(|k| self.dirac_squared[k] - self.rough_laplacian[k] - self.curvature[k]))
    }
}

fn norm<I: IntoIterator<Item = C64>>(it: I) -> f64 {
    it.into_iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn spin_covariant_derivative(conn: &SpinConnection, x: &[C64], psi: &SpinorField, p: &[f64]) -> Result<Spinor> {
    let f = conn.at(p)?;
    let t = psi.taylor(p, 1)?;
    Spinor::from_coeffs(conn.model.n, values(&f.nabla(&t, x)))
}

pub fn dirac(conn: &SpinConnection, psi: &SpinorField, p: &[f64]) -> Result<Spinor> {
    let f = conn.at(p)?;
    let t = psi.taylor(p, 1)?;
    Spinor::from_coeffs(conn.model.n, values(&f.dirac(&t)))
}

pub fn weitzenbock(conn: &SpinConnection, psi: &SpinorField, p: &[f64]) -> Result<WeitzenbockTerms> {
    check_rank(conn, psi)?;
    let f = conn.at(p)?;
    let curv = f.geom.curvature_data()?;
    let t = psi.taylor(p, 2)?;
    Ok(f.weitzenbock_terms(&t, &curv))
}

pub fn weitzenbock_residual(conn: &SpinConnection, psi: &SpinorField, p: &[f64]) -> Result<f64> {
    Ok(weitzenbock(conn, psi, p)?.full_residual())
}

fn check_rank(conn: &SpinConnection, psi: &SpinorField) -> Result<()> {
    if conn.model.n != psi.n {
        return Err(Error::RankMismatch { expected: conn.model.n, got: psi.n });
    }
    Ok(())
}

/// `∇_X(e_b·ψ) − (∇_X e_b)·ψ − e_b·∇_Xψ`, norm at the point.
pub fn leibniz_residual(conn: &SpinConnection, x: &[C64], b: usize, psi: &SpinorField, p: &[f64]) -> Result<f64> {
    check_rank(conn, psi)?;
    let f = conn.at(p)?;
    let n = conn.model.n;
    if b == 0 || b > 2 * n {
        return Err(Error::IndexOutOfRange { index: b, max: 2 * n });
    }
    let t = psi.taylor(p, 1)?;
    let lhs = values(&f.nabla(&f.clifford(b, &t), x));
    let nb = f.nabla_frame(x, &f.real_frame[b - 1]);
    let w = real_coframe_coefficients(n);
    let mut rot = vec![ZERO; t.len()];
    for a in 1..=2 * n {
        let c: C64 = (0..nb.len()).map(|k| w[a - 1][k] * nb[k]).sum();
        if c == ZERO {
            continue;
        }
        let v = values(&f.clifford(a, &t));
        for k in 0..rot.len() {
            rot[k] += c * v[k];
        }
    }
    let rhs = values(&f.clifford(b, &f.nabla(&t, x)));
    Ok(norm((0..lhs.len()).map(|k| lhs[k] - rot[k] - rhs[k])))
}

/// The operator `L_i = ∇_i + e_i D_ξ = ½ Σ_j [e_i, e_j] ∇_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WittenOperator {
    pub i: usize,
}

pub fn witten_boundary_operator(n: usize, i: usize) -> Result<WittenOperator> {
    if i == 0 || i > 2 * n {
        return Err(Error::IndexOutOfRange { index: i, max: 2 * n });
    }
    Ok(WittenOperator { i })
}

impl WittenOperator {
    /// `∇_i ψ + e_i D_ξ ψ`.
    pub fn apply_dirac_form(&self, f: &SpinFrame<'_>, psi: &[Taylor]) -> Vec<C64> {
        let a = values(&f.nabla(psi, &f.real_frame[self.i - 1]));
        let b = values(&f.clifford(self.i, &f.dirac(psi)));
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    }

    /// `½ Σ_j [e_i, e_j] ∇_j ψ`.
    pub fn apply_commutator_form(&self, f: &SpinFrame<'_>, psi: &[Taylor]) -> Vec<C64> {
        let n = f.n();
        let mut out = vec![ZERO; psi.len()];
        for j in 1..=2 * n {
            let nj = f.nabla(psi, &f.real_frame[j - 1]);
            let ij = values(&f.clifford(self.i, &f.clifford(j, &nj)));
            let ji = values(&f.clifford(j, &f.clifford(self.i, &nj)));
            for k in 0..out.len() {
                out[k] += (ij[k] - ji[k]) * 0.5;
            }
        }
        out
    }
}
