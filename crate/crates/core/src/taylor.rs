//! Truncated multivariate Taylor polynomials over complex scalars.
//!
//! A [`Taylor`] stores the coefficients `∂^m f(p) / m!` of a field around a base
//! point for all multi-indices with `|m| ≤ order`. Arithmetic is exact up to the
//! truncation order, so derivatives of any order `≤ order` come out without
//! step-size error. Monomials are enumerated degree by degree in an order that
//! does not depend on the truncation order, so a lower-order polynomial is a
//! prefix of a higher-order one and mixed-order arithmetic truncates to the
//! smaller order.

use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

/// Monomial layout and multiplication tables for one `(dim, order)` pair.
#[derive(Debug)]
pub struct Space {
    pub dim: usize,
    pub order: usize,
    exps: Vec<Vec<u8>>,
    degree_end: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    mul: Vec<(u32, u32, u32)>,
    // per variable: (source index, destination index in order-1 space, factor)
    deriv: Vec<Vec<(u32, u32, f64)>>,
}

fn monomials_of_degree(dim: usize, deg: usize) -> Vec<Vec<u8>> {
    fn rec(dim: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() + 1 == dim {
            cur.push(left as u8);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k as u8);
            rec(dim, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(dim, deg, &mut Vec::with_capacity(dim), &mut out);
    out
}

impl Space {
    fn build(dim: usize, order: usize) -> Space {
        let mut exps = Vec::new();
        let mut degree_end = Vec::new();
        for d in 0..=order {
            exps.extend(monomials_of_degree(dim, d));
            degree_end.push(exps.len());
        }
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let deg = |e: &Vec<u8>| e.iter().map(|&x| x as usize).sum::<usize>();
        let mut mul = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            let da = deg(a);
            for (j, b) in exps.iter().enumerate() {
                if da + deg(b) > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                mul.push((i as u32, j as u32, index[&s] as u32));
            }
        }
        let mut deriv = vec![Vec::new(); dim];
        if order > 0 {
            for (v, table) in deriv.iter_mut().enumerate() {
                for (i, e) in exps.iter().enumerate() {
                    if e[v] == 0 {
                        continue;
                    }
                    let mut lowered = e.clone();
                    lowered[v] -= 1;
                    if deg(&lowered) > order - 1 {
                        continue;
                    }
                    table.push((i as u32, index[&lowered] as u32, e[v] as f64));
                }
            }
        }
        Space { dim, order, exps, degree_end, index, mul, deriv }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Number of monomials of degree at most `k`.
    pub fn len_upto(&self, k: usize) -> usize {
        self.degree_end[k.min(self.order)]
    }

    pub fn exponent(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn index_of(&self, e: &[u8]) -> Option<usize> {
        self.index.get(e).copied()
    }
}

/// Shared, lazily built layout for `(dim, order)`.
pub fn space(dim: usize, order: usize) -> &'static Space {
    static REG: OnceLock<Mutex<HashMap<(usize, usize), &'static Space>>> = OnceLock::new();
    let reg = REG.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = reg.lock().expect("space registry poisoned");
    *g.entry((dim, order))
        .or_insert_with(|| Box::leak(Box::new(Space::build(dim, order))))
}

#[derive(Clone, Debug)]
pub struct Taylor {
    sp: &'static Space,
    c: Vec<C64>,
}

impl Taylor {
    pub fn zero(sp: &'static Space) -> Taylor {
        Taylor { sp, c: vec![C64::new(0.0, 0.0); sp.len()] }
    }

    pub fn constant(sp: &'static Space, v: C64) -> Taylor {
        let mut t = Taylor::zero(sp);
        t.c[0] = v;
        t
    }

    pub fn real(sp: &'static Space, v: f64) -> Taylor {
        Taylor::constant(sp, C64::new(v, 0.0))
    }

    /// Coordinate function `x_i` expanded around `x0`.
    pub fn var(sp: &'static Space, i: usize, x0: f64) -> Taylor {
        let mut t = Taylor::real(sp, x0);
        if sp.order > 0 {
            let mut e = vec![0u8; sp.dim];
            e[i] = 1;
            t.c[sp.index[&e]] = C64::new(1.0, 0.0);
        }
        t
    }

    /// All coordinate functions around the point `x0`.
    pub fn vars(x0: &[f64], order: usize) -> Vec<Taylor> {
        let sp = space(x0.len(), order);
        (0..x0.len()).map(|i| Taylor::var(sp, i, x0[i])).collect()
    }

    pub fn from_coeffs(sp: &'static Space, c: Vec<C64>) -> Taylor {
        assert_eq!(c.len(), sp.len());
        Taylor { sp, c }
    }

    pub fn space(&self) -> &'static Space {
        self.sp
    }

    pub fn order(&self) -> usize {
        self.sp.order
    }

    pub fn dim(&self) -> usize {
        self.sp.dim
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// Coefficient of the monomial with exponent vector `e` (zero above the order).
    pub fn coeff(&self, e: &[u8]) -> C64 {
        self.sp.index_of(e).map(|i| self.c[i]).unwrap_or(C64::new(0.0, 0.0))
    }

    /// First partial derivative `∂_i f` at the base point.
    pub fn d1(&self, i: usize) -> C64 {
        let mut e = vec![0u8; self.dim()];
        e[i] = 1;
        self.coeff(&e)
    }

    /// Second partial derivative `∂_i ∂_j f` at the base point.
    pub fn d2(&self, i: usize, j: usize) -> C64 {
        let mut e = vec![0u8; self.dim()];
        e[i] += 1;
        e[j] += 1;
        let c = self.coeff(&e);
        if i == j {
            c * 2.0
        } else {
            c
        }
    }

    pub fn truncate(&self, order: usize) -> Taylor {
        if order >= self.order() {
            return self.clone();
        }
        let sp = space(self.dim(), order);
        Taylor { sp, c: self.c[..sp.len()].to_vec() }
    }

    /// Partial derivative as a polynomial of one lower order.
    pub fn deriv(&self, v: usize) -> Taylor {
        assert!(self.order() > 0, "cannot differentiate an order-0 Taylor polynomial");
        let lo = space(self.dim(), self.order() - 1);
        let mut out = Taylor::zero(lo);
        for &(src, dst, f) in &self.sp.deriv[v] {
            out.c[dst as usize] += self.c[src as usize] * f;
        }
        out
    }

    /// Directional derivative `Σ_k X^k ∂_k f` with field-valued components.
    pub fn directional(&self, x: &[Taylor]) -> Taylor {
        let mut acc: Option<Taylor> = None;
        for (k, xk) in x.iter().enumerate() {
            let term = xk * &self.deriv(k);
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        acc.expect("empty direction")
    }

    pub fn conj(&self) -> Taylor {
        Taylor { sp: self.sp, c: self.c.iter().map(|z| z.conj()).collect() }
    }

    pub fn re(&self) -> Taylor {
        Taylor { sp: self.sp, c: self.c.iter().map(|z| C64::new(z.re, 0.0)).collect() }
    }

    pub fn im(&self) -> Taylor {
        Taylor { sp: self.sp, c: self.c.iter().map(|z| C64::new(z.im, 0.0)).collect() }
    }

    pub fn scale(&self, s: C64) -> Taylor {
        Taylor { sp: self.sp, c: self.c.iter().map(|z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Taylor {
        Taylor { sp: self.sp, c: self.c.iter().map(|z| z * s).collect() }
    }

    pub fn add_const(&self, s: C64) -> Taylor {
        let mut t = self.clone();
        t.c[0] += s;
        t
    }

    /// Largest coefficient modulus, a cheap size proxy.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ_k a_k (f − f(p))^k` for the given Taylor coefficients `a_k` of a
    /// univariate function at `f(p)`.
    pub fn compose(&self, a: &[C64]) -> Taylor {
        let k = self.order();
        let mut h = self.clone();
        h.c[0] = C64::new(0.0, 0.0);
        let top = a.len().min(k + 1);
        let mut r = Taylor::constant(self.sp, a[top - 1]);
        for j in (0..top - 1).rev() {
            r = &r * &h;
            r.c[0] += a[j];
        }
        r
    }

    pub fn exp(&self) -> Taylor {
        let e = self.value().exp();
        let mut a = Vec::with_capacity(self.order() + 1);
        let mut f = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                f *= k as f64;
            }
            a.push(e / f);
        }
        self.compose(&a)
    }

    pub fn ln(&self) -> Taylor {
        let v = self.value();
        let mut a = vec![v.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            a.push(C64::new(sign / k as f64, 0.0) / v.powu(k as u32));
        }
        self.compose(&a)
    }

    /// Real power with the principal branch at the base value.
    pub fn powf(&self, p: f64) -> Taylor {
        let v = self.value();
        let vp = v.powf(p);
        let mut a = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                binom *= (p - (k as f64 - 1.0)) / k as f64;
            }
            a.push(vp * binom / v.powu(k as u32));
        }
        self.compose(&a)
    }

    pub fn sqrt(&self) -> Taylor {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Taylor {
        let v = self.value();
        let a: Vec<C64> = (0..=self.order())
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(s, 0.0) / v.powu(k as u32 + 1)
            })
            .collect();
        self.compose(&a)
    }

    pub fn powi(&self, k: u32) -> Taylor {
        let mut r = Taylor::real(self.sp, 1.0);
        for _ in 0..k {
            r = &r * self;
        }
        r
    }

    pub fn sin(&self) -> Taylor {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cyc = [s, c, -s, -c];
        let mut f = 1.0;
        let a: Vec<C64> = (0..=self.order())
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                cyc[k % 4] / f
            })
            .collect();
        self.compose(&a)
    }

    pub fn cos(&self) -> Taylor {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cyc = [c, -s, -c, s];
        let mut f = 1.0;
        let a: Vec<C64> = (0..=self.order())
            .map(|k| {
                if k > 0 {
                    f *= k as f64;
                }
                cyc[k % 4] / f
            })
            .collect();
        self.compose(&a)
    }

    pub fn div(&self, rhs: &Taylor) -> Taylor {
        self * &rhs.recip()
    }
}

fn common(a: &Taylor, b: &Taylor) -> &'static Space {
    assert_eq!(a.dim(), b.dim(), "Taylor dimension mismatch");
    if a.order() <= b.order() {
        a.sp
    } else {
        b.sp
    }
}

impl<'b> Add<&'b Taylor> for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &'b Taylor) -> Taylor {
        let sp = common(self, rhs);
        let c = (0..sp.len()).map(|i| self.c[i] + rhs.c[i]).collect();
        Taylor { sp, c }
    }
}

impl<'b> Sub<&'b Taylor> for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &'b Taylor) -> Taylor {
        let sp = common(self, rhs);
        let c = (0..sp.len()).map(|i| self.c[i] - rhs.c[i]).collect();
        Taylor { sp, c }
    }
}

impl<'b> Mul<&'b Taylor> for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &'b Taylor) -> Taylor {
        let sp = common(self, rhs);
        let mut c = vec![C64::new(0.0, 0.0); sp.len()];
        for &(i, j, k) in &sp.mul {
            c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        Taylor { sp, c }
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        Taylor { sp: self.sp, c: self.c.iter().map(|z| -z).collect() }
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        -&self
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor {
                (&self).$m(&rhs)
            }
        }
        impl<'b> $tr<&'b Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: &'b Taylor) -> Taylor {
                (&self).$m(rhs)
            }
        }
        impl $tr<Taylor> for &Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor {
                self.$m(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl AddAssign<&Taylor> for Taylor {
    fn add_assign(&mut self, rhs: &Taylor) {
        if rhs.order() < self.order() {
            *self = &*self + rhs;
            return;
        }
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a += b;
        }
    }
}

impl AddAssign<Taylor> for Taylor {
    fn add_assign(&mut self, rhs: Taylor) {
        *self += &rhs;
    }
}

impl SubAssign<&Taylor> for Taylor {
    fn sub_assign(&mut self, rhs: &Taylor) {
        if rhs.order() < self.order() {
            *self = &*self - rhs;
            return;
        }
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            *a -= b;
        }
    }
}

impl Mul<C64> for &Taylor {
    type Output = Taylor;
    fn mul(self, s: C64) -> Taylor {
        self.scale(s)
    }
}

impl Mul<C64> for Taylor {
    type Output = Taylor;
    fn mul(self, s: C64) -> Taylor {
        self.scale(s)
    }
}

impl Mul<f64> for &Taylor {
    type Output = Taylor;
    fn mul(self, s: f64) -> Taylor {
        self.scale_re(s)
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(self, s: f64) -> Taylor {
        self.scale_re(s)
    }
}

/// Sum of a non-empty sequence of polynomials.
pub fn sum<I: IntoIterator<Item = Taylor>>(it: I) -> Option<Taylor> {
    let mut acc: Option<Taylor> = None;
    for t in it {
        acc = Some(match acc {
            None => t,
            Some(mut a) => {
                a += &t;
                a
            }
        });
    }
    acc
}
