//! Exterior algebra over a coordinate chart of dimension ≤ 32.
//!
//! A form is a sparse list of `(mask, coefficient)` pairs where the bits of
//! `mask` are the coordinate indices of `dx_{i_1} ∧ … ∧ dx_{i_k}`, `i_1 < … < i_k`.
//! Evaluation uses the determinant convention
//! `(η ∧ ϑ)(V, W) = η(V)ϑ(W) − η(W)ϑ(V)`.

use crate::error::{Error, Result};
use crate::taylor::Taylor;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

/// Coefficient ring for forms: complex numbers or Taylor polynomials.
pub trait Coef: Clone {
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Coef for C64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

impl Coef for Taylor {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct Form<T: Coef> {
    pub dim: usize,
    pub degree: usize,
    pub terms: Vec<(u32, T)>,
}

/// Sign of `dx_I ∧ dx_J` relative to the sorted basis element, 0 if they overlap.
pub fn wedge_sign(i: u32, j: u32) -> i32 {
    if i & j != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut jj = j;
    while jj != 0 {
        let b = jj.trailing_zeros();
        let above = if b >= 31 { 0 } else { i & !((1u32 << (b + 1)) - 1) };
        swaps += above.count_ones();
        jj &= jj - 1;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

impl<T: Coef> Form<T> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Form { dim, degree, terms: Vec::new() }
    }

    pub fn scalar(dim: usize, c: T) -> Self {
        Form { dim, degree: 0, terms: vec![(0, c)] }
    }

    /// `Σ_i c_i dx_i`.
    pub fn one_form(coeffs: Vec<T>) -> Self {
        let dim = coeffs.len();
        let terms = coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (1u32 << i, c))
            .collect();
        Form { dim, degree: 1, terms }
    }

    /// Build from `(mask, coefficient)` pairs, merging duplicates.
    pub fn from_terms(dim: usize, degree: usize, terms: Vec<(u32, T)>) -> Self {
        let mut acc: BTreeMap<u32, T> = BTreeMap::new();
        for (m, c) in terms {
            debug_assert_eq!(m.count_ones() as usize, degree);
            match acc.get_mut(&m) {
                Some(v) => *v = v.add(&c),
                None => {
                    acc.insert(m, c);
                }
            }
        }
        Form { dim, degree, terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }

    pub fn coefficient(&self, mask: u32) -> Option<&T> {
        self.terms.iter().find(|(m, _)| *m == mask).map(|(_, c)| c)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.degree, o.degree, "adding forms of different degree");
        let mut t = self.terms.clone();
        t.extend(o.terms.iter().cloned());
        Form::from_terms(self.dim, self.degree, t)
    }

    pub fn neg(&self) -> Self {
        Form {
            dim: self.dim,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        let terms = self.terms.iter().map(|(m, c)| (*m, c.mul(s))).collect();
        Form::from_terms(self.dim, self.degree, terms)
    }

    pub fn wedge(&self, o: &Self) -> Self {
        let mut out = Vec::new();
        for (mi, ci) in &self.terms {
            for (mj, cj) in &o.terms {
                let s = wedge_sign(*mi, *mj);
                if s == 0 {
                    continue;
                }
                let c = ci.mul(cj);
                out.push((mi | mj, if s > 0 { c } else { c.neg() }));
            }
        }
        Form::from_terms(self.dim, self.degree + o.degree, out)
    }

    /// `k`-fold wedge power (`k = 0` gives the constant 1 built from `one`).
    pub fn power(&self, k: usize, one: T) -> Self {
        let mut r = Form::scalar(self.dim, one);
        for _ in 0..k {
            r = r.wedge(self);
        }
        r
    }

    /// Interior product `v ⌟ ω` with a coordinate vector.
    pub fn interior(&self, v: &[T]) -> Self {
        if self.degree == 0 {
            return Form::zero(self.dim, 0);
        }
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            for (pos, b) in bits(*m).into_iter().enumerate() {
                if v[b].is_zero() {
                    continue;
                }
                let term = c.mul(&v[b]);
                let term = if pos % 2 == 0 { term } else { term.neg() };
                out.push((m & !(1 << b), term));
            }
        }
        Form::from_terms(self.dim, self.degree - 1, out)
    }
}

impl Form<C64> {
    /// `ω(v_1, …, v_k)` as `Σ_I c_I det[v_a^{i_b}]`.
    pub fn eval(&self, vectors: &[Vec<C64>]) -> Result<C64> {
        if vectors.len() != self.degree {
            return Err(Error::DegreeMismatch { degree: self.degree, args: vectors.len() });
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut m = vec![C64::new(0.0, 0.0); self.degree * self.degree];
        for (mask, c) in &self.terms {
            let idx = bits(*mask);
            for (a, v) in vectors.iter().enumerate() {
                for (b, &i) in idx.iter().enumerate() {
                    m[a * self.degree + b] = v[i];
                }
            }
            acc += c * det(&mut m, self.degree);
        }
        Ok(acc)
    }

    pub fn eval_real(&self, vectors: &[Vec<f64>]) -> Result<C64> {
        let v: Vec<Vec<C64>> =
            vectors.iter().map(|x| x.iter().map(|&r| C64::new(r, 0.0)).collect()).collect();
        self.eval(&v)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }
}

impl Form<Taylor> {
    pub fn value(&self) -> Form<C64> {
        Form {
            dim: self.dim,
            degree: self.degree,
            terms: self.terms.iter().map(|(m, c)| (*m, c.value())).collect(),
        }
    }

    /// Coordinate exterior derivative `d(c dx_I) = Σ_i ∂_i c dx_i ∧ dx_I`.
    pub fn d(&self) -> Form<Taylor> {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            for i in 0..self.dim {
                let s = wedge_sign(1 << i, *m);
                if s == 0 {
                    continue;
                }
                let dc = c.deriv(i);
                out.push((m | (1 << i), if s > 0 { dc } else { -dc }));
            }
        }
        Form::from_terms(self.dim, self.degree + 1, out)
    }
}

/// Determinant by Gaussian elimination with partial pivoting (destroys `m`).
pub fn det(m: &mut [C64], k: usize) -> C64 {
    let mut d = C64::new(1.0, 0.0);
    for col in 0..k {
        let mut piv = col;
        let mut best = m[col * k + col].norm();
        for r in col + 1..k {
            let v = m[r * k + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != col {
            for c in 0..k {
                m.swap(piv * k + c, col * k + c);
            }
            d = -d;
        }
        let p = m[col * k + col];
        d *= p;
        for r in col + 1..k {
            let f = m[r * k + col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for c in col..k {
                let sub = f * m[col * k + c];
                m[r * k + c] -= sub;
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn basis(dim: usize, i: usize) -> Vec<C64> {
        let mut v = vec![c(0.0); dim];
        v[i] = c(1.0);
        v
    }

    #[test]
    fn dx_dy_orientation() {
        let dx = Form::one_form(vec![c(1.0), c(0.0)]);
        let dy = Form::one_form(vec![c(0.0), c(1.0)]);
        let w = dx.wedge(&dy);
        assert_eq!(w.eval(&[basis(2, 0), basis(2, 1)]).unwrap(), c(1.0));
        assert_eq!(w.eval(&[basis(2, 1), basis(2, 0)]).unwrap(), c(-1.0));
        assert!(dy.wedge(&dx).add(&w).terms.is_empty());
    }

    #[test]
    fn interior_matches_first_slot() {
        let a = Form::one_form(vec![c(1.0), c(2.0), c(-1.0)]);
        let b = Form::one_form(vec![c(0.5), c(0.0), c(3.0)]);
        let w = a.wedge(&b);
        let v = vec![c(0.3), c(-1.2), c(2.0)];
        let u = vec![c(1.0), c(0.7), c(0.1)];
        let lhs = w.interior(&v).eval(&[u.clone()]).unwrap();
        let rhs = w.eval(&[v, u]).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn coordinate_d_squares_to_zero() {
        let x = Taylor::vars(&[0.3, -0.8, 1.1], 3);
        let f = (&x[0] * &x[1]).exp() + &x[2].sin() * &x[0];
        let g = &x[1] * &x[2];
        let w = Form::one_form(vec![f, g, x[0].clone()]);
        let dd = w.d().d();
        for (_, cf) in &dd.terms {
            assert!(cf.max_abs() < 1e-13);
        }
    }
}
