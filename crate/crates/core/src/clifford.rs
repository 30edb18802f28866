//! The Clifford algebra `C_{2n}(−1)` acting on `Λ*_C(n)`.
//!
//! Basis monomials `ω^{j_1} ∧ … ∧ ω^{j_k}` are bitmasks over `{1..n}` (bit
//! `j − 1` for `ω^j`). With the exterior product `ε_j` and the contraction `ι_j`,
//! the generators are `E_{2j−1} = ε_j − ι_j` and `E_{2j} = i(ε_j + ι_j)`; they
//! satisfy `E_aE_b + E_bE_a = −2δ_ab`. A real orthonormal frame `e_1..e_{2n}` acts
//! through `e_a ↦ E_a`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_RANK: usize = 8;

/// Exact Gaussian integer `re + i·im`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

impl GaussInt {
    pub const ZERO: GaussInt = GaussInt { re: 0, im: 0 };
    pub const ONE: GaussInt = GaussInt { re: 1, im: 0 };
    pub const I: GaussInt = GaussInt { re: 0, im: 1 };

    pub fn new(re: i64, im: i64) -> Self {
        GaussInt { re, im }
    }

    pub fn to_c64(self) -> C64 {
        C64::new(self.re as f64, self.im as f64)
    }
}

impl Add for GaussInt {
    type Output = GaussInt;
    fn add(self, o: GaussInt) -> GaussInt {
        GaussInt::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for GaussInt {
    type Output = GaussInt;
    fn sub(self, o: GaussInt) -> GaussInt {
        GaussInt::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;
    fn mul(self, o: GaussInt) -> GaussInt {
        GaussInt::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;
    fn neg(self) -> GaussInt {
        GaussInt::new(-self.re, -self.im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(mask: usize) -> Parity {
        if mask.count_ones() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Coefficients over the `2^n` exterior monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct Spinor {
    pub n: usize,
    pub coeffs: Vec<C64>,
}

impl Spinor {
    pub fn zero(n: usize) -> Spinor {
        Spinor { n, coeffs: vec![C64::new(0.0, 0.0); 1 << n] }
    }

    /// The monomial `ω^{j_1} ∧ …` for `j` in `subset` (1-based, increasing).
    pub fn monomial(n: usize, subset: &[usize]) -> Spinor {
        let mut s = Spinor::zero(n);
        let mask = subset.iter().fold(0usize, |m, &j| {
            assert!((1..=n).contains(&j), "monomial index {} outside 1..={}", j, n);
            m | (1 << (j - 1))
        });
        s.coeffs[mask] = C64::new(1.0, 0.0);
        s
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<C64>) -> Result<Spinor> {
        if coeffs.len() != 1 << n {
            return Err(Error::RankMismatch { expected: 1 << n, got: coeffs.len() });
        }
        Ok(Spinor { n, coeffs })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Hermitian product, conjugate-linear in `self`.
    pub fn inner(&self, o: &Spinor) -> C64 {
        self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn add(&self, o: &Spinor) -> Spinor {
        Spinor { n: self.n, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Spinor) -> Spinor {
        Spinor { n: self.n, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: C64) -> Spinor {
        Spinor { n: self.n, coeffs: self.coeffs.iter().map(|a| a * s).collect() }
    }
}

/// A `2^n × 2^n` operator with exact Gaussian-integer entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordOp {
    pub n: usize,
    /// row-major, `m[row * dim + col]`
    pub m: Vec<GaussInt>,
}

fn sign_below(mask: usize, j: usize) -> i64 {
    if (mask & ((1 << j) - 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

impl CliffordOp {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn identity(n: usize) -> CliffordOp {
        let d = 1 << n;
        let mut m = vec![GaussInt::ZERO; d * d];
        for i in 0..d {
            m[i * d + i] = GaussInt::ONE;
        }
        CliffordOp { n, m }
    }

    pub fn zero(n: usize) -> CliffordOp {
        let d = 1 << n;
        CliffordOp { n, m: vec![GaussInt::ZERO; d * d] }
    }

    /// Exterior multiplication `ε_j = ω^j ∧ ·` (1-based `j`).
    pub fn exterior(n: usize, j: usize) -> CliffordOp {
        let mut op = CliffordOp::zero(n);
        let d = 1 << n;
        let b = j - 1;
        for col in 0..d {
            if col & (1 << b) == 0 {
                op.m[(col | (1 << b)) * d + col] = GaussInt::new(sign_below(col, b), 0);
            }
        }
        op
    }

    /// Contraction `ι_j` removing `ω^j` with the sign of its position.
    pub fn contraction(n: usize, j: usize) -> CliffordOp {
        let mut op = CliffordOp::zero(n);
        let d = 1 << n;
        let b = j - 1;
        for col in 0..d {
            if col & (1 << b) != 0 {
                op.m[(col & !(1 << b)) * d + col] = GaussInt::new(sign_below(col, b), 0);
            }
        }
        op
    }

    pub fn scale(&self, s: GaussInt) -> CliffordOp {
        CliffordOp { n: self.n, m: self.m.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, o: &CliffordOp) -> CliffordOp {
        CliffordOp { n: self.n, m: self.m.iter().zip(&o.m).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, o: &CliffordOp) -> CliffordOp {
        CliffordOp { n: self.n, m: self.m.iter().zip(&o.m).map(|(&a, &b)| a - b).collect() }
    }

    /// Operator product `self ∘ o`.
    pub fn compose(&self, o: &CliffordOp) -> CliffordOp {
        let d = self.dim();
        let mut m = vec![GaussInt::ZERO; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.m[i * d + k];
                if a == GaussInt::ZERO {
                    continue;
                }
                for j in 0..d {
                    m[i * d + j] = m[i * d + j] + a * o.m[k * d + j];
                }
            }
        }
        CliffordOp { n: self.n, m }
    }

    pub fn adjoint(&self) -> CliffordOp {
        let d = self.dim();
        let mut m = vec![GaussInt::ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                let x = self.m[j * d + i];
                m[i * d + j] = GaussInt::new(x.re, -x.im);
            }
        }
        CliffordOp { n: self.n, m }
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|&x| x == GaussInt::ZERO)
    }

    pub fn to_complex(&self) -> Vec<C64> {
        self.m.iter().map(|x| x.to_c64()).collect()
    }

    pub fn apply(&self, psi: &Spinor) -> Result<Spinor> {
        if psi.n != self.n {
            return Err(Error::RankMismatch { expected: self.n, got: psi.n });
        }
        Ok(Spinor { n: self.n, coeffs: apply_matrix(&self.to_complex(), &psi.coeffs) })
    }
}

/// Dense complex matrix-vector product for a square row-major matrix.
pub fn apply_matrix(m: &[C64], v: &[C64]) -> Vec<C64> {
    let d = v.len();
    (0..d).map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum()).collect()
}

/// `E_a` for `1 ≤ a ≤ 2n`.
pub fn generator(n: usize, a: usize) -> Result<CliffordOp> {
    if n == 0 || n > MAX_RANK {
        return Err(Error::InvalidArgument(format!("rank {} outside 1..={}", n, MAX_RANK)));
    }
    if a == 0 || a > 2 * n {
        return Err(Error::IndexOutOfRange { index: a, max: 2 * n });
    }
    let j = a.div_ceil(2);
    let eps = CliffordOp::exterior(n, j);
    let iota = CliffordOp::contraction(n, j);
    Ok(if a % 2 == 1 { eps.sub(&iota) } else { eps.add(&iota).scale(GaussInt::I) })
}

/// All generators `E_1..E_{2n}`.
pub fn generators(n: usize) -> Result<Vec<CliffordOp>> {
    (1..=2 * n).map(|a| generator(n, a)).collect()
}

/// Product `E_{w_1} E_{w_2} … E_{w_k}` (the rightmost acts first).
pub fn word_operator(n: usize, word: &[usize]) -> Result<CliffordOp> {
    let mut op = CliffordOp::identity(n);
    for &a in word {
        op = op.compose(&generator(n, a)?);
    }
    Ok(op)
}

/// Apply the product `E_{w_1} ⋯ E_{w_k}` to `ψ`.
pub fn apply_word(word: &[usize], psi: &Spinor) -> Result<Spinor> {
    word_operator(psi.n, word)?.apply(psi)
}

pub fn grade_projection(psi: &Spinor, parity: Parity) -> Spinor {
    let coeffs = psi
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, &c)| if Parity::of(m) == parity { c } else { C64::new(0.0, 0.0) })
        .collect();
    Spinor { n: psi.n, coeffs }
}

/// `Σ_{β=1}^n E_β E_{n+β}` as an exact operator.
pub fn key_operator(n: usize) -> Result<CliffordOp> {
    let mut acc = CliffordOp::zero(n);
    for b in 1..=n {
        acc = acc.add(&generator(n, b)?.compose(&generator(n, n + b)?));
    }
    Ok(acc)
}

/// Operator norm of `Σ_β E_β E_{n+β}` restricted to the given parity subspace.
pub fn key_operator_norm(n: usize, parity: Parity) -> Result<f64> {
    let k = key_operator(n)?;
    let d = k.dim();
    let idx: Vec<usize> = (0..d).filter(|&m| Parity::of(m) == parity).collect();
    // the operator preserves parity, so restricting rows and columns is exact
    let sub: Vec<GaussInt> = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| k.m[i * d + j]).collect();
    if sub.iter().all(|&x| x == GaussInt::ZERO) {
        return Ok(0.0);
    }
    let m = idx.len();
    let mat = nalgebra::DMatrix::from_fn(m, m, |i, j| sub[i * m + j].to_c64());
    let sv = mat.singular_values();
    Ok(sv.iter().cloned().fold(0.0, f64::max))
}

/// `⟨ψ, E_1E_3E_2E_4 ψ⟩` for rank-2 spinors.
pub fn quartic_form(psi: &Spinor) -> Result<C64> {
    if psi.n != 2 {
        return Err(Error::RankMismatch { expected: 2, got: psi.n });
    }
    Ok(psi.inner(&apply_word(&[1, 3, 2, 4], psi)?))
}

/// Precomputed complex generator matrices and their pairwise products.
#[derive(Clone, Debug)]
pub struct CliffordTables {
    pub n: usize,
    /// `gens[a]` is `E_{a+1}`
    pub gens: Vec<Vec<C64>>,
    /// `pairs[a][b]` is `E_{a+1} E_{b+1}`
    pub pairs: Vec<Vec<Vec<C64>>>,
}

impl CliffordTables {
    pub fn new(n: usize) -> Result<CliffordTables> {
        let ops = generators(n)?;
        let gens = ops.iter().map(|g| g.to_complex()).collect();
        let pairs = ops.iter().map(|a| ops.iter().map(|b| a.compose(b).to_complex()).collect()).collect();
        Ok(CliffordTables { n, gens, pairs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_generator_rank_one() {
        let e1 = generator(1, 1).unwrap();
        let one = Spinor::monomial(1, &[]);
        let w = Spinor::monomial(1, &[1]);
        assert_eq!(e1.apply(&one).unwrap(), w);
        assert_eq!(e1.apply(&w).unwrap(), one.scale(C64::new(-1.0, 0.0)));
    }

    #[test]
    fn generators_are_unitary() {
        for n in 1..=4 {
            for g in generators(n).unwrap() {
                assert_eq!(g.adjoint().compose(&g), CliffordOp::identity(n));
            }
        }
    }

    #[test]
    fn out_of_range_generator() {
        assert!(matches!(generator(2, 5), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(generator(2, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn key_formula_rows() {
        let k = CliffordOp::from_word_sum(2, &[&[1, 3], &[2, 4]]);
        let one = Spinor::monomial(2, &[]);
        let w1 = Spinor::monomial(2, &[1]);
        let w2 = Spinor::monomial(2, &[2]);
        let w12 = Spinor::monomial(2, &[1, 2]);
        assert_eq!(k.apply(&one).unwrap(), Spinor::zero(2));
        assert_eq!(k.apply(&w12).unwrap(), Spinor::zero(2));
        assert_eq!(k.apply(&w1).unwrap(), w2.scale(C64::new(2.0, 0.0)));
        assert_eq!(k.apply(&w2).unwrap(), w1.scale(C64::new(-2.0, 0.0)));
    }

    #[test]
    fn empty_word_is_identity() {
        let psi = Spinor::from_coeffs(2, vec![C64::new(1.0, 2.0), C64::new(0.5, 0.0), C64::new(0.0, -1.0), C64::new(3.0, 0.0)]).unwrap();
        assert_eq!(apply_word(&[], &psi).unwrap(), psi);
    }

    #[test]
    fn quartic_on_basis() {
        assert_eq!(quartic_form(&Spinor::monomial(2, &[])).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(quartic_form(&Spinor::monomial(2, &[1, 2])).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(quartic_form(&Spinor::zero(2)).unwrap(), C64::new(0.0, 0.0));
        assert!(quartic_form(&Spinor::zero(3)).is_err());
    }

    #[test]
    fn grade_projection_basics() {
        let psi = Spinor::monomial(2, &[]).add(&Spinor::monomial(2, &[1]));
        assert_eq!(grade_projection(&psi, Parity::Even), Spinor::monomial(2, &[]));
        let w12 = Spinor::monomial(2, &[1, 2]);
        assert_eq!(grade_projection(&w12, Parity::Even), w12);
    }
}

impl CliffordOp {
    /// `Σ_words E_{w_1}⋯E_{w_k}`; panics on invalid indices (test and table helper).
    pub fn from_word_sum(n: usize, words: &[&[usize]]) -> CliffordOp {
        words
            .iter()
            .map(|w| word_operator(n, w).expect("valid word"))
            .fold(CliffordOp::zero(n), |a, b| a.add(&b))
    }
}
