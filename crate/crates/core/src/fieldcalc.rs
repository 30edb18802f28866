//! Fields on a coordinate chart, their jets, brackets, exterior derivatives,
//! wedge evaluation and surface integrals over Heisenberg spheres.

use crate::error::{Error, Result};
use crate::forms::Form;
use crate::quadrature::{compensated_sum, compensated_sum_c, QuadratureSpec, ShellSpec, SurfaceNode};
use crate::taylor::Taylor;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

/// Chart point `(x_1..x_n, y_1..y_n, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {:?}", coords)));
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Value and first/second partial derivatives of every component.
#[derive(Clone, Debug)]
pub struct Jet {
    pub order: usize,
    pub value: Vec<C64>,
    /// `d1[c][i] = ∂_i f_c`
    pub d1: Vec<Vec<C64>>,
    /// `d2[c][i][j] = ∂_i ∂_j f_c`
    pub d2: Vec<Vec<Vec<C64>>>,
}

impl Jet {
    pub fn from_taylor(comps: &[Taylor], order: usize) -> Jet {
        let dim = comps.first().map(|t| t.dim()).unwrap_or(0);
        let value = comps.iter().map(|t| t.value()).collect();
        let d1 = if order >= 1 {
            comps.iter().map(|t| (0..dim).map(|i| t.d1(i)).collect()).collect()
        } else {
            Vec::new()
        };
        let d2 = if order >= 2 {
            comps
                .iter()
                .map(|t| (0..dim).map(|i| (0..dim).map(|j| t.d2(i, j)).collect()).collect())
                .collect()
        } else {
            Vec::new()
        };
        Jet { order, value, d1, d2 }
    }

    /// Largest asymmetry `|d2[c][i][j] − d2[c][j][i]|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in &self.d2 {
            for i in 0..m.len() {
                for j in 0..i {
                    worst = worst.max((m[i][j] - m[j][i]).norm());
                }
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Scalar,
    Vector,
    Form(usize),
    Spinor(usize),
}

type EvalFn = dyn Fn(&[Taylor]) -> Vec<Taylor> + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A field given by a closed-form expression in Taylor arithmetic.
#[derive(Clone)]
pub struct FieldExpr {
    pub name: String,
    pub arity: Arity,
    pub dim: usize,
    eval: Arc<EvalFn>,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldExpr({}, {:?}, dim {})", self.name, self.arity, self.dim)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Masks of popcount `k` in increasing numeric order of their sorted index lists.
pub fn multi_indices(dim: usize, k: usize) -> Vec<u32> {
    fn rec(start: usize, dim: usize, k: usize, cur: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(cur);
            return;
        }
        for i in start..dim {
            rec(i + 1, dim, k - 1, cur | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    rec(0, dim, k, 0, &mut out);
    out
}

impl FieldExpr {
    pub fn new<F, D>(name: &str, arity: Arity, dim: usize, eval: F, domain: D) -> FieldExpr
    where
        F: Fn(&[Taylor]) -> Vec<Taylor> + Send + Sync + 'static,
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        FieldExpr { name: name.to_string(), arity, dim, eval: Arc::new(eval), domain: Arc::new(domain) }
    }

    /// Field smooth on the whole chart.
    pub fn everywhere<F>(name: &str, arity: Arity, dim: usize, eval: F) -> FieldExpr
    where
        F: Fn(&[Taylor]) -> Vec<Taylor> + Send + Sync + 'static,
    {
        FieldExpr::new(name, arity, dim, eval, |_| true)
    }

    pub fn components(&self) -> usize {
        match self.arity {
            Arity::Scalar => 1,
            Arity::Vector => self.dim,
            Arity::Form(k) => binomial(self.dim, k),
            Arity::Spinor(n) => 1 << n,
        }
    }

    pub fn in_domain(&self, p: &[f64]) -> bool {
        (self.domain)(p)
    }

    pub fn check_domain(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::RankMismatch { expected: self.dim, got: p.len() });
        }
        if !self.in_domain(p) {
            return Err(Error::Domain { field: self.name.clone(), point: p.to_vec() });
        }
        Ok(())
    }

    /// Evaluate on Taylor arguments (composition with another expansion).
    pub fn apply(&self, x: &[Taylor]) -> Vec<Taylor> {
        (self.eval)(x)
    }

    /// Taylor expansion of every component at `p` to the given order.
    pub fn taylor(&self, p: &[f64], order: usize) -> Result<Vec<Taylor>> {
        self.check_domain(p)?;
        let out = (self.eval)(&Taylor::vars(p, order));
        if out.len() != self.components() {
            return Err(Error::RankMismatch { expected: self.components(), got: out.len() });
        }
        if out.iter().any(|t| t.coeffs().iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::Domain { field: self.name.clone(), point: p.to_vec() });
        }
        Ok(out)
    }

    pub fn value(&self, p: &[f64]) -> Result<Vec<C64>> {
        Ok(self.taylor(p, 0)?.iter().map(|t| t.value()).collect())
    }

    /// Central finite-difference jet (cross-check oracle), step
    /// `h_i = h_rel · max(1, |p_i|)`.
    pub fn fd_jet(&self, p: &[f64], h_rel: f64) -> Result<Jet> {
        let dim = p.len();
        let f = |q: &[f64]| self.value(q);
        let v0 = f(p)?;
        let h: Vec<f64> = p.iter().map(|x| h_rel * x.abs().max(1.0)).collect();
        let shifted = |moves: &[(usize, f64)]| {
            let mut q = p.to_vec();
            for &(i, s) in moves {
                q[i] += s;
            }
            f(&q)
        };
        let nc = v0.len();
        let mut d1 = vec![vec![C64::new(0.0, 0.0); dim]; nc];
        let mut d2 = vec![vec![vec![C64::new(0.0, 0.0); dim]; dim]; nc];
        for i in 0..dim {
            let fp = shifted(&[(i, h[i])])?;
            let fm = shifted(&[(i, -h[i])])?;
            for c in 0..nc {
                d1[c][i] = (fp[c] - fm[c]) / (2.0 * h[i]);
                d2[c][i][i] = (fp[c] - v0[c] * 2.0 + fm[c]) / (h[i] * h[i]);
            }
            for j in 0..i {
                let pp = shifted(&[(i, h[i]), (j, h[j])])?;
                let pm = shifted(&[(i, h[i]), (j, -h[j])])?;
                let mp = shifted(&[(i, -h[i]), (j, h[j])])?;
                let mm = shifted(&[(i, -h[i]), (j, -h[j])])?;
                for c in 0..nc {
                    let v = (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h[i] * h[j]);
                    d2[c][i][j] = v;
                    d2[c][j][i] = v;
                }
            }
        }
        Ok(Jet { order: 2, value: v0, d1, d2 })
    }
}

/// Exact jet of `field` at `p` up to order 2.
pub fn jet_eval(field: &FieldExpr, p: &Point, order: usize) -> Result<Jet> {
    if order > 2 {
        return Err(Error::OrderTooHigh(order));
    }
    let t = field.taylor(&p.coords, order)?;
    Ok(Jet::from_taylor(&t, order))
}

/// `[X, Y]^k = X(Y^k) − Y(X^k)` at `p`.
pub fn lie_bracket(x: &FieldExpr, y: &FieldExpr, p: &Point) -> Result<Vec<C64>> {
    for f in [x, y] {
        if f.arity != Arity::Vector {
            return Err(Error::InvalidArgument(format!("{} is not a vector field", f.name)));
        }
    }
    let xt = x.taylor(&p.coords, 1)?;
    let yt = y.taylor(&p.coords, 1)?;
    Ok(bracket_taylor(&xt, &yt).iter().map(|t| t.value()).collect())
}

/// Bracket of Taylor-valued vector fields (result has one order less).
pub fn bracket_taylor(x: &[Taylor], y: &[Taylor]) -> Vec<Taylor> {
    (0..x.len()).map(|k| y[k].directional(x) - x[k].directional(y)).collect()
}

/// A differential form field: components per increasing multi-index.
#[derive(Clone, Debug)]
pub struct KForm {
    pub field: FieldExpr,
    pub degree: usize,
}

impl KForm {
    pub fn new(field: FieldExpr) -> Result<KForm> {
        match field.arity {
            Arity::Form(k) => Ok(KForm { field, degree: k }),
            Arity::Scalar => Ok(KForm { field, degree: 0 }),
            _ => Err(Error::InvalidArgument(format!("{} is not a form", field.name))),
        }
    }

    /// Form field from a closure producing a Taylor-coefficient form.
    pub fn from_form<F>(name: &str, dim: usize, degree: usize, f: F) -> KForm
    where
        F: Fn(&[Taylor]) -> Form<Taylor> + Send + Sync + 'static,
    {
        KForm::from_form_on(name, dim, degree, f, |_| true)
    }

    pub fn from_form_on<F, D>(name: &str, dim: usize, degree: usize, f: F, domain: D) -> KForm
    where
        F: Fn(&[Taylor]) -> Form<Taylor> + Send + Sync + 'static,
        D: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        let masks = multi_indices(dim, degree);
        let eval = move |x: &[Taylor]| {
            let w = f(x);
            let sp = x[0].space();
            masks
                .iter()
                .map(|m| w.coefficient(*m).cloned().unwrap_or_else(|| Taylor::zero(sp)))
                .collect()
        };
        KForm { field: FieldExpr::new(name, Arity::Form(degree), dim, eval, domain), degree }
    }

    pub fn dim(&self) -> usize {
        self.field.dim
    }

    pub fn taylor_form(&self, p: &[f64], order: usize) -> Result<Form<Taylor>> {
        let comps = self.field.taylor(p, order)?;
        let masks = multi_indices(self.dim(), self.degree);
        Ok(Form::from_terms(self.dim(), self.degree, masks.into_iter().zip(comps).collect()))
    }

    pub fn at(&self, p: &[f64]) -> Result<Form<C64>> {
        Ok(self.taylor_form(p, 0)?.value())
    }

    pub fn eval(&self, p: &Point, vectors: &[Vec<C64>]) -> Result<C64> {
        if vectors.len() != self.degree {
            return Err(Error::DegreeMismatch { degree: self.degree, args: vectors.len() });
        }
        self.at(&p.coords)?.eval(vectors)
    }
}

/// `dω(v_0, …, v_k) = Σ_i (−1)^i v_i(ω(v_0, …, v̂_i, …, v_k))` for the constant
/// extensions of the `v_i` (their brackets vanish).
pub fn exterior_derivative(w: &KForm, p: &Point, vectors: &[Vec<C64>]) -> Result<C64> {
    if vectors.len() != w.degree + 1 {
        return Err(Error::DegreeMismatch { degree: w.degree + 1, args: vectors.len() });
    }
    let tf = w.taylor_form(&p.coords, 1)?;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..vectors.len() {
        let rest: Vec<&Vec<C64>> =
            vectors.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).collect();
        // derivative of ω(rest) along v_i
        let mut dir = C64::new(0.0, 0.0);
        for (mask, c) in &tf.terms {
            let idx: Vec<usize> = (0..32).filter(|b| mask & (1 << b) != 0).collect();
            let k = idx.len();
            let mut m = vec![C64::new(0.0, 0.0); k * k];
            for (a, v) in rest.iter().enumerate() {
                for (b, &ix) in idx.iter().enumerate() {
                    m[a * k + b] = v[ix];
                }
            }
            let dval = crate::forms::det(&mut m, k);
            let dc: C64 = (0..w.dim()).map(|j| c.d1(j) * vectors[i][j]).sum();
            dir += dc * dval;
        }
        acc += if i % 2 == 0 { dir } else { -dir };
    }
    Ok(acc)
}

/// `(ω_1 ∧ ω_2)(v_1, …, v_{k+l})` by the alternating shuffle sum.
pub fn wedge_eval(w1: &KForm, w2: &KForm, p: &Point, vectors: &[Vec<C64>]) -> Result<C64> {
    let (k, l) = (w1.degree, w2.degree);
    if vectors.len() != k + l {
        return Err(Error::DegreeMismatch { degree: k + l, args: vectors.len() });
    }
    let a = w1.at(&p.coords)?;
    let b = w2.at(&p.coords)?;
    let mut acc = C64::new(0.0, 0.0);
    for mask in multi_indices(k + l, k) {
        let first: Vec<usize> = (0..k + l).filter(|i| mask & (1 << i) != 0).collect();
        let second: Vec<usize> = (0..k + l).filter(|i| mask & (1 << i) == 0).collect();
        // sign of the shuffle permutation (first ++ second)
        let mut inv = 0;
        for &i in &first {
            inv += second.iter().filter(|&&j| j < i).count();
        }
        let va: Vec<Vec<C64>> = first.iter().map(|&i| vectors[i].clone()).collect();
        let vb: Vec<Vec<C64>> = second.iter().map(|&i| vectors[i].clone()).collect();
        let term = a.eval(&va)? * b.eval(&vb)?;
        acc += if inv % 2 == 0 { term } else { -term };
    }
    Ok(acc)
}

/// `dx_1 ∧ dy_1 ∧ … ∧ dx_n ∧ dy_n ∧ dt`, the orientation of `θ̊ ∧ (dθ̊)^n`.
pub fn standard_orientation(n: usize) -> Form<C64> {
    let dim = 2 * n + 1;
    let one = C64::new(1.0, 0.0);
    let coord = |i: usize| {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = one;
        Form::one_form(v)
    };
    let mut w = Form::scalar(dim, one);
    for k in 0..n {
        w = w.wedge(&coord(k)).wedge(&coord(n + k));
    }
    w.wedge(&coord(2 * n))
}

/// Outward orientation sign of a sphere node: sign of `vol(∇ρ⁴, ∂_1P, …)`.
pub fn outward_sign(n: usize, node: &SurfaceNode) -> f64 {
    let x = &node.point;
    let z2: f64 = (0..n).map(|k| x[k] * x[k] + x[n + k] * x[n + k]).sum();
    let mut normal = vec![0.0; 2 * n + 1];
    for k in 0..n {
        normal[k] = 4.0 * z2 * x[k];
        normal[n + k] = 4.0 * z2 * x[n + k];
    }
    normal[2 * n] = 2.0 * x[2 * n];
    let mut vs = vec![normal];
    vs.extend(node.tangents.iter().cloned());
    let v = standard_orientation(n).eval_real(&vs).expect("top degree").re;
    v.signum()
}

/// Integral over the outward-oriented sphere of a `2n`-form given pointwise.
pub fn surface_integral_with<F>(spec: &QuadratureSpec, form_at: F) -> Result<C64>
where
    F: Fn(&[f64]) -> Result<Form<C64>> + Sync,
{
    spec.validate()?;
    let n = spec.n;
    let nodes = spec.nodes();
    let vals: Vec<Result<C64>> = nodes
        .par_iter()
        .map(|node| {
            let w = form_at(&node.point)?;
            if w.degree != 2 * n {
                return Err(Error::DegreeMismatch { degree: w.degree, args: 2 * n });
            }
            let v = w.eval_real(&node.tangents)?;
            Ok(v * (node.weight * outward_sign(n, node)))
        })
        .collect();
    let vals: Vec<C64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(compensated_sum_c(vals))
}

/// Integral of a `2n`-form field over the outward-oriented Heisenberg sphere.
pub fn surface_integral(w: &KForm, spec: &QuadratureSpec) -> Result<C64> {
    if w.dim() != 2 * spec.n + 1 {
        return Err(Error::RankMismatch { expected: 2 * spec.n + 1, got: w.dim() });
    }
    if w.degree != 2 * spec.n {
        return Err(Error::DegreeMismatch { degree: w.degree, args: 2 * spec.n });
    }
    surface_integral_with(spec, |x| w.at(x))
}

/// `∫ f dV̊` over a shell with `dV̊ = θ̊ ∧ (dθ̊)^n = 4^n n! dx dy dt`.
pub fn volume_integral<F>(shell: &ShellSpec, density: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let n = shell.sphere.n;
    let scale = 4f64.powi(n as i32) * (1..=n).product::<usize>() as f64;
    let vol = standard_orientation(n);
    let nodes = shell.nodes();
    let vals: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|node| {
            let jac = vol.eval_real(&node.tangents)?.re.abs();
            if jac == 0.0 {
                return Ok(0.0);
            }
            Ok(density(&node.point)? * jac * scale * node.weight)
        })
        .collect();
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(compensated_sum(vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho4(n: usize) -> FieldExpr {
        FieldExpr::everywhere("rho^4", Arity::Scalar, 2 * n + 1, move |x| {
            let z2 = crate::taylor::sum((0..n).map(|k| &x[k] * &x[k] + &x[n + k] * &x[n + k])).unwrap();
            vec![&z2 * &z2 + &x[2 * n] * &x[2 * n]]
        })
    }

    #[test]
    fn rho4_time_derivative() {
        let p = Point::new(vec![0.0, 0.0, 1.0]).unwrap();
        let j = jet_eval(&rho4(1), &p, 2).unwrap();
        assert!((j.d1[0][2] - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(matches!(jet_eval(&rho4(1), &p, 3), Err(Error::OrderTooHigh(3))));
    }

    #[test]
    fn domain_violation_is_an_error() {
        let f = FieldExpr::new(
            "rho^-2",
            Arity::Scalar,
            3,
            |x| vec![(&(&x[0] * &x[0] + &x[1] * &x[1]).powi(2) + &(&x[2] * &x[2])).powf(-0.5)],
            |p| p.iter().any(|&c| c != 0.0),
        );
        let o = Point::new(vec![0.0; 3]).unwrap();
        assert!(matches!(jet_eval(&f, &o, 1), Err(Error::Domain { .. })));
    }

    #[test]
    fn wedge_paths_agree() {
        let dim = 3;
        let a = KForm::from_form("a", dim, 1, |x| Form::one_form(vec![x[0].clone(), x[2].sin(), x[1].clone()]));
        let b = KForm::from_form("b", dim, 1, |x| {
            Form::one_form(vec![x[1].exp(), Taylor::real(x[0].space(), 2.0), &x[0] * &x[2]])
        });
        let p = Point::new(vec![0.4, -0.3, 0.9]).unwrap();
        let v = vec![
            vec![C64::new(1.0, 0.2), C64::new(0.0, 0.0), C64::new(-0.5, 0.0)],
            vec![C64::new(0.3, 0.0), C64::new(2.0, -1.0), C64::new(0.1, 0.0)],
        ];
        let direct = a.at(&p.coords).unwrap().wedge(&b.at(&p.coords).unwrap()).eval(&v).unwrap();
        let shuffle = wedge_eval(&a, &b, &p, &v).unwrap();
        assert!((direct - shuffle).norm() < 1e-13);
    }
}
