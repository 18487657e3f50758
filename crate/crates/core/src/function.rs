//! Function representations: polynomial × Gaussian, grid samples, and
//! callables with exact partial derivatives.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{DunklError, Result};
use crate::measure::QuadratureGrid;

/// Sparse polynomial in N variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(vec![0; dim], c)
    }

    pub fn monomial(exponents: Vec<u32>, c: f64) -> Self {
        let dim = exponents.len();
        let mut p = Poly::zero(dim);
        p.add_term(exponents, c);
        p
    }

    pub fn var(dim: usize, j: usize) -> Self {
        let mut e = vec![0; dim];
        e[j] = 1;
        Self::monomial(e, 1.0)
    }

    /// Builds from (exponents, coefficient) pairs.
    pub fn from_terms(dim: usize, terms: &[(Vec<u32>, f64)]) -> Self {
        let mut p = Poly::zero(dim);
        for (e, c) in terms {
            assert_eq!(e.len(), dim, "exponent length must equal the dimension");
            p.add_term(e.clone(), *c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    fn add_term(&mut self, e: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let v = self.terms.get(&e).copied().unwrap_or(0.0) + c;
        if v == 0.0 {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, v);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn mul_var(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            let mut e = e.clone();
            e[j] += 1;
            out.add_term(e, *c);
        }
        out
    }

    /// ∂_j.
    pub fn deriv(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[j] > 0 {
                let mut e2 = e.clone();
                e2[j] -= 1;
                out.add_term(e2, c * e[j] as f64);
            }
        }
        out
    }

    /// Coordinate Dunkl operator for a ℤ₂ factor: x_j^n ↦ (n + 2k[n odd]) x_j^{n−1}.
    pub fn dunkl(&self, j: usize, k: f64) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            let n = e[j];
            if n > 0 {
                let mut e2 = e.clone();
                e2[j] -= 1;
                let factor = n as f64 + if n % 2 == 1 { 2.0 * k } else { 0.0 };
                out.add_term(e2, c * factor);
            }
        }
        out
    }

    /// P ∘ σ_j, σ_j flipping the sign of x_j.
    pub fn flip(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            let s = if e[j] % 2 == 1 { -1.0 } else { 1.0 };
            out.add_term(e.clone(), c * s);
        }
        out
    }

    /// (∂_j P − P_odd/x_j)/x_j where P_odd is the odd-in-x_j part; always a
    /// polynomial (x^n ↦ n x^{n−2} for even n, (n−1) x^{n−2} for odd n).
    pub fn laplace_difference(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            let n = e[j];
            if n >= 2 {
                let mut e2 = e.clone();
                e2[j] -= 2;
                let factor = if n % 2 == 0 { n as f64 } else { (n - 1) as f64 };
                out.add_term(e2, c * factor);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .map(|(&p, &v)| v.powi(p as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

/// P(x) · exp(−Σ_j a_j x_j²).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGauss {
    pub poly: Poly,
    pub gauss: Vec<f64>,
}

impl PolyGauss {
    pub fn new(poly: Poly, gauss: Vec<f64>) -> Result<Self> {
        if gauss.len() != poly.dim() {
            return Err(DunklError::InvalidArgument(
                "Gaussian exponent count must equal the dimension".into(),
            ));
        }
        if gauss.iter().any(|a| !(*a > 0.0)) {
            return Err(DunklError::InvalidArgument(
                "Gaussian exponents must be positive".into(),
            ));
        }
        Ok(PolyGauss { poly, gauss })
    }

    /// exp(−a‖x‖²).
    pub fn gaussian(dim: usize, a: f64) -> Self {
        PolyGauss {
            poly: Poly::constant(dim, 1.0),
            gauss: vec![a; dim],
        }
    }

    pub fn zero(dim: usize) -> Self {
        PolyGauss {
            poly: Poly::zero(dim),
            gauss: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let q: f64 = self.gauss.iter().zip(x).map(|(a, v)| a * v * v).sum();
        self.poly.eval(x) * (-q).exp()
    }

    pub fn scale(&self, s: f64) -> PolyGauss {
        PolyGauss {
            poly: self.poly.scale(s),
            gauss: self.gauss.clone(),
        }
    }

    pub fn mul(&self, other: &PolyGauss) -> PolyGauss {
        PolyGauss {
            poly: self.poly.mul(&other.poly),
            gauss: self.gauss.iter().zip(&other.gauss).map(|(a, b)| a + b).collect(),
        }
    }

    /// Sum of two functions with the same Gaussian factor.
    pub fn add(&self, other: &PolyGauss) -> Result<PolyGauss> {
        if self.gauss != other.gauss {
            return Err(DunklError::InvalidArgument(
                "PolyGauss sum needs identical Gaussian exponents".into(),
            ));
        }
        Ok(PolyGauss {
            poly: self.poly.add(&other.poly),
            gauss: self.gauss.clone(),
        })
    }

    /// ∂_j.
    pub fn deriv(&self, j: usize) -> PolyGauss {
        let p = self
            .poly
            .deriv(j)
            .add(&self.poly.mul_var(j).scale(-2.0 * self.gauss[j]));
        PolyGauss {
            poly: p,
            gauss: self.gauss.clone(),
        }
    }

    /// ∂^β for a multi-index β.
    pub fn partial(&self, beta: &[usize]) -> PolyGauss {
        let mut f = self.clone();
        for (j, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                f = f.deriv(j);
            }
        }
        f
    }

    /// Coordinate Dunkl operator T_j for multiplicity k_j.
    pub fn dunkl(&self, j: usize, k: f64) -> PolyGauss {
        let p = self
            .poly
            .dunkl(j, k)
            .add(&self.poly.mul_var(j).scale(-2.0 * self.gauss[j]));
        PolyGauss {
            poly: p,
            gauss: self.gauss.clone(),
        }
    }

    /// T_ξ = Σ ξ_j T_j on a product system.
    pub fn dunkl_dir(&self, xi: &[f64], ks: &[f64]) -> PolyGauss {
        let mut p = Poly::zero(self.dim());
        for (j, (&c, &k)) in xi.iter().zip(ks).enumerate() {
            if c != 0.0 {
                p = p.add(&self.dunkl(j, k).poly.scale(c));
            }
        }
        PolyGauss {
            poly: p,
            gauss: self.gauss.clone(),
        }
    }

    pub fn flip(&self, j: usize) -> PolyGauss {
        PolyGauss {
            poly: self.poly.flip(j),
            gauss: self.gauss.clone(),
        }
    }
}

/// Σ_m P_m(x) H^{(m)}(‖x‖²) exp(−Σ a_j x_j²) with H(ρ) = exp(√(1 + s²ρ)),
/// so H(‖x‖²) = η(x, s). Closed under T_j on product systems because every
/// factor other than P_m is even in each coordinate.
#[derive(Debug, Clone)]
pub struct EtaProduct {
    pub s: f64,
    pub gauss: Vec<f64>,
    pub terms: Vec<Poly>,
}

/// p_m with H^{(m)}(ρ) = e^u (s²/2)^m p_m(1/u), u = √(1+s²ρ);
/// p_0 = 1, p_{m+1}(v) = v p_m(v) − v³ p_m'(v).
pub fn eta_derivative_polys(order: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    for m in 0..order {
        let p = &out[m];
        let mut next = vec![0.0; p.len() + 3];
        for (i, &c) in p.iter().enumerate() {
            next[i + 1] += c;
            if i > 0 {
                next[i + 2] -= c * i as f64;
            }
        }
        while next.len() > 1 && *next.last().unwrap() == 0.0 {
            next.pop();
        }
        out.push(next);
    }
    out
}

impl EtaProduct {
    /// g · η(·, s).
    pub fn from_polygauss(g: &PolyGauss, s: f64) -> Self {
        EtaProduct {
            s,
            gauss: g.gauss.clone(),
            terms: vec![g.poly.clone()],
        }
    }

    /// η(·, s) alone, without a Gaussian factor.
    pub fn eta(dim: usize, s: f64) -> Self {
        EtaProduct {
            s,
            gauss: vec![0.0; dim],
            terms: vec![Poly::constant(dim, 1.0)],
        }
    }

    fn dim(&self) -> usize {
        self.gauss.len()
    }

    fn shifted(&self, j: usize, k: Option<f64>) -> EtaProduct {
        let dim = self.dim();
        let mut terms = vec![Poly::zero(dim); self.terms.len() + 1];
        for (m, p) in self.terms.iter().enumerate() {
            let base = match k {
                Some(k) => p.dunkl(j, k),
                None => p.deriv(j),
            };
            terms[m] = terms[m]
                .add(&base)
                .add(&p.mul_var(j).scale(-2.0 * self.gauss[j]));
            terms[m + 1] = terms[m + 1].add(&p.mul_var(j).scale(2.0));
        }
        while terms.len() > 1 && terms.last().unwrap().is_zero() {
            terms.pop();
        }
        EtaProduct {
            s: self.s,
            gauss: self.gauss.clone(),
            terms,
        }
    }

    /// Coordinate Dunkl operator.
    pub fn dunkl(&self, j: usize, k: f64) -> EtaProduct {
        self.shifted(j, Some(k))
    }

    /// Euclidean partial derivative.
    pub fn deriv(&self, j: usize) -> EtaProduct {
        self.shifted(j, None)
    }

    pub fn dunkl_dir(&self, xi: &[f64], ks: &[f64]) -> EtaProduct {
        let mut acc: Option<EtaProduct> = None;
        for (j, (&c, &k)) in xi.iter().zip(ks).enumerate() {
            if c == 0.0 {
                continue;
            }
            let t = self.dunkl(j, k);
            acc = Some(match acc {
                None => t.scale(c),
                Some(a) => a.add(&t.scale(c)),
            });
        }
        acc.unwrap_or_else(|| EtaProduct {
            s: self.s,
            gauss: self.gauss.clone(),
            terms: vec![Poly::zero(self.dim())],
        })
    }

    fn scale(&self, c: f64) -> EtaProduct {
        EtaProduct {
            s: self.s,
            gauss: self.gauss.clone(),
            terms: self.terms.iter().map(|p| p.scale(c)).collect(),
        }
    }

    fn add(&self, other: &EtaProduct) -> EtaProduct {
        let n = self.terms.len().max(other.terms.len());
        let dim = self.dim();
        let terms = (0..n)
            .map(|m| {
                let a = self.terms.get(m).cloned().unwrap_or_else(|| Poly::zero(dim));
                match other.terms.get(m) {
                    Some(b) => a.add(b),
                    None => a,
                }
            })
            .collect();
        EtaProduct {
            s: self.s,
            gauss: self.gauss.clone(),
            terms,
        }
    }

    pub fn evaluator(&self) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        let polys = eta_derivative_polys(self.terms.len());
        move |x: &[f64]| self.eval_with(&polys, x)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let polys = eta_derivative_polys(self.terms.len());
        self.eval_with(&polys, x)
    }

    fn eval_with(&self, polys: &[Vec<f64>], x: &[f64]) -> f64 {
        let rho: f64 = x.iter().map(|v| v * v).sum();
        let s2 = self.s * self.s;
        let u = (1.0 + s2 * rho).sqrt();
        let v = 1.0 / u;
        let q: f64 = self.gauss.iter().zip(x).map(|(a, t)| a * t * t).sum();
        let mut total = 0.0;
        let mut pow = 1.0;
        for (m, p) in self.terms.iter().enumerate() {
            if !p.is_zero() {
                let pm = polys[m].iter().rev().fold(0.0, |acc, c| acc * v + c);
                total += p.eval(x) * pow * pm;
            }
            pow *= 0.5 * s2;
        }
        total * (u - q).exp()
    }
}

pub type DerivativeFn = dyn Fn(&[f64], &[usize]) -> f64 + Send + Sync;

/// A function given by an evaluator of ∂^β f(x) for |β| ≤ `max_order`;
/// β = 0 is the value.
#[derive(Clone)]
pub struct Callable {
    pub dim: usize,
    pub max_order: usize,
    pub eval: Arc<DerivativeFn>,
}

impl std::fmt::Debug for Callable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Callable")
            .field("dim", &self.dim)
            .field("max_order", &self.max_order)
            .finish()
    }
}

impl Callable {
    pub fn new<F>(dim: usize, max_order: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[usize]) -> f64 + Send + Sync + 'static,
    {
        Callable {
            dim,
            max_order,
            eval: Arc::new(f),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x, &vec![0; self.dim])
    }

    pub fn partial(&self, x: &[f64], beta: &[usize]) -> f64 {
        (self.eval)(x, beta)
    }

    /// Exact derivatives from a PolyGauss, to order 4.
    pub fn from_polygauss(f: &PolyGauss) -> Self {
        let f = f.clone();
        let dim = f.dim();
        Callable::new(dim, 4, move |x, beta| f.partial(beta).eval(x))
    }
}

/// Values on the nodes of one grid.
#[derive(Debug, Clone)]
pub struct GridSampled {
    pub grid: Arc<QuadratureGrid>,
    pub values: Vec<f64>,
}

impl GridSampled {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DunklError::InvalidArgument(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridSampled { grid, values })
    }

    pub fn same_grid(&self, other: &GridSampled) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
            || (self.grid.spec == other.grid.spec
                && self.grid.dimension == other.grid.dimension
                && self.grid.weights == other.grid.weights)
    }

    pub fn add(&self, other: &GridSampled) -> Result<GridSampled> {
        if !self.same_grid(other) {
            return Err(DunklError::InvalidArgument(
                "arithmetic between functions sampled on different grids".into(),
            ));
        }
        Ok(GridSampled {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub enum SmoothFunction {
    PolyGauss(PolyGauss),
    GridSampled(GridSampled),
    Callable(Callable),
}

impl From<PolyGauss> for SmoothFunction {
    fn from(f: PolyGauss) -> Self {
        SmoothFunction::PolyGauss(f)
    }
}

impl From<Callable> for SmoothFunction {
    fn from(f: Callable) -> Self {
        SmoothFunction::Callable(f)
    }
}

impl From<GridSampled> for SmoothFunction {
    fn from(f: GridSampled) -> Self {
        SmoothFunction::GridSampled(f)
    }
}

impl SmoothFunction {
    pub fn dim(&self) -> usize {
        match self {
            SmoothFunction::PolyGauss(f) => f.dim(),
            SmoothFunction::GridSampled(f) => f.grid.dimension,
            SmoothFunction::Callable(f) => f.dim,
        }
    }

    /// Pointwise value; grid samples are only known at their nodes.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            SmoothFunction::PolyGauss(f) => Ok(f.eval(x)),
            SmoothFunction::Callable(f) => Ok(f.value(x)),
            SmoothFunction::GridSampled(_) => Err(DunklError::Capability(
                "grid-sampled functions can only be read at their grid nodes".into(),
            )),
        }
    }

    /// Values at the nodes of `grid`.
    pub fn sample_on(&self, grid: &Arc<QuadratureGrid>) -> Result<Vec<f64>> {
        match self {
            SmoothFunction::GridSampled(g) => {
                if Arc::ptr_eq(&g.grid, grid) || (g.grid.spec == grid.spec && g.grid.weights == grid.weights) {
                    Ok(g.values.clone())
                } else {
                    Err(DunklError::InvalidArgument(
                        "grid-sampled function used on a different grid".into(),
                    ))
                }
            }
            SmoothFunction::PolyGauss(f) => Ok(grid.sample(|x| f.eval(x))),
            SmoothFunction::Callable(f) => Ok(grid.sample(|x| f.value(x))),
        }
    }
}
