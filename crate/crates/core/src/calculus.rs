//! Dunkl operators, the Dunkl Laplacian, the forms a_s and b_{s,ε}, and the
//! V_{ℓ,s} norm.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DunklError, Result};
use crate::function::{Callable, EtaProduct, PolyGauss, SmoothFunction};
use crate::measure::{eta, Estimate, WeightedContext};
use crate::quadrature::{gauss_legendre, GaussRule};
use crate::root_system::dot;

const SEGMENT_NODES: usize = 48;

fn segment_rule() -> GaussRule {
    gauss_legendre(SEGMENT_NODES).mapped(0.0, 1.0)
}

fn check_direction(ctx: &WeightedContext, xi: &[f64]) -> Result<()> {
    if xi.len() != ctx.dimension() {
        return Err(DunklError::InvalidArgument(format!(
            "direction has dimension {}, system has {}",
            xi.len(),
            ctx.dimension()
        )));
    }
    if xi.iter().all(|v| *v == 0.0) {
        return Err(DunklError::InvalidArgument("direction ξ = 0".into()));
    }
    Ok(())
}

/// ∂^β_x [h(M x)] for symmetric M, by the chain rule over index tuples.
/// `h` receives the multi-index of the derivative it must return.
fn chain_rule(
    dim: usize,
    m: &DMatrix<f64>,
    beta: &[usize],
    h: &dyn Fn(&[usize]) -> f64,
) -> f64 {
    let mut idx: Vec<usize> = Vec::new();
    for (i, &b) in beta.iter().enumerate() {
        idx.extend(std::iter::repeat(i).take(b));
    }
    let r = idx.len();
    if r == 0 {
        return h(&vec![0; dim]);
    }
    let mut total = 0.0;
    let mut tuple = vec![0usize; r];
    loop {
        let mut coef = 1.0;
        for (s, &l) in tuple.iter().enumerate() {
            coef *= m[(l, idx[s])];
        }
        if coef != 0.0 {
            let mut gamma = vec![0; dim];
            for &l in &tuple {
                gamma[l] += 1;
            }
            total += coef * h(&gamma);
        }
        let mut pos = 0;
        loop {
            if pos == r {
                return total;
            }
            tuple[pos] += 1;
            if tuple[pos] < dim {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

fn segment_matrix(alpha: &[f64], t: f64) -> DMatrix<f64> {
    let n = alpha.len();
    let c = 2.0 * t / dot(alpha, alpha);
    DMatrix::from_fn(n, n, |i, j| {
        (if i == j { 1.0 } else { 0.0 }) - c * alpha[i] * alpha[j]
    })
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| (0..x.len()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

/// Roots with k(α) > 0, one per ± pair is not assumed: the sum runs over R.
fn active_roots(ctx: &WeightedContext) -> Vec<(Vec<f64>, f64)> {
    ctx.spec()
        .roots
        .iter()
        .zip(&ctx.spec().multiplicity)
        .filter(|(_, &k)| k != 0.0)
        .map(|(a, &k)| (a.clone(), k))
        .collect()
}

/// T_ξ on a callable. (f(x) − f(σ_α x))/⟨α,x⟩ is evaluated as
/// (2/‖α‖²) ∫_0^1 ∂_α f(x − t (2⟨x,α⟩/‖α‖²) α) dt.
fn callable_dunkl(ctx: &WeightedContext, xi: &[f64], f: &Callable) -> Result<Callable> {
    if f.max_order < 1 {
        return Err(DunklError::Capability(
            "callable has no derivative evaluators".into(),
        ));
    }
    let dim = f.dim;
    let xi = xi.to_vec();
    let roots: Vec<(Vec<f64>, f64)> = active_roots(ctx)
        .into_iter()
        .filter(|(a, _)| dot(a, &xi) != 0.0)
        .collect();
    let rule = segment_rule();
    let mats: Vec<Vec<DMatrix<f64>>> = roots
        .iter()
        .map(|(a, _)| rule.nodes.iter().map(|&t| segment_matrix(a, t)).collect())
        .collect();
    let inner = f.eval.clone();
    let eval = move |x: &[f64], beta: &[usize]| -> f64 {
        let mut total = 0.0;
        for (j, &c) in xi.iter().enumerate() {
            if c != 0.0 {
                let mut b = beta.to_vec();
                b[j] += 1;
                total += c * inner(x, &b);
            }
        }
        for ((alpha, k), ms) in roots.iter().zip(&mats) {
            let coef = 0.5 * k * dot(alpha, &xi) * 2.0 / dot(alpha, alpha);
            let mut integral = 0.0;
            for (m, &w) in ms.iter().zip(&rule.weights) {
                let y = mat_vec(m, x);
                let h = |gamma: &[usize]| -> f64 {
                    let mut s = 0.0;
                    for (l, &al) in alpha.iter().enumerate() {
                        if al != 0.0 {
                            let mut g = gamma.to_vec();
                            g[l] += 1;
                            s += al * inner(&y, &g);
                        }
                    }
                    s
                };
                integral += w * chain_rule(dim, m, beta, &h);
            }
            total += coef * integral;
        }
        total
    };
    Ok(Callable {
        dim,
        max_order: f.max_order - 1,
        eval: Arc::new(eval),
    })
}

/// T_ξ f.
pub fn apply_dunkl(ctx: &WeightedContext, xi: &[f64], f: &SmoothFunction) -> Result<SmoothFunction> {
    check_direction(ctx, xi)?;
    match f {
        SmoothFunction::PolyGauss(p) => match ctx.product_multiplicities() {
            Some(ks) => Ok(SmoothFunction::PolyGauss(p.dunkl_dir(xi, ks))),
            None => Ok(SmoothFunction::Callable(callable_dunkl(
                ctx,
                xi,
                &Callable::from_polygauss(p),
            )?)),
        },
        SmoothFunction::Callable(c) => Ok(SmoothFunction::Callable(callable_dunkl(ctx, xi, c)?)),
        SmoothFunction::GridSampled(_) => Err(DunklError::Capability(
            "Dunkl operators need a differentiable representation, not grid samples".into(),
        )),
    }
}

/// Dunkl Laplacian of a PolyGauss on a product system:
/// Δf = Δ_eucl f + Σ_j 2k_j [∂_j f / x_j − (f − f∘σ_j)/(2x_j²)].
fn polygauss_laplacian(p: &PolyGauss, ks: &[f64]) -> PolyGauss {
    let mut poly = crate::function::Poly::zero(p.dim());
    for (j, &k) in ks.iter().enumerate() {
        poly = poly.add(&p.deriv(j).deriv(j).poly);
        if k != 0.0 {
            let diff = p
                .poly
                .laplace_difference(j)
                .add(&p.poly.scale(-2.0 * p.gauss[j]));
            poly = poly.add(&diff.scale(2.0 * k));
        }
    }
    PolyGauss {
        poly,
        gauss: p.gauss.clone(),
    }
}

/// Callable form of the same formula; the reflection term is
/// (2/‖α‖²) ∫_0^1 (1−t) ∂_α² f(x − t(2⟨x,α⟩/‖α‖²)α) dt.
fn callable_laplacian(ctx: &WeightedContext, f: &Callable) -> Result<Callable> {
    if f.max_order < 2 {
        return Err(DunklError::Capability(
            "Dunkl Laplacian needs second-order derivative evaluators".into(),
        ));
    }
    let dim = f.dim;
    let roots = active_roots(ctx);
    let rule = segment_rule();
    let mats: Vec<Vec<DMatrix<f64>>> = roots
        .iter()
        .map(|(a, _)| rule.nodes.iter().map(|&t| segment_matrix(a, t)).collect())
        .collect();
    let inner = f.eval.clone();
    let eval = move |x: &[f64], beta: &[usize]| -> f64 {
        let mut total = 0.0;
        for j in 0..dim {
            let mut b = beta.to_vec();
            b[j] += 2;
            total += inner(x, &b);
        }
        for ((alpha, k), ms) in roots.iter().zip(&mats) {
            let coef = k * 2.0 / dot(alpha, alpha);
            let mut integral = 0.0;
            for ((m, &w), &t) in ms.iter().zip(&rule.weights).zip(&rule.nodes) {
                let y = mat_vec(m, x);
                let h = |gamma: &[usize]| -> f64 {
                    let mut s = 0.0;
                    for (l1, &a1) in alpha.iter().enumerate() {
                        for (l2, &a2) in alpha.iter().enumerate() {
                            if a1 != 0.0 && a2 != 0.0 {
                                let mut g = gamma.to_vec();
                                g[l1] += 1;
                                g[l2] += 1;
                                s += a1 * a2 * inner(&y, &g);
                            }
                        }
                    }
                    s
                };
                integral += w * (1.0 - t) * chain_rule(dim, m, beta, &h);
            }
            total += coef * integral;
        }
        total
    };
    Ok(Callable {
        dim,
        max_order: f.max_order - 2,
        eval: Arc::new(eval),
    })
}

/// Δ_k f by the explicit Laplacian formula.
pub fn dunkl_laplacian(ctx: &WeightedContext, f: &SmoothFunction) -> Result<SmoothFunction> {
    match f {
        SmoothFunction::PolyGauss(p) => match ctx.product_multiplicities() {
            Some(ks) => Ok(SmoothFunction::PolyGauss(polygauss_laplacian(p, ks))),
            None => Ok(SmoothFunction::Callable(callable_laplacian(
                ctx,
                &Callable::from_polygauss(p),
            )?)),
        },
        SmoothFunction::Callable(c) => Ok(SmoothFunction::Callable(callable_laplacian(ctx, c)?)),
        SmoothFunction::GridSampled(_) => Err(DunklError::Capability(
            "Dunkl Laplacian needs a differentiable representation, not grid samples".into(),
        )),
    }
}

/// Σ_j T_j² f by iterated Dunkl operators.
pub fn iterated_laplacian(ctx: &WeightedContext, f: &SmoothFunction) -> Result<SmoothFunction> {
    let n = ctx.dimension();
    let mut parts = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let once = apply_dunkl(ctx, &e, f)?;
        parts.push(apply_dunkl(ctx, &e, &once)?);
    }
    match parts.as_slice() {
        [] => Err(DunklError::InvalidArgument("empty system".into())),
        _ => {
            if parts.iter().all(|p| matches!(p, SmoothFunction::PolyGauss(_))) {
                let mut acc: Option<PolyGauss> = None;
                for p in parts {
                    if let SmoothFunction::PolyGauss(p) = p {
                        acc = Some(match acc {
                            None => p,
                            Some(a) => a.add(&p)?,
                        });
                    }
                }
                Ok(SmoothFunction::PolyGauss(acc.expect("nonempty")))
            } else {
                let callables: Vec<SmoothFunction> = parts;
                let dim = n;
                Ok(SmoothFunction::Callable(Callable::new(dim, 0, move |x, beta| {
                    if beta.iter().any(|b| *b != 0) {
                        return f64::NAN;
                    }
                    callables.iter().map(|c| c.eval(x).unwrap_or(f64::NAN)).sum()
                })))
            }
        }
    }
}

/// ‖f‖_{H_s}; s = 0 gives the L²(dw) norm.
pub fn weighted_norm(ctx: &WeightedContext, f: &SmoothFunction, s: f64) -> Result<Estimate> {
    match f {
        SmoothFunction::PolyGauss(p) => ctx.weighted_norm_of(|x| p.eval(x), s),
        SmoothFunction::Callable(c) => ctx.weighted_norm_of(|x| c.value(x), s),
        SmoothFunction::GridSampled(g) => {
            if !(s >= 0.0) {
                return Err(DunklError::InvalidArgument(format!("s must be ≥ 0, got {s}")));
            }
            let sq: f64 = g
                .grid
                .nodes
                .iter()
                .zip(&g.grid.weights)
                .zip(&g.values)
                .map(|((x, w), v)| w * v * v * if s == 0.0 { 1.0 } else { eta(x, s) })
                .sum();
            Ok(Estimate {
                value: sq.max(0.0).sqrt(),
                error: f64::NAN,
            })
        }
    }
}

/// Parameters of a_s and b_{s,ε}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearFormSpec {
    pub ell: u32,
    pub s: f64,
    #[serde(default)]
    pub eps: f64,
    pub directions: Vec<Vec<f64>>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
}

fn default_eps0() -> f64 {
    0.1
}

/// Rank of the direction set.
pub(crate) fn direction_rank(directions: &[Vec<f64>], dim: usize) -> usize {
    if directions.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(directions.len(), dim, |i, j| directions[i][j]);
    m.rank(1e-10)
}

impl BilinearFormSpec {
    pub fn new(ell: u32, s: f64, eps: f64, directions: Vec<Vec<f64>>) -> Self {
        BilinearFormSpec {
            ell,
            s,
            eps,
            directions,
            eps0: default_eps0(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(1..=2).contains(&self.ell) {
            return Err(DunklError::InvalidSpec(format!(
                "forms support ℓ ∈ {{1, 2}}, got {}",
                self.ell
            )));
        }
        if !(self.s > 0.25) {
            return Err(DunklError::InvalidSpec(format!("s must exceed 1/4, got {}", self.s)));
        }
        if !(self.eps >= 0.0) || self.eps > self.eps0 {
            return Err(DunklError::InvalidSpec(format!(
                "ε must lie in {{0}} ∪ (0, ε₀ = {}], got {}",
                self.eps0, self.eps
            )));
        }
        if self.directions.iter().any(|d| d.len() != dim) {
            return Err(DunklError::InvalidSpec("direction dimension mismatch".into()));
        }
        if self.directions.iter().any(|d| d.iter().all(|v| *v == 0.0)) {
            return Err(DunklError::InvalidSpec("zero direction".into()));
        }
        if direction_rank(&self.directions, dim) < dim {
            return Err(DunklError::InvalidSpec("directions do not span ℝ^N".into()));
        }
        Ok(())
    }
}

fn require_polygauss<'a>(f: &'a SmoothFunction, what: &str) -> Result<&'a PolyGauss> {
    match f {
        SmoothFunction::PolyGauss(p) => Ok(p),
        _ => Err(DunklError::Capability(format!(
            "{what} needs polynomial × Gaussian input"
        ))),
    }
}

fn power_dunkl(f: &PolyGauss, xi: &[f64], ks: &[f64], ell: u32) -> PolyGauss {
    let mut out = f.clone();
    for _ in 0..ell {
        out = out.dunkl_dir(xi, ks);
    }
    out
}

fn power_dunkl_eta(g: &EtaProduct, xi: &[f64], ks: &[f64], ell: u32) -> EtaProduct {
    let mut out = g.clone();
    for _ in 0..ell {
        out = out.dunkl_dir(xi, ks);
    }
    out
}

/// Σ_j ∫ T^n_{d_j} f · T^n_{d_j}(g η(·,s)) dw for the given directions.
fn paired_integral(
    ctx: &WeightedContext,
    what: &str,
    f: &PolyGauss,
    g: &PolyGauss,
    s: f64,
    directions: &[Vec<f64>],
    power: u32,
) -> Result<Estimate> {
    let ks = ctx.require_product(what)?;
    let geta = EtaProduct::from_polygauss(g, s);
    let pairs: Vec<(PolyGauss, EtaProduct)> = directions
        .iter()
        .map(|d| (power_dunkl(f, d, ks, power), power_dunkl_eta(&geta, d, ks, power)))
        .collect();
    let evals: Vec<_> = pairs.iter().map(|(_, w)| w.evaluator()).collect();
    let integrand = |x: &[f64]| -> f64 {
        pairs
            .iter()
            .zip(&evals)
            .map(|((tf, _), we)| tf.eval(x) * we(x))
            .sum()
    };
    ctx.integrate_checked(what, ctx.settings().grid_spec(), integrand)
}

/// a_s(f, g) = −Σ_j ∫ T^ℓ_{ζ_j} f · T^ℓ_{ζ_j}(g η(·,s)) dw, for real g.
pub fn form_a_s(
    ctx: &WeightedContext,
    spec: &BilinearFormSpec,
    f: &SmoothFunction,
    g: &SmoothFunction,
) -> Result<Estimate> {
    spec.validate(ctx.dimension())?;
    let f = require_polygauss(f, "form a_s")?;
    let g = require_polygauss(g, "form a_s")?;
    let e = paired_integral(ctx, "form a_s", f, g, spec.s, &spec.directions, spec.ell)?;
    Ok(Estimate {
        value: -e.value,
        error: e.error,
    })
}

/// b_{s,ε}(f, g) = a_s(f, g) + ε Σ_{j=1}^N ∫ T_j f · T_j(g η(·,s)) dw.
pub fn form_b_s_eps(
    ctx: &WeightedContext,
    spec: &BilinearFormSpec,
    f: &SmoothFunction,
    g: &SmoothFunction,
) -> Result<Estimate> {
    let a = form_a_s(ctx, spec, f, g)?;
    if spec.eps == 0.0 {
        return Ok(a);
    }
    let fp = require_polygauss(f, "form b_s")?;
    let gp = require_polygauss(g, "form b_s")?;
    let n = ctx.dimension();
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let p = paired_integral(ctx, "form b_s perturbation", fp, gp, spec.s, &axes, 1)?;
    Ok(Estimate {
        value: a.value + spec.eps * p.value,
        error: a.error + spec.eps * p.error,
    })
}

/// ‖f‖_{V_{ℓ,s}} = (‖f‖²_{H_s} + Σ_j ‖T^ℓ_{ζ_j} f‖²_{H_s})^{1/2}.
pub fn sobolev_norm_v(
    ctx: &WeightedContext,
    spec: &BilinearFormSpec,
    f: &SmoothFunction,
) -> Result<Estimate> {
    spec.validate(ctx.dimension())?;
    let f = require_polygauss(f, "V norm")?;
    let ks = ctx.require_product("V norm")?;
    let parts: Vec<PolyGauss> = spec
        .directions
        .iter()
        .map(|d| power_dunkl(f, d, ks, spec.ell))
        .collect();
    let s = spec.s;
    let integrand = |x: &[f64]| -> f64 {
        let v0 = f.eval(x);
        let sum: f64 = v0 * v0 + parts.iter().map(|p| p.eval(x).powi(2)).sum::<f64>();
        sum * eta(x, s)
    };
    let spec_grid = ctx.settings().grid_spec();
    let (shell, total) = ctx.boundary_shell(spec_grid, integrand);
    if total > 0.0 && shell > ctx.settings().tolerance * total {
        return Err(DunklError::DomainTooSmall {
            what: "V norm".into(),
            shell,
            total,
        });
    }
    let sq = ctx.integrate_checked("V norm", spec_grid, integrand)?;
    let value = sq.value.max(0.0).sqrt();
    let error = if value > 0.0 { sq.error / (2.0 * value) } else { 0.0 };
    Ok(Estimate { value, error })
}
