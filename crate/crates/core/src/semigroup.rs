//! Semigroup kernels q_t^{(ε)}, the heat kernel, Dunkl translation and
//! two-point kernels.
//!
//! Normalization: q_t = c_k^{-1} 𝓕^{-1}(e^{−t·symbol}), so that the
//! semigroup acts by f ↦ f∗q_t and ℓ = 1 with ζ = {e_j} gives the heat
//! kernel c_k^{-1}(2t)^{−𝐍/2} e^{−‖x‖²/4t}.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::direction_rank;
use crate::error::{DunklError, Result};
use crate::function::{GridSampled, SmoothFunction};
use crate::kernel::rank1_imag;
use crate::measure::{Estimate, GridSpec, QuadratureGrid, WeightedContext};
use crate::root_system::dot;
use crate::transform::{
    axis_table, dunkl_transform_with, inverse_dunkl_transform_on, tensor_dot, SpectralFunction, TransformOptions,
};

/// e^{−41.5} ≈ 9e-19.
const SYMBOL_CUTOFF: f64 = 41.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub directions: Vec<Vec<f64>>,
    pub ell: u32,
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "one")]
    pub t: f64,
}

fn one() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn new(directions: Vec<Vec<f64>>, ell: u32, eps: f64, t: f64) -> Self {
        KernelSpec {
            directions,
            ell,
            eps,
            t,
        }
    }

    /// ℓ = 1, ζ = {e_1..e_N}, ε = 0: the heat semigroup.
    pub fn heat(dim: usize, t: f64) -> Self {
        let dirs = (0..dim)
            .map(|j| {
                let mut e = vec![0.0; dim];
                e[j] = 1.0;
                e
            })
            .collect();
        KernelSpec::new(dirs, 1, 0.0, t)
    }

    pub fn with_t(&self, t: f64) -> Self {
        KernelSpec { t, ..self.clone() }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        KernelSpec { eps, ..self.clone() }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(1..=3).contains(&self.ell) {
            return Err(DunklError::InvalidSpec(format!(
                "kernels support ℓ ∈ {{1, 2, 3}}, got {}",
                self.ell
            )));
        }
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(DunklError::InvalidSpec(format!("t must be positive, got {}", self.t)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(DunklError::InvalidSpec(format!("ε must be ≥ 0, got {}", self.eps)));
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
        if self.ell == 1 {
            let lam = self.min_top_symbol(dim);
            if self.eps >= lam {
                return Err(DunklError::InvalidSpec(format!(
                    "symbol positivity violated: ε = {} ≥ λ_min = {lam}",
                    self.eps
                )));
            }
        }
        Ok(())
    }

    /// Σ_j ⟨ζ_j, ξ⟩^{2ℓ} − ε‖ξ‖².
    pub fn symbol(&self, xi: &[f64]) -> f64 {
        let p = 2 * self.ell as i32;
        self.directions.iter().map(|z| dot(z, xi).powi(p)).sum::<f64>() - self.eps * dot(xi, xi)
    }

    /// min over the unit sphere of Σ_j ⟨ζ_j, u⟩^{2ℓ} (λ_min of Σ ζζᵀ for ℓ = 1).
    pub fn min_top_symbol(&self, dim: usize) -> f64 {
        let p = 2 * self.ell as i32;
        let top = |u: &[f64]| self.directions.iter().map(|z| dot(z, u).powi(p)).sum::<f64>();
        match dim {
            1 => top(&[1.0]),
            2 => {
                let n = 7200;
                (0..n)
                    .map(|i| {
                        let th = std::f64::consts::PI * i as f64 / n as f64;
                        top(&[th.cos(), th.sin()])
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            _ => {
                // coarse search over coordinate-aligned and diagonal directions
                let mut best = f64::INFINITY;
                for i in 0..dim {
                    let mut e = vec![0.0; dim];
                    e[i] = 1.0;
                    best = best.min(top(&e));
                }
                best
            }
        }
    }

    /// Half-width R with t·symbol ≥ 41.5 on ‖ξ‖ = R and beyond.
    pub fn frequency_box(&self, dim: usize) -> f64 {
        let m = 0.99 * self.min_top_symbol(dim);
        let p = 2.0 * self.ell as f64;
        let g = |r: f64| self.t * (m * r.powf(p) - self.eps * r * r) - SYMBOL_CUTOFF;
        let (mut lo, mut hi) = (0.0, 1.0);
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Closed-form heat kernel c_k^{-1}(2t)^{−𝐍/2} e^{−‖x‖²/4t}.
pub fn heat_kernel(ctx: &WeightedContext, x: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(DunklError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let nn = ctx.homogeneous_dimension();
    Ok((2.0 * t).powf(-0.5 * nn) * (-dot(x, x) / (4.0 * t)).exp() / ctx.c_k())
}

/// Frequency-side evaluator for one kernel spec: the symbol factor is
/// sampled once on a base grid and its 1.5× refinement.
pub struct KernelEvaluator {
    ks: Vec<f64>,
    spec: KernelSpec,
    c_k: f64,
    tolerance: f64,
    grids: [SpectralFunction; 2],
    /// c_k^{-2} ∫ e^{−t·symbol} dw, the scale errors are measured against.
    scale: f64,
    pub freq_box: f64,
    pub freq_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub error: f64,
}

impl KernelEvaluator {
    /// `freq_nodes` defaults to the context's nodes per axis.
    pub fn new(ctx: &WeightedContext, spec: &KernelSpec, freq_nodes: Option<usize>) -> Result<Self> {
        let ks = ctx.require_product("semigroup kernels")?.to_vec();
        spec.validate(ctx.dimension())?;
        let freq_box = spec.frequency_box(ctx.dimension());
        let nodes = freq_nodes.unwrap_or(ctx.settings().nodes_per_axis);
        let base = GridSpec::new(freq_box, nodes);
        let sym = |xi: &[f64]| Complex64::new((-spec.t * spec.symbol(xi)).exp(), 0.0);
        let g0 = SpectralFunction::from_symbol(ctx, base, "exp(-t symbol)", sym)?;
        let g1 = SpectralFunction::from_symbol(ctx, base.refined(), "exp(-t symbol)", sym)?;
        let c_k = ctx.c_k();
        let scale = g1
            .values
            .iter()
            .zip(&g1.grid.weights)
            .map(|(v, w)| v.re.abs() * w)
            .sum::<f64>()
            / (c_k * c_k);
        Ok(KernelEvaluator {
            ks,
            spec: spec.clone(),
            c_k,
            tolerance: ctx.settings().tolerance,
            grids: [g0, g1],
            scale,
            freq_box,
            freq_nodes: nodes,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// c_k^{-2} ∫ e^{−t·symbol} dw; equals q_t(0) when ε = 0.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn sum_with<F>(&self, idx: usize, axis_factor: F) -> Complex64
    where
        F: Fn(usize, f64, f64) -> Complex64,
    {
        let g = &self.grids[idx];
        let vecs: Vec<Vec<Complex64>> = self
            .ks
            .iter()
            .enumerate()
            .map(|(d, &k)| {
                g.grid.axes[d]
                    .nodes
                    .iter()
                    .zip(&g.grid.axes[d].weights)
                    .map(|(&xi, &w)| axis_factor(d, k, xi) * w)
                    .collect()
            })
            .collect();
        tensor_dot(&vecs, &g.values) / (self.c_k * self.c_k)
    }

    fn finish(&self, what: &str, coarse: Complex64, fine: Complex64) -> Result<KernelValue> {
        let error = (fine - coarse).norm();
        if error > self.tolerance * self.scale {
            return Err(DunklError::accuracy(
                what,
                format!(
                    "frequency refinement changes the value by {error:.3e} (scale {:.3e}, box {:.3}, {} nodes/axis)",
                    self.scale, self.freq_box, self.freq_nodes
                ),
            ));
        }
        if fine.im.abs() > 1e-10 * self.scale.max(fine.re.abs()) {
            return Err(DunklError::accuracy(
                what,
                format!("imaginary residue {:.3e} exceeds 1e-10", fine.im),
            ));
        }
        Ok(KernelValue {
            value: fine.re,
            error,
        })
    }

    /// q_t(x) = c_k^{-2} ∫ E(iξ, x) e^{−t·symbol(ξ)} dw(ξ).
    pub fn q(&self, x: &[f64]) -> Result<KernelValue> {
        let coarse = self.sum_with(0, |d, k, xi| rank1_imag(k, xi, x[d]));
        let fine = self.sum_with(1, |d, k, xi| rank1_imag(k, xi, x[d]));
        self.finish("kernel q_t", coarse, fine)
    }

    /// q_t(x, y) = c_k^{-2} ∫ E(iξ, x) E(−iξ, y) e^{−t·symbol(ξ)} dw(ξ).
    pub fn two_point(&self, x: &[f64], y: &[f64]) -> Result<KernelValue> {
        let factor = |d: usize, k: f64, xi: f64| rank1_imag(k, xi, x[d]) * rank1_imag(k, xi, y[d]).conj();
        let coarse = self.sum_with(0, factor);
        let fine = self.sum_with(1, factor);
        self.finish("two-point kernel", coarse, fine)
    }

    pub fn q_many(&self, points: &[Vec<f64>]) -> Result<Vec<KernelValue>> {
        points.par_iter().map(|x| self.q(x)).collect()
    }

    /// q_t(y), or q_t(x, y) when `x` is given, at every node of a separable
    /// grid in node order. The frequency sum factorizes over axes, so it is
    /// applied as one matrix product per axis.
    pub fn on_grid(&self, grid: &QuadratureGrid, x: Option<&[f64]>) -> Result<Vec<KernelValue>> {
        if !grid.separable || grid.axes.len() != self.ks.len() {
            return Err(DunklError::Capability("kernel sampling needs a separable grid of matching dimension".into()));
        }
        if let Some(x) = x {
            if x.len() != self.ks.len() {
                return Err(DunklError::InvalidArgument("point dimension mismatch".into()));
            }
        }
        let coarse = self.grid_sum(0, grid, x);
        let fine = self.grid_sum(1, grid, x);
        let what = if x.is_some() { "two-point kernel on a grid" } else { "kernel q_t on a grid" };
        coarse.into_iter().zip(fine).map(|(c, f)| self.finish(what, c, f)).collect()
    }

    fn grid_sum(&self, idx: usize, target: &QuadratureGrid, x: Option<&[f64]>) -> Vec<Complex64> {
        let g = &self.grids[idx];
        let mut data = g.values.clone();
        let mut shape: Vec<usize> = g.grid.axes.iter().map(|a| a.nodes.len()).collect();
        for (d, &k) in self.ks.iter().enumerate() {
            let fa = &g.grid.axes[d];
            let ys = &target.axes[d].nodes;
            let shift: Vec<Complex64> = fa
                .nodes
                .iter()
                .zip(&fa.weights)
                .map(|(&xi, &w)| x.map_or(Complex64::new(1.0, 0.0), |x| rank1_imag(k, xi, x[d])) * w)
                .collect();
            let m: Vec<Complex64> = ys
                .par_iter()
                .flat_map_iter(|&y| {
                    let shift = &shift;
                    fa.nodes.iter().zip(shift).map(move |(&xi, s)| {
                        let e = rank1_imag(k, xi, y);
                        s * if x.is_some() { e.conj() } else { e }
                    })
                })
                .collect();
            data = mode_product(&data, &shape, d, &m, ys.len());
            shape[d] = ys.len();
        }
        let c = 1.0 / (self.c_k * self.c_k);
        data.into_iter().map(|v| v * c).collect()
    }

    pub fn two_point_many(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<KernelValue>> {
        pairs.par_iter().map(|(x, y)| self.two_point(x, y)).collect()
    }
}

fn check_point(ctx: &WeightedContext, x: &[f64]) -> Result<()> {
    if x.len() != ctx.dimension() {
        return Err(DunklError::InvalidArgument("point dimension mismatch".into()));
    }
    Ok(())
}

/// q_t^{(ε)}(x). For ε = 0 and t outside [0.25, 4] the scaling law
/// q_t(x) = t^{−𝐍/2ℓ} q_1(x / t^{1/2ℓ}) is applied first.
pub fn evaluate_q(ctx: &WeightedContext, spec: &KernelSpec, x: &[f64]) -> Result<KernelValue> {
    check_point(ctx, x)?;
    spec.validate(ctx.dimension())?;
    if spec.eps == 0.0 && !(0.25..=4.0).contains(&spec.t) {
        let p = 2.0 * spec.ell as f64;
        let s = spec.t.powf(1.0 / p);
        let xs: Vec<f64> = x.iter().map(|v| v / s).collect();
        let base = KernelEvaluator::new(ctx, &spec.with_t(1.0), None)?.q(&xs)?;
        let factor = spec.t.powf(-ctx.homogeneous_dimension() / p);
        return Ok(KernelValue {
            value: base.value * factor,
            error: base.error * factor,
        });
    }
    KernelEvaluator::new(ctx, spec, None)?.q(x)
}

/// q_t(x, y) = τ_x q_t(−y).
pub fn two_point_kernel(ctx: &WeightedContext, spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<KernelValue> {
    check_point(ctx, x)?;
    check_point(ctx, y)?;
    KernelEvaluator::new(ctx, spec, None)?.two_point(x, y)
}

/// τ_x f(y) = c_k^{-1} ∫ E(iξ, x) E(iξ, y) 𝓕f(ξ) dw(ξ) at the points `ys`,
/// from a precomputed transform.
pub fn translate_at(ctx: &WeightedContext, fhat: &SpectralFunction, x: &[f64], ys: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let ks = ctx.require_product("Dunkl translation")?.to_vec();
    check_point(ctx, x)?;
    let g = &fhat.grid;
    let xvecs: Vec<Vec<Complex64>> = ks
        .iter()
        .enumerate()
        .map(|(d, &k)| {
            g.axes[d]
                .nodes
                .iter()
                .zip(&g.axes[d].weights)
                .map(|(&xi, &w)| rank1_imag(k, xi, x[d]) * w)
                .collect()
        })
        .collect();
    let c = 1.0 / ctx.c_k();
    Ok(ys
        .par_iter()
        .map(|y| {
            let vecs: Vec<Vec<Complex64>> = ks
                .iter()
                .enumerate()
                .map(|(d, &k)| {
                    g.axes[d]
                        .nodes
                        .iter()
                        .zip(&xvecs[d])
                        .map(|(&xi, xv)| xv * rank1_imag(k, xi, y[d]))
                        .collect()
                })
                .collect();
            tensor_dot(&vecs, &fhat.values) * c
        })
        .collect())
}

/// τ_x f on the tensor grid `axes[0] × … × axes[N−1]`, row-major with the
/// first axis outermost. One mode product per axis.
pub fn translate_on_axes(
    ctx: &WeightedContext,
    fhat: &SpectralFunction,
    x: &[f64],
    axes: &[Vec<f64>],
) -> Result<Vec<Complex64>> {
    translate_tensor(ctx, fhat, x, axes, None)
}

/// τ_x f at the nodes of `grid`, in node order.
pub fn translate_on_grid(
    ctx: &WeightedContext,
    fhat: &SpectralFunction,
    x: &[f64],
    grid: &QuadratureGrid,
) -> Result<Vec<Complex64>> {
    if grid.separable && grid.axes.len() == grid.dimension {
        let axes: Vec<Vec<f64>> = grid.axes.iter().map(|a| a.nodes.clone()).collect();
        translate_tensor(ctx, fhat, x, &axes, Some(grid.spec))
    } else {
        translate_at(ctx, fhat, x, &grid.nodes)
    }
}

/// With `target` set, the axes are the nodes of that grid spec and the
/// per-axis kernel tables come from the transform cache.
fn translate_tensor(
    ctx: &WeightedContext,
    fhat: &SpectralFunction,
    x: &[f64],
    axes: &[Vec<f64>],
    target: Option<GridSpec>,
) -> Result<Vec<Complex64>> {
    let ks = ctx.require_product("Dunkl translation")?.to_vec();
    check_point(ctx, x)?;
    if axes.len() != ks.len() {
        return Err(DunklError::InvalidArgument("one axis per dimension required".into()));
    }
    let g = &fhat.grid;
    if !g.separable {
        let mut pts = vec![Vec::new()];
        for axis in axes {
            pts = pts
                .iter()
                .flat_map(|p: &Vec<f64>| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        return translate_at(ctx, fhat, x, &pts);
    }
    let mut data = fhat.values.clone();
    let mut shape: Vec<usize> = g.axes.iter().map(|a| a.nodes.len()).collect();
    for (d, &k) in ks.iter().enumerate() {
        let fa = &g.axes[d];
        let ys = &axes[d];
        let n = fa.nodes.len();
        let shift: Vec<Complex64> = fa
            .nodes
            .iter()
            .zip(&fa.weights)
            .map(|(&xi, &w)| rank1_imag(k, xi, x[d]) * w)
            .collect();
        let m: Vec<Complex64> = match target {
            Some(spec) => {
                // table[i][j] = E(iξ_i, y_j)
                let table = axis_table(k, ys, spec, &fa.nodes, g.spec);
                let ny = ys.len();
                (0..ny)
                    .into_par_iter()
                    .flat_map_iter(|j| {
                        let (shift, table) = (&shift, &table);
                        (0..n).map(move |i| shift[i] * table[i * ny + j])
                    })
                    .collect()
            }
            None => ys
                .par_iter()
                .flat_map_iter(|&y| {
                    let shift = &shift;
                    fa.nodes.iter().zip(shift).map(move |(&xi, s)| s * rank1_imag(k, xi, y))
                })
                .collect(),
        };
        data = mode_product(&data, &shape, d, &m, ys.len());
        shape[d] = ys.len();
    }
    let c = 1.0 / ctx.c_k();
    Ok(data.into_iter().map(|v| v * c).collect())
}

/// τ_x f sampled on the default spatial grid.
pub fn dunkl_translate(ctx: &WeightedContext, f: &SmoothFunction, x: &[f64]) -> Result<SmoothFunction> {
    let ks = ctx.require_product("Dunkl translation")?.to_vec();
    check_point(ctx, x)?;
    let opts = TransformOptions::defaults(ctx);
    let fhat = dunkl_transform_with(ctx, f, &opts)?;
    let g = &fhat.grid;
    let shifted: Vec<Complex64> = g
        .nodes
        .iter()
        .zip(&fhat.values)
        .map(|(xi, v)| {
            let e: Complex64 = ks
                .iter()
                .enumerate()
                .map(|(d, &k)| rank1_imag(k, xi[d], x[d]))
                .product();
            v * e
        })
        .collect();
    let moved = SpectralFunction {
        values: shifted,
        ..fhat
    };
    let (out, _) = inverse_dunkl_transform_on(ctx, &moved, opts.spatial)?;
    Ok(SmoothFunction::GridSampled(out))
}

/// q_t sampled on the nodes of a spatial grid, for use in convolutions.
pub fn sample_q_on_grid(ctx: &WeightedContext, spec: &KernelSpec, grid: GridSpec, freq_nodes: Option<usize>) -> Result<GridSampled> {
    let ev = KernelEvaluator::new(ctx, spec, freq_nodes)?;
    let g = ctx.grid(grid);
    let vals: Result<Vec<f64>> = g.nodes.par_iter().map(|x| ev.q(x).map(|v| v.value)).collect();
    GridSampled::new(g, vals?)
}

/// Estimate wrapper used by reports.
pub fn kernel_estimate(v: KernelValue) -> Estimate {
    Estimate {
        value: v.value,
        error: v.error,
    }
}

/// Contracts axis `d` of a row-major tensor with `m` (rows × shape[d]).
fn mode_product(data: &[Complex64], shape: &[usize], d: usize, m: &[Complex64], rows: usize) -> Vec<Complex64> {
    let n = shape[d];
    let inner: usize = shape[d + 1..].iter().product();
    let outer: usize = shape[..d].iter().product();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; outer * rows * inner];
    out.par_chunks_mut(inner)
        .enumerate()
        .for_each(|(oj, dst)| {
            let (o, j) = (oj / rows, oj % rows);
            let src = &data[o * n * inner..(o + 1) * n * inner];
            for (i, &a) in m[j * n..(j + 1) * n].iter().enumerate() {
                for (t, s) in dst.iter_mut().zip(&src[i * inner..(i + 1) * inner]) {
                    *t += a * s;
                }
            }
        });
    out
}
