//! Dunkl transform, inverse transform and transform-side convolution on
//! product systems, by direct tensor quadrature one axis at a time.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DunklError, Result};
use crate::function::{GridSampled, SmoothFunction};
use crate::kernel::rank1_imag;
use crate::measure::{GridSpec, QuadratureGrid, WeightedContext};

/// Cap on cached kernel-table entries (complex numbers) across all tables.
pub const DEFAULT_TABLE_CAP: usize = 16_000_000;

type TableKey = (u64, u64, usize, u64, usize);

struct TableCache {
    tables: HashMap<TableKey, Arc<Vec<Complex64>>>,
    entries: usize,
    cap: usize,
}

fn table_cache() -> &'static Mutex<TableCache> {
    static CACHE: OnceLock<Mutex<TableCache>> = OnceLock::new();
    CACHE.get_or_init(|| {
        Mutex::new(TableCache {
            tables: HashMap::new(),
            entries: 0,
            cap: DEFAULT_TABLE_CAP,
        })
    })
}

/// Sets the kernel-table cache cap; existing tables are dropped.
pub fn set_table_cap(cap: usize) {
    let mut c = table_cache().lock().expect("table cache poisoned");
    c.cap = cap;
    c.tables.clear();
    c.entries = 0;
}

/// E_k(iξ_a, x_i) for one axis, stored row-major in a (frequency) then i.
pub(crate) fn axis_table(k: f64, xs: &[f64], xspec: GridSpec, xis: &[f64], xispec: GridSpec) -> Arc<Vec<Complex64>> {
    let key = (
        k.to_bits(),
        xspec.half_width.to_bits(),
        xs.len(),
        xispec.half_width.to_bits(),
        xis.len(),
    );
    if let Some(t) = table_cache().lock().expect("table cache poisoned").tables.get(&key) {
        return Arc::clone(t);
    }
    let data: Vec<Complex64> = xis
        .par_iter()
        .flat_map_iter(|&xi| xs.iter().map(move |&x| rank1_imag(k, xi, x)))
        .collect();
    let t = Arc::new(data);
    let mut c = table_cache().lock().expect("table cache poisoned");
    if c.entries + t.len() > c.cap {
        c.tables.clear();
        c.entries = 0;
    }
    if t.len() <= c.cap {
        c.entries += t.len();
        c.tables.insert(key, Arc::clone(&t));
    }
    t
}

/// Contracts axis `axis` of a row-major tensor of the given shape against
/// table[out][in] · weight[in], replacing that extent by `n_out`.
fn contract_axis(
    data: &[Complex64],
    shape: &[usize],
    axis: usize,
    table: &[Complex64],
    weights: &[f64],
    n_out: usize,
    conjugate: bool,
) -> (Vec<Complex64>, Vec<usize>) {
    let n_in = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut new_shape = shape.to_vec();
    new_shape[axis] = n_out;
    let out: Vec<Complex64> = (0..outer * n_out)
        .into_par_iter()
        .flat_map_iter(|ob| {
            let o = ob / n_out;
            let b = ob % n_out;
            let row = &table[b * n_in..(b + 1) * n_in];
            (0..inner).map(move |q| {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..n_in {
                    let e = if conjugate { row[i].conj() } else { row[i] };
                    s += e * weights[i] * data[(o * n_in + i) * inner + q];
                }
                s
            })
        })
        .collect();
    (out, new_shape)
}

fn tensor_pass(
    ks: &[f64],
    from: &QuadratureGrid,
    to: &QuadratureGrid,
    values: Vec<Complex64>,
    conjugate: bool,
) -> Vec<Complex64> {
    let mut shape: Vec<usize> = from.axes.iter().map(|a| a.nodes.len()).collect();
    let mut data = values;
    for (d, &k) in ks.iter().enumerate() {
        let src = &from.axes[d];
        let dst = &to.axes[d];
        // table rows index the destination nodes, columns the source nodes
        let table = axis_table(k, &src.nodes, from.spec, &dst.nodes, to.spec);
        let (nd, ns) = contract_axis(&data, &shape, d, &table, &src.weights, dst.nodes.len(), conjugate);
        data = nd;
        shape = ns;
    }
    data
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "label")]
pub enum Provenance {
    Forward,
    Symbol(String),
}

/// A function on the frequency side, held by its values on a frequency grid.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    pub grid: Arc<QuadratureGrid>,
    pub values: Vec<Complex64>,
    pub provenance: Provenance,
    /// Largest change under 1.5× spatial refinement (NaN when not checked).
    pub error_estimate: f64,
}

impl SpectralFunction {
    /// Samples a symbol on the frequency grid `spec`.
    pub fn from_symbol<F>(ctx: &WeightedContext, spec: GridSpec, label: &str, symbol: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        ctx.require_product("spectral functions")?;
        let grid = ctx.grid(spec);
        let values: Vec<Complex64> = grid.nodes.par_iter().map(|x| symbol(x)).collect();
        Ok(SpectralFunction {
            grid,
            values,
            provenance: Provenance::Symbol(label.to_string()),
            error_estimate: 0.0,
        })
    }

    /// (∫ |g|² dw)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.weights)
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn mul(&self, other: &SpectralFunction) -> Result<SpectralFunction> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid.spec != other.grid.spec {
            return Err(DunklError::InvalidArgument(
                "spectral functions live on different frequency grids".into(),
            ));
        }
        Ok(SpectralFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            provenance: Provenance::Symbol("product".into()),
            error_estimate: self.error_estimate + other.error_estimate,
        })
    }

    pub fn scale(&self, c: f64) -> SpectralFunction {
        SpectralFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * c).collect(),
            provenance: self.provenance.clone(),
            error_estimate: self.error_estimate * c.abs(),
        }
    }
}

/// Grids used by a transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformOptions {
    pub spatial: GridSpec,
    pub frequency: GridSpec,
    /// Recompute on the 1.5× spatial grid and fail on disagreement.
    pub check_refinement: bool,
}

impl TransformOptions {
    pub fn defaults(ctx: &WeightedContext) -> Self {
        let g = ctx.settings().grid_spec();
        TransformOptions {
            spatial: g,
            frequency: g,
            check_refinement: true,
        }
    }
}

fn forward_values(
    ctx: &WeightedContext,
    ks: &[f64],
    spatial: &Arc<QuadratureGrid>,
    freq: &QuadratureGrid,
    f: &SmoothFunction,
) -> Result<Vec<Complex64>> {
    let vals = f.sample_on(spatial)?;
    let data: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let out = tensor_pass(ks, spatial, freq, data, true);
    let c = 1.0 / ctx.c_k();
    Ok(out.into_iter().map(|v| v * c).collect())
}

/// 𝓕f(ξ) = c_k^{-1} ∫ E(−iξ, x) f(x) dw(x) on the default grids.
pub fn dunkl_transform(ctx: &WeightedContext, f: &SmoothFunction) -> Result<SpectralFunction> {
    dunkl_transform_with(ctx, f, &TransformOptions::defaults(ctx))
}

pub fn dunkl_transform_with(
    ctx: &WeightedContext,
    f: &SmoothFunction,
    opts: &TransformOptions,
) -> Result<SpectralFunction> {
    let ks = ctx.require_product("the Dunkl transform")?.to_vec();
    let freq = ctx.grid(opts.frequency);
    let (spatial, refinable) = match f {
        SmoothFunction::GridSampled(g) => (Arc::clone(&g.grid), false),
        _ => (ctx.grid(opts.spatial), true),
    };
    if refinable {
        let (shell, total) = ctx.boundary_shell(opts.spatial, |x| f.eval(x).unwrap_or(0.0));
        if total > 0.0 && shell > ctx.settings().tolerance * total {
            return Err(DunklError::DomainTooSmall {
                what: "Dunkl transform".into(),
                shell,
                total,
            });
        }
    }
    let values = forward_values(ctx, &ks, &spatial, &freq, f)?;
    let mut error_estimate = f64::NAN;
    if refinable && opts.check_refinement {
        let fine_grid = ctx.grid(opts.spatial.refined());
        let fine = forward_values(ctx, &ks, &fine_grid, &freq, f)?;
        let scale = fine.iter().map(|v| v.norm()).fold(0.0, f64::max);
        error_estimate = values
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if error_estimate > ctx.settings().tolerance * scale.max(f64::MIN_POSITIVE) {
            return Err(DunklError::accuracy(
                "Dunkl transform",
                format!("refinement changes the transform by {error_estimate:.3e} (scale {scale:.3e})"),
            ));
        }
        return Ok(SpectralFunction {
            grid: freq,
            values: fine,
            provenance: Provenance::Forward,
            error_estimate,
        });
    }
    Ok(SpectralFunction {
        grid: freq,
        values,
        provenance: Provenance::Forward,
        error_estimate,
    })
}

/// Transform of a function given by samples on a spatial grid and on its
/// refinement, with the same boundary-shell and refinement checks as
/// [`dunkl_transform_with`]. Used when pointwise evaluation is expensive.
pub fn dunkl_transform_sampled(
    ctx: &WeightedContext,
    coarse: &GridSampled,
    fine: &GridSampled,
    frequency: GridSpec,
) -> Result<SpectralFunction> {
    let ks = ctx.require_product("the Dunkl transform")?.to_vec();
    let cut = 0.9 * coarse.grid.spec.half_width;
    let (mut shell, mut total) = (0.0, 0.0);
    for ((x, w), v) in coarse.grid.nodes.iter().zip(&coarse.grid.weights).zip(&coarse.values) {
        let a = w * v.abs();
        total += a;
        if x.iter().any(|c| c.abs() > cut) {
            shell += a;
        }
    }
    if !total.is_finite() || (total > 0.0 && shell > ctx.settings().tolerance * total) {
        return Err(DunklError::DomainTooSmall {
            what: "Dunkl transform".into(),
            shell,
            total,
        });
    }
    let freq = ctx.grid(frequency);
    let a = forward_values(ctx, &ks, &coarse.grid, &freq, &SmoothFunction::GridSampled(coarse.clone()))?;
    let b = forward_values(ctx, &ks, &fine.grid, &freq, &SmoothFunction::GridSampled(fine.clone()))?;
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let error_estimate = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if error_estimate > ctx.settings().tolerance * scale.max(f64::MIN_POSITIVE) {
        return Err(DunklError::accuracy(
            "Dunkl transform",
            format!("refinement changes the transform by {error_estimate:.3e} (scale {scale:.3e})"),
        ));
    }
    Ok(SpectralFunction {
        grid: freq,
        values: b,
        provenance: Provenance::Forward,
        error_estimate,
    })
}

/// Σ_a E(iξ_a, x) g_a W_a at one point (no c_k factor).
pub(crate) fn spectral_sum(ks: &[f64], g: &SpectralFunction, x: &[f64]) -> Complex64 {
    let grid = &g.grid;
    let vecs: Vec<Vec<Complex64>> = ks
        .iter()
        .enumerate()
        .map(|(d, &k)| {
            grid.axes[d]
                .nodes
                .iter()
                .zip(&grid.axes[d].weights)
                .map(|(&xi, &w)| rank1_imag(k, xi, x[d]) * w)
                .collect()
        })
        .collect();
    tensor_dot(&vecs, &g.values)
}

/// Σ over the tensor grid of Π_d v_d[a_d] · values[a].
pub(crate) fn tensor_dot(vecs: &[Vec<Complex64>], values: &[Complex64]) -> Complex64 {
    match vecs.len() {
        1 => vecs[0].iter().zip(values).map(|(a, b)| a * b).sum(),
        2 => {
            let n1 = vecs[1].len();
            vecs[0]
                .iter()
                .enumerate()
                .map(|(a, va)| {
                    let row = &values[a * n1..(a + 1) * n1];
                    va * vecs[1].iter().zip(row).map(|(x, y)| x * y).sum::<Complex64>()
                })
                .sum()
        }
        _ => {
            let inner: usize = vecs[1..].iter().map(|v| v.len()).product();
            vecs[0]
                .iter()
                .enumerate()
                .map(|(a, va)| va * tensor_dot(&vecs[1..], &values[a * inner..(a + 1) * inner]))
                .sum()
        }
    }
}

/// 𝓕^{-1}g(x) = c_k^{-1} ∫ E(iξ, x) g(ξ) dw(ξ) at the given points.
pub fn inverse_at(ctx: &WeightedContext, g: &SpectralFunction, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let ks = ctx.require_product("the inverse Dunkl transform")?.to_vec();
    if points.iter().any(|p| p.len() != ks.len()) {
        return Err(DunklError::InvalidArgument("point dimension mismatch".into()));
    }
    let c = 1.0 / ctx.c_k();
    Ok(points
        .par_iter()
        .map(|x| spectral_sum(&ks, g, x) * c)
        .collect())
}

/// Inverse transform sampled on the spatial grid `spec`, real part kept.
pub fn inverse_dunkl_transform_on(
    ctx: &WeightedContext,
    g: &SpectralFunction,
    spec: GridSpec,
) -> Result<(GridSampled, f64)> {
    let ks = ctx.require_product("the inverse Dunkl transform")?.to_vec();
    let spatial = ctx.grid(spec);
    let out = tensor_pass(&ks, &g.grid, &spatial, g.values.clone(), false);
    let c = 1.0 / ctx.c_k();
    let imag = out.iter().map(|v| (v.im * c).abs()).fold(0.0, f64::max);
    let values = out.iter().map(|v| v.re * c).collect();
    Ok((GridSampled::new(spatial, values)?, imag))
}

/// Inverse transform on the default spatial grid.
pub fn inverse_dunkl_transform(ctx: &WeightedContext, g: &SpectralFunction) -> Result<SmoothFunction> {
    let (f, _) = inverse_dunkl_transform_on(ctx, g, ctx.settings().grid_spec())?;
    Ok(SmoothFunction::GridSampled(f))
}

/// 𝓕f · 𝓕g on a shared frequency grid, times c_k so that the inverse
/// transform of the result is f∗g.
pub fn convolution_symbol(
    ctx: &WeightedContext,
    f: &SmoothFunction,
    g: &SmoothFunction,
    opts: &TransformOptions,
) -> Result<SpectralFunction> {
    let ff = dunkl_transform_with(ctx, f, opts)?;
    let gg = dunkl_transform_with(ctx, g, opts)?;
    Ok(ff.mul(&gg)?.scale(ctx.c_k()))
}

/// f∗g = c_k 𝓕^{-1}[(𝓕f)(𝓕g)] at the given points.
pub fn convolve_at(
    ctx: &WeightedContext,
    f: &SmoothFunction,
    g: &SmoothFunction,
    opts: &TransformOptions,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let sym = convolution_symbol(ctx, f, g, opts)?;
    Ok(inverse_at(ctx, &sym, points)?.into_iter().map(|v| v.re).collect())
}

/// f∗g sampled on the default spatial grid.
pub fn dunkl_convolve(ctx: &WeightedContext, f: &SmoothFunction, g: &SmoothFunction) -> Result<SmoothFunction> {
    let opts = TransformOptions::defaults(ctx);
    let sym = convolution_symbol(ctx, f, g, &opts)?;
    let (out, _) = inverse_dunkl_transform_on(ctx, &sym, opts.spatial)?;
    Ok(SmoothFunction::GridSampled(out))
}
