//! Calibrate/held-out protocols for the two-point and heat bounds and the
//! auxiliary lemma bounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DunklError, Result};
use crate::function::{Callable, EtaProduct, SmoothFunction};
use crate::kernel::product_imag;
use crate::measure::{eta, GridSpec, QuadratureGrid, WeightedContext};
use crate::root_system::{dot, norm};
use crate::semigroup::{translate_at, translate_on_axes, translate_on_grid, KernelEvaluator, KernelSpec};
use crate::transform::{dunkl_transform_with, SpectralFunction, TransformOptions};

use super::fit::SAMPLE_FLOOR;
use super::kernels::{decay_exponent, resolve_kernel};
use super::{
    est, exact, geometric, lattice, lattice_axis, majorant_rate, ratio_protocol, split_alternating, Condition,
    VerificationReport, HELD_OUT_MARGIN,
};

/// Points whose unordered pairs (including x = y) are tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairGrid {
    pub extent: f64,
    pub steps: usize,
    pub points: Option<Vec<Vec<f64>>>,
}

impl Default for PairGrid {
    fn default() -> Self {
        PairGrid {
            extent: 4.0,
            steps: 0,
            points: None,
        }
    }
}

impl PairGrid {
    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        if let Some(p) = &self.points {
            return p.clone();
        }
        let steps = match (self.steps, dim) {
            (0, 1) => 41,
            (0, _) => 9,
            (s, _) => s,
        };
        lattice(dim, self.extent, steps)
    }

    /// Index pairs i ≤ j in row-major order.
    pub fn index_pairs(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
    }
}

/// Samples (u, y = log(|q|·V)) of one bound; the rate is fitted on the
/// calibration half by the upper hull, C as the max of y + c·u.
struct BoundSamples {
    u: Vec<f64>,
    y: Vec<f64>,
    dropped: usize,
}

fn bound_protocol(r: &mut VerificationReport, s: &BoundSamples) -> Result<(f64, f64)> {
    let idx: Vec<usize> = (0..s.u.len()).collect();
    let (cal, held) = split_alternating(&idx);
    let cu: Vec<f64> = cal.iter().map(|&i| s.u[i]).collect();
    let cy: Vec<f64> = cal.iter().map(|&i| s.y[i]).collect();
    let c = majorant_rate(&cu, &cy).ok_or_else(|| DunklError::Fit("calibration set has no spread in distance".into()))?;
    let log_c = cal
        .iter()
        .map(|&i| s.y[i] + c * s.u[i])
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let excess = held
        .iter()
        .map(|&i| s.y[i] + c * s.u[i] - log_c)
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    r.fit("c", c, 0.0);
    r.fit("C", log_c.exp(), 0.0);
    r.fit("n_calibration", cal.len() as f64, 0.0);
    r.fit("n_held_out", held.len() as f64, 0.0);
    r.push(Condition::positive("fitted c", exact(c)));
    r.push(Condition::at_most(
        "held-out log(|q| V) + c u - log C",
        exact(excess),
        HELD_OUT_MARGIN.ln(),
    ));
    if s.dropped > 0 {
        r.note(format!(
            "{} pairs with |q| below 10x its error estimate or {SAMPLE_FLOOR:e} were not used",
            s.dropped
        ));
    }
    Ok((c, log_c.exp()))
}

fn ball_volumes(ctx: &WeightedContext, points: &[Vec<f64>], r: f64) -> Result<Vec<f64>> {
    points.iter().map(|x| ctx.ball_volume(x, r).map(|b| b.value)).collect()
}

// ---------------------------------------------------------------- two-point

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoPointParams {
    pub kernel: Option<KernelSpec>,
    pub ell: Option<u32>,
    pub pairs: PairGrid,
    pub freq_nodes: Option<usize>,
}

impl Default for TwoPointParams {
    fn default() -> Self {
        TwoPointParams {
            kernel: None,
            ell: None,
            pairs: PairGrid::default(),
            freq_nodes: None,
        }
    }
}

/// |q(x,y)|·V(x,y,1) ≤ C exp(−c·d(x,y)^{2ℓ/(2ℓ−1)}) with the exponent imposed.
pub fn check_two_point_bound(ctx: &WeightedContext, p: &TwoPointParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let spec = resolve_kernel(dim, &p.kernel, p.ell).with_t(1.0);
    if !(1..=2).contains(&spec.ell) {
        return Err(DunklError::InvalidArgument(format!(
            "two-point bound supports ℓ ∈ {{1, 2}}, got {}",
            spec.ell
        )));
    }
    spec.validate(dim)?;
    let pw = decay_exponent(spec.ell);
    let pts = p.pairs.points(dim);
    let vols = ball_volumes(ctx, &pts, 1.0)?;
    let idx = PairGrid::index_pairs(pts.len());
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = idx.iter().map(|&(i, j)| (pts[i].clone(), pts[j].clone())).collect();
    let ev = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?;
    let vals = ev.two_point_many(&pairs)?;
    let mut s = BoundSamples { u: Vec::new(), y: Vec::new(), dropped: 0 };
    let mut zero_dist_max: f64 = 0.0;
    for (&(i, j), v) in idx.iter().zip(&vals) {
        let a = v.value.abs();
        if a <= SAMPLE_FLOOR.max(10.0 * v.error) {
            s.dropped += 1;
            continue;
        }
        let d = ctx.orbit_distance(&pts[i], &pts[j]);
        let vv = vols[i].max(vols[j]);
        if d == 0.0 {
            zero_dist_max = zero_dist_max.max(a * vv);
        }
        s.u.push(d.powf(pw));
        s.y.push((a * vv).ln());
    }
    let mut r = VerificationReport::new("thm2-two-point");
    r.grid_value("n_points", pts.len() as f64);
    r.grid_value("n_pairs", idx.len() as f64);
    r.grid_value("pair_extent", p.pairs.extent);
    r.grid_value("freq_box", ev.freq_box);
    r.grid_value("freq_nodes", ev.freq_nodes as f64);
    r.fit("exponent_imposed", pw, 0.0);
    r.fit("zero_distance_max", zero_dist_max, 0.0);
    r.fit(
        "max_kernel_error",
        vals.iter().map(|v| v.error).fold(0.0, f64::max),
        0.0,
    );
    bound_protocol(&mut r, &s)?;
    Ok(r.finish())
}

// ---------------------------------------------------------------- heat bound

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatBoundParams {
    pub t: Vec<f64>,
    pub pairs: PairGrid,
    /// When set, the fitted c must lie within `c_tolerance` (relative) of it.
    pub expected_c: Option<f64>,
    pub c_tolerance: f64,
    pub freq_nodes: Option<usize>,
}

impl Default for HeatBoundParams {
    fn default() -> Self {
        HeatBoundParams {
            t: vec![0.5, 1.0, 2.0],
            pairs: PairGrid::default(),
            expected_c: None,
            c_tolerance: 0.02,
            freq_nodes: None,
        }
    }
}

/// h_t(x,y)·V(x,y,√t) ≤ C exp(−c d(x,y)²/t), pooled over t.
pub fn check_heat_gaussian_bound(ctx: &WeightedContext, p: &HeatBoundParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    if p.t.is_empty() || p.t.iter().any(|t| !(0.25..=4.0).contains(t)) {
        return Err(DunklError::InvalidArgument(format!(
            "heat bound needs t ⊂ [0.25, 4], got {:?}",
            p.t
        )));
    }
    let pts = p.pairs.points(dim);
    let idx = PairGrid::index_pairs(pts.len());
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = idx.iter().map(|&(i, j)| (pts[i].clone(), pts[j].clone())).collect();
    let dist: Vec<f64> = idx.iter().map(|&(i, j)| ctx.orbit_distance(&pts[i], &pts[j])).collect();
    let mut s = BoundSamples { u: Vec::new(), y: Vec::new(), dropped: 0 };
    let mut r = VerificationReport::new("heat-gaussian-bound");
    let mut worst_err: f64 = 0.0;
    for &t in &p.t {
        let vols = ball_volumes(ctx, &pts, t.sqrt())?;
        let ev = KernelEvaluator::new(ctx, &KernelSpec::heat(dim, t), p.freq_nodes)?;
        let vals = ev.two_point_many(&pairs)?;
        r.grid_value(format!("freq_box_t={t}"), ev.freq_box);
        for ((&(i, j), v), &d) in idx.iter().zip(&vals).zip(&dist) {
            worst_err = worst_err.max(v.error);
            if v.value <= SAMPLE_FLOOR.max(10.0 * v.error) {
                s.dropped += 1;
                continue;
            }
            s.u.push(d * d / t);
            s.y.push((v.value * vols[i].max(vols[j])).ln());
        }
    }
    r.grid_value("n_points", pts.len() as f64);
    r.grid_value("n_pairs", idx.len() as f64);
    r.grid_value("pair_extent", p.pairs.extent);
    r.fit("max_kernel_error", worst_err, 0.0);
    let (c, _) = bound_protocol(&mut r, &s)?;
    if let Some(expected) = p.expected_c {
        r.fit("c_expected", expected, 0.0);
        r.push(Condition::at_most(
            "relative deviation of c",
            exact((c - expected).abs() / expected),
            p.c_tolerance,
        ));
    }
    Ok(r.finish())
}

// ---------------------------------------------------------------- auxiliary

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxiliaryKind {
    EBound,
    ELipschitz,
    TranslationLipschitz,
    CompactSupportL1,
    ExpWeightedL1,
}

impl AuxiliaryKind {
    pub fn name(self) -> &'static str {
        match self {
            AuxiliaryKind::EBound => "e-bound",
            AuxiliaryKind::ELipschitz => "e-lipschitz",
            AuxiliaryKind::TranslationLipschitz => "translation-lipschitz",
            AuxiliaryKind::CompactSupportL1 => "compact-support-l1",
            AuxiliaryKind::ExpWeightedL1 => "exp-weighted-l1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxiliaryParams {
    pub kind: AuxiliaryKind,
    /// Sample count per axis of the (ξ, x) grid for the kernel bounds.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_extent")]
    pub extent: f64,
    /// Relative spread allowed between calibration and held-out constants.
    #[serde(default = "default_stability")]
    pub stability: f64,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub ell: Option<u32>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    /// c' in the exponential weight.
    #[serde(default = "default_weight_rate")]
    pub weight_rate: f64,
    #[serde(default)]
    pub freq_box: Option<f64>,
    #[serde(default)]
    pub freq_nodes: Option<usize>,
    #[serde(default)]
    pub spatial_nodes: Option<usize>,
    #[serde(default = "default_bump_power")]
    pub bump_power: u32,
}

fn default_grid_size() -> usize {
    50
}
fn default_extent() -> f64 {
    20.0
}
fn default_stability() -> f64 {
    0.05
}
fn default_eps0() -> f64 {
    0.1
}
fn default_weight_rate() -> f64 {
    0.1
}
fn default_bump_power() -> u32 {
    12
}

impl AuxiliaryParams {
    pub fn new(kind: AuxiliaryKind) -> Self {
        AuxiliaryParams {
            kind,
            grid_size: default_grid_size(),
            extent: default_extent(),
            stability: default_stability(),
            kernel: None,
            ell: None,
            eps0: default_eps0(),
            weight_rate: default_weight_rate(),
            freq_box: None,
            freq_nodes: None,
            spatial_nodes: None,
            bump_power: default_bump_power(),
        }
    }
}

/// Calibration and held-out constants (each a max of ratios) must agree
/// within `stability`, relative to the calibration constant.
pub(crate) fn stability_condition(r: &mut VerificationReport, name: &str, ratios: &[f64], stability: f64) {
    let (cal, held) = split_alternating(ratios);
    let c_cal = cal.iter().copied().fold(0.0, f64::max);
    let c_held = held.iter().copied().fold(0.0, f64::max);
    r.fit(format!("{name}_held_out"), c_held, 0.0);
    r.push(Condition::at_most(
        format!("relative spread of {name} between halves"),
        exact((c_held - c_cal).abs() / c_cal),
        stability,
    ));
}

/// Points in [−a, a]^dim, about `n` in total.
fn sample_box(dim: usize, a: f64, n: usize) -> Vec<Vec<f64>> {
    let per_axis = (n as f64).powf(1.0 / dim as f64).round().max(2.0) as usize;
    lattice(dim, a, per_axis)
}

/// Radial bump (1 − ‖x‖²/r²)_+^m.
fn bump(x: &[f64], r: f64, m: u32) -> f64 {
    let v = 1.0 - dot(x, x) / (r * r);
    if v <= 0.0 {
        0.0
    } else {
        v.powi(m as i32)
    }
}

/// ∫ |values| dw on a grid and its 1.5× refinement; the second number is
/// the refinement change.
fn l1_with_refinement<F>(ctx: &WeightedContext, spec: GridSpec, f: F) -> Result<(f64, f64)>
where
    F: Fn(&QuadratureGrid) -> Result<Vec<f64>>,
{
    let mut out = [0.0; 2];
    for (slot, g) in [spec, spec.refined()].into_iter().enumerate() {
        let grid = ctx.grid(g);
        let vals = f(&grid)?;
        out[slot] = vals.iter().zip(&grid.weights).map(|(v, w)| v.abs() * w).sum();
    }
    Ok((out[1], (out[1] - out[0]).abs()))
}

pub fn check_auxiliary_bounds(ctx: &WeightedContext, p: &AuxiliaryParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let ks = ctx
        .product_multiplicities()
        .ok_or_else(|| DunklError::Capability("auxiliary bounds need a product system".into()))?
        .to_vec();
    let mut r = VerificationReport::new(format!("aux-{}", p.kind.name()));
    r.grid_value("grid_size", p.grid_size as f64);
    match p.kind {
        AuxiliaryKind::EBound => {
            let xs = sample_box(dim, p.extent, p.grid_size);
            let mut worst: f64 = 0.0;
            for xi in &xs {
                for x in &xs {
                    worst = worst.max(product_imag(&ks, xi, x).norm());
                }
            }
            let origin = vec![0.0; dim];
            let mut unit_defect: f64 = 0.0;
            for v in &xs {
                unit_defect = unit_defect
                    .max((product_imag(&ks, &origin, v).norm() - 1.0).abs())
                    .max((product_imag(&ks, v, &origin).norm() - 1.0).abs());
            }
            r.grid_value("extent", p.extent);
            r.grid_value("n_samples", (xs.len() * xs.len()) as f64);
            r.fit("max_abs_e", worst, 0.0);
            r.push(Condition::at_most("max |E(iξ, x)|", exact(worst), 1.0 + 1e-10));
            r.push(Condition::at_most("max ||E| - 1| at ξ = 0 or x = 0", exact(unit_defect), 1e-12));
        }
        AuxiliaryKind::ELipschitz => {
            let radii = geometric(0.01, p.extent.sqrt(), p.grid_size);
            let dirs = super::rays(dim);
            let mut ratios = Vec::new();
            // one sample per radius pair: the sup over all direction pairs
            for &a in &radii {
                for &b in &radii {
                    let mut best: f64 = 0.0;
                    for d in &dirs {
                        for e in &dirs {
                            let xi: Vec<f64> = d.iter().map(|v| v * a).collect();
                            let x: Vec<f64> = e.iter().map(|v| v * b).collect();
                            let v = product_imag(&ks, &xi, &x) - Complex64::new(1.0, 0.0);
                            best = best.max(v.norm() / (a * b));
                        }
                    }
                    ratios.push(best);
                }
            }
            r.grid_value("n_samples", ratios.len() as f64);
            ratio_protocol(&mut r, "C", &ratios);
            stability_condition(&mut r, "C", &ratios, p.stability);
        }
        AuxiliaryKind::TranslationLipschitz => {
            // τ_x q_1^{(ε)}(−y) − q_1^{(ε)}(−y) for ε ∈ {0, ε₀}, 𝓕q_1 = c_k^{-1} e^{−symbol}
            let base = resolve_kernel(dim, &p.kernel, p.ell.or(Some(2))).with_t(1.0);
            let ck = ctx.c_k();
            let fbox = p.freq_box.unwrap_or_else(|| base.frequency_box(dim));
            let fnodes = p.freq_nodes.unwrap_or(ctx.settings().nodes_per_axis);
            // the lattice is symmetric, so it also samples q_1(−y)
            let steps = if dim == 1 { 161 } else { 41 };
            let ys = lattice(dim, 8.0, steps);
            let axes = vec![lattice_axis(8.0, steps); dim];
            let dirs = super::rays(dim);
            let xs = geometric(0.05, 2.0, p.grid_size);
            let origin = vec![0.0; dim];
            let mut id_defect: f64 = 0.0;
            let mut id_error: f64 = 0.0;
            for eps in [0.0, p.eps0] {
                let spec = base.with_eps(eps);
                spec.validate(dim)?;
                let qhat = SpectralFunction::from_symbol(ctx, GridSpec::new(fbox, fnodes), "q_1", |xi| {
                    Complex64::new((-spec.symbol(xi)).exp() / ck, 0.0)
                })?;
                let ev = KernelEvaluator::new(ctx, &spec, Some(fnodes))?;
                let direct = ev.q_many(&ys)?;
                let t0 = translate_on_axes(ctx, &qhat, &origin, &axes)?;
                for (a, b) in t0.iter().zip(&direct) {
                    id_defect = id_defect.max((a.re - b.value).abs() + a.im.abs());
                    id_error = id_error.max(b.error);
                }
                // one sample per radius: the sup over directions
                let mut ratios = Vec::new();
                for &a in &xs {
                    let mut best: f64 = 0.0;
                    for d in &dirs {
                        let x: Vec<f64> = d.iter().map(|v| v * a).collect();
                        let tx = translate_on_axes(ctx, &qhat, &x, &axes)?;
                        let sup = tx
                            .iter()
                            .zip(&t0)
                            .map(|(u, v)| (u - v).norm())
                            .fold(0.0, f64::max);
                        best = best.max(sup / a);
                    }
                    ratios.push(best);
                }
                let name = format!("C_eps={eps}");
                ratio_protocol(&mut r, &name, &ratios);
                stability_condition(&mut r, &name, &ratios, p.stability);
            }
            r.grid_value("ell", base.ell as f64);
            r.grid_value("eps0", p.eps0);
            r.grid_value("freq_box", fbox);
            r.grid_value("freq_nodes", fnodes as f64);
            r.push(Condition::at_most("sup |τ_0 q_1 - q_1|", est(id_defect, id_error), 1e-9));
        }
        AuxiliaryKind::CompactSupportL1 => compact_support_l1(ctx, p, &mut r)?,
        AuxiliaryKind::ExpWeightedL1 => exp_weighted_l1(ctx, p, &mut r)?,
    }
    Ok(r.finish())
}

fn compact_support_l1(ctx: &WeightedContext, p: &AuxiliaryParams, r: &mut VerificationReport) -> Result<()> {
    let dim = ctx.dimension();
    let m = p.bump_power;
    let nn = ctx.homogeneous_dimension();
    let (fbox, fnodes, snodes) = match dim {
        1 => (40.0, 600, 200),
        _ => (20.0, 120, 60),
    };
    let fbox = p.freq_box.unwrap_or(fbox);
    let fnodes = p.freq_nodes.unwrap_or(fnodes);
    let snodes = p.spatial_nodes.unwrap_or(snodes);
    let radii = [0.5, 1.0, 2.0];
    let ys: Vec<Vec<f64>> = [0.0, 0.5, 1.5, 3.0]
        .iter()
        .map(|&a| {
            let mut y = vec![a; dim];
            if dim > 1 {
                y[1] = -0.5 * a;
            }
            y
        })
        .collect();
    let mut ratios = Vec::new();
    let mut worst_ref: f64 = 0.0;
    for &r1 in &radii {
        for &r2 in &radii {
            // f supported in B(0, r2), φ radial in B(0, r1)
            let f = SmoothFunction::Callable(Callable::new(dim, 0, move |x, _| {
                (1.0 + 0.5 * x[0] / r2) * bump(x, r2, m)
            }));
            let phi = SmoothFunction::Callable(Callable::new(dim, 0, move |x, _| bump(x, r1, m)));
            let freq = GridSpec::new(fbox, fnodes);
            let fhat = dunkl_transform_with(
                ctx,
                &f,
                &TransformOptions { spatial: GridSpec::new(r2, snodes), frequency: freq, check_refinement: true },
            )?;
            let phihat = dunkl_transform_with(
                ctx,
                &phi,
                &TransformOptions { spatial: GridSpec::new(r1, snodes), frequency: freq, check_refinement: true },
            )?;
            let conv = fhat.mul(&phihat)?.scale(ctx.c_k());
            let f_l1 = ctx
                .integrate_checked("bump L1 norm", GridSpec::new(r2, snodes), |x| {
                    ((1.0 + 0.5 * x[0] / r2) * bump(x, r2, m)).abs()
                })?
                .value;
            for y in &ys {
                let half = norm(y) + r1 + r2;
                let (l1, change) = l1_with_refinement(ctx, GridSpec::new(half, if dim == 1 { 400 } else { 80 }), |grid| {
                    Ok(translate_on_grid(ctx, &conv, y, grid)?.into_iter().map(|v| v.re).collect())
                })?;
                worst_ref = worst_ref.max(change / l1);
                ratios.push(l1 / ((r1 * (r1 + r2)).powf(nn / 2.0) * f_l1));
            }
        }
    }
    r.grid_value("freq_box", fbox);
    r.grid_value("freq_nodes", fnodes as f64);
    r.grid_value("spatial_nodes", snodes as f64);
    r.grid_value("bump_power", m as f64);
    r.fit("relative_refinement_change", worst_ref, 0.0);
    r.push(Condition::at_most("relative L1 refinement change", exact(worst_ref), 0.02));
    ratio_protocol(r, "C", &ratios);
    Ok(())
}

fn exp_weighted_l1(ctx: &WeightedContext, p: &AuxiliaryParams, r: &mut VerificationReport) -> Result<()> {
    let dim = ctx.dimension();
    let spec = resolve_kernel(dim, &p.kernel, p.ell.or(Some(2))).with_t(1.0);
    let eps0 = p.eps0;
    spec.with_eps(eps0).validate(dim)?;
    let a = decay_exponent(spec.ell);
    let rate = a.min(2.0);
    let c_prime = p.weight_rate;
    let fbox = p.freq_box.unwrap_or_else(|| spec.frequency_box(dim));
    let fnodes = p.freq_nodes.unwrap_or(ctx.settings().nodes_per_axis);
    let ck = ctx.c_k();
    // 𝓕(q_1^{(ε₀)} ∗ h_{ε₀/2}) = c_k^{-1} exp(−symbol + (ε₀/2)‖ξ‖²)
    let g = SpectralFunction::from_symbol(ctx, GridSpec::new(fbox, fnodes), "q_eps * h", |xi| {
        Complex64::new((-spec.symbol(xi) + 0.5 * eps0 * dot(xi, xi)).exp() / ck, 0.0)
    })?;
    let ys: Vec<Vec<f64>> = geometric(0.25, 6.0, 12)
        .into_iter()
        .map(|a| {
            let mut y = vec![0.0; dim];
            y[0] = a;
            if dim > 1 {
                y[1] = -0.4 * a;
            }
            y
        })
        .collect();
    let snodes = p.spatial_nodes.unwrap_or(if dim == 1 { 300 } else { 80 });
    let mut values = Vec::new();
    let mut worst_ref: f64 = 0.0;
    for y in &ys {
        let half = norm(y) + 14.0;
        let (w, change) = l1_with_refinement(ctx, GridSpec::new(half, snodes), |grid| {
            let xs = &grid.nodes;
            let neg: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| -v).collect()).collect();
            let t = translate_at(ctx, &g, y, &neg)?;
            Ok(t.iter()
                .zip(xs)
                .map(|(v, x)| v.re * (c_prime * ctx.orbit_distance(x, y).powf(rate)).exp())
                .collect())
        })?;
        worst_ref = worst_ref.max(change / w);
        values.push(w);
    }
    r.grid_value("freq_box", fbox);
    r.grid_value("freq_nodes", fnodes as f64);
    r.grid_value("spatial_nodes", snodes as f64);
    r.grid_value("weight_rate", c_prime);
    r.grid_value("weight_exponent", rate);
    r.fit("max_weighted_l1", values.iter().copied().fold(0.0, f64::max), 0.0);
    r.push(Condition::at_most("relative refinement change", exact(worst_ref), 0.02));
    ratio_protocol(r, "C_prime", &values);
    Ok(())
}

// ---------------------------------------------------------------- doubling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoublingParams {
    pub extent: f64,
    pub steps: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_radii: usize,
}

impl Default for DoublingParams {
    fn default() -> Self {
        DoublingParams {
            extent: 5.0,
            steps: 0,
            r_min: 0.05,
            r_max: 8.0,
            n_radii: 12,
        }
    }
}

/// w(B(x,2r)) / w(B(x,r)) bounded, and w(B(x,r)) comparable to
/// r^N Π(|⟨x,α⟩| + r)^{k(α)}.
pub fn run_doubling(ctx: &WeightedContext, p: &DoublingParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let steps = match (p.steps, dim) {
        (0, 1) => 21,
        (0, _) => 7,
        (s, _) => s,
    };
    let pts = lattice(dim, p.extent, steps);
    let radii = geometric(p.r_min, p.r_max, p.n_radii);
    let mut doubling = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for x in &pts {
        for &rad in &radii {
            let b1 = ctx.ball_volume(x, rad)?;
            let b2 = ctx.ball_volume(x, 2.0 * rad)?;
            doubling.push(b2.value / b1.value);
            upper.push(b1.value / b1.proxy);
            lower.push(b1.proxy / b1.value);
        }
    }
    let mut r = VerificationReport::new("doubling");
    r.grid_value("n_points", pts.len() as f64);
    r.grid_value("n_radii", radii.len() as f64);
    r.fit("doubling_bound", 2f64.powf(ctx.homogeneous_dimension()), 0.0);
    ratio_protocol(&mut r, "doubling", &doubling);
    ratio_protocol(&mut r, "volume_over_proxy", &upper);
    ratio_protocol(&mut r, "proxy_over_volume", &lower);
    Ok(r.finish())
}

// ---------------------------------------------------------------- eta

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EtaDerivativeParams {
    pub s: Vec<f64>,
    pub extent: f64,
    pub max_order: usize,
    pub step: f64,
}

impl Default for EtaDerivativeParams {
    fn default() -> Self {
        EtaDerivativeParams {
            s: vec![0.3, 0.5, 1.0, 2.0, 4.0],
            extent: 6.0,
            max_order: 2,
            step: 1e-3,
        }
    }
}

fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::new();
        for m in &out {
            for d in 0..=max_order {
                let mut v = m.clone();
                v.push(d);
                if v.iter().sum::<usize>() <= max_order {
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out.retain(|m| m.iter().sum::<usize>() > 0);
    out.sort_by_key(|m| (m.iter().sum::<usize>(), m.clone()));
    out
}

/// Central finite difference of order β with step h.
fn finite_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], beta: &[usize], h: f64) -> f64 {
    match beta.iter().position(|&b| b > 0) {
        None => f(x),
        Some(j) => {
            let mut rest = beta.to_vec();
            rest[j] -= 1;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            (finite_difference(f, &xp, &rest, h) - finite_difference(f, &xm, &rest, h)) / (2.0 * h)
        }
    }
}

/// |∂^β η(x,s)| ≤ C_β s^{|β|} η(x,s): analytic derivatives checked against
/// finite differences, then C_β by the ratio protocol.
pub fn run_eta_derivatives(ctx: &WeightedContext, p: &EtaDerivativeParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let pts = lattice(dim, p.extent, if dim == 1 { 61 } else { 13 });
    let mut r = VerificationReport::new("eta-derivatives");
    let mut fd_defect: f64 = 0.0;
    for beta in multi_indices(dim, p.max_order) {
        let order = beta.iter().sum::<usize>() as i32;
        let mut ratios = Vec::new();
        for &s in &p.s {
            let mut g = EtaProduct::eta(dim, s);
            for (j, &b) in beta.iter().enumerate() {
                for _ in 0..b {
                    g = g.deriv(j);
                }
            }
            let ev = g.evaluator();
            let plain = |x: &[f64]| eta(x, s);
            for x in &pts {
                let d = ev(x);
                let e = eta(x, s);
                let fd = finite_difference(&plain, x, &beta, p.step * (1.0 + norm(x)) / s.max(1.0));
                fd_defect = fd_defect.max((d - fd).abs() / (s.powi(order) * e));
                ratios.push(d.abs() / (s.powi(order) * e));
            }
        }
        let label: Vec<String> = beta.iter().map(|b| b.to_string()).collect();
        ratio_protocol(&mut r, &format!("C_beta_{}", label.join("")), &ratios);
    }
    r.grid_value("n_points", pts.len() as f64);
    r.grid_value("fd_step", p.step);
    r.push(Condition::at_most(
        "relative finite-difference defect",
        exact(fd_defect),
        1e-4,
    ));
    Ok(r.finish())
}
