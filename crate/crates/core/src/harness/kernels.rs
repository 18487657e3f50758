//! Checks on the semigroup kernels: decay exponents, the heat oracle,
//! kernel identities and CSV export.

use serde::{Deserialize, Serialize};

use crate::calculus::{dunkl_laplacian, iterated_laplacian};
use crate::error::{DunklError, Result};
use crate::function::{Callable, GridSampled, SmoothFunction};
use crate::measure::{GridSpec, WeightedContext};
use crate::root_system::{dot, norm};
use crate::semigroup::{heat_kernel, KernelEvaluator, KernelSpec, KernelValue};
use crate::transform::{dunkl_transform_sampled, dunkl_transform_with, inverse_at, TransformOptions};

use super::fit::{fit_decay_envelope, fit_decay_exponent, SAMPLE_FLOOR};
use super::{
    est, exact, geometric, hermite_family, lattice, linspace, rays, unit_vectors, Condition, PlotPoint,
    VerificationReport,
};

/// Kernel from an explicit spec, or ℓ with ζ = {e_j}.
pub(crate) fn resolve_kernel(dim: usize, kernel: &Option<KernelSpec>, ell: Option<u32>) -> KernelSpec {
    match kernel {
        Some(k) => k.clone(),
        None => KernelSpec::new(unit_vectors(dim), ell.unwrap_or(1), 0.0, 1.0),
    }
}

/// Decay exponent 2ℓ/(2ℓ−1).
pub(crate) fn decay_exponent(ell: u32) -> f64 {
    let l = 2.0 * ell as f64;
    l / (l - 1.0)
}

/// q_t at many points; for ε = 0 and t outside [0.25, 4] through the scaling
/// law from t = 1.
pub(crate) fn q_values(
    ctx: &WeightedContext,
    spec: &KernelSpec,
    points: &[Vec<f64>],
    freq_nodes: Option<usize>,
) -> Result<Vec<KernelValue>> {
    spec.validate(ctx.dimension())?;
    if spec.eps == 0.0 && !(0.25..=4.0).contains(&spec.t) {
        let p = 2.0 * spec.ell as f64;
        let s = spec.t.powf(1.0 / p);
        let factor = spec.t.powf(-ctx.homogeneous_dimension() / p);
        let ev = KernelEvaluator::new(ctx, &spec.with_t(1.0), freq_nodes)?;
        let scaled: Vec<Vec<f64>> = points.iter().map(|x| x.iter().map(|v| v / s).collect()).collect();
        return Ok(ev
            .q_many(&scaled)?
            .into_iter()
            .map(|v| KernelValue {
                value: v.value * factor,
                error: v.error * factor,
            })
            .collect());
    }
    KernelEvaluator::new(ctx, spec, freq_nodes)?.q_many(points)
}

fn default_points(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => lattice(1, 6.0, 25),
        _ => lattice(dim, 4.0, 9),
    }
}

fn fill_grid(report: &mut VerificationReport, ctx: &WeightedContext) {
    let s = ctx.settings();
    report.grid_value("box_half_width", s.half_width);
    report.grid_value("nodes_per_axis", s.nodes_per_axis as f64);
    report.grid_value("tolerance", s.tolerance);
}

// ---------------------------------------------------------------- decay fit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayParams {
    pub kernel: Option<KernelSpec>,
    pub ell: Option<u32>,
    pub r_min: f64,
    pub r_max: f64,
    pub n_radii: usize,
    /// Allowed relative deviation of the fitted exponent.
    pub exponent_tolerance: f64,
    pub min_r_squared: f64,
    /// Allowed relative exponent shift when refitting at 1.5× resolution.
    pub refit_tolerance: f64,
    pub freq_nodes: Option<usize>,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            kernel: None,
            ell: None,
            r_min: 0.75,
            r_max: 6.0,
            n_radii: 24,
            exponent_tolerance: 0.05,
            min_r_squared: 0.995,
            refit_tolerance: 0.01,
            freq_nodes: None,
        }
    }
}

fn ray_points(dim: usize, radii: &[f64]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut pts = Vec::new();
    let mut series = Vec::new();
    for (s, d) in rays(dim).iter().enumerate() {
        for &r in radii {
            pts.push(d.iter().map(|v| v * r).collect());
            series.push(s);
        }
    }
    (pts, series)
}

/// Fits p in |q_1(x)| ≈ C exp(−c‖x‖^p) along rays and compares it with
/// 2ℓ/(2ℓ−1); the fit is repeated at 1.5× frequency resolution.
pub fn run_decay(ctx: &WeightedContext, p: &DecayParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let spec = resolve_kernel(dim, &p.kernel, p.ell).with_t(1.0);
    spec.validate(dim)?;
    let target = decay_exponent(spec.ell);
    let radii = geometric(p.r_min, p.r_max, p.n_radii);
    let (pts, series) = ray_points(dim, &radii);
    let ev = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?;
    let vals = ev.q_many(&pts)?;
    let samples: Vec<(f64, f64)> = pts.iter().zip(&vals).map(|(x, v)| (norm(x), v.value)).collect();
    let fit = fit_decay_exponent(&samples, target)?;

    let fine_nodes = GridSpec::new(ev.freq_box, ev.freq_nodes).refined().nodes_per_axis;
    let ev2 = KernelEvaluator::new(ctx, &spec, Some(fine_nodes))?;
    let vals2 = ev2.q_many(&pts)?;
    let samples2: Vec<(f64, f64)> = pts.iter().zip(&vals2).map(|(x, v)| (norm(x), v.value)).collect();
    let fit2 = fit_decay_exponent(&samples2, target)?;

    let mut r = VerificationReport::new("thm1-decay");
    fill_grid(&mut r, ctx);
    r.grid_value("freq_box", ev.freq_box);
    r.grid_value("freq_nodes", ev.freq_nodes as f64);
    r.grid_value("refit_freq_nodes", fine_nodes as f64);
    r.grid_value("r_min", p.r_min);
    r.grid_value("r_max", p.r_max);
    r.grid_value("n_radii", p.n_radii as f64);
    r.grid_value("n_rays", rays(dim).len() as f64);
    r.fit("exponent", fit.exponent_fitted, fit.std_errors[0]);
    r.fit("c", fit.c_fitted, fit.std_errors[1]);
    r.fit("C", fit.big_c_fitted, fit.big_c_fitted * fit.std_errors[2]);
    r.fit("r_squared", fit.r_squared, 0.0);
    r.fit("exponent_target", target, 0.0);
    r.fit("exponent_refit", fit2.exponent_fitted, fit2.std_errors[0]);
    r.fit("n_samples", fit.n_samples as f64, 0.0);
    let max_err = vals.iter().map(|v| v.error).fold(0.0, f64::max);
    r.fit("max_kernel_error", max_err, 0.0);
    r.push(Condition::at_most(
        "relative exponent deviation",
        est((fit.exponent_fitted - target).abs() / target, fit.std_errors[0] / target),
        p.exponent_tolerance,
    ));
    r.push(Condition::at_least("r_squared", exact(fit.r_squared), p.min_r_squared));
    r.push(Condition::at_most(
        "relative exponent shift at 1.5x resolution",
        exact((fit2.exponent_fitted - fit.exponent_fitted).abs() / fit.exponent_fitted.abs()),
        p.refit_tolerance,
    ));
    let floor_hits = vals.iter().filter(|v| v.value.abs() <= SAMPLE_FLOOR).count();
    if floor_hits > 0 {
        r.note(format!("{floor_hits} samples at or below the fit floor were left out"));
    }
    for ((x, v), s) in pts.iter().zip(&vals).zip(&series) {
        if v.value.abs() > SAMPLE_FLOOR {
            r.plot.push(PlotPoint {
                series: *s,
                norm_x: norm(x),
                log_abs_q: v.value.abs().ln(),
            });
        }
    }
    Ok(r.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeParams {
    pub kernel: Option<KernelSpec>,
    pub ell: Option<u32>,
    pub r_min: f64,
    pub r_max: f64,
    pub n_radii: usize,
    pub exponent_tolerance: f64,
    pub freq_nodes: Option<usize>,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        EnvelopeParams {
            kernel: None,
            ell: None,
            r_min: 0.25,
            r_max: 30.0,
            n_radii: 600,
            exponent_tolerance: 0.05,
            freq_nodes: None,
        }
    }
}

/// Diagnostic: fits the envelope model log C − γ log‖x‖ − c‖x‖^p through
/// the decreasing majorant of |q_1| on an extended radial range.
pub fn run_decay_envelope(ctx: &WeightedContext, p: &EnvelopeParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let spec = resolve_kernel(dim, &p.kernel, p.ell).with_t(1.0);
    spec.validate(dim)?;
    let target = decay_exponent(spec.ell);
    let radii = linspace(p.r_min, p.r_max, p.n_radii);
    let (pts, series) = ray_points(dim, &radii);
    let ev = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?;
    let vals = ev.q_many(&pts)?;
    let n_rays = rays(dim).len();
    let mut per_ray: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_rays];
    // values below the evaluator's own error are noise
    let noise = vals.iter().map(|v| v.error).fold(0.0, f64::max);
    for ((x, v), &s) in pts.iter().zip(&vals).zip(&series) {
        if v.value.abs() > 10.0 * noise {
            per_ray[s].push((norm(x), v.value));
        }
    }
    let fit = fit_decay_envelope(&per_ray, target)?;
    let mut r = VerificationReport::new("thm1-decay-envelope");
    fill_grid(&mut r, ctx);
    r.grid_value("freq_box", ev.freq_box);
    r.grid_value("freq_nodes", ev.freq_nodes as f64);
    r.grid_value("r_min", p.r_min);
    r.grid_value("r_max", p.r_max);
    r.grid_value("n_radii", p.n_radii as f64);
    r.fit("exponent", fit.exponent_fitted, 0.0);
    r.fit("c", fit.c_fitted, 0.0);
    r.fit("C", fit.big_c_fitted, 0.0);
    r.fit("gamma", fit.gamma_fitted, 0.0);
    r.fit("r_squared", fit.r_squared, 0.0);
    r.fit("n_envelope", fit.n_envelope as f64, 0.0);
    r.fit("noise_level", noise, 0.0);
    r.fit("exponent_target", target, 0.0);
    r.push(Condition::at_most(
        "relative exponent deviation",
        exact((fit.exponent_fitted - target).abs() / target),
        p.exponent_tolerance,
    ));
    for (s, ray) in per_ray.iter().enumerate() {
        for (x, q) in ray {
            r.plot.push(PlotPoint {
                series: s,
                norm_x: *x,
                log_abs_q: q.abs().ln(),
            });
        }
    }
    Ok(r.finish())
}

// ---------------------------------------------------------------- heat oracle

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatOracleParams {
    pub t: Vec<f64>,
    pub points: Option<Vec<Vec<f64>>>,
    pub tolerance: f64,
}

impl Default for HeatOracleParams {
    fn default() -> Self {
        HeatOracleParams {
            t: vec![0.5, 1.0, 2.0],
            points: None,
            tolerance: 1e-8,
        }
    }
}

/// The ℓ = 1, ζ = {e_j}, ε = 0 kernel against c_k^{-1}(2t)^{−𝐍/2}e^{−‖x‖²/4t}.
pub fn run_heat_oracle(ctx: &WeightedContext, p: &HeatOracleParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let pts = p.points.clone().unwrap_or_else(|| default_points(dim));
    let mut r = VerificationReport::new("heat-oracle");
    fill_grid(&mut r, ctx);
    let mut worst: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for &t in &p.t {
        let spec = KernelSpec::heat(dim, t);
        let vals = q_values(ctx, &spec, &pts, None)?;
        let mut sup: f64 = 0.0;
        for (x, v) in pts.iter().zip(&vals) {
            let h = heat_kernel(ctx, x, t)?;
            sup = sup.max((v.value - h).abs());
            worst_err = worst_err.max(v.error);
        }
        r.fit(format!("sup_defect_t={t}"), sup, 0.0);
        worst = worst.max(sup);
        r.grid_value(format!("freq_box_t={t}"), spec.frequency_box(dim));
    }
    r.grid_value("n_points", pts.len() as f64);
    r.push(Condition::at_most("sup |q_t - h_t|", est(worst, worst_err), p.tolerance));
    Ok(r.finish())
}

// ---------------------------------------------------------------- identities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityKind {
    Mass,
    Symmetry,
    Positivity,
    Semigroup,
    Scaling,
    Decomposition,
    LaplacianConsistency,
    EpsContinuity,
}

impl IdentityKind {
    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::Mass => "mass",
            IdentityKind::Symmetry => "symmetry",
            IdentityKind::Positivity => "positivity",
            IdentityKind::Semigroup => "semigroup",
            IdentityKind::Scaling => "scaling",
            IdentityKind::Decomposition => "decomposition",
            IdentityKind::LaplacianConsistency => "laplacian-consistency",
            IdentityKind::EpsContinuity => "eps-continuity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityParams {
    pub kind: IdentityKind,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub ell: Option<u32>,
    /// Base points (mass) or evaluation points (semigroup, scaling, decomposition).
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub t: Option<Vec<f64>>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Spatial box of the y-integral (mass) or of the transforms (convolutions).
    #[serde(default)]
    pub spatial_box: Option<f64>,
    #[serde(default)]
    pub spatial_nodes: Option<usize>,
    #[serde(default)]
    pub freq_nodes: Option<usize>,
    #[serde(default = "default_pairs")]
    pub n_pairs: usize,
}

fn default_eps0() -> f64 {
    0.1
}

fn default_pairs() -> usize {
    20
}

impl IdentityParams {
    pub fn new(kind: IdentityKind) -> Self {
        IdentityParams {
            kind,
            kernel: None,
            ell: None,
            points: None,
            t: None,
            eps0: default_eps0(),
            tolerance: None,
            spatial_box: None,
            spatial_nodes: None,
            freq_nodes: None,
            n_pairs: default_pairs(),
        }
    }
}

/// Deterministic low-discrepancy pairs in [−3, 3]^N.
fn sample_pairs(dim: usize, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let gens = [0.618_033_988_749_895, 0.414_213_562_373_095, 0.732_050_807_568_877, 0.236_067_977_499_79];
    let frac = |v: f64| v - v.floor();
    (0..n)
        .map(|i| {
            let i = i as f64 + 1.0;
            let x = (0..dim).map(|d| -3.0 + 6.0 * frac(0.5 + i * gens[d % 4])).collect();
            let y = (0..dim).map(|d| -3.0 + 6.0 * frac(0.25 + i * gens[(d + 1) % 4] + 0.1 * d as f64)).collect();
            (x, y)
        })
        .collect()
}

fn heat_closed_callable(ctx: &WeightedContext, t: f64) -> SmoothFunction {
    let nn = ctx.homogeneous_dimension();
    let ck = ctx.c_k();
    let dim = ctx.dimension();
    SmoothFunction::Callable(Callable::new(dim, 0, move |x, _| {
        (2.0 * t).powf(-0.5 * nn) * (-dot(x, x) / (4.0 * t)).exp() / ck
    }))
}

/// q sampled on a spatial grid and on its refinement.
fn sampled_kernel(ctx: &WeightedContext, ev: &KernelEvaluator, spatial: GridSpec) -> Result<(GridSampled, GridSampled)> {
    let sample = |spec: GridSpec| -> Result<GridSampled> {
        let g = ctx.grid(spec);
        let vals = ev.on_grid(&g, None)?.into_iter().map(|v| v.value).collect();
        GridSampled::new(g, vals)
    };
    Ok((sample(spatial)?, sample(spatial.refined())?))
}

/// The ℓ = 2 kernels keep ~1e-12 of their mass beyond |x| = 28 in rank one.
fn default_spatial_box(dim: usize) -> f64 {
    if dim == 1 {
        45.0
    } else {
        30.0
    }
}

/// Kernel identity checks; each reports its max defect against a tolerance.
pub fn kernel_identity_check(ctx: &WeightedContext, p: &IdentityParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let mut r = VerificationReport::new("kernel-identity");
    r.note(format!("kind: {}", p.kind.name()));
    fill_grid(&mut r, ctx);
    match p.kind {
        IdentityKind::Mass => {
            let tol = p.tolerance.unwrap_or(1e-6);
            let t = p.t.as_ref().and_then(|v| v.first().copied()).unwrap_or(1.0);
            let spec = KernelSpec::heat(dim, t);
            let ev = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?;
            let base = p.points.clone().unwrap_or_else(|| {
                [0.0, 1.0, 3.0]
                    .iter()
                    .map(|&a| {
                        let mut x = vec![0.0; dim];
                        x[0] = a;
                        x
                    })
                    .collect()
            });
            let grid = GridSpec::new(
                p.spatial_box.unwrap_or(20.0),
                p.spatial_nodes.unwrap_or(ctx.settings().nodes_per_axis),
            );
            r.grid_value("y_box", grid.half_width);
            r.grid_value("y_nodes", grid.nodes_per_axis as f64);
            r.grid_value("freq_box", ev.freq_box);
            let mut worst: f64 = 0.0;
            let mut worst_err: f64 = 0.0;
            for (i, x) in base.iter().enumerate() {
                let mut sums = [0.0; 2];
                for (slot, spec) in sums.iter_mut().zip([grid, grid.refined()]) {
                    let g = ctx.grid(spec);
                    let vals = ev.on_grid(&g, Some(x))?;
                    *slot = g.weights.iter().zip(&vals).map(|(w, v)| w * v.value).sum();
                }
                let err = (sums[1] - sums[0]).abs();
                if err > 1e-9 * sums[1].abs().max(1.0) {
                    return Err(DunklError::accuracy(
                        "heat kernel mass",
                        format!("y-grid refinement changes the mass by {err:.3e} at x = {x:?}"),
                    ));
                }
                r.fit(format!("mass_{i}"), sums[1], err);
                worst = worst.max((sums[1] - 1.0).abs());
                worst_err = worst_err.max(err);
            }
            r.push(Condition::at_most("max |mass - 1|", est(worst, worst_err), tol));
        }
        IdentityKind::Symmetry | IdentityKind::Positivity => {
            let spec = resolve_kernel(dim, &p.kernel, p.ell);
            let ev = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?;
            let pairs = sample_pairs(dim, p.n_pairs);
            let forward = ev.two_point_many(&pairs)?;
            if p.kind == IdentityKind::Symmetry {
                let swapped: Vec<_> = pairs.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
                let back = ev.two_point_many(&swapped)?;
                let defect = forward
                    .iter()
                    .zip(&back)
                    .map(|(a, b)| (a.value - b.value).abs())
                    .fold(0.0, f64::max);
                let err = forward.iter().map(|v| v.error).fold(0.0, f64::max);
                r.push(Condition::at_most(
                    "max |q(x,y) - q(y,x)|",
                    est(defect, err),
                    p.tolerance.unwrap_or(1e-8),
                ));
            } else {
                let min = forward.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
                let err = forward.iter().map(|v| v.error).fold(0.0, f64::max);
                r.fit("min_value", min, err);
                r.push(Condition::at_least("min q(x,y) - error", est(min - err, err), 0.0));
            }
            r.grid_value("n_pairs", pairs.len() as f64);
        }
        IdentityKind::Semigroup => {
            let tol = p.tolerance.unwrap_or(1e-7);
            let spec = resolve_kernel(dim, &p.kernel, p.ell.or(Some(2))).with_t(1.0);
            spec.validate(dim)?;
            let half = spec.with_t(0.5);
            let fbox = spec.frequency_box(dim);
            let nodes = p.spatial_nodes.unwrap_or(ctx.settings().nodes_per_axis);
            let opts = TransformOptions {
                spatial: GridSpec::new(p.spatial_box.unwrap_or(default_spatial_box(dim)), nodes),
                frequency: GridSpec::new(fbox, p.freq_nodes.unwrap_or(nodes)),
                check_refinement: true,
            };
            let (coarse, fine) = sampled_kernel(ctx, &KernelEvaluator::new(ctx, &half, p.freq_nodes)?, opts.spatial)?;
            let fhat = dunkl_transform_sampled(ctx, &coarse, &fine, opts.frequency)?;
            let sym = fhat.mul(&fhat)?.scale(ctx.c_k());
            let pts = p.points.clone().unwrap_or_else(|| default_points(dim));
            let conv = inverse_at(ctx, &sym, &pts)?;
            let direct = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?.q_many(&pts)?;
            let defect = conv
                .iter()
                .zip(&direct)
                .map(|(a, b)| (a.re - b.value).abs())
                .fold(0.0, f64::max);
            r.grid_value("spatial_box", opts.spatial.half_width);
            r.grid_value("spatial_nodes", nodes as f64);
            r.grid_value("freq_box", fbox);
            r.fit("transform_refinement_error", fhat.error_estimate, 0.0);
            r.push(Condition::at_most(
                "sup |q_0.5 * q_0.5 - q_1|",
                est(defect, fhat.error_estimate),
                tol,
            ));
        }
        IdentityKind::Scaling => {
            let tol = p.tolerance.unwrap_or(1e-7);
            let spec = resolve_kernel(dim, &p.kernel, p.ell.or(Some(2))).with_t(1.0);
            let pts = p.points.clone().unwrap_or_else(|| default_points(dim));
            let ev1 = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?;
            let pw = 2.0 * spec.ell as f64;
            let nn = ctx.homogeneous_dimension();
            let mut worst: f64 = 0.0;
            for t in p.t.clone().unwrap_or_else(|| vec![0.5, 2.0]) {
                let evt = KernelEvaluator::new(ctx, &spec.with_t(t), p.freq_nodes)?;
                let direct = evt.q_many(&pts)?;
                let s = t.powf(1.0 / pw);
                let scaled: Vec<Vec<f64>> = pts.iter().map(|x| x.iter().map(|v| v / s).collect()).collect();
                let base = ev1.q_many(&scaled)?;
                let factor = t.powf(-nn / pw);
                let d = direct
                    .iter()
                    .zip(&base)
                    .map(|(a, b)| (a.value - factor * b.value).abs())
                    .fold(0.0, f64::max);
                r.fit(format!("sup_defect_t={t}"), d, 0.0);
                worst = worst.max(d);
            }
            r.push(Condition::at_most("sup scaling-law defect", exact(worst), tol));
        }
        IdentityKind::Decomposition => {
            let tol = p.tolerance.unwrap_or(1e-6);
            let spec = resolve_kernel(dim, &p.kernel, p.ell.or(Some(2))).with_t(1.0);
            let eps0 = p.eps0;
            let perturbed = spec.with_eps(eps0);
            perturbed.validate(dim)?;
            let fbox = spec.frequency_box(dim);
            let nodes = p.spatial_nodes.unwrap_or(ctx.settings().nodes_per_axis);
            let opts = TransformOptions {
                spatial: GridSpec::new(p.spatial_box.unwrap_or(default_spatial_box(dim)), nodes),
                frequency: GridSpec::new(fbox, p.freq_nodes.unwrap_or(nodes)),
                check_refinement: true,
            };
            let (coarse, fine) = sampled_kernel(ctx, &KernelEvaluator::new(ctx, &perturbed, p.freq_nodes)?, opts.spatial)?;
            let h = heat_closed_callable(ctx, eps0 / 2.0);
            let qhat = dunkl_transform_sampled(ctx, &coarse, &fine, opts.frequency)?;
            let hhat = dunkl_transform_with(ctx, &h, &opts)?;
            let ck = ctx.c_k();
            let sym = qhat.mul(&hhat)?.mul(&hhat)?.scale(ck * ck);
            let pts = p.points.clone().unwrap_or_else(|| default_points(dim));
            let conv = inverse_at(ctx, &sym, &pts)?;
            let direct = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?.q_many(&pts)?;
            let defect = conv
                .iter()
                .zip(&direct)
                .map(|(a, b)| (a.re - b.value).abs())
                .fold(0.0, f64::max);
            r.grid_value("spatial_box", opts.spatial.half_width);
            r.grid_value("spatial_nodes", nodes as f64);
            r.grid_value("freq_box", fbox);
            r.grid_value("eps0", eps0);
            r.fit("transform_refinement_error", qhat.error_estimate.max(hhat.error_estimate), 0.0);
            r.push(Condition::at_most(
                "sup |q_1^(eps0) * h * h - q_1|",
                est(defect, qhat.error_estimate + hhat.error_estimate),
                tol,
            ));
        }
        IdentityKind::LaplacianConsistency => {
            let tol = p.tolerance.unwrap_or(1e-8);
            let family = hermite_family(dim, 4, &[0.5, 0.8]);
            let pts = p.points.clone().unwrap_or_else(|| lattice(dim, 3.0, if dim == 1 { 31 } else { 9 }));
            let mut worst: f64 = 0.0;
            for f in &family {
                let f = SmoothFunction::PolyGauss(f.clone());
                let a = dunkl_laplacian(ctx, &f)?;
                let b = iterated_laplacian(ctx, &f)?;
                let mut scale: f64 = 1.0;
                let mut d: f64 = 0.0;
                for x in &pts {
                    let (va, vb) = (a.eval(x)?, b.eval(x)?);
                    scale = scale.max(va.abs());
                    d = d.max((va - vb).abs());
                }
                worst = worst.max(d / scale);
            }
            r.grid_value("n_functions", family.len() as f64);
            r.grid_value("n_points", pts.len() as f64);
            r.push(Condition::at_most("sup |Δf - Σ T_j² f| / max(1, sup|Δf|)", exact(worst), tol));
        }
        IdentityKind::EpsContinuity => {
            let spec = resolve_kernel(dim, &p.kernel, p.ell).with_t(1.0);
            let origin = vec![0.0; dim];
            let q0 = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?.q(&origin)?;
            let eps_list = p.t.clone().unwrap_or_else(|| vec![0.1, 0.01, 0.001]);
            let mut prev = f64::INFINITY;
            let mut worst_ratio: f64 = 0.0;
            for &e in &eps_list {
                let qe = KernelEvaluator::new(ctx, &spec.with_eps(e), p.freq_nodes)?.q(&origin)?;
                let d = (qe.value - q0.value).abs();
                r.fit(format!("defect_eps={e}"), d, qe.error + q0.error);
                if prev.is_finite() && prev > 0.0 {
                    worst_ratio = worst_ratio.max(d / prev);
                }
                prev = d;
            }
            r.push(Condition::at_most("max successive defect ratio", exact(worst_ratio), 1.0));
        }
    }
    Ok(r.finish())
}

// ---------------------------------------------------------------- export

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelExportParams {
    pub kernel: Option<KernelSpec>,
    pub ell: Option<u32>,
    pub t: Vec<f64>,
    pub points: Option<Vec<Vec<f64>>>,
    /// Evaluate q_t(x, y) on all pairs of points instead of q_t(x).
    pub two_point: bool,
    pub freq_nodes: Option<usize>,
}

impl Default for KernelExportParams {
    fn default() -> Self {
        KernelExportParams {
            kernel: None,
            ell: None,
            t: vec![1.0],
            points: None,
            two_point: false,
            freq_nodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub t: f64,
    pub value: f64,
    pub error: f64,
}

/// Rows for the kernel CSV (x₁..x_N, y₁..y_N, t, value, error_estimate).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub dim: usize,
    pub two_point: bool,
    pub rows: Vec<KernelRow>,
}

/// Evaluates kernels on a point set for CSV export.
pub fn run_kernel_export(ctx: &WeightedContext, p: &KernelExportParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let base = resolve_kernel(dim, &p.kernel, p.ell);
    let pts = p.points.clone().unwrap_or_else(|| match dim {
        1 => lattice(1, 4.0, 17),
        _ => lattice(dim, 3.0, 7),
    });
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in &p.t {
        let spec = base.with_t(t);
        if p.two_point {
            let ev = KernelEvaluator::new(ctx, &spec, p.freq_nodes)?;
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = pts
                .iter()
                .flat_map(|x| pts.iter().map(move |y| (x.clone(), y.clone())))
                .collect();
            let vals = ev.two_point_many(&pairs)?;
            for ((x, y), v) in pairs.into_iter().zip(vals) {
                worst = worst.max(v.error);
                rows.push(KernelRow { x, y: Some(y), t, value: v.value, error: v.error });
            }
        } else {
            let vals = q_values(ctx, &spec, &pts, p.freq_nodes)?;
            for (x, v) in pts.iter().zip(vals) {
                worst = worst.max(v.error);
                rows.push(KernelRow { x: x.clone(), y: None, t, value: v.value, error: v.error });
            }
        }
    }
    let mut r = VerificationReport::new("kernel-export");
    fill_grid(&mut r, ctx);
    r.grid_value("n_rows", rows.len() as f64);
    r.fit("max_error_estimate", worst, 0.0);
    r.push(Condition::at_most(
        "max error estimate",
        exact(worst),
        ctx.settings().tolerance * rows.iter().map(|row| row.value.abs()).fold(1.0, f64::max),
    ));
    r.table = Some(KernelTable {
        dim,
        two_point: p.two_point,
        rows,
    });
    Ok(r.finish())
}
