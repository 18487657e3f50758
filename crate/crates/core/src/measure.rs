//! The weighted measure dw, its constants, ball volumes and quadrature grids.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DunklError, Result};
use crate::quadrature::{full_axis_rule, gauss_legendre, GaussRule};
use crate::root_system::{dot, generate_group, RootSystemSpec, ReflectionGroup};

const CHUNK: usize = 2048;

/// A value with its a-posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub nodes_per_axis: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, nodes_per_axis: usize) -> Self {
        GridSpec {
            half_width,
            nodes_per_axis,
        }
    }

    /// The 1.5× resolution companion used for error control.
    pub fn refined(&self) -> GridSpec {
        let n = (self.nodes_per_axis * 3).div_ceil(2);
        GridSpec {
            half_width: self.half_width,
            nodes_per_axis: n + n % 2,
        }
    }

    fn key(&self) -> (u64, usize) {
        (self.half_width.to_bits(), self.nodes_per_axis)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSettings {
    pub half_width: f64,
    pub nodes_per_axis: usize,
    /// Relative agreement required between a grid and its 1.5× refinement.
    pub tolerance: f64,
}

impl GridSettings {
    pub fn defaults_for(dimension: usize) -> Self {
        GridSettings {
            half_width: 12.0,
            nodes_per_axis: match dimension {
                1 => 400,
                2 => 160,
                _ => 40,
            },
            tolerance: 1e-8,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.half_width, self.nodes_per_axis)
    }
}

/// Tensor grid on [−R, R]^N. Weights include the dw density. For product
/// systems the per-axis rules are kept so transforms can run axis by axis.
#[derive(Debug)]
pub struct QuadratureGrid {
    pub spec: GridSpec,
    pub dimension: usize,
    /// Per-axis rules; weights include the axis density factor only for
    /// product systems.
    pub axes: Vec<GaussRule>,
    pub separable: bool,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Σ w_i f(x_i); chunked so the result does not depend on thread count.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let partial: Vec<f64> = self
            .nodes
            .par_chunks(CHUNK)
            .zip(self.weights.par_chunks(CHUNK))
            .map(|(xs, ws)| xs.iter().zip(ws).map(|(x, w)| w * f(x)).sum::<f64>())
            .collect();
        partial.iter().sum()
    }

    /// (Σ w f, Σ w |f|) in one pass.
    pub fn integrate_with_abs<F>(&self, f: F) -> (f64, f64)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let partial: Vec<(f64, f64)> = self
            .nodes
            .par_chunks(CHUNK)
            .zip(self.weights.par_chunks(CHUNK))
            .map(|(xs, ws)| {
                xs.iter().zip(ws).fold((0.0, 0.0), |(s, a), (x, w)| {
                    let v = f(x);
                    (s + w * v, a + w * v.abs())
                })
            })
            .collect();
        partial
            .iter()
            .fold((0.0, 0.0), |(s, a), (ps, pa)| (s + ps, a + pa))
    }

    /// Values at every node, in node order.
    pub fn sample<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.nodes.par_iter().map(|x| f(x)).collect()
    }

    /// Largest gap between consecutive axis nodes.
    pub fn max_spacing(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.nodes.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }
}

pub struct WeightedContext {
    spec: RootSystemSpec,
    group: ReflectionGroup,
    product: Option<Vec<f64>>,
    homogeneous_dimension: f64,
    settings: GridSettings,
    c_k: f64,
    grids: Mutex<HashMap<(u64, usize), Arc<QuadratureGrid>>>,
}

impl std::fmt::Debug for WeightedContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightedContext")
            .field("spec", &self.spec)
            .field("homogeneous_dimension", &self.homogeneous_dimension)
            .field("c_k", &self.c_k)
            .finish()
    }
}

impl WeightedContext {
    pub fn new(spec: RootSystemSpec) -> Result<Self> {
        let settings = GridSettings::defaults_for(spec.dimension);
        Self::with_settings(spec, settings)
    }

    pub fn with_settings(spec: RootSystemSpec, settings: GridSettings) -> Result<Self> {
        let violations = spec.validate();
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(DunklError::InvalidSpec(msg.join("; ")));
        }
        if !(settings.half_width > 0.0) || settings.nodes_per_axis < 2 {
            return Err(DunklError::InvalidArgument(format!(
                "grid needs a positive box and at least 2 nodes per axis, got {:?}",
                settings
            )));
        }
        let group = generate_group(&spec)?;
        let product = spec.product_multiplicities();
        let homogeneous_dimension = spec.homogeneous_dimension();
        let mut ctx = WeightedContext {
            spec,
            group,
            product,
            homogeneous_dimension,
            settings,
            c_k: f64::NAN,
            grids: Mutex::new(HashMap::new()),
        };
        ctx.c_k = ctx.compute_c_k()?;
        Ok(ctx)
    }

    /// Rank-1 shortcut.
    pub fn rank_one(k: f64) -> Result<Self> {
        Self::new(RootSystemSpec::rank_one(k))
    }

    /// ℤ₂^N shortcut.
    pub fn product(ks: &[f64]) -> Result<Self> {
        Self::new(RootSystemSpec::product(ks))
    }

    pub fn spec(&self) -> &RootSystemSpec {
        &self.spec
    }

    pub fn group(&self) -> &ReflectionGroup {
        &self.group
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn settings(&self) -> &GridSettings {
        &self.settings
    }

    pub fn homogeneous_dimension(&self) -> f64 {
        self.homogeneous_dimension
    }

    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    /// Per-coordinate multiplicities for ℤ₂^N systems.
    pub fn product_multiplicities(&self) -> Option<&[f64]> {
        self.product.as_deref()
    }

    pub(crate) fn require_product(&self, what: &str) -> Result<&[f64]> {
        self.product.as_deref().ok_or_else(|| {
            DunklError::Capability(format!(
                "{what} is only available for rank-1 and ℤ₂^N product systems"
            ))
        })
    }

    pub fn orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.group.orbit_distance(x, y)
    }

    /// Π_α |⟨x,α⟩|^{k(α)}.
    pub fn weight_density(&self, x: &[f64]) -> f64 {
        self.spec
            .roots
            .iter()
            .zip(&self.spec.multiplicity)
            .map(|(a, &k)| if k == 0.0 { 1.0 } else { dot(x, a).abs().powf(k) })
            .product()
    }

    fn compute_c_k(&self) -> Result<f64> {
        let spec = self.settings.grid_spec();
        let est = self.integrate_checked("c_k", spec, |x| (-0.5 * dot(x, x)).exp())?;
        if self.spec.multiplicity.iter().all(|&k| k == 0.0) {
            let exact = (2.0 * std::f64::consts::PI).powf(0.5 * self.dimension() as f64);
            if ((est.value - exact) / exact).abs() > 1e-10 {
                return Err(DunklError::accuracy(
                    "c_k",
                    format!("k ≡ 0 but quadrature gives {} instead of {exact}", est.value),
                ));
            }
        }
        Ok(est.value)
    }

    pub fn default_grid(&self) -> Arc<QuadratureGrid> {
        self.grid(self.settings.grid_spec())
    }

    /// Cached grid for (box, resolution).
    pub fn grid(&self, spec: GridSpec) -> Arc<QuadratureGrid> {
        let key = spec.key();
        if let Some(g) = self.grids.lock().expect("grid cache poisoned").get(&key) {
            return Arc::clone(g);
        }
        let g = Arc::new(self.build_grid(spec));
        let mut cache = self.grids.lock().expect("grid cache poisoned");
        Arc::clone(cache.entry(key).or_insert(g))
    }

    fn build_grid(&self, spec: GridSpec) -> QuadratureGrid {
        let n = self.dimension();
        let (axes, separable) = match &self.product {
            Some(ks) => (
                ks.iter()
                    .map(|&k| {
                        let mut r = full_axis_rule(spec.nodes_per_axis, k, spec.half_width);
                        let c = 2f64.powf(k);
                        r.weights.iter_mut().for_each(|w| *w *= c);
                        r
                    })
                    .collect::<Vec<_>>(),
                true,
            ),
            None => {
                let half = (spec.nodes_per_axis / 2).max(1);
                let l = gauss_legendre(half);
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for (a, b) in [(-spec.half_width, 0.0), (0.0, spec.half_width)] {
                    let m = l.mapped(a, b);
                    nodes.extend(m.nodes);
                    weights.extend(m.weights);
                }
                (vec![GaussRule { nodes, weights }; n], false)
            }
        };
        let mut nodes = vec![Vec::with_capacity(n)];
        let mut weights = vec![1.0];
        for axis in &axes {
            let mut nn = Vec::with_capacity(nodes.len() * axis.nodes.len());
            let mut ww = Vec::with_capacity(nodes.len() * axis.nodes.len());
            for (p, w) in nodes.iter().zip(&weights) {
                for (&t, &v) in axis.nodes.iter().zip(&axis.weights) {
                    let mut q = p.clone();
                    q.push(t);
                    nn.push(q);
                    ww.push(w * v);
                }
            }
            nodes = nn;
            weights = ww;
        }
        if !separable {
            for (x, w) in nodes.iter().zip(weights.iter_mut()) {
                *w *= self.weight_density(x);
            }
        }
        QuadratureGrid {
            spec,
            dimension: n,
            axes,
            separable,
            nodes,
            weights,
        }
    }

    /// ∫ f dw on `spec` and on its 1.5× refinement. Fails when the two
    /// differ by more than the tolerance relative to ∫|f| dw.
    pub fn integrate_checked<F>(&self, what: &str, spec: GridSpec, f: F) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.integrate_checked_tol(what, spec, self.settings.tolerance, f)
    }

    pub fn integrate_checked_tol<F>(
        &self,
        what: &str,
        spec: GridSpec,
        tolerance: f64,
        f: F,
    ) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let coarse = self.grid(spec).integrate(&f);
        let (fine, fine_abs) = self.grid(spec.refined()).integrate_with_abs(&f);
        let error = (fine - coarse).abs();
        if !fine.is_finite() || error > tolerance * fine_abs.max(f64::MIN_POSITIVE) {
            return Err(DunklError::accuracy(
                what,
                format!(
                    "refinement {} vs {} nodes/axis gives {fine:.12e} vs {coarse:.12e}",
                    spec.refined().nodes_per_axis,
                    spec.nodes_per_axis
                ),
            ));
        }
        Ok(Estimate { value: fine, error })
    }

    /// Fraction of ∫|f|² dw carried by the outer 10% of the box.
    pub fn boundary_shell<F>(&self, spec: GridSpec, f: F) -> (f64, f64)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let cut = 0.9 * spec.half_width;
        let grid = self.grid(spec);
        let total = grid.integrate(|x| f(x).abs());
        let shell = grid.integrate(|x| {
            if x.iter().any(|v| v.abs() > cut) {
                f(x).abs()
            } else {
                0.0
            }
        });
        (shell, total)
    }

    /// ‖f‖_{H_s} = (∫ |f|² η(·,s) dw)^{1/2}, with s = 0 meaning no weight.
    pub fn weighted_norm_of<F>(&self, f: F, s: f64) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if !(s >= 0.0) {
            return Err(DunklError::InvalidArgument(format!("s must be ≥ 0, got {s}")));
        }
        let spec = self.settings.grid_spec();
        let integrand = |x: &[f64]| {
            let v = f(x);
            let w = if s == 0.0 { 1.0 } else { eta(x, s) };
            v * v * w
        };
        let (shell, total) = self.boundary_shell(spec, integrand);
        if total > 0.0 && shell > self.settings.tolerance * total {
            return Err(DunklError::DomainTooSmall {
                what: "weighted norm".into(),
                shell,
                total,
            });
        }
        let sq = self.integrate_checked("weighted norm", spec, integrand)?;
        let value = sq.value.max(0.0).sqrt();
        let error = if value > 0.0 { sq.error / (2.0 * value) } else { sq.error.sqrt() };
        Ok(Estimate { value, error })
    }

    /// Comparability proxy r^N Π_α (|⟨x,α⟩| + r)^{k(α)}.
    pub fn ball_volume_proxy(&self, x: &[f64], r: f64) -> f64 {
        let n = self.dimension() as f64;
        r.powf(n)
            * self
                .spec
                .roots
                .iter()
                .zip(&self.spec.multiplicity)
                .map(|(a, &k)| (dot(x, a).abs() + r).powf(k))
                .product::<f64>()
    }

    /// w(B(x, r)).
    pub fn ball_volume(&self, x: &[f64], r: f64) -> Result<BallVolume> {
        if !(r > 0.0) {
            return Err(DunklError::InvalidArgument(format!("radius must be > 0, got {r}")));
        }
        if x.len() != self.dimension() {
            return Err(DunklError::InvalidArgument("point dimension mismatch".into()));
        }
        let proxy = self.ball_volume_proxy(x, r);
        let (value, error) = match self.dimension() {
            1 => (self.ball_volume_1d(x[0], r), 0.0),
            2 => {
                let coarse = self.ball_volume_2d(x, r, 40);
                let fine = self.ball_volume_2d(x, r, 60);
                let error = (fine - coarse).abs();
                if error > 1e-7 * fine {
                    return Err(DunklError::accuracy(
                        "ball volume",
                        format!("refinement gives {fine:.12e} vs {coarse:.12e} at x={x:?}, r={r}"),
                    ));
                }
                (fine, error)
            }
            n => {
                return Err(DunklError::Capability(format!(
                    "ball volume is implemented for N ≤ 2, got N = {n}"
                )))
            }
        };
        Ok(BallVolume {
            value,
            error,
            proxy,
        })
    }

    /// V(x, y, t) = max(w(B(x,t)), w(B(y,t))).
    pub fn volume_max(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        let a = self.ball_volume(x, t)?;
        let b = self.ball_volume(y, t)?;
        Ok(a.value.max(b.value))
    }

    /// In one dimension the density is C|y|^K, integrated in closed form.
    fn ball_volume_1d(&self, x: f64, r: f64) -> f64 {
        let c = self.weight_density(&[1.0]);
        let kk: f64 = self.spec.multiplicity.iter().sum();
        let anti = |y: f64| y.signum() * y.abs().powf(kk + 1.0) / (kk + 1.0);
        c * (anti(x + r) - anti(x - r))
    }

    /// Substitution y₁ = x₁ + r sin θ; the chord in y₂ is integrated in closed
    /// form for product systems and by split Gauss–Legendre otherwise.
    fn ball_volume_2d(&self, x: &[f64], r: f64, m: usize) -> f64 {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut cuts = vec![-half_pi, half_pi];
        for a in &self.spec.roots {
            let c = -dot(x, a);
            for sgn in [1.0, -1.0] {
                // a₁ r sin θ + sgn·a₂ r cos θ = c
                let aa = a[0] * r;
                let bb = sgn * a[1] * r;
                let rr = (aa * aa + bb * bb).sqrt();
                if rr == 0.0 || (c / rr).abs() > 1.0 {
                    continue;
                }
                let phi = bb.atan2(aa);
                let base = (c / rr).asin();
                for th0 in [base - phi, std::f64::consts::PI - base - phi] {
                    for shift in [-2.0, 0.0, 2.0] {
                        let th = th0 + shift * std::f64::consts::PI;
                        if th > -half_pi && th < half_pi {
                            cuts.push(th);
                        }
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let rule = gauss_legendre(m);
        let inner_rule = gauss_legendre(m);
        let product = self.product.clone();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
                // graded map concentrates nodes at panel ends
                let s = 0.5 * (u + 1.0);
                let g = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
                let dg = 30.0 * s * s * (1.0 - s) * (1.0 - s);
                let th = a + (b - a) * g;
                let jac = 0.5 * (b - a) * dg;
                let y1 = x[0] + r * th.sin();
                let h = r * th.cos();
                let chord = match &product {
                    Some(ks) => {
                        let k2 = ks[1];
                        let anti = |y: f64| y.signum() * y.abs().powf(2.0 * k2 + 1.0) / (2.0 * k2 + 1.0);
                        2f64.powf(ks[0] + k2)
                            * y1.abs().powf(2.0 * ks[0])
                            * (anti(x[1] + h) - anti(x[1] - h))
                    }
                    None => self.chord_integral(y1, x[1] - h, x[1] + h, &inner_rule),
                };
                total += wu * jac * r * th.cos() * chord;
            }
        }
        total
    }

    fn chord_integral(&self, y1: f64, lo: f64, hi: f64, rule: &GaussRule) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let mut pts = vec![lo, hi];
        for a in &self.spec.roots {
            if a[1] != 0.0 {
                let c = -a[0] * y1 / a[1];
                if c > lo && c < hi {
                    pts.push(c);
                }
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
                let t = 0.5 * (u + 1.0);
                let g = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
                let dg = 30.0 * t * t * (1.0 - t) * (1.0 - t);
                let y2 = a + (b - a) * g;
                s += wu * 0.5 * (b - a) * dg * self.weight_density(&[y1, y2]);
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallVolume {
    pub value: f64,
    pub error: f64,
    /// r^N Π_α (|⟨x,α⟩| + r)^{k(α)}
    pub proxy: f64,
}

/// η(x, s) = exp(√(1 + ‖s x‖²)).
pub fn eta(x: &[f64], s: f64) -> f64 {
    (1.0 + s * s * dot(x, x)).sqrt().exp()
}
