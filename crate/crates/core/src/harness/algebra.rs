//! Transform, operator-algebra, Dunkl-kernel and translation checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{dunkl_laplacian, iterated_laplacian};
use crate::error::{DunklError, Result};
use crate::function::{Callable, PolyGauss, SmoothFunction};
use crate::kernel::rank1_real;
use crate::measure::{GridSpec, WeightedContext};
use crate::root_system::dot;
use crate::semigroup::{translate_on_axes, translate_on_grid};
use crate::transform::{dunkl_transform, dunkl_transform_with, inverse_at, TransformOptions};

use super::bounds::{check_auxiliary_bounds, AuxiliaryKind, AuxiliaryParams};
use super::{est, exact, hermite_family, lattice, lattice_axis, Condition, VerificationReport};

fn product_ks(ctx: &WeightedContext, what: &str) -> Result<Vec<f64>> {
    ctx.product_multiplicities()
        .map(|k| k.to_vec())
        .ok_or_else(|| DunklError::Capability(format!("{what} needs a product system")))
}

fn merge(into: &mut VerificationReport, from: VerificationReport, prefix: &str) {
    for mut c in from.conditions {
        c.name = format!("{prefix}: {}", c.name);
        into.push(c);
    }
    for (k, v) in from.fitted {
        into.fitted.insert(format!("{prefix}.{k}"), v);
    }
    for (k, v) in from.grid {
        into.grid.insert(format!("{prefix}.{k}"), v);
    }
    into.notes.extend(from.notes);
}

// ---------------------------------------------------------------- classical limit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalLimitParams {
    pub tolerance: f64,
    /// Points where the inverse transform is compared with f.
    pub extent: f64,
}

impl Default for ClassicalLimitParams {
    fn default() -> Self {
        ClassicalLimitParams {
            tolerance: 1e-8,
            extent: 6.0,
        }
    }
}

/// 𝓕(e^{−‖x‖²/2}) = e^{−‖ξ‖²/2} on the frequency grid, and the round trip.
pub fn run_classical_limit(ctx: &WeightedContext, p: &ClassicalLimitParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let f = SmoothFunction::PolyGauss(PolyGauss::gaussian(dim, 0.5));
    let fhat = dunkl_transform(ctx, &f)?;
    let fwd = fhat
        .grid
        .nodes
        .iter()
        .zip(&fhat.values)
        .map(|(xi, v)| (v - Complex64::new((-0.5 * dot(xi, xi)).exp(), 0.0)).norm())
        .fold(0.0, f64::max);
    let pts = lattice(dim, p.extent, if dim == 1 { 49 } else { 13 });
    let back = inverse_at(ctx, &fhat, &pts)?;
    let round = back
        .iter()
        .zip(&pts)
        .map(|(v, x)| (v - Complex64::new((-0.5 * dot(x, x)).exp(), 0.0)).norm())
        .fold(0.0, f64::max);
    let mut r = VerificationReport::new("classical-limit");
    let s = ctx.settings();
    r.grid_value("box_half_width", s.half_width);
    r.grid_value("nodes_per_axis", s.nodes_per_axis as f64);
    r.fit("transform_refinement_error", fhat.error_estimate, 0.0);
    r.push(Condition::at_most(
        "sup |F f - exp(-|ξ|²/2)|",
        est(fwd, fhat.error_estimate),
        p.tolerance,
    ));
    r.push(Condition::at_most("sup |F^-1 F f - f|", exact(round), p.tolerance));
    Ok(r.finish())
}

// ---------------------------------------------------------------- Plancherel

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlancherelParams {
    pub n_functions: usize,
    pub tolerance: f64,
}

impl Default for PlancherelParams {
    fn default() -> Self {
        PlancherelParams {
            n_functions: 10,
            tolerance: 1e-6,
        }
    }
}

/// Battery of `n` polynomial × Gaussian test functions.
pub(crate) fn polygauss_battery(dim: usize, n: usize) -> Vec<PolyGauss> {
    let mut fam = hermite_family(dim, if dim == 1 { 4 } else { 3 }, &[0.5, 0.8, 0.65]);
    // interleave widths so a short battery still mixes them
    let per = fam.len() / 3;
    let mut out = Vec::with_capacity(n);
    for i in 0..per {
        for w in 0..3 {
            out.push(fam[w * per + i].clone());
        }
    }
    fam.clear();
    out.truncate(n);
    out
}

/// ‖𝓕f‖_{L²(dw)} = ‖f‖_{L²(dw)}.
pub fn run_plancherel(ctx: &WeightedContext, p: &PlancherelParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let battery = polygauss_battery(dim, p.n_functions);
    let mut r = VerificationReport::new("plancherel");
    let mut worst: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for (i, f) in battery.iter().enumerate() {
        let n2 = ctx.integrate_checked("L2 norm", ctx.settings().grid_spec(), |x| f.eval(x).powi(2))?;
        let sf = SmoothFunction::PolyGauss(f.clone());
        let fhat = dunkl_transform(ctx, &sf)?;
        let lhs = fhat.l2_norm();
        let rhs = n2.value.sqrt();
        let d = (lhs - rhs).abs() / rhs;
        r.fit(format!("relative_defect_{i}"), d, fhat.error_estimate / rhs);
        worst = worst.max(d);
        worst_err = worst_err.max(fhat.error_estimate / rhs);
    }
    r.grid_value("n_functions", battery.len() as f64);
    r.grid_value("box_half_width", ctx.settings().half_width);
    r.grid_value("nodes_per_axis", ctx.settings().nodes_per_axis as f64);
    r.push(Condition::at_most(
        "max | |F f| - |f| | / |f|",
        est(worst, worst_err),
        p.tolerance,
    ));
    Ok(r.finish())
}

// ---------------------------------------------------------------- operator algebra

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorAlgebraParams {
    pub n_functions: usize,
    pub tolerance: f64,
    pub extent: f64,
}

impl Default for OperatorAlgebraParams {
    fn default() -> Self {
        OperatorAlgebraParams {
            n_functions: 10,
            tolerance: 1e-8,
            extent: 3.0,
        }
    }
}

/// sup |a − b| / max(1, sup |a|) over the points.
fn rel_sup(pts: &[Vec<f64>], a: impl Fn(&[f64]) -> f64, b: impl Fn(&[f64]) -> f64) -> f64 {
    let mut scale: f64 = 1.0;
    let mut d: f64 = 0.0;
    for x in pts {
        let (va, vb) = (a(x), b(x));
        scale = scale.max(va.abs());
        d = d.max((va - vb).abs());
    }
    d / scale
}

fn sigma(x: &[f64], j: usize) -> Vec<f64> {
    let mut y = x.to_vec();
    y[j] = -y[j];
    y
}

/// Commutativity, skew-symmetry, radial Leibniz rule, reflection identity
/// and Δ = Σ T_j², on a PolyGauss battery.
pub fn run_operator_algebra(ctx: &WeightedContext, p: &OperatorAlgebraParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let ks = product_ks(ctx, "operator algebra")?;
    let battery = polygauss_battery(dim, p.n_functions);
    let pts = lattice(dim, p.extent, if dim == 1 { 41 } else { 11 });
    let dirs: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-0.7]],
        _ => {
            let mut d = super::unit_vectors(dim);
            d.push((0..dim).map(|j| 1.0 / (1.0 + j as f64)).collect());
            d
        }
    };
    let radial = PolyGauss::gaussian(dim, 0.3);
    let grid = ctx.settings().grid_spec();
    let (mut comm, mut skew, mut leib, mut refl, mut lap): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, f) in battery.iter().enumerate() {
        for a in &dirs {
            for b in &dirs {
                let ab = f.dunkl_dir(b, &ks).dunkl_dir(a, &ks);
                let ba = f.dunkl_dir(a, &ks).dunkl_dir(b, &ks);
                comm = comm.max(rel_sup(&pts, |x| ab.eval(x), |x| ba.eval(x)));
            }
            // ∫ T f · g dw = −∫ f · T g dw, g the next battery member
            let g = &battery[(i + 1) % battery.len()];
            let tf = f.dunkl_dir(a, &ks);
            let tg = g.dunkl_dir(a, &ks);
            let lhs = ctx.integrate_checked("skew-symmetry", grid, |x| tf.eval(x) * g.eval(x))?;
            let rhs = ctx.integrate_checked("skew-symmetry", grid, |x| f.eval(x) * tg.eval(x))?;
            let n_tf = ctx.integrate_checked("skew-symmetry scale", grid, |x| tf.eval(x).powi(2))?;
            let n_g = ctx.integrate_checked("skew-symmetry scale", grid, |x| g.eval(x).powi(2))?;
            let scale = (n_tf.value * n_g.value).sqrt().max(1.0);
            skew = skew.max((lhs.value + rhs.value).abs() / scale);
            // T(f φ) = φ T f + f ∂φ for radial φ
            let prod = f.mul(&radial).dunkl_dir(a, &ks);
            let dphi: Vec<PolyGauss> = (0..dim).map(|j| radial.deriv(j)).collect();
            leib = leib.max(rel_sup(
                &pts,
                |x| prod.eval(x),
                |x| {
                    let grad: f64 = a.iter().zip(&dphi).map(|(c, d)| c * d.eval(x)).sum();
                    radial.eval(x) * tf.eval(x) + f.eval(x) * grad
                },
            ));
            // T_ζ (f∘σ_j)(x) = (T_{σ_j ζ} f)(σ_j x)
            for j in 0..dim {
                let lhs_f = f.flip(j).dunkl_dir(a, &ks);
                let rhs_f = f.dunkl_dir(&sigma(a, j), &ks);
                refl = refl.max(rel_sup(&pts, |x| lhs_f.eval(x), |x| rhs_f.eval(&sigma(x, j))));
            }
        }
        let sf = SmoothFunction::PolyGauss(f.clone());
        let l1 = dunkl_laplacian(ctx, &sf)?;
        let l2 = iterated_laplacian(ctx, &sf)?;
        let mut scale: f64 = 1.0;
        let mut d: f64 = 0.0;
        for x in &pts {
            let (a, b) = (l1.eval(x)?, l2.eval(x)?);
            scale = scale.max(a.abs());
            d = d.max((a - b).abs());
        }
        lap = lap.max(d / scale);
    }
    let mut r = VerificationReport::new("operator-algebra");
    r.grid_value("n_functions", battery.len() as f64);
    r.grid_value("n_points", pts.len() as f64);
    r.grid_value("n_directions", dirs.len() as f64);
    let t = p.tolerance;
    r.push(Condition::at_most("commutativity", exact(comm), t));
    r.push(Condition::at_most("skew-symmetry", exact(skew), t));
    r.push(Condition::at_most("radial Leibniz rule", exact(leib), t));
    r.push(Condition::at_most("reflection identity", exact(refl), t));
    r.push(Condition::at_most("Laplacian consistency", exact(lap), t));
    Ok(r.finish())
}

// ---------------------------------------------------------------- E kernel

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EKernelParams {
    pub grid_size: usize,
    pub extent: f64,
    pub stability: f64,
    pub oracle_tolerance: f64,
}

impl Default for EKernelParams {
    fn default() -> Self {
        EKernelParams {
            grid_size: 50,
            extent: 20.0,
            stability: 0.05,
            oracle_tolerance: 1e-10,
        }
    }
}

/// E_k(x, y) in rank one from Σ_n (xy)^n / b_n with
/// b_{2m} = 4^m m! (k+½)_m, b_{2m+1} = 2·4^m m! (k+½)_{m+1}.
fn rank1_power_series(k: f64, z: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 1..400 {
        // b_n / b_{n−1}
        let ratio = if n % 2 == 1 {
            let m = (n - 1) / 2;
            2.0 * (k + 0.5 + m as f64)
        } else {
            let m = n / 2;
            2.0 * m as f64
        };
        term *= z / ratio;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// |E(iξ,x)| ≤ 1, the Lipschitz bound at the origin, and the rank-1 value
/// E(1,1) for k = 1 against two independent closed forms.
pub fn run_e_kernel(ctx: &WeightedContext, p: &EKernelParams) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("e-kernel");
    let mut bound = AuxiliaryParams::new(AuxiliaryKind::EBound);
    bound.grid_size = p.grid_size;
    bound.extent = p.extent;
    merge(&mut r, check_auxiliary_bounds(ctx, &bound)?, "bound");
    let mut lip = AuxiliaryParams::new(AuxiliaryKind::ELipschitz);
    lip.grid_size = p.grid_size;
    lip.extent = p.extent;
    lip.stability = p.stability;
    merge(&mut r, check_auxiliary_bounds(ctx, &lip)?, "lipschitz");
    let v = rank1_real(1.0, 1.0, 1.0, 4096)?;
    let z = 1.0f64;
    let closed = z.sinh() / z + (z * z.cosh() - z.sinh()) / (z * z);
    let series = rank1_power_series(1.0, 1.0);
    r.fit("E_k1(1,1)", v, (v - closed).abs());
    r.push(Condition::at_most(
        "|E(1,1) - closed form| for k = 1",
        exact((v - closed).abs()),
        p.oracle_tolerance,
    ));
    r.push(Condition::at_most(
        "|E(1,1) - power series| for k = 1",
        exact((v - series).abs()),
        p.oracle_tolerance,
    ));
    Ok(r.finish())
}

// ---------------------------------------------------------------- translation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranslationParams {
    /// Support radius of the radial bump.
    pub radius: f64,
    pub bump_power: u32,
    pub shifts: Vec<f64>,
    pub freq_box: f64,
    pub freq_nodes: usize,
    pub spatial_nodes: usize,
    pub stability: f64,
}

impl Default for TranslationParams {
    fn default() -> Self {
        TranslationParams {
            radius: 1.0,
            bump_power: 12,
            shifts: vec![0.5, 1.0, 2.0],
            freq_box: 80.0,
            freq_nodes: 1000,
            spatial_nodes: 200,
            stability: 0.05,
        }
    }
}

/// τ₀ = id, support of τ_x of a radial bump inside {d(x,·) ≤ r}, L¹
/// contraction, and the Lipschitz bound in x.
pub fn run_translation(ctx: &WeightedContext, p: &TranslationParams) -> Result<VerificationReport> {
    let dim = ctx.dimension();
    let (rad, m) = (p.radius, p.bump_power);
    let bump = move |x: &[f64]| {
        let v = 1.0 - dot(x, x) / (rad * rad);
        if v <= 0.0 {
            0.0
        } else {
            v.powi(m as i32)
        }
    };
    let phi = SmoothFunction::Callable(Callable::new(dim, 0, move |x, _| bump(x)));
    let fnodes = p.freq_nodes;
    let snodes = if dim == 1 { p.spatial_nodes } else { (p.spatial_nodes / 3).max(40) };
    let opts = TransformOptions {
        spatial: GridSpec::new(rad, snodes),
        frequency: GridSpec::new(p.freq_box, fnodes),
        check_refinement: true,
    };
    let phihat = dunkl_transform_with(ctx, &phi, &opts)?;
    let mut r = VerificationReport::new("translation");
    r.grid_value("radius", rad);
    r.grid_value("bump_power", m as f64);
    r.grid_value("freq_box", p.freq_box);
    r.grid_value("freq_nodes", fnodes as f64);
    r.grid_value("spatial_nodes", snodes as f64);
    r.fit("transform_refinement_error", phihat.error_estimate, 0.0);

    let reach = p.shifts.iter().copied().fold(0.0, f64::max) + rad + 1.0;
    let steps = if dim == 1 { 801 } else { 61 };
    let ys = lattice(dim, reach, steps);
    let axes = vec![lattice_axis(reach, steps); dim];
    let spacing = 2.0 * reach / (steps - 1) as f64;
    let origin = vec![0.0; dim];
    let t0 = translate_on_axes(ctx, &phihat, &origin, &axes)?;
    let id = t0
        .iter()
        .zip(&ys)
        .map(|(v, y)| (v - Complex64::new(bump(y), 0.0)).norm())
        .fold(0.0, f64::max);
    r.push(Condition::at_most("sup |τ_0 φ - φ|", est(id, phihat.error_estimate), 1e-9));

    let phi_l1 = ctx.integrate_checked("bump L1 norm", GridSpec::new(rad, snodes), |x| bump(x))?;
    r.fit("phi_l1", phi_l1.value, phi_l1.error);
    let mut outside: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    for &a in &p.shifts {
        let mut x = vec![0.0; dim];
        x[0] = a;
        if dim > 1 {
            x[1] = -0.5 * a;
        }
        let tx = translate_on_axes(ctx, &phihat, &x, &axes)?;
        for (v, y) in tx.iter().zip(&ys) {
            if ctx.orbit_distance(&x, y) > rad + spacing {
                outside = outside.max(v.norm());
            }
        }
        let half = crate::root_system::norm(&x) + rad;
        let spec = GridSpec::new(half, if dim == 1 { 400 } else { 80 });
        let mut l1 = [0.0; 2];
        for (slot, g) in [spec, spec.refined()].into_iter().enumerate() {
            let grid = ctx.grid(g);
            let vals = translate_on_grid(ctx, &phihat, &x, &grid)?;
            l1[slot] = vals.iter().zip(&grid.weights).map(|(v, w)| v.re.abs() * w).sum();
        }
        let ratio = l1[1] / phi_l1.value;
        r.fit(format!("l1_ratio_x={a}"), ratio, (l1[1] - l1[0]).abs() / phi_l1.value);
        contraction = contraction.max(ratio);
    }
    r.grid_value("support_grid_spacing", spacing);
    r.push(Condition::at_most(
        "sup |τ_x φ| where d(x, y) > r + spacing",
        exact(outside),
        1e-9,
    ));
    r.push(Condition::at_most("max |τ_x φ|_1 / |φ|_1", exact(contraction), 1.0 + 1e-6));

    let mut lip = AuxiliaryParams::new(AuxiliaryKind::TranslationLipschitz);
    lip.stability = p.stability;
    merge(&mut r, check_auxiliary_bounds(ctx, &lip)?, "lipschitz");
    Ok(r.finish())
}
