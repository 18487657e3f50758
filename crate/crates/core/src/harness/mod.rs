//! Quantitative checks: decay fits, calibrate/held-out constant protocols,
//! kernel identities and operator algebra.
//!
//! Every check returns a [`VerificationReport`]. A report passes iff all of
//! its conditions hold; its margin is the smallest relative slack over the
//! conditions (negative when something failed).

mod algebra;
mod bounds;
mod fit;
mod garding;
mod kernels;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::measure::Estimate;

pub use algebra::{
    run_classical_limit, run_e_kernel, run_operator_algebra, run_plancherel, run_translation,
    ClassicalLimitParams, EKernelParams, OperatorAlgebraParams, PlancherelParams, TranslationParams,
};
pub use bounds::{
    check_auxiliary_bounds, check_heat_gaussian_bound, check_two_point_bound, run_doubling,
    run_eta_derivatives, AuxiliaryKind, AuxiliaryParams, DoublingParams, EtaDerivativeParams,
    HeatBoundParams, PairGrid, TwoPointParams,
};
pub use fit::{
    fit_decay_envelope, fit_decay_exponent, fit_decay_exponent_with, DecayFitReport, EnvelopeFitReport,
    SAMPLE_FLOOR,
};
pub use garding::{check_garding, run_inequality_chain, GardingParams, InequalityChainParams};
pub use kernels::{
    kernel_identity_check, run_decay, run_decay_envelope, run_heat_oracle, run_kernel_export, DecayParams,
    EnvelopeParams, HeatOracleParams, IdentityKind, IdentityParams, KernelExportParams, KernelRow, KernelTable,
};

/// Factor applied to fitted constants before checking held-out samples.
pub const HELD_OUT_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One inequality a check asserts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    pub observed: f64,
    pub error: f64,
    pub relation: Relation,
    pub bound: f64,
    pub pass: bool,
    pub margin: f64,
}

impl Condition {
    pub fn at_most(name: impl Into<String>, observed: Estimate, bound: f64) -> Self {
        let pass = observed.value <= bound;
        let margin = if bound > 0.0 {
            1.0 - observed.value / bound
        } else {
            bound - observed.value
        };
        Condition {
            name: name.into(),
            observed: observed.value,
            error: observed.error,
            relation: Relation::AtMost,
            bound,
            pass,
            margin: if margin.is_nan() { f64::NEG_INFINITY } else { margin },
        }
    }

    /// Strict positivity; the margin is the value itself.
    pub fn positive(name: impl Into<String>, observed: Estimate) -> Self {
        Condition {
            name: name.into(),
            observed: observed.value,
            error: observed.error,
            relation: Relation::AtLeast,
            bound: 0.0,
            pass: observed.value > 0.0,
            margin: if observed.value.is_nan() { f64::NEG_INFINITY } else { observed.value },
        }
    }

    pub fn at_least(name: impl Into<String>, observed: Estimate, bound: f64) -> Self {
        let pass = observed.value >= bound;
        let margin = if bound > 0.0 {
            observed.value / bound - 1.0
        } else {
            observed.value - bound
        };
        Condition {
            name: name.into(),
            observed: observed.value,
            error: observed.error,
            relation: Relation::AtLeast,
            bound,
            pass,
            margin: if margin.is_nan() { f64::NEG_INFINITY } else { margin },
        }
    }
}

/// Point of a plot-data series (‖x‖, log|q|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlotPoint {
    pub series: usize,
    pub norm_x: f64,
    pub log_abs_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub pass: bool,
    pub margin: f64,
    /// Largest observed value among the `≤` conditions.
    pub max_defect: f64,
    pub conditions: Vec<Condition>,
    pub fitted: BTreeMap<String, Estimate>,
    pub grid: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub plot: Vec<PlotPoint>,
    #[serde(skip)]
    pub table: Option<KernelTable>,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>) -> Self {
        VerificationReport {
            check: check.into(),
            pass: true,
            margin: f64::INFINITY,
            max_defect: 0.0,
            conditions: Vec::new(),
            fitted: BTreeMap::new(),
            grid: BTreeMap::new(),
            notes: Vec::new(),
            plot: Vec::new(),
            table: None,
        }
    }

    pub fn push(&mut self, c: Condition) {
        self.pass &= c.pass;
        self.margin = self.margin.min(c.margin);
        if c.relation == Relation::AtMost {
            self.max_defect = self.max_defect.max(c.observed);
        }
        self.conditions.push(c);
    }

    pub fn fit(&mut self, name: impl Into<String>, value: f64, error: f64) {
        self.fitted.insert(name.into(), Estimate { value, error });
    }

    pub fn grid_value(&mut self, name: impl Into<String>, value: f64) {
        self.grid.insert(name.into(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Closes a report that ended up without conditions.
    pub(crate) fn finish(mut self) -> Self {
        if self.conditions.is_empty() {
            self.margin = 0.0;
        }
        if !self.margin.is_finite() && self.margin > 0.0 {
            self.margin = f64::MAX;
        }
        self
    }
}

pub(crate) fn exact(v: f64) -> Estimate {
    Estimate { value: v, error: 0.0 }
}

pub(crate) fn est(value: f64, error: f64) -> Estimate {
    Estimate { value, error }
}

/// Even indices calibrate, odd indices are held out.
pub(crate) fn split_alternating<T: Clone>(items: &[T]) -> (Vec<T>, Vec<T>) {
    let mut cal = Vec::with_capacity(items.len().div_ceil(2));
    let mut held = Vec::with_capacity(items.len() / 2);
    for (i, v) in items.iter().enumerate() {
        if i % 2 == 0 {
            cal.push(v.clone());
        } else {
            held.push(v.clone());
        }
    }
    (cal, held)
}

/// Fitted constant widened by the held-out margin (toward larger values).
pub(crate) fn widen(c: f64) -> f64 {
    c + (HELD_OUT_MARGIN - 1.0) * c.abs()
}

/// Ratio-type constant protocol: C = max of `ratios` over calibration,
/// held-out ratios must stay ≤ 1.05·C. Returns (C, worst held-out ratio).
pub(crate) fn ratio_protocol(report: &mut VerificationReport, name: &str, ratios: &[f64]) -> (f64, f64) {
    let (cal, held) = split_alternating(ratios);
    let c = cal.iter().copied().fold(0.0, f64::max);
    let worst = held.iter().copied().fold(0.0, f64::max);
    report.fit(name, c, 0.0);
    report.push(Condition::at_most(
        format!("held-out {name} ratio"),
        exact(worst),
        HELD_OUT_MARGIN * c,
    ));
    (c, worst)
}

/// Decay rate c of a bound y ≤ log C − c·u: least-squares slope through
/// the vertices of the upper concave hull of the (u, y) cloud.
pub(crate) fn majorant_rate(u: &[f64], y: &[f64]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = u
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    // one point per abscissa: the highest
    pts.dedup_by(|a, b| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    if hull.len() < 2 {
        return None;
    }
    let n = hull.len() as f64;
    let mu = hull.iter().map(|p| p.0).sum::<f64>() / n;
    let my = hull.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = hull.iter().map(|p| (p.0 - mu).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = hull.iter().map(|p| (p.0 - mu) * (p.1 - my)).sum();
    Some(-sxy / sxx)
}

/// `steps` equispaced points in [−a, a].
pub(crate) fn lattice_axis(a: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        vec![0.0]
    } else {
        (0..steps)
            .map(|i| -a + 2.0 * a * i as f64 / (steps - 1) as f64)
            .collect()
    }
}

/// Deterministic points in [−a, a]^dim, `steps` per axis, row-major.
pub(crate) fn lattice(dim: usize, a: f64, steps: usize) -> Vec<Vec<f64>> {
    let axis = lattice_axis(a, steps);
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for p in &out {
            for &v in &axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Unit ray directions: ± in rank one, 8 compass rays in the plane.
pub(crate) fn rays(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..8)
            .map(|i| {
                let th = std::f64::consts::FRAC_PI_4 * i as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => (0..dim)
            .flat_map(|j| {
                [1.0, -1.0].map(|s| {
                    let mut e = vec![0.0; dim];
                    e[j] = s;
                    e
                })
            })
            .collect(),
    }
}

/// `n` points geometric from a to b.
pub(crate) fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let r = (b / a).ln();
    (0..n).map(|i| a * (r * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` points evenly spaced from a to b.
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub(crate) fn unit_vectors(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|j| {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            e
        })
        .collect()
}

/// Physicists' Hermite polynomial H_n at x, n ≤ 4 used in practice.
pub(crate) fn hermite_coeffs(n: u32) -> Vec<(u32, f64)> {
    // H_{n+1} = 2x H_n − 2n H_{n−1}
    let mut prev: Vec<f64> = vec![1.0];
    if n == 0 {
        return vec![(0, 1.0)];
    }
    let mut cur: Vec<f64> = vec![0.0, 2.0];
    for m in 1..n {
        let mut next = vec![0.0; cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= 2.0 * m as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur.iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| (i as u32, *c))
        .collect()
}

/// Hermite × Gaussian family: Π_j H_{n_j}(x_j) e^{−a‖x‖²}, total degree ≤
/// `max_degree`, one copy per width, ordered by width then multi-index.
pub(crate) fn hermite_family(dim: usize, max_degree: u32, widths: &[f64]) -> Vec<crate::function::PolyGauss> {
    use crate::function::{Poly, PolyGauss};
    let mut multis: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::new();
        for m in &multis {
            for d in 0..=max_degree {
                let mut v = m.clone();
                v.push(d);
                if v.iter().sum::<u32>() <= max_degree {
                    next.push(v);
                }
            }
        }
        multis = next;
    }
    multis.sort_by_key(|m| (m.iter().sum::<u32>(), m.clone()));
    let mut out = Vec::new();
    for &a in widths {
        for m in &multis {
            let mut poly = Poly::constant(dim, 1.0);
            for (j, &d) in m.iter().enumerate() {
                let terms: Vec<(Vec<u32>, f64)> = hermite_coeffs(d)
                    .into_iter()
                    .map(|(e, c)| {
                        let mut ex = vec![0; dim];
                        ex[j] = e;
                        (ex, c)
                    })
                    .collect();
                poly = poly.mul(&Poly::from_terms(dim, &terms));
            }
            out.push(PolyGauss::new(poly, vec![a; dim]).expect("positive width"));
        }
    }
    out
}
