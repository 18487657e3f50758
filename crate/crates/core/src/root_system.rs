//! Root systems, reflections and the generated reflection group.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{DunklError, Result};

const NORM_TOL: f64 = 1e-12;
const GROUP_DEDUP_TOL: f64 = 1e-9;
pub const DEFAULT_GROUP_LIMIT: usize = 10_000;

/// A root system as supplied by the user. Roots are kept exactly as given;
/// `validate` reports problems instead of normalizing anything.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSystemSpec {
    pub dimension: usize,
    pub roots: Vec<Vec<f64>>,
    /// One multiplicity per entry of `roots`.
    pub multiplicity: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invariant {
    DimensionMismatch,
    ZeroRoot,
    RootNorm,
    NegativeMultiplicity,
    NotReflectionClosed,
    MultiplicityNotInvariant,
    GroupNotFinite,
}

impl Invariant {
    pub fn describe(self) -> &'static str {
        match self {
            Invariant::DimensionMismatch => "root dimension mismatch",
            Invariant::ZeroRoot => "zero root",
            Invariant::RootNorm => "norm ≠ √2",
            Invariant::NegativeMultiplicity => "negative multiplicity",
            Invariant::NotReflectionClosed => "root set not closed under its reflections",
            Invariant::MultiplicityNotInvariant => "multiplicity not G-invariant",
            Invariant::GroupNotFinite => "generated group not finite within bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: Invariant,
    pub witness: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.invariant.describe(), self.witness)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn approx_eq_vec(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// σ_α(x) = x − 2⟨x,α⟩α/‖α‖².
pub fn reflect(alpha: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != x.len() {
        return Err(DunklError::InvalidArgument(format!(
            "root has dimension {}, point has {}",
            alpha.len(),
            x.len()
        )));
    }
    let a2 = dot(alpha, alpha);
    if a2 == 0.0 {
        return Err(DunklError::InvalidArgument("zero root vector".into()));
    }
    let c = 2.0 * dot(x, alpha) / a2;
    Ok(x.iter().zip(alpha).map(|(xi, ai)| xi - c * ai).collect())
}

fn reflection_matrix(alpha: &[f64]) -> DMatrix<f64> {
    let n = alpha.len();
    let a2 = dot(alpha, alpha);
    DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - 2.0 * alpha[i] * alpha[j] / a2
    })
}

impl RootSystemSpec {
    pub fn new(dimension: usize, roots: Vec<Vec<f64>>, multiplicity: Vec<f64>) -> Self {
        RootSystemSpec {
            dimension,
            roots,
            multiplicity,
        }
    }

    /// Builds and validates; any violation becomes an `InvalidSpec` error.
    pub fn try_new(dimension: usize, roots: Vec<Vec<f64>>, multiplicity: Vec<f64>) -> Result<Self> {
        let spec = Self::new(dimension, roots, multiplicity);
        let violations = spec.validate();
        if violations.is_empty() {
            Ok(spec)
        } else {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(DunklError::InvalidSpec(msg.join("; ")))
        }
    }

    /// R = {±√2} in ℝ.
    pub fn rank_one(k: f64) -> Self {
        let r = std::f64::consts::SQRT_2;
        Self::new(1, vec![vec![r], vec![-r]], vec![k, k])
    }

    /// ℤ₂^N: roots ±√2 e_j with multiplicity `ks[j]`.
    pub fn product(ks: &[f64]) -> Self {
        let n = ks.len();
        let r = std::f64::consts::SQRT_2;
        let mut roots = Vec::with_capacity(2 * n);
        let mut mult = Vec::with_capacity(2 * n);
        for (j, &k) in ks.iter().enumerate() {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; n];
                v[j] = sign * r;
                roots.push(v);
                mult.push(k);
            }
        }
        Self::new(n, roots, mult)
    }

    /// Dihedral system I₂(m): 2m roots of length √2 at angles π/m apart.
    pub fn dihedral(m: usize, k: f64) -> Self {
        let r = std::f64::consts::SQRT_2;
        let mut roots = Vec::with_capacity(2 * m);
        for j in 0..2 * m {
            let th = std::f64::consts::PI * j as f64 / m as f64;
            roots.push(vec![r * th.cos(), r * th.sin()]);
        }
        Self::new(2, roots, vec![k; 2 * m])
    }

    pub fn homogeneous_dimension(&self) -> f64 {
        self.dimension as f64 + self.multiplicity.iter().sum::<f64>()
    }

    fn root_index(&self, v: &[f64]) -> Option<usize> {
        self.roots
            .iter()
            .position(|r| approx_eq_vec(r, v, GROUP_DEDUP_TOL))
    }

    /// Per-coordinate multiplicities when the system is ℤ₂^N (roots ±√2 e_j
    /// and nothing else), `None` otherwise.
    pub fn product_multiplicities(&self) -> Option<Vec<f64>> {
        let n = self.dimension;
        if self.roots.len() != 2 * n {
            return None;
        }
        let mut ks = vec![f64::NAN; n];
        let mut seen = vec![0usize; n];
        for (root, &k) in self.roots.iter().zip(&self.multiplicity) {
            let nonzero: Vec<usize> = (0..n).filter(|&i| root[i] != 0.0).collect();
            if nonzero.len() != 1 {
                return None;
            }
            let j = nonzero[0];
            if (root[j].abs() - std::f64::consts::SQRT_2).abs() > NORM_TOL {
                return None;
            }
            if seen[j] > 0 && (ks[j] - k).abs() > 0.0 {
                return None;
            }
            ks[j] = k;
            seen[j] += 1;
        }
        if seen.iter().all(|&c| c == 2) {
            Some(ks)
        } else {
            None
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.dimension == 0 {
            out.push(Violation {
                invariant: Invariant::DimensionMismatch,
                witness: "dimension 0".into(),
            });
            return out;
        }
        if self.multiplicity.len() != self.roots.len() {
            out.push(Violation {
                invariant: Invariant::DimensionMismatch,
                witness: format!(
                    "{} roots but {} multiplicities",
                    self.roots.len(),
                    self.multiplicity.len()
                ),
            });
            return out;
        }
        for (i, r) in self.roots.iter().enumerate() {
            if r.len() != self.dimension {
                out.push(Violation {
                    invariant: Invariant::DimensionMismatch,
                    witness: format!("root {i} has length {}", r.len()),
                });
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (i, r) in self.roots.iter().enumerate() {
            let n = norm(r);
            if n == 0.0 {
                out.push(Violation {
                    invariant: Invariant::ZeroRoot,
                    witness: format!("root {i}"),
                });
            } else if (n - std::f64::consts::SQRT_2).abs() > NORM_TOL {
                out.push(Violation {
                    invariant: Invariant::RootNorm,
                    witness: format!("root {i} = {r:?} has norm {n}"),
                });
            }
        }
        for (i, &k) in self.multiplicity.iter().enumerate() {
            if !(k >= 0.0) || !k.is_finite() {
                out.push(Violation {
                    invariant: Invariant::NegativeMultiplicity,
                    witness: format!("k(root {i}) = {k}"),
                });
            }
        }
        if out.iter().any(|v| v.invariant == Invariant::ZeroRoot) {
            return out;
        }
        // Closure under reflections, and invariance of k along σ_α(β).
        for (i, a) in self.roots.iter().enumerate() {
            for (j, b) in self.roots.iter().enumerate() {
                let image = reflect(a, b).expect("nonzero root");
                match self.root_index(&image) {
                    None => out.push(Violation {
                        invariant: Invariant::NotReflectionClosed,
                        witness: format!("σ_{i}(root {j}) = {image:?} not in R"),
                    }),
                    Some(m) => {
                        if (self.multiplicity[m] - self.multiplicity[j]).abs() > 1e-12 {
                            out.push(Violation {
                                invariant: Invariant::MultiplicityNotInvariant,
                                witness: format!(
                                    "k(root {j}) = {} but k(σ_{i}(root {j})) = {}",
                                    self.multiplicity[j], self.multiplicity[m]
                                ),
                            });
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            if let Err(DunklError::GroupExplosion { limit }) =
                generate_group_with_limit(self, DEFAULT_GROUP_LIMIT)
            {
                out.push(Violation {
                    invariant: Invariant::GroupNotFinite,
                    witness: format!("more than {limit} elements"),
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ReflectionGroup {
    pub dimension: usize,
    pub elements: Vec<DMatrix<f64>>,
}

impl ReflectionGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn act(&self, g: usize, x: &[f64]) -> Vec<f64> {
        let m = &self.elements[g];
        (0..self.dimension)
            .map(|i| (0..self.dimension).map(|j| m[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn orbit(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for g in 0..self.order() {
            let y = self.act(g, x);
            if !out.iter().any(|z| approx_eq_vec(z, &y, GROUP_DEDUP_TOL)) {
                out.push(y);
            }
        }
        out
    }

    /// min over σ of ‖σ(x) − y‖.
    pub fn orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.order())
            .map(|g| {
                let sx = self.act(g, x);
                sx.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn contains(&self, m: &DMatrix<f64>) -> bool {
        self.elements.iter().any(|e| matrices_close(e, m, GROUP_DEDUP_TOL))
    }

    /// Largest entrywise defect of the closure property.
    pub fn closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.elements {
            for b in &self.elements {
                let p = a * b;
                let best = self
                    .elements
                    .iter()
                    .map(|e| (e - &p).amax())
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        worst
    }
}

fn matrices_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol
}

pub fn generate_group(spec: &RootSystemSpec) -> Result<ReflectionGroup> {
    generate_group_with_limit(spec, DEFAULT_GROUP_LIMIT)
}

/// Breadth-first closure of the root reflections.
pub fn generate_group_with_limit(spec: &RootSystemSpec, limit: usize) -> Result<ReflectionGroup> {
    let n = spec.dimension;
    let mut gens: Vec<DMatrix<f64>> = Vec::new();
    for r in &spec.roots {
        if dot(r, r) == 0.0 {
            return Err(DunklError::InvalidArgument("zero root vector".into()));
        }
        let m = reflection_matrix(r);
        if !gens.iter().any(|g| matrices_close(g, &m, GROUP_DEDUP_TOL)) {
            gens.push(m);
        }
    }
    let mut group = ReflectionGroup {
        dimension: n,
        elements: vec![DMatrix::identity(n, n)],
    };
    let mut frontier = 0;
    while frontier < group.elements.len() {
        let current = group.elements[frontier].clone();
        for g in &gens {
            let p = g * &current;
            if !group.contains(&p) {
                if group.elements.len() >= limit {
                    return Err(DunklError::GroupExplosion { limit });
                }
                group.elements.push(p);
            }
        }
        frontier += 1;
    }
    Ok(group)
}
