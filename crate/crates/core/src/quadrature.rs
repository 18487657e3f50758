//! Gauss rules: Legendre and Jacobi with weight (1+t)^β on [−1, 1].
//!
//! Nodes come from the Golub–Welsch eigenproblem and are polished by Newton
//! steps on the orthonormal recurrence; weights use the Christoffel formula.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Recurrence coefficients of the orthonormal Jacobi polynomials for
/// (1−t)^a (1+t)^b, a = 0.
fn jacobi_recurrence(n: usize, b: f64) -> (Vec<f64>, Vec<f64>) {
    let a = 0.0;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for i in 0..n {
        let k = i as f64;
        let s = 2.0 * k + a + b;
        let d = if i == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        diag.push(d);
    }
    // off[i] couples p_i and p_{i+1}
    for i in 1..=n {
        let k = i as f64;
        let s = 2.0 * k + a + b;
        let num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
        let den = s * s * (s + 1.0) * (s - 1.0);
        off.push((num / den).sqrt());
    }
    (diag, off)
}

/// Total mass of (1+t)^b on [−1,1].
fn jacobi_mass(b: f64) -> f64 {
    2f64.powf(b + 1.0) / (b + 1.0)
}

/// Orthonormal p_0..p_{n-1} at t, plus p_n and p_n'.
fn orthonormal_values(t: f64, diag: &[f64], off: &[f64], mass: f64, n: usize) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0 / mass.sqrt();
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    let mut sumsq = 0.0;
    for i in 0..n {
        sumsq += p * p;
        let b_prev = if i == 0 { 0.0 } else { off[i - 1] };
        let p_next = ((t - diag[i]) * p - b_prev * p_prev) / off[i];
        let dp_next = (p + (t - diag[i]) * dp - b_prev * dp_prev) / off[i];
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (sumsq, p, dp)
}

/// n-point rule for ∫_{−1}^{1} (1+t)^β g(t) dt.
pub fn gauss_jacobi(n: usize, beta: f64) -> GaussRule {
    assert!(n >= 1, "rule needs at least one node");
    assert!(beta > -1.0, "β must exceed −1");
    let (diag, off) = jacobi_recurrence(n, beta);
    let mass = jacobi_mass(beta);
    let jm = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut weights = Vec::with_capacity(n);
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let (_, p, dp) = orthonormal_values(*t, &diag, &off, mass, n);
            if dp != 0.0 {
                let step = p / dp;
                if step.is_finite() && step.abs() < 1e-3 {
                    *t -= step;
                }
            }
        }
        let (sumsq, _, _) = orthonormal_values(*t, &diag, &off, mass, n);
        weights.push(1.0 / sumsq);
    }
    GaussRule { nodes, weights }
}

pub fn gauss_legendre(n: usize) -> GaussRule {
    gauss_jacobi(n, 0.0)
}

impl GaussRule {
    /// Affine map to [a, b] for plain Legendre rules.
    pub fn mapped(&self, a: f64, b: f64) -> GaussRule {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        GaussRule {
            nodes: self.nodes.iter().map(|t| m + h * t).collect(),
            weights: self.weights.iter().map(|w| w * h).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Rule for ∫_0^R y^{2k} g(y) dy with the weight folded in.
pub fn half_axis_rule(n: usize, k: f64, r: f64) -> GaussRule {
    let beta = 2.0 * k;
    let base = gauss_jacobi(n, beta);
    let scale = (0.5 * r).powf(beta + 1.0);
    GaussRule {
        nodes: base.nodes.iter().map(|t| 0.5 * r * (1.0 + t)).collect(),
        weights: base.weights.iter().map(|w| w * scale).collect(),
    }
}

/// Symmetric rule on [−R, R] for ∫ |y|^{2k} g(y) dy, built from two half-axis
/// rules so the singular point 0 is an endpoint and never a node.
pub fn full_axis_rule(nodes_per_axis: usize, k: f64, r: f64) -> GaussRule {
    let half = (nodes_per_axis / 2).max(1);
    let h = half_axis_rule(half, k, r);
    let mut nodes = Vec::with_capacity(2 * half);
    let mut weights = Vec::with_capacity(2 * half);
    for i in (0..half).rev() {
        nodes.push(-h.nodes[i]);
        weights.push(h.weights[i]);
    }
    for i in 0..half {
        nodes.push(h.nodes[i]);
        weights.push(h.weights[i]);
    }
    GaussRule { nodes, weights }
}
