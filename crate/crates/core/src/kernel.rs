//! The rational Dunkl kernel E for rank-1 and ℤ₂^N systems.
//!
//! Rank one: E_k(x, y) = Σ a_n (xy)^n with a_{n+1} = a_n / (n+1 + 2k[n+1 odd]).
//! For imaginary arguments the series cancels badly once |ξx| is large, so
//! E(iξ, x) = j_{k−1/2}(ξx) + i ξx/(2k+1) j_{k+1/2}(ξx) is used there, with
//! the normalized Bessel functions j_ν(z) = Γ(ν+1)(2/z)^ν J_ν(z).

use num_complex::Complex64;

use crate::error::{DunklError, Result};
use crate::measure::WeightedContext;

/// Below this |z| the imaginary-argument series is used directly.
const SERIES_SWITCH: f64 = 8.0;
const DEFAULT_TRUNCATION: usize = 4096;

/// Argument of the kernel: E(x, z) for real z, or E(x, iξ).
#[derive(Debug, Clone, PartialEq)]
pub enum KernelArg {
    Real(Vec<f64>),
    Imaginary(Vec<f64>),
}

/// Partial sums of the series; `None` when `truncation` terms do not reach
/// the stopping rule. Also returns the largest term seen.
fn series_raw(k: f64, z: Complex64, truncation: usize) -> Option<(Complex64, f64)> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small = 0;
    let mut largest = 1.0f64;
    for n in 0..truncation {
        let m = (n + 1) as f64;
        let denom = if (n + 1) % 2 == 1 { m + 2.0 * k } else { m };
        term = term * z / denom;
        sum += term;
        largest = largest.max(term.norm());
        if term.norm() < 1e-16 * sum.norm() {
            small += 1;
            if small >= 5 {
                return Some((sum, largest));
            }
        } else {
            small = 0;
        }
    }
    None
}

/// Power series of E_k(1, z) at complex z. Stops once 5 consecutive terms are
/// below 1e-16 of the partial sum. Running out of terms, or losing more than
/// four digits to cancellation, is an accuracy error.
pub fn rank1_series(k: f64, z: Complex64, truncation: usize) -> Result<Complex64> {
    if truncation < 1 {
        return Err(DunklError::InvalidArgument("truncation must be ≥ 1".into()));
    }
    let (sum, largest) = series_raw(k, z, truncation).ok_or_else(|| {
        DunklError::accuracy(
            "Dunkl kernel series",
            format!("truncation {truncation} too small for |xy| = {:.3e}", z.norm()),
        )
    })?;
    if largest > 1e4 * sum.norm() {
        return Err(DunklError::accuracy(
            "Dunkl kernel series",
            format!(
                "cancellation at |xy| = {:.3e}: largest term {largest:.3e}, sum {:.3e}",
                z.norm(),
                sum.norm()
            ),
        ));
    }
    Ok(sum)
}

/// Normalized Bessel function j_ν by its power series; for small |z|.
fn normalized_bessel_series(nu: f64, z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..200 {
        let m = n as f64;
        term *= q / (m * (nu + m));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// (j_{μ−1}(z), j_μ(z)) for μ > 0, z ≥ 0, by Miller's backward recurrence
/// normalized with (z/2)^μ = Σ_m (μ+2m) Γ(μ+m)/m! J_{μ+2m}(z).
pub fn normalized_bessel_pair(mu: f64, z: f64) -> (f64, f64) {
    assert!(mu > 0.0, "μ must be positive");
    let z = z.abs();
    if z < 1.0 {
        return (
            normalized_bessel_series(mu - 1.0, z),
            normalized_bessel_series(mu, z),
        );
    }
    let start = (z + 30.0 + 10.0 * z.sqrt().max(1.0) + mu).ceil() as usize;
    let start = start + start % 2;
    // c_m = (μ+2m)(μ)_m/m!, needed at even offsets 2m ≤ start
    let mmax = start / 2 + 1;
    let mut c = Vec::with_capacity(mmax + 1);
    let mut poch = 1.0;
    for m in 0..=mmax {
        if m > 0 {
            poch *= (mu + m as f64 - 1.0) / m as f64;
        }
        c.push((mu + 2.0 * m as f64) * poch);
    }
    let mut y_next = 0.0; // order μ + a + 1
    let mut y = 1e-280; // order μ + a
    let mut norm = 0.0;
    let mut y_mu = 0.0;
    let mut a = start;
    loop {
        if a % 2 == 0 {
            norm += c[a / 2] * y;
        }
        if a == 0 {
            y_mu = y;
        }
        let order = mu + a as f64;
        let y_prev = 2.0 * order / z * y - y_next;
        y_next = y;
        y = y_prev;
        if a == 0 {
            break;
        }
        a -= 1;
        if y.abs() > 1e250 {
            y *= 1e-250;
            y_next *= 1e-250;
            norm *= 1e-250;
        }
    }
    // after the loop y holds order μ−1 and y_next order μ
    let _ = y_next;
    let j_mu = mu * y_mu / norm;
    let j_mu_minus = 0.5 * z * y / norm;
    (j_mu_minus, j_mu)
}

/// E_k(iξ, x) in rank one.
pub fn rank1_imag(k: f64, xi: f64, x: f64) -> Complex64 {
    let z = xi * x;
    if k == 0.0 {
        return Complex64::new(z.cos(), z.sin());
    }
    if z.abs() < SERIES_SWITCH {
        if let Some((v, _)) = series_raw(k, Complex64::new(0.0, z), DEFAULT_TRUNCATION) {
            return v;
        }
    }
    let (even, odd) = normalized_bessel_pair(k + 0.5, z);
    Complex64::new(even, z / (2.0 * k + 1.0) * odd)
}

/// E_k(x, y) in rank one for real x, y.
pub fn rank1_real(k: f64, x: f64, y: f64, truncation: usize) -> Result<f64> {
    Ok(rank1_series(k, Complex64::new(x * y, 0.0), truncation)?.re)
}

/// Π_j E_{k_j}(iξ_j, x_j).
pub fn product_imag(ks: &[f64], xi: &[f64], x: &[f64]) -> Complex64 {
    ks.iter()
        .zip(xi.iter().zip(x))
        .map(|(&k, (&a, &b))| rank1_imag(k, a, b))
        .product()
}

/// E(x, z) or E(x, iξ) for the context's system.
pub fn dunkl_kernel_e(
    ctx: &WeightedContext,
    x: &[f64],
    z: &KernelArg,
    truncation: usize,
) -> Result<Complex64> {
    let ks = ctx.require_product("the Dunkl kernel")?;
    let (arg, imag) = match z {
        KernelArg::Real(v) => (v, false),
        KernelArg::Imaginary(v) => (v, true),
    };
    if x.len() != ks.len() || arg.len() != ks.len() {
        return Err(DunklError::InvalidArgument("point dimension mismatch".into()));
    }
    if truncation < 1 {
        return Err(DunklError::InvalidArgument("truncation must be ≥ 1".into()));
    }
    let mut out = Complex64::new(1.0, 0.0);
    for j in 0..ks.len() {
        let w = x[j] * arg[j];
        let factor = if imag {
            if w.abs() < SERIES_SWITCH {
                let (v, _) = series_raw(ks[j], Complex64::new(0.0, w), truncation).ok_or_else(|| {
                    DunklError::accuracy(
                        "Dunkl kernel series",
                        format!("truncation {truncation} too small for |xy| = {:.3e}", w.abs()),
                    )
                })?;
                v
            } else {
                rank1_imag(ks[j], arg[j], x[j])
            }
        } else {
            rank1_series(ks[j], Complex64::new(w, 0.0), truncation)?
        };
        out *= factor;
    }
    Ok(out)
}
