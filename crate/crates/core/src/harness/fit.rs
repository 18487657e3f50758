//! Nonlinear least-squares fits of decay models on log scale.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{DunklError, Result};

/// Samples with |q| at or below this are left out of log fits.
pub const SAMPLE_FLOOR: f64 = 1e-12;
const MAX_ITERATIONS: usize = 500;

/// Fit of log|q| ≈ log C − c‖x‖^p.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFitReport {
    pub exponent_fitted: f64,
    pub c_fitted: f64,
    #[serde(rename = "C_fitted")]
    pub big_c_fitted: f64,
    pub r_squared: f64,
    pub sample_range: (f64, f64),
    pub n_samples: usize,
    pub iterations: usize,
    /// Standard errors from the Gauss–Newton covariance, in (p, c, log C) order.
    pub std_errors: [f64; 3],
}

/// Fit of log|q| ≈ log C − γ log‖x‖ − c‖x‖^p along the decreasing majorant of |q|.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFitReport {
    pub exponent_fitted: f64,
    pub c_fitted: f64,
    #[serde(rename = "C_fitted")]
    pub big_c_fitted: f64,
    pub gamma_fitted: f64,
    pub r_squared: f64,
    pub n_envelope: usize,
    pub iterations: usize,
}

struct LmResult {
    params: DVector<f64>,
    residuals: DVector<f64>,
    jacobian: DMatrix<f64>,
    iterations: usize,
}

/// Levenberg–Marquardt with Marquardt's diagonal scaling. `model` returns
/// residuals and their Jacobian at the given parameters.
fn levenberg_marquardt<F>(model: F, init: DVector<f64>) -> Result<LmResult>
where
    F: Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let mut theta = init;
    let (mut r, mut j) = model(&theta);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(DunklError::Fit("non-finite residuals at the initial point".into()));
    }
    let mut lambda = 1e-3;
    for it in 1..=MAX_ITERATIONS {
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * &r;
        if g.amax() <= 1e-15 * (1.0 + cost) {
            return Ok(LmResult { params: theta, residuals: r, jacobian: j, iterations: it });
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match a.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let trial = &theta + &step;
            let (rt, jt2) = model(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let small = step
                    .iter()
                    .zip(theta.iter())
                    .all(|(s, t)| s.abs() <= 1e-12 * (t.abs() + 1e-12));
                let flat = cost - ct <= 1e-16 * cost.max(1e-300);
                theta = trial;
                r = rt;
                j = jt2;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                if small || (flat && cost > 0.0 && step.norm() <= 1e-9 * (theta.norm() + 1.0)) {
                    return Ok(LmResult { params: theta, residuals: r, jacobian: j, iterations: it });
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted {
            // no descent direction left: a (local) minimum at working precision
            return Ok(LmResult { params: theta, residuals: r, jacobian: j, iterations: it });
        }
    }
    Err(DunklError::Fit(format!(
        "Levenberg–Marquardt did not converge in {MAX_ITERATIONS} iterations"
    )))
}

fn usable_samples(samples: &[(f64, f64)], floor: f64) -> Result<Vec<(f64, f64)>> {
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(x, q)| x.is_finite() && *x > 0.0 && q.abs() > floor && q.is_finite())
        .map(|(x, q)| (*x, q.abs().ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if pts.len() < 20 {
        return Err(DunklError::InvalidArgument(format!(
            "decay fit needs ≥ 20 samples above {floor:e}, got {}",
            pts.len()
        )));
    }
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    if hi < 4.0 * lo {
        return Err(DunklError::InvalidArgument(format!(
            "decay fit needs an ‖x‖-ratio ≥ 4, got [{lo}, {hi}]"
        )));
    }
    Ok(pts)
}

fn r_squared(y: &[f64], residuals: &DVector<f64>) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sse = residuals.norm_squared();
    if sst == 0.0 {
        return if sse == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - sse / sst).clamp(0.0, 1.0)
}

/// Fits (p, c, C) with the default floor.
pub fn fit_decay_exponent(samples: &[(f64, f64)], p0: f64) -> Result<DecayFitReport> {
    fit_decay_exponent_with(samples, p0, SAMPLE_FLOOR)
}

/// Fits log|q| = log C − c‖x‖^p from (‖x‖, q) samples, starting at
/// p = p0, c = 1, C = max|q|.
pub fn fit_decay_exponent_with(samples: &[(f64, f64)], p0: f64, floor: f64) -> Result<DecayFitReport> {
    let pts = usable_samples(samples, floor)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let ymax = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let model = |th: &DVector<f64>| {
        let (p, c, lc) = (th[0], th[1], th[2]);
        let n = xs.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 3);
        for i in 0..n {
            let xp = xs[i].powf(p);
            r[i] = lc - c * xp - ys[i];
            j[(i, 0)] = -c * xp * xs[i].ln();
            j[(i, 1)] = -xp;
            j[(i, 2)] = 1.0;
        }
        (r, j)
    };
    let fit = levenberg_marquardt(model, DVector::from_vec(vec![p0, 1.0, ymax]))?;
    let th = &fit.params;
    let n = xs.len();
    let dof = (n as f64 - 3.0).max(1.0);
    let sigma2 = fit.residuals.norm_squared() / dof;
    let cov = (fit.jacobian.transpose() * &fit.jacobian).try_inverse();
    let std_errors = match cov {
        Some(c) => [0, 1, 2].map(|d| (sigma2 * c[(d, d)]).max(0.0).sqrt()),
        None => [f64::NAN; 3],
    };
    Ok(DecayFitReport {
        exponent_fitted: th[0],
        c_fitted: th[1],
        big_c_fitted: th[2].exp(),
        r_squared: r_squared(&ys, &fit.residuals),
        sample_range: (xs[0], xs[n - 1]),
        n_samples: n,
        iterations: fit.iterations,
        std_errors,
    })
}

/// Envelope fit: per series (one ray each), keeps the samples that exceed
/// every |q| further out (the decreasing majorant, i.e. the peaks of an
/// oscillating kernel), then fits log C − γ log‖x‖ − c‖x‖^p.
pub fn fit_decay_envelope(series: &[Vec<(f64, f64)>], p0: f64) -> Result<EnvelopeFitReport> {
    let mut pts = Vec::new();
    for s in series {
        let mut s: Vec<(f64, f64)> = s.iter().map(|(x, q)| (*x, q.abs())).collect();
        s.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = 0.0;
        for (x, q) in s {
            if q > best {
                best = q;
                if q > SAMPLE_FLOOR && x > 0.0 {
                    pts.push((x, q.ln()));
                }
            }
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if pts.len() < 6 {
        return Err(DunklError::InvalidArgument(format!(
            "envelope fit needs ≥ 6 majorant points above the floor, got {}",
            pts.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let ymax = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let model = |th: &DVector<f64>| {
        let (p, c, lc, g) = (th[0], th[1], th[2], th[3]);
        let n = xs.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 4);
        for i in 0..n {
            let lx = xs[i].ln();
            let xp = xs[i].powf(p);
            r[i] = lc - g * lx - c * xp - ys[i];
            j[(i, 0)] = -c * xp * lx;
            j[(i, 1)] = -xp;
            j[(i, 2)] = 1.0;
            j[(i, 3)] = -lx;
        }
        (r, j)
    };
    let fit = levenberg_marquardt(model, DVector::from_vec(vec![p0, 1.0, ymax, 0.0]))?;
    let th = &fit.params;
    Ok(EnvelopeFitReport {
        exponent_fitted: th[0],
        c_fitted: th[1],
        big_c_fitted: th[2].exp(),
        gamma_fitted: th[3],
        r_squared: r_squared(&ys, &fit.residuals),
        n_envelope: xs.len(),
        iterations: fit.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_synthetic_stretched_exponential() {
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let x = 0.5 + 0.15 * i as f64;
                (x, (-x.powf(1.5)).exp())
            })
            .collect();
        let f = fit_decay_exponent(&samples, 4.0 / 3.0).unwrap();
        assert!((f.exponent_fitted - 1.5).abs() < 1e-8, "{f:?}");
        assert!((f.c_fitted - 1.0).abs() < 1e-8);
        assert!((f.big_c_fitted - 1.0).abs() < 1e-8);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn rejects_short_or_narrow_samples() {
        let few: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(fit_decay_exponent(&few, 2.0), Err(DunklError::InvalidArgument(_))));
        let narrow: Vec<(f64, f64)> = (0..30).map(|i| (1.0 + 0.05 * i as f64, 1.0)).collect();
        assert!(matches!(fit_decay_exponent(&narrow, 2.0), Err(DunklError::InvalidArgument(_))));
    }

    #[test]
    fn envelope_of_modulated_decay() {
        let series: Vec<(f64, f64)> = (0..3000)
            .map(|i| {
                let x = 0.5 + 0.01 * i as f64;
                (x, x.powf(-0.5) * (-0.7 * x.powf(1.2)).exp() * (3.0 * x).cos())
            })
            .collect();
        let f = fit_decay_envelope(&[series], 1.2).unwrap();
        assert!((f.exponent_fitted - 1.2).abs() < 0.02, "{f:?}");
    }
}
