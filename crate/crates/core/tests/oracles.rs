use dunkl_lab::kernel::{normalized_bessel_pair, rank1_imag, rank1_real, rank1_series};
use dunkl_lab::measure::eta;
use dunkl_lab::semigroup::{evaluate_q, heat_kernel, two_point_kernel, KernelEvaluator};
use dunkl_lab::{KernelSpec, WeightedContext};
use num_complex::Complex64;

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Closed form of c_k for ℤ₂^N: Π 2^{k_j} 2^{k_j+1/2} Γ(k_j+1/2).
fn c_k_closed(ks: &[f64]) -> f64 {
    ks.iter()
        .map(|&k| 2f64.powf(k) * 2f64.powf(k + 0.5) * gamma(k + 0.5))
        .product()
}

/// E_k(x, y) of the two-point heat kernel in rank one, via the ℤ₂^N product.
fn heat_two_point_closed(ks: &[f64], x: &[f64], y: &[f64], t: f64) -> f64 {
    let big_n = ks.len() as f64 + 2.0 * ks.iter().sum::<f64>();
    let s = (2.0 * t).sqrt();
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    let e: f64 = ks
        .iter()
        .zip(x.iter().zip(y))
        .map(|(&k, (&a, &b))| rank1_real(k, a / s, b / s, 4096).unwrap())
        .product();
    (2.0 * t).powf(-big_n / 2.0) / c_k_closed(ks) * (-(nx + ny) / (4.0 * t)).exp() * e
}

#[test]
fn kernel_at_one_one_is_cosh_for_k_one() {
    let v = rank1_real(1.0, 1.0, 1.0, 4096).unwrap();
    let z = 1.0f64;
    let closed = z.sinh() / z + (z * z.cosh() - z.sinh()) / (z * z);
    assert!((v - closed).abs() < 1e-14);
    assert!((v - 1.0f64.cosh()).abs() < 1e-14);
    assert!((v - 1.5430806).abs() < 1e-7);
}

#[test]
fn imaginary_kernel_matches_closed_form_for_k_one() {
    for &z in &[0.3, 2.0, 7.9, 8.1, 15.0, 40.0, 130.0, 400.0] {
        let v = rank1_imag(1.0, z, 1.0);
        let re = z.sin() / z;
        let im = (z.sin() - z * z.cos()) / (z * z);
        assert!((v.re - re).abs() < 1e-12, "re at {z}: {} vs {re}", v.re);
        assert!((v.im - im).abs() < 1e-12, "im at {z}: {} vs {im}", v.im);
    }
}

#[test]
fn imaginary_kernel_is_exponential_for_k_zero() {
    for &z in &[0.5, 9.0, -33.0] {
        let v = rank1_imag(0.0, z, 1.0);
        assert!((v - Complex64::new(z.cos(), z.sin())).norm() < 1e-14);
    }
}

#[test]
fn bessel_route_agrees_with_series_at_switch() {
    for &k in &[0.25, 0.5, 1.3, 2.0] {
        for &z in &[1.5f64, 5.0, 7.5] {
            let series = rank1_series(k, Complex64::new(0.0, z), 4096).unwrap();
            let (even, odd) = normalized_bessel_pair(k + 0.5, z);
            let bessel = Complex64::new(even, z / (2.0 * k + 1.0) * odd);
            assert!((series - bessel).norm() < 1e-11, "k={k} z={z}: {series} vs {bessel}");
        }
    }
}

#[test]
fn series_reports_cancellation() {
    let v = rank1_series(0.5, Complex64::new(0.0, 60.0), 4096);
    assert!(v.is_err(), "{v:?}");
    assert!(rank1_series(0.5, Complex64::new(3.0, 0.0), 3).is_err());
}

#[test]
fn normalization_constant_matches_closed_form() {
    for ks in [vec![0.0], vec![1.0], vec![0.5, 0.5], vec![0.25, 1.5]] {
        let ctx = WeightedContext::product(&ks).unwrap();
        let rel = (ctx.c_k() - c_k_closed(&ks)).abs() / c_k_closed(&ks);
        assert!(rel < 1e-9, "{ks:?}: {} vs {}", ctx.c_k(), c_k_closed(&ks));
    }
    let ctx = WeightedContext::product(&[0.0, 0.0]).unwrap();
    assert!((ctx.c_k() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn unit_ball_volume_for_k_one() {
    // ∫_{-1}^{1} 2|x|² dx = 4/3
    let ctx = WeightedContext::rank_one(1.0).unwrap();
    let v = ctx.ball_volume(&[0.0], 1.0).unwrap();
    assert!((v.value - 4.0 / 3.0).abs() < 1e-10, "{}", v.value);
}

#[test]
fn ball_volume_in_two_dimensions() {
    // k = 0 gives Lebesgue area, k = (1/2, 1/2) gives ∫_B 2|xy| = 1.
    let flat = WeightedContext::product(&[0.0, 0.0]).unwrap();
    let v = flat.ball_volume(&[0.3, -0.2], 1.5).unwrap();
    assert!((v.value - std::f64::consts::PI * 2.25).abs() < 1e-8, "{}", v.value);
    let ctx = WeightedContext::product(&[0.5, 0.5]).unwrap();
    let v = ctx.ball_volume(&[0.0, 0.0], 1.0).unwrap();
    assert!((v.value - 1.0).abs() < 1e-7, "{}", v.value);
}

#[test]
fn heat_kernel_at_origin() {
    let ctx = WeightedContext::rank_one(0.0).unwrap();
    let h = heat_kernel(&ctx, &[0.0], 1.0).unwrap();
    // h_1(0) = (4π)^{-1/2} when k = 0
    assert!((h - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
}

#[test]
fn numerical_heat_kernel_matches_gaussian() {
    for ks in [vec![0.0], vec![1.0], vec![0.5, 1.0]] {
        let ctx = WeightedContext::product(&ks).unwrap();
        let dim = ks.len();
        for &t in &[0.5, 1.0, 2.0] {
            let spec = KernelSpec::heat(dim, t);
            for &r in &[0.0, 0.7, 2.5] {
                let x = vec![r; dim];
                let q = evaluate_q(&ctx, &spec, &x).unwrap();
                let h = heat_kernel(&ctx, &x, t).unwrap();
                assert!((q.value - h).abs() <= 1e-9 * h.abs().max(1e-3), "{ks:?} t={t} r={r}: {} vs {h}", q.value);
            }
        }
    }
}

#[test]
fn two_point_heat_kernel_matches_closed_form() {
    let ks = [1.0];
    let ctx = WeightedContext::product(&ks).unwrap();
    let spec = KernelSpec::heat(1, 1.0);
    for &(x, y) in &[(0.5, 1.0), (-1.2, 0.4), (2.0, -2.0)] {
        let v = two_point_kernel(&ctx, &spec, &[x], &[y]).unwrap();
        let closed = heat_two_point_closed(&ks, &[x], &[y], 1.0);
        assert!((v.value - closed).abs() < 1e-9, "({x},{y}): {} vs {closed}", v.value);
    }
}

#[test]
fn evaluator_reports_error_estimates() {
    let ctx = WeightedContext::rank_one(0.5).unwrap();
    let spec = KernelSpec::new(vec![vec![1.0]], 2, 0.0, 1.0);
    let ev = KernelEvaluator::new(&ctx, &spec, None).unwrap();
    let v = ev.q(&[1.0]).unwrap();
    assert!(v.error >= 0.0 && v.error < 1e-8);
}

#[test]
fn eta_closed_form() {
    assert!((eta(&[0.0, 0.0], 1.0) - 1f64.exp()).abs() < 1e-15);
    assert!((eta(&[3.0, 4.0], 0.5) - 7.25f64.sqrt().exp()).abs() < 1e-12);
}
