use dunkl_lab::kernel::{product_imag, rank1_imag};
use dunkl_lab::quadrature::gauss_legendre;
use dunkl_lab::root_system::{generate_group, reflect, RootSystemSpec};
use dunkl_lab::Poly;
use proptest::prelude::*;

fn poly2() -> impl Strategy<Value = Poly> {
    prop::collection::vec(((0u32..5, 0u32..5), -2.0f64..2.0), 1..6).prop_map(|terms| {
        let t: Vec<(Vec<u32>, f64)> = terms.into_iter().map(|((a, b), c)| (vec![a, b], c)).collect();
        Poly::from_terms(2, &t)
    })
}

proptest! {
    #[test]
    fn kernel_modulus_at_most_one(k in 0.0f64..3.0, xi in -30.0f64..30.0, x in -30.0f64..30.0) {
        prop_assert!(rank1_imag(k, xi, x).norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn kernel_is_symmetric_and_conjugate_odd(k in 0.0f64..3.0, xi in -20.0f64..20.0, x in -20.0f64..20.0) {
        let e = rank1_imag(k, xi, x);
        prop_assert!((e - rank1_imag(k, x, xi)).norm() < 1e-10);
        prop_assert!((e.conj() - rank1_imag(k, xi, -x)).norm() < 1e-10);
    }

    #[test]
    fn product_kernel_factorizes(k1 in 0.0f64..2.0, k2 in 0.0f64..2.0, a in -8.0f64..8.0, b in -8.0f64..8.0, c in -8.0f64..8.0, d in -8.0f64..8.0) {
        let e = product_imag(&[k1, k2], &[a, b], &[c, d]);
        let f = rank1_imag(k1, a, c) * rank1_imag(k2, b, d);
        prop_assert!((e - f).norm() < 1e-12);
        prop_assert!(e.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn reflections_are_involutive_isometries(a in -3.0f64..3.0, b in -3.0f64..3.0, x in -5.0f64..5.0, y in -5.0f64..5.0) {
        prop_assume!(a.abs() + b.abs() > 1e-3);
        let alpha = [a, b];
        let p = [x, y];
        let s = reflect(&alpha, &p).unwrap();
        let back = reflect(&alpha, &s).unwrap();
        prop_assert!((back[0] - x).abs() < 1e-12 && (back[1] - y).abs() < 1e-12);
        let n0 = x * x + y * y;
        let n1 = s[0] * s[0] + s[1] * s[1];
        prop_assert!((n0 - n1).abs() < 1e-10 * (1.0 + n0));
    }

    #[test]
    fn dihedral_orbits_are_closed(m in 2usize..7, x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let g = generate_group(&RootSystemSpec::dihedral(m, 1.0)).unwrap();
        prop_assert_eq!(g.order(), 2 * m);
        let p = [x, y];
        for z in g.orbit(&p) {
            prop_assert!(g.orbit_distance(&p, &z) < 1e-9);
            prop_assert!((z[0] * z[0] + z[1] * z[1] - x * x - y * y).abs() < 1e-9);
        }
    }

    #[test]
    fn orbit_distance_is_symmetric_and_below_euclidean(m in 2usize..6, p in prop::array::uniform4(-4.0f64..4.0)) {
        let g = generate_group(&RootSystemSpec::dihedral(m, 0.5)).unwrap();
        let (x, y) = ([p[0], p[1]], [p[2], p[3]]);
        let d = g.orbit_distance(&x, &y);
        prop_assert!((d - g.orbit_distance(&y, &x)).abs() < 1e-9);
        prop_assert!(d <= ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt() + 1e-12);
    }

    #[test]
    fn polynomial_dunkl_matches_difference_quotient(p in poly2(), k in 0.0f64..2.0, x in 0.1f64..2.0, y in -2.0f64..2.0) {
        let pt = [x, y];
        let direct = p.deriv(0).eval(&pt) + k * (p.eval(&pt) - p.flip(0).eval(&pt)) / x;
        let op = p.dunkl(0, k).eval(&pt);
        prop_assert!((direct - op).abs() < 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn polynomial_dunkl_operators_commute(p in poly2(), k1 in 0.0f64..2.0, k2 in 0.0f64..2.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let a = p.dunkl(0, k1).dunkl(1, k2).eval(&[x, y]);
        let b = p.dunkl(1, k2).dunkl(0, k1).eval(&[x, y]);
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1(n in 1usize..30, c in prop::collection::vec(-1.0f64..1.0, 1..60)) {
        let deg = (2 * n - 1).min(c.len() - 1);
        let rule = gauss_legendre(n);
        let q = rule.integrate(|t| (0..=deg).map(|j| c[j] * t.powi(j as i32)).sum());
        let exact: f64 = (0..=deg).step_by(2).map(|j| 2.0 * c[j] / (j + 1) as f64).sum();
        prop_assert!((q - exact).abs() < 1e-12 * (1.0 + exact.abs()) * 10.0);
    }
}
