use plate_echo::specfun::*;
use proptest::prelude::*;
use std::f64::consts::PI;

/// `J_n(t) = (1/π) ∫_0^π cos(nτ - t sin τ) dτ`; the integrand extends to a
/// smooth 2π-periodic function, so the trapezoid rule converges spectrally.
fn j_by_quadrature(n: i32, t: f64) -> f64 {
    let m = 4 * (t as usize + n.unsigned_abs() as usize) + 64;
    let h = 2.0 * PI / m as f64;
    (0..m)
        .map(|i| {
            let tau = i as f64 * h;
            (n as f64 * tau - t * tau.sin()).cos()
        })
        .sum::<f64>()
        * h
        / (2.0 * PI)
}

/// `K_n(t) = ∫_0^∞ e^{-t cosh s} cosh(ns) ds`.
fn k_by_quadrature(n: i32, t: f64) -> f64 {
    let h = 0.005;
    let mut sum = 0.5 * (-t).exp();
    let mut s: f64 = h;
    loop {
        let v = (-t * s.cosh() + n as f64 * s).exp() * 0.5 * (1.0 + (-2.0 * n as f64 * s).exp());
        sum += v;
        if v < 1e-20 * sum {
            break;
        }
        s += h;
    }
    sum * h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wronskian_of_j_and_y(n in 0usize..=32, t in 0.1f64..100.0) {
        let j = bessel_j_seq(n + 1, t);
        let y = bessel_y_seq(n + 1, t).unwrap();
        let w = j[n + 1] * y[n] - j[n] * y[n + 1];
        let expected = 2.0 / (PI * t);
        prop_assert!((w - expected).abs() <= 1e-10 * expected, "n={} t={} w={} expected={}", n, t, w, expected);
    }

    #[test]
    fn j_matches_integral_representation(n in -20i32..=20, t in 0.0f64..60.0) {
        let exact = j_by_quadrature(n, t);
        prop_assert!((bessel_j(n, t) - exact).abs() <= 1e-13, "n={} t={}", n, t);
    }

    #[test]
    fn k_matches_integral_representation(n in 0i32..=6, t in 0.05f64..40.0) {
        let exact = k_by_quadrature(n, t);
        let got = bessel_k(n, t).unwrap();
        prop_assert!((got - exact).abs() <= 1e-11 * exact, "n={} t={} got={} exact={}", n, t, got, exact);
    }

    #[test]
    fn three_term_recurrences(n in 1i32..=30, t in 0.5f64..80.0) {
        let scale = |a: f64, b: f64| a.abs().max(b.abs());
        let (jm, j, jp) = (bessel_j(n - 1, t), bessel_j(n, t), bessel_j(n + 1, t));
        prop_assert!((jm + jp - 2.0 * n as f64 / t * j).abs() <= 1e-13 * scale(jm, jp).max(1e-300) + 1e-300);
        let (km, k, kp) = (bessel_k(n - 1, t).unwrap(), bessel_k(n, t).unwrap(), bessel_k(n + 1, t).unwrap());
        prop_assert!((kp - km - 2.0 * n as f64 / t * k).abs() <= 1e-12 * kp);
    }

    #[test]
    fn derivatives_match_finite_differences(n in 0i32..=12, t in 0.5f64..50.0) {
        let h = 1e-5;
        let fd = (hankel1(n, t + h).unwrap() - hankel1(n, t - h).unwrap()) / (2.0 * h);
        let d = hankel1_prime(n, t).unwrap();
        prop_assert!((fd - d).norm() <= 1e-7 * d.norm().max(1.0));
        let fdk = (bessel_k(n, t + h).unwrap() - bessel_k(n, t - h).unwrap()) / (2.0 * h);
        let dk = bessel_k_prime(n, t).unwrap();
        prop_assert!((fdk - dk).abs() <= 1e-7 * dk.abs());
    }

    #[test]
    fn negative_orders(n in 0i32..=15, t in 0.1f64..30.0) {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(bessel_j(-n, t), sign * bessel_j(n, t));
        prop_assert_eq!(bessel_y(-n, t).unwrap(), sign * bessel_y(n, t).unwrap());
        prop_assert_eq!(bessel_k(-n, t).unwrap(), bessel_k(n, t).unwrap());
    }

    #[test]
    fn fundamental_solutions_are_symmetric(x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, k in 0.5f64..8.0) {
        let (x, y) = ([x0, x1], [0.25, -0.5]);
        prop_assume!((x0 - 0.25).hypot(x1 + 0.5) > 1e-3);
        for kind in [KernelKind::Helmholtz, KernelKind::Modified] {
            prop_assert_eq!(fundamental_solution(kind, k, x, y).unwrap(), fundamental_solution(kind, k, y, x).unwrap());
        }
    }
}

#[test]
fn domain_errors() {
    assert!(bessel_y(0, 0.0).is_err());
    assert!(bessel_k(1, -1.0).is_err());
    assert!(matches!(
        fundamental_solution(KernelKind::Helmholtz, 1.0, [0.0, 0.0], [0.0, 0.0]),
        Err(SpecfunError::Singularity)
    ));
}
