use proptest::prelude::*;
use riccati_core::specfun::{
    erf, erfi, expint, expint_quadrature, gamma, hyp2f1, hyp2f1_pfaff, hyp2f1_series, SpecialValue,
};

fn v<E: std::fmt::Debug>(r: Result<SpecialValue<f64>, E>) -> f64 {
    r.unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn erf_is_odd_bounded_and_increasing(z in 0.0f64..8.0, dz in 1e-3f64..1.0) {
        let (p, m) = (v(erf(z)), v(erf(-z)));
        prop_assert_eq!(p, -m);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(v(erf(z + dz)) >= p);
    }

    #[test]
    fn erfi_is_odd_and_increasing(z in 0.0f64..4.0, dz in 1e-3f64..1.0) {
        let p = v(erfi(z));
        prop_assert_eq!(p, -v(erfi(-z)));
        prop_assert!(v(erfi(z + dz)) > p);
    }

    #[test]
    fn erf_derivative_is_gaussian(z in -3.0f64..3.0) {
        let h = 1e-4;
        let d = (v(erf(z + h)) - v(erf(z - h))) / (2.0 * h);
        let exact = 2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp();
        prop_assert!((d - exact).abs() <= 1e-7);
    }

    #[test]
    fn expint_decreases_in_z_and_increases_in_order_shift(nu in 0.0f64..3.0, z in 0.1f64..20.0, dz in 0.01f64..1.0) {
        let e = v(expint(nu, z));
        prop_assert!(e > 0.0);
        prop_assert!(v(expint(nu, z + dz)) < e);
        // E_{ν+1} < E_ν for z > 0
        prop_assert!(v(expint(nu + 1.0, z)) < e);
    }

    #[test]
    fn expint_recurrence(nu in 0.0f64..3.0, z in 0.1f64..20.0) {
        // ν E_{ν+1}(z) = e^{−z} − z E_ν(z)
        let lhs = nu * v(expint(nu + 1.0, z));
        let rhs = (-z).exp() - z * v(expint(nu, z));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (-z).exp().max(1e-300) * 10.0 + 1e-14, "{lhs} vs {rhs}");
    }

    #[test]
    fn expint_routes_agree(nu in 0.0f64..4.0, z in 0.05f64..30.0) {
        let (a, b) = (v(expint(nu, z)), v(expint_quadrature(nu, z, 1e-12)));
        prop_assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
    }

    #[test]
    fn hyp2f1_is_symmetric_in_a_and_b(a in -2.0f64..3.0, b in -2.0f64..3.0, c in 0.2f64..4.0, z in -0.95f64..0.9) {
        let (u, w) = (v(hyp2f1(a, b, c, z)), v(hyp2f1(b, a, c, z)));
        prop_assert!((u - w).abs() <= 1e-10 * (1.0 + u.abs()));
    }

    #[test]
    fn hyp2f1_routes_agree(a in -2.0f64..3.0, b in -2.0f64..3.0, c in 0.2f64..4.0, z in -0.9f64..0.0) {
        let (s, p) = (v(hyp2f1_series(a, b, c, z)), v(hyp2f1_pfaff(a, b, c, z)));
        prop_assert!((s - p).abs() <= 1e-8 * (1.0 + s.abs()), "{s} vs {p}");
    }

    #[test]
    fn hyp2f1_terminates_for_negative_integer_a(n in 0u32..5, b in -2.0f64..3.0, c in 0.2f64..4.0, z in -3.0f64..0.9) {
        // Finite sum of n + 1 terms
        let a = -(n as f64);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..n {
            let k = k as f64;
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
            sum += term;
        }
        let got = v(hyp2f1(a, b, c, z));
        prop_assert!((got - sum).abs() <= 1e-10 * (1.0 + sum.abs()), "{got} vs {sum}");
    }

    #[test]
    fn gamma_recurrence(x in 0.1f64..10.0) {
        let (g, g1) = (gamma(x), gamma(x + 1.0));
        prop_assert!((g1 - x * g).abs() <= 1e-12 * g1.abs());
    }
}

#[test]
fn reference_values() {
    assert!((v(erf(0.5)) - 0.520_499_877_813_046_5).abs() < 1e-15);
    assert!((v(erfi(0.5)) - 0.614_952_094_696_511).abs() < 1e-15);
    assert_eq!(v(erf(0.0)), 0.0);
    // E_1(z) + γ + ln z = Σ (−1)^{k+1} z^k/(k k!)
    let z: f64 = 0.3;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..40 {
        term *= z / k as f64;
        sum += if k % 2 == 1 { term } else { -term } / k as f64;
    }
    let e1 = sum - 0.577_215_664_901_532_9 - z.ln();
    assert!((v(expint(1.0, z)) - e1).abs() < 1e-14);
    // 2F1(1/2, 1; 3/2; −z²) = atan(z)/z
    let z: f64 = 0.8;
    assert!((v(hyp2f1(0.5, 1.0, 1.5, -z * z)) - z.atan() / z).abs() < 1e-14);
    assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
}

#[test]
fn out_of_range_arguments_are_errors() {
    assert!(erfi(5.5).is_err());
    assert!(expint(1.0, -1.0).is_err());
    assert!(expint(0.5, 0.0).is_err());
    assert!(hyp2f1(1.0, 1.0, 2.0, 1.0).is_err());
    assert!(hyp2f1(1.0, 1.0, -1.0, 0.5).is_err());
}
