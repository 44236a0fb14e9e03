use std::sync::Arc;

use proptest::prelude::*;
use riccati_core::calc::{antiderivative, find_poles, integrate};
use riccati_core::expr::parse;
use riccati_core::func::{self, Function};
use riccati_core::{Domain, Expr};

/// Expressions that stay finite and smooth on `(0, 2]`.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![Just(Expr::x()), (0.5f64..2.0).prop_map(Expr::constant)];
    leaf.prop_recursive(3, 24, 2, |inner| {
        let one_plus_sq = |g: Expr| Expr::lit(1.0) + g.clone() * g;
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(move |(a, b)| a / one_plus_sq(b)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.sin().exp()),
            inner.clone().prop_map(move |a| one_plus_sq(a).sqrt()),
            inner.clone().prop_map(move |a| one_plus_sq(a).ln()),
            (inner, 1u8..4).prop_map(|(a, k)| a.powf(k as f64)),
        ]
    })
}

fn central(e: &Expr, x: f64) -> f64 {
    // Fourth-order stencil; h balances truncation against cancellation.
    let h = 1e-3;
    let f = |t: f64| e.eval(t).unwrap();
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_finite_difference(e in smooth_expr(), x in 0.2f64..1.8) {
        let d = e.differentiate().eval(x).unwrap();
        let fd = central(&e, x);
        let scale = 1.0 + d.abs().max(e.eval(x).unwrap().abs());
        prop_assert!((d - fd).abs() <= 1e-6 * scale, "{e}: {d} vs {fd}");
    }

    #[test]
    fn display_round_trips(e in smooth_expr(), x in 0.2f64..1.8) {
        let text = e.to_string();
        let back: Expr = parse(&text).unwrap();
        let (u, v) = (e.eval(x).unwrap(), back.eval(x).unwrap());
        prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{text}: {u} vs {v}");
    }

    #[test]
    fn symbolic_handle_agrees_with_tree(e in smooth_expr(), x in 0.2f64..1.8) {
        let f = func::symbolic(e.clone());
        let (v, d) = f.eval_d(x).unwrap();
        prop_assert_eq!(v, e.eval(x).unwrap());
        prop_assert_eq!(d, e.differentiate().eval(x).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_is_exact_for_polynomials(
        c in prop::collection::vec(-3.0f64..3.0, 1..6),
        a in -2.0f64..0.0,
        b in 0.0f64..2.0,
    ) {
        let p = |x: f64| c.iter().rev().fold(0.0, |s, k| s * x + k);
        let exact = |x: f64| c.iter().enumerate().map(|(k, ck)| ck * x.powi(k as i32 + 1) / (k + 1) as f64).sum::<f64>();
        let (v, err) = integrate(|x| Ok(p(x)), a, b, 1e-12).unwrap();
        prop_assert!((v - (exact(b) - exact(a))).abs() <= 1e-12 * (1.0 + v.abs()));
        prop_assert!(err >= 0.0);
    }

    #[test]
    fn quadrature_is_additive_and_antisymmetric(
        e in smooth_expr(),
        a in 0.1f64..0.6,
        m in 0.6f64..1.2,
        b in 1.2f64..1.9,
    ) {
        let f = |x: f64| e.eval(x);
        let (ab, _) = integrate(f, a, b, 1e-12).unwrap();
        let (am, _) = integrate(f, a, m, 1e-12).unwrap();
        let (mb, _) = integrate(f, m, b, 1e-12).unwrap();
        let (ba, _) = integrate(f, b, a, 1e-12).unwrap();
        prop_assert!((ab - am - mb).abs() <= 1e-10 * (1.0 + ab.abs()));
        prop_assert_eq!(ab, -ba);
    }

    #[test]
    fn antiderivative_inverts_differentiation(e in smooth_expr(), x in 0.1f64..1.9, x0 in 0.1f64..1.9) {
        let dom = Domain::new(0.1, 1.9, x0).unwrap();
        let g = antiderivative(func::symbolic(e.differentiate()), dom, 1e-11);
        let expected = e.eval(x).unwrap() - e.eval(x0).unwrap();
        let (v, dv) = g.eval_d(x).unwrap();
        prop_assert!((v - expected).abs() <= 1e-8 * (1.0 + expected.abs()), "{v} vs {expected}");
        prop_assert!((dv - e.differentiate().eval(x).unwrap()).abs() <= 1e-12 * (1.0 + dv.abs()));
        prop_assert!(g.eval(x0).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn poles_of_a_linear_denominator(r in 0.05f64..0.95, k in 0.5f64..3.0) {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let d: Arc<dyn Function<f64>> = func::symbolic(Expr::constant(k) * (Expr::x() - Expr::constant(r)));
        let poles = find_poles(d.as_ref(), &dom, 257).unwrap();
        prop_assert_eq!(poles.len(), 1);
        prop_assert!((poles.roots()[0] - r).abs() <= 1e-9);
        let segments = poles.segments(&dom, 1e-3, 0.0, 0.0);
        prop_assert!(segments.iter().all(|&(a, b)| b <= r - 1e-3 + 1e-12 || a >= r + 1e-3 - 1e-12));
    }
}

#[test]
fn parse_rejects_garbage() {
    for text in ["", "1+", "x)", "(x", "foo(x)", "2 3", "x^", "1e", "y"] {
        assert!(parse::<f64>(text).is_err(), "{text}");
    }
}

#[test]
fn known_derivatives() {
    let cases = [
        ("x^3", "3*x^2"),
        ("sin(x)*cos(x)", "cos(2*x)"),
        ("exp(-x^2)", "-2*x*exp(-x^2)"),
        ("ln(x)", "1/x"),
        ("sqrt(x)", "1/(2*sqrt(x))"),
        ("x^x", "x^x*(ln(x)+1)"),
        ("abs(x - 1)", "(x - 1)/abs(x - 1)"),
    ];
    for (f, df) in cases {
        let f: Expr = parse(f).unwrap();
        let df: Expr = parse(df).unwrap();
        for x in [0.3, 0.7, 1.4, 2.2] {
            let (u, v) = (f.differentiate().eval(x).unwrap(), df.eval(x).unwrap());
            assert!((u - v).abs() <= 1e-13 * (1.0 + v.abs()), "{f} at {x}: {u} vs {v}");
        }
    }
}

#[test]
fn evaluation_errors_are_reported() {
    for (text, x) in [("ln(x)", -1.0), ("sqrt(x)", -1.0), ("1/x", 0.0)] {
        let e: Expr = parse(text).unwrap();
        assert!(e.eval(x).is_err(), "{text} at {x}");
    }
}
