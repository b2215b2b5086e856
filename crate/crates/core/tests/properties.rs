use proptest::prelude::*;
use riccati_core::grid::UniformGrid;
use riccati_core::harness::brute_force_gamma_min;
use riccati_core::par::{map_range, Execution};
use riccati_core::quad::cumulative_simpson;
use riccati_core::riccati::{DiscriminantMode, RiccatiCoefficients};
use riccati_core::Expr;

/// Smooth expressions on [-1, 1] with no domain errors.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-3.0..3.0f64).prop_map(Expr::from), Just(Expr::var())];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (Expr::from(2.0) + b.sin())),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.sin().exp()),
            inner.clone().prop_map(|a| (Expr::from(1.5) + a.cos()).log()),
            inner.clone().prop_map(|a| (Expr::from(1.0) + a.clone() * a).sqrt()),
            (inner, 0..4i32).prop_map(|(a, n)| a.powi(n)),
        ]
    })
}

fn coeffs() -> impl Strategy<Value = [f64; 7]> {
    (
        prop_oneof![0.5..2.0f64, -2.0..-0.5f64],
        -2.0..2.0f64,
        -3.0..3.0f64,
        -3.0..3.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
    )
        .prop_map(|(a, b, c, d, e, s, r)| [a, b, c, d, e, s, r])
}

/// Coefficients with nonzero derivatives: a = a0 + s·t, b = b0 + r·t.
fn varying(k: [f64; 7]) -> RiccatiCoefficients {
    let [a, b, c, d, e, s, r] = k;
    let t = Expr::var();
    RiccatiCoefficients::new(
        Expr::from(a) + Expr::from(0.1 * s) * t.clone(),
        Expr::from(b) + Expr::from(r) * t,
        c.into(),
        d.into(),
        e.into(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derivative_matches_central_difference(e in smooth_expr(), t in -1.0..1.0f64) {
        let d = e.derivative().unwrap();
        let h = 1e-5;
        let fd = (e.eval(t + h).unwrap() - e.eval(t - h).unwrap()) / (2.0 * h);
        let exact = d.eval(t).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{e}: {fd} vs {exact}");
    }

    #[test]
    fn display_parse_is_a_fixpoint(e in smooth_expr()) {
        let s1 = e.to_string();
        let s2 = Expr::parse(&s1).unwrap().to_string();
        prop_assert_eq!(&s1, &s2);
        let s3 = Expr::parse(&s2).unwrap().to_string();
        prop_assert_eq!(s2, s3);
    }

    #[test]
    fn parsed_display_evaluates_the_same(e in smooth_expr(), t in -1.0..1.0f64) {
        let back = Expr::parse(&e.to_string()).unwrap();
        let (x, y) = (e.eval(t).unwrap(), back.eval(t).unwrap());
        prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn nu_is_antisymmetric(k in coeffs(), t in -1.0..1.0f64, u in -5.0..5.0f64, v in -5.0..5.0f64,
                           u1 in -5.0..5.0f64, v1 in -5.0..5.0f64) {
        let cv = varying(k).at(t).unwrap();
        prop_assert!((cv.nu(u, v, u1, v1) + cv.nu(v, u, v1, u1)).abs() < 1e-12);
        prop_assert_eq!(cv.nu(u, u, u1, u1), 0.0);
    }

    #[test]
    fn gamma_min_is_a_lower_bound(k in coeffs(), t in -1.0..1.0f64, u in -20.0..20.0f64, v in -20.0..20.0f64) {
        let cv = varying(k).at(t).unwrap();
        let (u0, m) = cv.gamma_min().unwrap();
        prop_assert!(cv.gamma(u, v) >= m - 1e-9 * (1.0 + m.abs()));
        prop_assert!((cv.gamma(u0, u0) - m).abs() < 1e-9 * (1.0 + m.abs()));
    }

    #[test]
    fn corrected_d_has_the_sign_of_the_minimum(k in coeffs(), t in -1.0..1.0f64) {
        let cv = varying(k).at(t).unwrap();
        let (_, m) = cv.gamma_min().unwrap();
        let d = cv.disc_d(DiscriminantMode::Corrected);
        prop_assert!((d - 12.0 * cv.a * cv.a * m).abs() < 1e-9 * (1.0 + d.abs()));
    }

    #[test]
    fn brute_force_never_undercuts_closed_form(k in coeffs(), t in -1.0..1.0f64) {
        let cv = varying(k).at(t).unwrap();
        let (_, m) = cv.gamma_min().unwrap();
        let b = brute_force_gamma_min(&cv, 20.0, 201, Execution::Sequential);
        prop_assert!(b >= m - 1e-9);
    }

    #[test]
    fn simpson_is_exact_for_polynomials(c in prop::array::uniform4(-2.0..2.0f64), n in 3usize..60) {
        let g = UniformGrid::new(0.0, 1.5, n + 1).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&t| c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t).collect();
        let cum = cumulative_simpson(&f, g.step());
        for (i, t) in g.nodes().into_iter().enumerate() {
            let exact = c[0] * t + c[1] * t * t / 2.0 + c[2] * t.powi(3) / 3.0 + c[3] * t.powi(4) / 4.0;
            // Even nodes use Simpson's rule, exact for cubics; odd nodes add
            // one three-point panel, exact for quadratics.
            let tol = if i % 2 == 0 { 1e-12 } else { 1e-12 + c[3].abs() * g.step().powi(4) };
            prop_assert!((cum[i] - exact).abs() < tol, "n={n} i={i}");
        }
    }

    #[test]
    fn parallel_map_preserves_order(n in 0usize..500) {
        let a = map_range(Execution::Sequential, n, |i| (i as f64).sin());
        let b = map_range(Execution::Parallel, n, |i| (i as f64).sin());
        prop_assert_eq!(a, b);
    }
}
