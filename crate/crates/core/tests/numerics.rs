use casimir_gain::constants::matsubara_frequency;
use casimir_gain::numerics::{integrate_semi_infinite, matsubara_sum, QuadratureSpec};

/// Temperature whose first Matsubara frequency is `xi1`.
fn temperature_for(xi1: f64) -> f64 {
    xi1 / matsubara_frequency(1.0)
}

#[test]
fn matsubara_sum_approaches_integral_quadratically() {
    let x0 = 1e14;
    let cases: [(&str, Box<dyn Fn(f64) -> f64>, f64, f64); 3] = [
        // (name, f, ∫f, f'(0))
        (
            "exp",
            Box::new(move |x: f64| (-x / x0).exp()),
            x0,
            -1.0 / x0,
        ),
        (
            "gaussian",
            Box::new(move |x: f64| (1.0 + x / x0) * (-(x / x0).powi(2)).exp()),
            x0 * 0.5 * (1.0 + std::f64::consts::PI.sqrt()),
            1.0 / x0,
        ),
        (
            "x exp",
            Box::new(move |x: f64| (x / x0) * (-x / x0).exp()),
            x0,
            1.0 / x0,
        ),
    ];
    let spec = QuadratureSpec::with_rel_tol(1e-13);
    for (name, f, exact, slope) in &cases {
        let dev = |h: f64| {
            matsubara_sum(|x| f(x), temperature_for(h), &spec)
                .unwrap()
                .value
                - exact
        };
        let (h1, h2) = (0.2 * x0, 0.1 * x0);
        let (d1, d2) = (dev(h1), dev(h2));
        let ratio = d1 / d2;
        assert!((ratio - 4.0).abs() < 0.2, "{name}: ratio {ratio}");
        // Euler-Maclaurin leading term −h² f'(0)/12.
        let predicted = -h2 * h2 * slope / 12.0;
        assert!(
            (d2 / predicted - 1.0).abs() < 0.05,
            "{name}: {d2} vs {predicted}"
        );
    }
}

#[test]
fn zero_temperature_matsubara_is_the_integral() {
    let f = |x: f64| 1.0 / (1.0 + x * x);
    let spec = QuadratureSpec::default();
    let a = matsubara_sum(f, 0.0, &spec).unwrap().value;
    let b = integrate_semi_infinite(f, &spec).unwrap().value;
    assert_eq!(a, b);
}

#[test]
fn halving_the_tolerance_stays_within_the_error_estimate() {
    let cases: [Box<dyn Fn(f64) -> f64>; 3] = [
        Box::new(|x: f64| x * x * (-2.0 * x).exp()),
        Box::new(|x: f64| 1.0 / (1.0 + x * x)),
        Box::new(|x: f64| (x.sin() / (1.0 + x)).powi(2) * (-0.1 * x).exp()),
    ];
    for f in &cases {
        let mut tol = 1e-4;
        let mut prev =
            integrate_semi_infinite(|x| f(x), &QuadratureSpec::with_rel_tol(tol)).unwrap();
        while tol > 1e-12 {
            tol *= 0.5;
            let next =
                integrate_semi_infinite(|x| f(x), &QuadratureSpec::with_rel_tol(tol)).unwrap();
            assert!(
                (next.value - prev.value).abs() <= prev.err.max(1e-15 * prev.value.abs()),
                "tol {tol}: {} vs {} (err {})",
                next.value,
                prev.value,
                prev.err
            );
            prev = next;
        }
    }
}
