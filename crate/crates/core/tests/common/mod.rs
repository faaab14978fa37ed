#![allow(dead_code)]

use std::f64::consts::PI;

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Least-squares slope of `ln|y|` against `ln x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `Li₄(x)` for `0 ≤ x ≤ 1` by direct summation.
pub fn polylog4(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for k in 1..200_000u32 {
        power *= x;
        let term = power / (k as f64).powi(4);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Exact zero-temperature pressure between two dispersionless dielectric
/// half-spaces, divided by the ideal Casimir pressure:
/// `(45/π⁴) ∫_0^1 dp [Li₄(r_s²) + Li₄(r_p²)]`, `p = ξ/(cκ)`.
pub fn dielectric_ideal_ratio(eps: f64) -> f64 {
    let f = |p: f64| {
        let k1 = (1.0 + (eps - 1.0) * p * p).sqrt();
        let rs = (1.0 - k1) / (1.0 + k1);
        let rp = (eps - k1) / (eps + k1);
        polylog4(rs * rs) + polylog4(rp * rp)
    };
    // Simpson in ln p over [1e-14, 1].
    let (a, b, n) = ((1e-14f64).ln(), 0.0, 4000);
    let h = (b - a) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let s = a + h * i as f64;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * f(s.exp()) * s.exp();
    }
    45.0 / PI.powi(4) * sum * h / 3.0
}
