//! Quadrature and summation engines shared by the physics modules.
//!
//! Everything is built on one globally adaptive Gauss-Kronrod (10/21) engine
//! in the style of QUADPACK's QAG: the interval with the largest error
//! estimate is bisected until the summed estimate meets the tolerance.
//! Semi-infinite ranges are mapped onto `[0, 1)` first, and oscillatory
//! integrands can be pre-partitioned at half-period spacing.
//!
//! Integrands may be real, complex, or small fixed-size arrays of either,
//! so a value and its derivative can share one set of nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::matsubara_frequency;

/// Tolerances and budgets for every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of subintervals held by the adaptive engine.
    pub max_subdivisions: usize,
    pub tail_mapping: TailMapping,
    /// Upper bound on the number of Matsubara terms before a sum is
    /// declared divergent.
    pub max_matsubara_terms: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_subdivisions: 2000,
            tail_mapping: TailMapping::Algebraic,
            max_matsubara_terms: 200_000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadratureSpec {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok_tol = (self.rel_tol > 0.0 || self.abs_tol > 0.0)
            && self.rel_tol >= 0.0
            && self.abs_tol >= 0.0
            && self.rel_tol.is_finite()
            && self.abs_tol.is_finite();
        if !ok_tol {
            return Err(crate::Error::InvalidArgument(format!(
                "tolerances need rel_tol > 0 or abs_tol > 0 (got {}, {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions < 2 {
            return Err(crate::Error::InvalidArgument(
                "max_subdivisions must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Spec for an integral nested inside another one. The inner result must
    /// be noticeably more accurate than the outer tolerance or the outer
    /// error estimates see quadrature noise.
    pub fn inner(&self) -> Self {
        QuadratureSpec {
            rel_tol: (self.rel_tol * 1e-2).max(1e-13),
            abs_tol: 0.0,
            ..*self
        }
    }
}

/// How `[0, ∞)` is mapped onto `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMapping {
    /// `x = s·t/(1-t)`; handles algebraic and exponential decay.
    Algebraic,
    /// `x = -s·ln(1-t)`; exact flattening of `e^{-x/s}`.
    Exp,
}

impl TailMapping {
    fn forward(self, t: f64) -> (f64, f64) {
        match self {
            TailMapping::Algebraic => {
                let u = 1.0 - t;
                (t / u, 1.0 / (u * u))
            }
            TailMapping::Exp => {
                let u = 1.0 - t;
                (-(-t).ln_1p(), 1.0 / u)
            }
        }
    }

    fn inverse(self, x: f64) -> f64 {
        match self {
            TailMapping::Algebraic => x / (1.0 + x),
            TailMapping::Exp => -(-x).exp_m1(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult<T> {
    pub value: T,
    /// Heuristic absolute error estimate (not a bound).
    pub err: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Error)]
pub enum QuadratureError<T: fmt::Debug> {
    #[error("subdivision budget exhausted (err estimate {:e})", .best.err)]
    BudgetExceeded { best: IntegralResult<T> },

    #[error("integrand is not finite at x = {x:e}")]
    NonFinite { x: f64 },

    #[error("terms do not decay after {terms} terms")]
    Divergent { partial: T, terms: usize },
}

impl<T: QuadValue> QuadratureError<T> {
    /// Converts into the crate error, keeping the magnitude of the best value.
    pub fn into_error(self, operation: &'static str) -> crate::Error {
        match self {
            QuadratureError::BudgetExceeded { best } => crate::Error::NotConverged {
                operation,
                best: best.value.norm(),
                err: best.err,
                evaluations: best.evaluations,
            },
            QuadratureError::NonFinite { x } => crate::Error::Divergence {
                operation,
                detail: format!("integrand not finite at x = {x:e}"),
            },
            QuadratureError::Divergent { partial, terms } => crate::Error::Divergence {
                operation,
                detail: format!(
                    "terms do not decay after {terms} terms (partial |sum| = {:e})",
                    partial.norm()
                ),
            },
        }
    }
}

pub type QuadResult<T> = std::result::Result<IntegralResult<T>, QuadratureError<T>>;

/// First error raised inside an integrand. Integrands return zero once it
/// is set, so the surrounding quadrature finishes quickly.
pub(crate) struct ErrorSlot(std::cell::RefCell<Option<crate::Error>>);

impl ErrorSlot {
    pub(crate) fn new() -> Self {
        ErrorSlot(std::cell::RefCell::new(None))
    }

    pub(crate) fn record(&self, e: crate::Error) {
        self.0.borrow_mut().get_or_insert(e);
    }

    pub(crate) fn failed(&self) -> bool {
        self.0.borrow().is_some()
    }

    pub(crate) fn take(&self) -> Option<crate::Error> {
        self.0.borrow_mut().take()
    }

    pub(crate) fn check(self) -> crate::Result<()> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Values the engine can integrate: a real vector space with a max-norm.
pub trait QuadValue: Copy + Send + Sync + fmt::Debug {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, k: f64) -> Self;
    /// Largest absolute component.
    fn norm(self) -> f64;
    fn is_finite(self) -> bool;

    fn sub(self, other: Self) -> Self {
        self.add(other.scale(-1.0))
    }
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<T: QuadValue, const N: usize> QuadValue for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn add(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a = a.add(b);
        }
        self
    }
    fn scale(mut self, k: f64) -> Self {
        for a in self.iter_mut() {
            *a = a.scale(k);
        }
        self
    }
    fn norm(self) -> f64 {
        self.iter().fold(0.0, |m, a| m.max(a.norm()))
    }
    fn is_finite(self) -> bool {
        self.iter().all(|a| a.is_finite())
    }
}

// Kronrod 21-point abscissae on [-1, 1] (non-negative half). Odd indices are
// the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
    resabs: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gauss_kronrod_21<T, F>(f: &F, a: f64, b: f64) -> Result<Segment<T>, QuadratureError<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<T, QuadratureError<T>> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };

    let fc = eval(centre)?;
    let mut resg = T::zero();
    let mut resk = fc.scale(WGK[10]);
    let mut resabs = WGK[10] * fc.norm();
    let mut samples = [(T::zero(), T::zero()); 10];
    for (j, sample) in samples.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = eval(centre - dx)?;
        let f2 = eval(centre + dx)?;
        let sum = f1.add(f2);
        resk = resk.add(sum.scale(WGK[j]));
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            resg = resg.add(sum.scale(WG[j / 2]));
        }
        *sample = (f1, f2);
    }

    let mean = resk.scale(0.5);
    let mut resasc = WGK[10] * fc.sub(mean).norm();
    for (j, (f1, f2)) in samples.iter().enumerate() {
        resasc += WGK[j] * (f1.sub(mean).norm() + f2.sub(mean).norm());
    }

    let width = half.abs();
    let value = resk.scale(half);
    let resabs = resabs * width;
    let resasc = resasc * width;
    let mut err = resk.sub(resg).scale(half).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment {
        a,
        b,
        value,
        err,
        resabs,
    })
}

/// Globally adaptive integration over `[points[0], points[last]]`, starting
/// from the partition given by `points` (which must be increasing).
pub fn integrate_partitioned<T, F>(f: F, points: &[f64], spec: &QuadratureSpec) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::with_capacity(points.len().max(spec.max_subdivisions) + 2);
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gauss_kronrod_21(&f, w[0], w[1])?);
            evaluations += 21;
        }
    }
    if heap.is_empty() {
        return Ok(IntegralResult {
            value: T::zero(),
            err: 0.0,
            evaluations: 0,
        });
    }
    let budget = spec.max_subdivisions.max(heap.len() + 1);

    loop {
        let (value, err, resabs) = heap.iter().fold((T::zero(), 0.0, 0.0), |acc, s| {
            (acc.0.add(s.value), acc.1 + s.err, acc.2 + s.resabs)
        });
        let tol = spec
            .abs_tol
            .max(spec.rel_tol * value.norm())
            .max(50.0 * f64::EPSILON * resabs);
        let best = IntegralResult {
            value,
            err,
            evaluations,
        };
        if err <= tol {
            return Ok(best);
        }
        if heap.len() >= budget {
            return Err(QuadratureError::BudgetExceeded { best });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be bisected any further in f64.
            heap.push(worst);
            return Err(QuadratureError::BudgetExceeded { best });
        }
        heap.push(gauss_kronrod_21(&f, worst.a, mid)?);
        heap.push(gauss_kronrod_21(&f, mid, worst.b)?);
        evaluations += 42;
    }
}

/// Integral over a finite window `[lo, hi]`.
pub fn integrate_window<T, F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    assert!(lo <= hi, "window bounds out of order");
    integrate_partitioned(f, &[lo, hi], spec)
}

/// Integral over `[lo, hi]` of an integrand oscillating with the given
/// half-period; the range is cut into half-period segments before adapting.
pub fn integrate_oscillatory<T, F>(
    f: F,
    lo: f64,
    hi: f64,
    half_period: f64,
    spec: &QuadratureSpec,
) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    assert!(lo <= hi, "window bounds out of order");
    let cap = (spec.max_subdivisions / 4).max(1);
    let n = if half_period > 0.0 {
        (((hi - lo) / half_period).ceil() as usize).clamp(1, cap)
    } else {
        1
    };
    let points: Vec<f64> = (0..=n)
        .map(|i| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            }
        })
        .collect();
    integrate_partitioned(f, &points, spec)
}

/// `∫_0^∞ f(x) dx` with unit length scale.
pub fn integrate_semi_infinite<T, F>(f: F, spec: &QuadratureSpec) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_semi_infinite_scaled(f, 0.0, 1.0, &[], spec)
}

/// `∫_lower^∞ f(x) dx`. `scale` is the length over which `f` decays (or
/// varies); `breakpoints` (absolute positions) seed the initial partition.
pub fn integrate_semi_infinite_scaled<T, F>(
    f: F,
    lower: f64,
    scale: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    assert!(scale > 0.0 && scale.is_finite(), "scale must be positive");
    let mapping = spec.tail_mapping;
    let mut points = vec![0.0];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .filter(|&&x| x > lower && x.is_finite())
        .map(|&x| mapping.inverse((x - lower) / scale))
        .filter(|&t| t > 0.0 && t < 1.0)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(1.0);
    let g = |t: f64| {
        let (u, jac) = mapping.forward(t);
        let v = f(lower + scale * u);
        if jac == 0.0 {
            T::zero()
        } else {
            v.scale(scale * jac)
        }
    };
    integrate_partitioned(g, &points, spec)
}

/// Matsubara sum `(2π k_B T/ħ) [f(0)/2 + Σ_{m≥1} f(ξ_m)]`, `ξ_m = 2πm k_B T/ħ`.
///
/// At `T = 0` this is the integral `∫_0^∞ f(ξ) dξ`, evaluated with frequency
/// scale `scale`. `evaluations` of the returned result counts terms.
pub fn matsubara_sum_scaled<T, F>(
    f: F,
    temperature: f64,
    scale: f64,
    spec: &QuadratureSpec,
) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    assert!(temperature >= 0.0, "temperature must be non-negative");
    if temperature == 0.0 {
        return integrate_semi_infinite_scaled(f, 0.0, scale, &[], spec);
    }
    let step = matsubara_frequency(temperature);
    let first = f(0.0);
    if !first.is_finite() {
        return Err(QuadratureError::NonFinite { x: 0.0 });
    }
    let mut sum = first.scale(0.5);
    let mut previous = first.norm();
    let mut settled = 0;
    for m in 1..spec.max_matsubara_terms {
        let xi = step * m as f64;
        let term = f(xi);
        if !term.is_finite() {
            return Err(QuadratureError::NonFinite { x: xi });
        }
        sum = sum.add(term);
        let size = term.norm();
        let tail = if size == 0.0 {
            0.0
        } else if size < previous {
            let ratio = size / previous;
            size * ratio / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        previous = size;
        let tol = (spec.abs_tol / step).max(spec.rel_tol * sum.norm());
        if tail <= tol && size <= tol.max(f64::MIN_POSITIVE) {
            settled += 1;
            if settled >= 3 {
                return Ok(IntegralResult {
                    value: sum.scale(step),
                    err: step * (tail + f64::EPSILON * sum.norm() * m as f64),
                    evaluations: m + 1,
                });
            }
        } else {
            settled = 0;
        }
    }
    Err(QuadratureError::Divergent {
        partial: sum.scale(step),
        terms: spec.max_matsubara_terms,
    })
}

/// [`matsubara_sum_scaled`] with unit frequency scale for the `T = 0` limit.
pub fn matsubara_sum<T, F>(f: F, temperature: f64, spec: &QuadratureSpec) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    matsubara_sum_scaled(f, temperature, 1.0, spec)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(rel: f64) -> QuadratureSpec {
        QuadratureSpec::with_rel_tol(rel)
    }

    #[test]
    fn kronrod_table_integrates_polynomials_exactly() {
        // Kronrod weights integrate degree <= 31 and Gauss weights degree <= 19.
        for deg in 0..=30usize {
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let mut k = WGK[10] * if deg == 0 { 1.0 } else { 0.0 };
            let mut g = 0.0;
            for j in 0..10 {
                let s = XGK[j].powi(deg as i32) + (-XGK[j]).powi(deg as i32);
                k += WGK[j] * s;
                if j % 2 == 1 {
                    g += WG[j / 2] * s;
                }
            }
            assert!((k - exact).abs() < 1e-14, "kronrod degree {deg}");
            if deg <= 19 {
                assert!((g - exact).abs() < 1e-14, "gauss degree {deg}");
            }
        }
    }

    #[test]
    fn semi_infinite_examples() {
        let r = integrate_semi_infinite(|x: f64| (-x).exp(), &spec(1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let r = integrate_semi_infinite(|x: f64| x * x * (-2.0 * x).exp(), &spec(1e-12)).unwrap();
        // Γ(3)/2³
        assert!((r.value - 0.25).abs() < 1e-12);
        let r = integrate_semi_infinite(|x: f64| 1.0 / (1.0 + x * x), &spec(1e-12)).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn exp_tail_mapping_handles_exponential_decay() {
        let s = QuadratureSpec {
            tail_mapping: TailMapping::Exp,
            ..spec(1e-12)
        };
        let r = integrate_semi_infinite(|x: f64| (-x).exp(), &s).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.evaluations <= 42);
    }

    #[test]
    fn window_examples() {
        let r = integrate_window(|_x: f64| 1.0, 0.0, 1.0, &spec(1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);

        let s = QuadratureSpec {
            abs_tol: 1e-10,
            ..spec(1e-10)
        };
        let r = integrate_window(|x: f64| (100.0 * x).sin(), 0.0, 2.0 * PI, &s).unwrap();
        assert!(r.value.abs() < 1e-10, "{}", r.value);

        let (x0, g) = (3.0, 1e-3);
        let lorentz = |x: f64| g / PI / ((x - x0).powi(2) + g * g);
        let r = integrate_partitioned(lorentz, &[x0 - 50.0 * g, x0, x0 + 50.0 * g], &spec(1e-12))
            .unwrap();
        let exact = 2.0 / PI * 50f64.atan();
        assert!((r.value - exact).abs() < 1e-12);
        assert!((r.value - 0.987_269).abs() < 1e-6);
    }

    #[test]
    fn oscillatory_partition_matches_closed_form() {
        let z = 40.0;
        let r: IntegralResult<Complex64> = integrate_oscillatory(
            |q: f64| Complex64::new(0.0, 2.0 * q * z).exp(),
            0.0,
            10.0,
            PI / (2.0 * z),
            &spec(1e-12),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 20.0 * z).exp() - 1.0) / Complex64::new(0.0, 2.0 * z);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn array_integrands_share_nodes() {
        let r =
            integrate_semi_infinite(|x: f64| [(-x).exp(), x * (-x).exp()], &spec(1e-12)).unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-12);
        assert!((r.value[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_best_value() {
        let s = QuadratureSpec {
            max_subdivisions: 4,
            ..spec(1e-14)
        };
        match integrate_window(|x: f64| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &s) {
            Err(QuadratureError::BudgetExceeded { best }) => {
                assert!(best.err > 0.0);
                assert!(best.value.is_finite());
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = integrate_window(|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, &spec(1e-8));
        assert!(
            r.is_ok()
                || matches!(
                    r,
                    Err(QuadratureError::NonFinite { .. })
                        | Err(QuadratureError::BudgetExceeded { .. })
                )
        );
        let r = integrate_window(|_x: f64| f64::NAN, 0.0, 1.0, &spec(1e-8));
        assert!(matches!(r, Err(QuadratureError::NonFinite { .. })));
    }

    #[test]
    fn matsubara_zero_temperature_is_the_integral() {
        let xi0 = 3.0e15;
        let r = matsubara_sum_scaled(|x: f64| (-x / xi0).exp(), 0.0, xi0, &spec(1e-12)).unwrap();
        assert!((r.value / xi0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn matsubara_riemann_limit() {
        // Σ' h e^{-mh/ξ0} = ξ0 (h/2ξ0) coth(h/2ξ0).
        let xi0 = 1e14;
        let t = 1.0;
        let h = matsubara_frequency(t);
        let r = matsubara_sum(|x: f64| (-x / xi0).exp(), t, &spec(1e-12)).unwrap();
        let a = h / (2.0 * xi0);
        let exact = xi0 * a / a.tanh();
        assert!(
            (r.value / exact - 1.0).abs() < 1e-9,
            "{} vs {}",
            r.value,
            exact
        );
    }

    #[test]
    fn matsubara_first_frequency_at_room_temperature() {
        let xi1 = matsubara_frequency(300.0);
        assert!((xi1 / 2.4675e14 - 1.0).abs() < 2e-4, "{xi1:e}");
    }

    #[test]
    fn matsubara_constant_terms_diverge() {
        let s = QuadratureSpec {
            max_matsubara_terms: 1000,
            ..spec(1e-8)
        };
        match matsubara_sum(|_x: f64| 2.5, 300.0, &s) {
            Err(QuadratureError::Divergent { partial, terms }) => {
                let step = matsubara_frequency(300.0);
                // Partial sum grows linearly with the number of terms.
                assert!(
                    (partial / step - 2.5 * (terms as f64 - 0.5)).abs() < 1e-6 * partial / step
                );
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn gauss_legendre_weights() {
        for n in [1, 2, 5, 16] {
            let nodes = gauss_legendre(n);
            let total: f64 = nodes.iter().map(|(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-13);
            let x4: f64 = nodes.iter().map(|(x, w)| w * x.powi(4)).sum();
            if n >= 3 {
                assert!((x4 - 0.4).abs() < 1e-13);
            }
        }
    }
}
