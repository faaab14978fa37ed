//! Scattering Green tensor of a planar multilayer, in the coincidence limit.
//!
//! The probe point sits in the vacuum half-space above the stack at height
//! `z` over the top interface. Only the scattering part `G⁽¹⁾` is computed;
//! its trace is
//!
//! ```text
//! Tr G⁽¹⁾(z, ω) = (i/4π) ∫_0^∞ dk k/k_z e^{2ik_z z} [r_s + r_p (2k²/k0² − 1)]
//! ```
//!
//! with `k0 = ω/c`, `k_z = √(k0² − k²)` and `Im k_z ≥ 0` in every medium.
//! On the real axis the integral is split at `k = k0`: the propagating part
//! is integrated over `k_z ∈ [0, k0]` and the evanescent part over
//! `κ = −i k_z ∈ [0, ∞)`, which removes the branch-point singularity. On the
//! imaginary axis `ω = iξ` the integrand is real and is integrated over
//! `κ ∈ [ξ/c, ∞)`.
//!
//! Reflection coefficients use the convention in which a perfect conductor
//! has `r_s = −1`, `r_p = +1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::C;
use crate::materials::PermittivityModel;
use crate::numerics::{
    integrate_oscillatory, integrate_semi_infinite_scaled, QuadValue, QuadratureError,
    QuadratureSpec,
};
use crate::{Error, Result};

/// Material filling one region of a stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Medium {
    Dielectric(PermittivityModel),
    /// `ε → ∞`: `r_s = −1`, `r_p = +1` at every frequency and wavevector.
    PerfectConductor,
}

impl Medium {
    pub fn vacuum() -> Self {
        Medium::Dielectric(PermittivityModel::vacuum())
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, Medium::Dielectric(m) if m.is_vacuum())
    }

    fn permittivity(&self, omega: Complex64) -> Option<Complex64> {
        match self {
            Medium::Dielectric(m) => Some(m.eval(omega)),
            Medium::PerfectConductor => None,
        }
    }

    fn permittivity_imag_axis(&self, xi: f64) -> Option<Complex64> {
        match self {
            Medium::Dielectric(m) => Some(Complex64::new(m.eval_imag_axis(xi), 0.0)),
            Medium::PerfectConductor => None,
        }
    }
}

impl From<PermittivityModel> for Medium {
    fn from(m: PermittivityModel) -> Self {
        Medium::Dielectric(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub medium: Medium,
    /// m
    pub thickness: f64,
}

/// Planar geometry: `below` (semi-infinite), `layers` ordered from the
/// bottom upwards, then the semi-infinite probe region `above`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    below: Medium,
    layers: Vec<Layer>,
    above: Medium,
    allow_gain: bool,
}

impl LayerStack {
    pub fn new(below: Medium, layers: Vec<Layer>, above: Medium) -> Result<Self> {
        for (i, l) in layers.iter().enumerate() {
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "layer {i} needs a positive finite thickness (got {})",
                    l.thickness
                )));
            }
        }
        if matches!(above, Medium::PerfectConductor) {
            return Err(Error::InvalidModel(
                "the probe region cannot be a perfect conductor".into(),
            ));
        }
        Ok(LayerStack {
            below,
            layers,
            above,
            allow_gain: false,
        })
    }

    /// Semi-infinite `medium` below vacuum.
    pub fn half_space(medium: impl Into<Medium>) -> Self {
        LayerStack {
            below: medium.into(),
            layers: Vec::new(),
            above: Medium::vacuum(),
            allow_gain: false,
        }
    }

    pub fn perfect_mirror() -> Self {
        Self::half_space(Medium::PerfectConductor)
    }

    pub fn vacuum() -> Self {
        Self::half_space(Medium::vacuum())
    }

    /// Free-standing film of `medium` and thickness `thickness` in vacuum.
    pub fn film(medium: impl Into<Medium>, thickness: f64) -> Result<Self> {
        Self::new(
            Medium::vacuum(),
            vec![Layer {
                medium: medium.into(),
                thickness,
            }],
            Medium::vacuum(),
        )
    }

    /// Permit amplifying media inside the stack at real frequencies. The
    /// Green tensor may then fail to exist; evaluation reports divergence
    /// instead of a value when that happens.
    pub fn allow_gain(mut self, allow: bool) -> Self {
        self.allow_gain = allow;
        self
    }

    pub fn gain_allowed(&self) -> bool {
        self.allow_gain
    }

    pub fn below(&self) -> &Medium {
        &self.below
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn above(&self) -> &Medium {
        &self.above
    }

    /// Oscillator resonance frequencies of every dielectric region, rad/s.
    pub fn resonances(&self) -> Vec<f64> {
        self.regions()
            .filter_map(|(m, _)| match m {
                Medium::Dielectric(model) => Some(model.oscillators().iter().map(|o| o.omega0)),
                Medium::PerfectConductor => None,
            })
            .flatten()
            .collect()
    }

    fn regions(&self) -> impl Iterator<Item = (&Medium, f64)> {
        std::iter::once((&self.below, 0.0))
            .chain(self.layers.iter().map(|l| (&l.medium, l.thickness)))
            .chain(std::iter::once((&self.above, 0.0)))
    }

    fn is_trivial(&self) -> bool {
        self.regions().all(|(m, _)| m.is_vacuum())
    }

    /// True if some region below the probe has `Im ε(ω) < 0` at real `omega`.
    pub fn amplifies_at(&self, omega: f64) -> bool {
        let w = Complex64::new(omega.abs(), 0.0);
        self.regions()
            .take(self.layers.len() + 1)
            .any(|(m, _)| m.permittivity(w).is_some_and(|e| e.im < 0.0))
    }

    fn probe_check(&self) -> Result<()> {
        if self.above.is_vacuum() {
            Ok(())
        } else {
            Err(Error::ProbeNotVacuum)
        }
    }

    fn at(&self, omega: Complex64) -> StackAt {
        StackAt::new(self, |m| m.permittivity(omega))
    }

    fn at_imag_axis(&self, xi: f64) -> StackAt {
        StackAt::new(self, |m| m.permittivity_imag_axis(xi))
    }

    /// Wavevector scales at which the reflection coefficients vary, in units
    /// of `|k0|`, plus inverse layer thicknesses (absolute).
    fn feature_scales(&self, omega_abs: f64) -> (Vec<f64>, Vec<f64>) {
        let mut rel = vec![1.0];
        let w = Complex64::new(omega_abs, 0.0);
        for (m, _) in self.regions() {
            if let Some(e) = m.permittivity(w) {
                let s = (e - 1.0).norm().sqrt();
                if s > 1e-3 && s < 1e3 {
                    rel.push(s);
                }
            }
        }
        let abs = self.layers.iter().map(|l| 1.0 / l.thickness).collect();
        (rel, abs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    S,
    P,
}

/// Generalized reflection coefficient seen from the probe region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub value: Complex64,
    /// `|r| > 1`, possible only with amplifying media.
    pub exceeds_unity: bool,
}

/// Region data at one frequency. `None` marks a perfect conductor.
struct StackAt {
    regions: Vec<(Option<Complex64>, f64)>,
}

impl StackAt {
    fn new(stack: &LayerStack, eps: impl Fn(&Medium) -> Option<Complex64>) -> Self {
        StackAt {
            regions: stack.regions().map(|(m, d)| (eps(m), d)).collect(),
        }
    }

    /// `(r_s, r_p)` for transverse wavevector² `kpar2`. `kz_probe` is the
    /// normal wavevector in the (vacuum) probe region; `sign` selects the
    /// real branch for lossless media at negative real frequency.
    fn reflect(
        &self,
        k0sq: Complex64,
        kpar2: Complex64,
        kz_probe: Complex64,
        sign: f64,
    ) -> [Complex64; 2] {
        let kz_of = |eps: Complex64| {
            if eps == Complex64::new(1.0, 0.0) {
                kz_probe
            } else {
                branch((eps * k0sq - kpar2).sqrt(), sign)
            }
        };
        let n = self.regions.len();
        // (eps, kz, thickness, reflection at its lower interface) of the
        // region below the current interface; None = conductor.
        let mut lower: Option<(Complex64, Complex64, f64, Option<[Complex64; 2]>)> =
            self.regions[0].0.map(|e| (e, kz_of(e), 0.0, None));
        let mut refl = [Complex64::new(0.0, 0.0); 2];
        for (j, &(eps, thickness)) in self.regions.iter().enumerate().skip(1) {
            refl = match lower {
                None => [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
                Some((eps_l, kz_l, d_l, r_l)) => {
                    let (eps_u, kz_u) = if j == n - 1 {
                        (Complex64::new(1.0, 0.0), kz_probe)
                    } else {
                        match eps {
                            Some(e) => (e, kz_of(e)),
                            None => {
                                lower = None;
                                continue;
                            }
                        }
                    };
                    // Numerators rewritten via kz² = ε k0² − k∥² so that nearly
                    // equal media do not cancel.
                    let sum = kz_u + kz_l;
                    let fs = (eps_u - eps_l) * k0sq / (sum * sum);
                    let fp = (eps_l - eps_u) * (kz_u * kz_l - kpar2)
                        / (sum * (eps_l * kz_u + eps_u * kz_l));
                    match r_l {
                        Some([rs, rp]) if d_l > 0.0 => {
                            let phase = (Complex64::i() * 2.0 * kz_l * d_l).exp();
                            [
                                (fs + rs * phase) / (1.0 + fs * rs * phase),
                                (fp + rp * phase) / (1.0 + fp * rp * phase),
                            ]
                        }
                        _ => [fs, fp],
                    }
                }
            };
            if j < n - 1 {
                lower = eps.map(|e| (e, kz_of(e), thickness, Some(refl)));
            }
        }
        refl
    }
}

/// Square-root branch with `Im ≥ 0`; on the real axis the sign follows `sign`.
fn branch(k: Complex64, sign: f64) -> Complex64 {
    let k = if k.im < 0.0 { -k } else { k };
    if k.im == 0.0 && k.re * sign < 0.0 {
        -k
    } else {
        k
    }
}

/// Multilayer reflection coefficient at transverse wavevector `kpar` (1/m).
pub fn fresnel_reflection(
    stack: &LayerStack,
    polarization: Polarization,
    omega: Complex64,
    kpar: f64,
) -> Result<Reflection> {
    stack.probe_check()?;
    let k0sq = omega * omega / (C * C);
    let kpar2 = Complex64::new(kpar * kpar, 0.0);
    let sign = if omega.re < 0.0 { -1.0 } else { 1.0 };
    let kz = branch((k0sq - kpar2).sqrt(), sign);
    let at = if omega.re == 0.0 && omega.im > 0.0 {
        stack.at_imag_axis(omega.im)
    } else {
        stack.at(omega)
    };
    let [rs, rp] = at.reflect(k0sq, kpar2, kz, sign);
    let value = match polarization {
        Polarization::S => rs,
        Polarization::P => rp,
    };
    Ok(Reflection {
        value,
        exceeds_unity: value.norm() > 1.0,
    })
}

/// Reflection coefficients of a stack at fixed imaginary frequency `iξ`,
/// for repeated evaluation over the transverse wavevector.
pub struct ImagAxisReflector {
    at: StackAt,
    k_xi: f64,
}

impl ImagAxisReflector {
    pub fn new(stack: &LayerStack, xi: f64) -> Result<Self> {
        stack.probe_check()?;
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "xi must be >= 0 (got {xi})"
            )));
        }
        Ok(ImagAxisReflector {
            at: stack.at_imag_axis(xi),
            k_xi: xi / C,
        })
    }

    /// `[r_s, r_p]` at vacuum decay constant `κ = ξ/c + t`, `t ≥ 0`.
    pub fn at_excess(&self, t: f64) -> [Complex64; 2] {
        let kappa = self.k_xi + t;
        let kpar2 = Complex64::new(t * (2.0 * self.k_xi + t), 0.0);
        let k0sq = Complex64::new(-self.k_xi * self.k_xi, 0.0);
        self.at
            .reflect(k0sq, kpar2, Complex64::new(0.0, kappa), 1.0)
    }
}

/// `Tr G⁽¹⁾(r, r, ω)` and its derivative with respect to the height `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenTrace {
    /// 1/m
    pub value: Complex64,
    /// 1/m²
    pub dvalue_dz: Complex64,
    /// Error estimate of `value`, also bounding `z·dvalue_dz`; 1/m.
    pub err: f64,
    pub omega: Complex64,
}

/// `ξ² Tr G⁽¹⁾(z, iξ)` and its z-derivative; finite at `ξ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedTrace {
    /// 1/(m s²)
    pub value: f64,
    /// 1/(m² s²)
    pub dvalue_dz: f64,
    /// Error estimate of `value`, also bounding `z·dvalue_dz`.
    pub err: f64,
}

/// Restrictions on the trace integral, used to check path independence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceOptions {
    /// Drop the s-polarised contribution.
    pub skip_s: bool,
    /// Drop the p-polarised contribution.
    pub skip_p: bool,
    /// Additional split points of the wavevector integral, in units of the
    /// natural integration variable (k_z, κ or k, 1/m).
    pub extra_breakpoints: Vec<f64>,
}

impl TraceOptions {
    fn weights(&self) -> (f64, f64) {
        (
            if self.skip_s { 0.0 } else { 1.0 },
            if self.skip_p { 0.0 } else { 1.0 },
        )
    }
}

fn check_height(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "height z must be > 0 (got {z})"
        )))
    }
}

fn quad_failure<T: QuadValue>(
    e: QuadratureError<T>,
    operation: &'static str,
    gain: bool,
    omega: Complex64,
    z: f64,
) -> Error {
    match e.into_error(operation) {
        Error::NotConverged { best, err, .. } if gain => Error::Divergence {
            operation,
            detail: format!(
                "wavevector integral failed with amplifying stack at omega = {omega}, z = {z:e} \
                 (partial |value| = {best:e}, err = {err:e}); the Green tensor may not exist"
            ),
        },
        other => other,
    }
}

/// Scattering Green tensor trace at complex frequency `omega` (`Im ω ≥ 0`).
pub fn green_trace(
    stack: &LayerStack,
    z: f64,
    omega: Complex64,
    quad: &QuadratureSpec,
) -> Result<GreenTrace> {
    green_trace_with(stack, z, omega, quad, &TraceOptions::default())
}

pub fn green_trace_with(
    stack: &LayerStack,
    z: f64,
    omega: Complex64,
    quad: &QuadratureSpec,
    opts: &TraceOptions,
) -> Result<GreenTrace> {
    check_height(z)?;
    stack.probe_check()?;
    if omega.im < 0.0 || !(omega.re.is_finite() && omega.im.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "frequency must lie in the closed upper half plane (got {omega})"
        )));
    }
    if omega.re == 0.0 && omega.im == 0.0 {
        return Err(Error::InvalidArgument(
            "the trace diverges at zero frequency".into(),
        ));
    }
    if stack.is_trivial() {
        return Ok(GreenTrace {
            value: Complex64::new(0.0, 0.0),
            dvalue_dz: Complex64::new(0.0, 0.0),
            err: 0.0,
            omega,
        });
    }
    if omega.re == 0.0 {
        let w = weighted_imag_axis(stack, z, omega.im, quad, opts)?;
        let xi2 = omega.im * omega.im;
        return Ok(GreenTrace {
            value: Complex64::new(w.value / xi2, 0.0),
            dvalue_dz: Complex64::new(w.dvalue_dz / xi2, 0.0),
            err: w.err / xi2,
            omega,
        });
    }
    if omega.im == 0.0 {
        let t = real_axis(stack, z, omega.re.abs(), quad, opts)?;
        return Ok(if omega.re < 0.0 {
            GreenTrace {
                value: t.value.conj(),
                dvalue_dz: t.dvalue_dz.conj(),
                omega,
                ..t
            }
        } else {
            t
        });
    }
    complex_frequency(stack, z, omega, quad, opts)
}

/// `Tr G⁽¹⁾(z, iξ)`, real, for `ξ > 0`.
pub fn green_trace_imag_axis(
    stack: &LayerStack,
    z: f64,
    xi: f64,
    quad: &QuadratureSpec,
) -> Result<GreenTrace> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidArgument(format!("xi must be > 0 (got {xi})")));
    }
    green_trace(stack, z, Complex64::new(0.0, xi), quad)
}

/// `ξ² Tr G⁽¹⁾(z, iξ)`, the combination entering Casimir-Polder integrals.
pub fn weighted_trace_imag_axis(
    stack: &LayerStack,
    z: f64,
    xi: f64,
    quad: &QuadratureSpec,
) -> Result<WeightedTrace> {
    check_height(z)?;
    stack.probe_check()?;
    if !(xi >= 0.0 && xi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "xi must be >= 0 (got {xi})"
        )));
    }
    if stack.is_trivial() {
        return Ok(WeightedTrace {
            value: 0.0,
            dvalue_dz: 0.0,
            err: 0.0,
        });
    }
    weighted_imag_axis(stack, z, xi, quad, &TraceOptions::default())
}

fn weighted_imag_axis(
    stack: &LayerStack,
    z: f64,
    xi: f64,
    quad: &QuadratureSpec,
    opts: &TraceOptions,
) -> Result<WeightedTrace> {
    let k_xi = xi / C;
    let pref = (-2.0 * k_xi * z).exp() / (4.0 * PI);
    if pref < f64::MIN_POSITIVE {
        return Ok(WeightedTrace {
            value: 0.0,
            dvalue_dz: 0.0,
            err: 0.0,
        });
    }
    let at = stack.at_imag_axis(xi);
    let (ws, wp) = opts.weights();
    let k0sq = Complex64::new(-k_xi * k_xi, 0.0);
    let c2 = C * C;
    let xi2 = xi * xi;

    // Integration variable t = κ − ξ/c ≥ 0; the common factor e^{−2ξz/c}
    // is applied afterwards.
    let integrand = |t: f64| -> [Complex64; 2] {
        let kappa = k_xi + t;
        let kpar2 = Complex64::new(t * (2.0 * k_xi + t), 0.0);
        let [rs, rp] = at.reflect(k0sq, kpar2, Complex64::new(0.0, kappa), 1.0);
        let f = ws * xi2 * rs - wp * rp * (2.0 * kappa * kappa * c2 - xi2);
        let v = f * (-2.0 * t * z).exp();
        [v, v * (-2.0 * kappa * z)]
    };

    let mut breaks: Vec<f64> = opts.extra_breakpoints.clone();
    for (m, d) in stack.regions() {
        if let Some(e) = m.permittivity_imag_axis(xi) {
            let s = (e.re - 1.0).abs().sqrt() * k_xi;
            if s > 0.0 {
                breaks.push(s);
            }
        }
        if d > 0.0 {
            breaks.push(1.0 / d);
        }
    }
    let r = integrate_semi_infinite_scaled(integrand, 0.0, 1.0 / (2.0 * z), &breaks, quad)
        .map_err(|e| {
            quad_failure(
                e,
                "green_trace_imag_axis",
                false,
                Complex64::new(0.0, xi),
                z,
            )
        })?;

    let [v, dv] = r.value;
    let scale = v.re.abs().max(dv.re.abs()).max(f64::MIN_POSITIVE);
    if v.im.abs().max(dv.im.abs()) > 1e-9 * scale {
        return Err(Error::Divergence {
            operation: "green_trace_imag_axis",
            detail: format!(
                "trace is not real at xi = {xi:e}: the amplifying medium is beyond its stability threshold"
            ),
        });
    }
    Ok(WeightedTrace {
        value: pref * v.re,
        dvalue_dz: pref * dv.re / z,
        err: pref * r.err,
    })
}

fn real_axis(
    stack: &LayerStack,
    z: f64,
    omega: f64,
    quad: &QuadratureSpec,
    opts: &TraceOptions,
) -> Result<GreenTrace> {
    let gain = stack.amplifies_at(omega);
    if gain && !stack.allow_gain {
        return Err(Error::GainInStack { omega });
    }
    let w = Complex64::new(omega, 0.0);
    let at = stack.at(w);
    let (ws, wp) = opts.weights();
    let k0 = omega / C;
    let k0sq = Complex64::new(k0 * k0, 0.0);
    let fail = |e| quad_failure(e, "green_trace", gain, w, z);

    // Propagating waves, integrated over the normal wavevector q ∈ [0, k0].
    let propagating = |q: f64| -> [Complex64; 2] {
        let kpar2 = Complex64::new((k0 - q) * (k0 + q), 0.0);
        let [rs, rp] = at.reflect(k0sq, kpar2, Complex64::new(q, 0.0), 1.0);
        let f = ws * rs + wp * rp * (1.0 - 2.0 * (q / k0) * (q / k0));
        let v = f * Complex64::new(0.0, 2.0 * q * z).exp();
        [v, v * Complex64::new(0.0, 2.0 * q * z)]
    };
    let mut breaks_q: Vec<f64> = opts
        .extra_breakpoints
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < k0)
        .collect();
    let prop = if breaks_q.is_empty() {
        integrate_oscillatory(propagating, 0.0, k0, PI / (2.0 * z), quad).map_err(fail)?
    } else {
        breaks_q.push(0.0);
        breaks_q.push(k0);
        breaks_q.sort_by(f64::total_cmp);
        crate::numerics::integrate_partitioned(propagating, &breaks_q, quad).map_err(fail)?
    };

    // Evanescent waves, integrated over κ = √(k² − k0²) ∈ [0, ∞).
    let evanescent = |kappa: f64| -> [Complex64; 2] {
        let kpar2 = Complex64::new(k0 * k0 + kappa * kappa, 0.0);
        let [rs, rp] = at.reflect(k0sq, kpar2, Complex64::new(0.0, kappa), 1.0);
        let f = ws * rs + wp * rp * (1.0 + 2.0 * (kappa / k0) * (kappa / k0));
        let v = f * (-2.0 * kappa * z).exp();
        [v, v * (-2.0 * kappa * z)]
    };
    let (rel, abs) = stack.feature_scales(omega);
    let mut breaks: Vec<f64> = rel.iter().map(|s| s * k0).chain(abs).collect();
    breaks.extend(opts.extra_breakpoints.iter().copied());
    let evan = integrate_semi_infinite_scaled(evanescent, 0.0, 1.0 / (2.0 * z), &breaks, quad)
        .map_err(fail)?;

    let i = Complex64::i();
    let value = (i * prop.value[0] + evan.value[0]) / (4.0 * PI);
    let dvalue = (i * prop.value[1] + evan.value[1]) / (4.0 * PI * z);
    Ok(GreenTrace {
        value,
        dvalue_dz: dvalue,
        err: (prop.err + evan.err) / (4.0 * PI),
        omega: w,
    })
}

/// General complex frequency off both axes: direct integral over `k`.
fn complex_frequency(
    stack: &LayerStack,
    z: f64,
    omega: Complex64,
    quad: &QuadratureSpec,
    opts: &TraceOptions,
) -> Result<GreenTrace> {
    let at = stack.at(omega);
    let (ws, wp) = opts.weights();
    let k0sq = omega * omega / (C * C);
    let k0 = k0sq.sqrt().norm();
    let sign = if omega.re < 0.0 { -1.0 } else { 1.0 };
    let integrand = |k: f64| -> [Complex64; 2] {
        let kpar2 = Complex64::new(k * k, 0.0);
        let kz = branch((k0sq - kpar2).sqrt(), sign);
        let [rs, rp] = at.reflect(k0sq, kpar2, kz, sign);
        let f = ws * rs + wp * rp * (2.0 * kpar2 / k0sq - 1.0);
        let i2kz = Complex64::i() * 2.0 * kz * z;
        let v = f * (k / kz) * i2kz.exp();
        [v, v * i2kz]
    };
    let n = ((k0 * 2.0 * z / PI).ceil() as usize).clamp(1, 200);
    let mut breaks: Vec<f64> = (1..=n).map(|j| k0 * j as f64 / n as f64).collect();
    breaks.push(2.0 * k0);
    breaks.extend(opts.extra_breakpoints.iter().copied());
    let r = integrate_semi_infinite_scaled(integrand, 0.0, k0.max(1.0 / (2.0 * z)), &breaks, quad)
        .map_err(|e| quad_failure(e, "green_trace", stack.allow_gain, omega, z))?;
    let i = Complex64::i();
    Ok(GreenTrace {
        value: i * r.value[0] / (4.0 * PI),
        dvalue_dz: i * r.value[1] / (4.0 * PI * z),
        err: r.err / (4.0 * PI),
        omega,
    })
}
