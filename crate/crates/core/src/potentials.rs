//! Casimir-Polder potentials of a (possibly excited) atom above a stack.
//!
//! The potential splits into a nonresonant part
//!
//! ```text
//! U_nr(z) = (ħμ0/2π) ∫_0^∞ dξ ξ² α(iξ) Tr G⁽¹⁾(z, iξ)
//! ```
//!
//! and a resonant part carried by the emission lines of the atom,
//!
//! ```text
//! U_r(z) = −(μ0/3) Σ_k Θ(ω_nk) ω_nk² |d_nk|² Re Tr G⁽¹⁾(z, ω_nk).
//! ```
//!
//! Forces use the analytic z-derivative of the Green trace under the
//! integral and the sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C, HBAR, MU_0};
use crate::greens::{green_trace, weighted_trace_imag_axis, LayerStack};
use crate::materials::{sharp_line_spectrum, AtomModel};
use crate::numerics::{
    integrate_partitioned, integrate_semi_infinite_scaled, matsubara_sum_scaled, ErrorSlot,
    QuadratureSpec,
};
use crate::{Error, Result};

/// One part of a potential with its height derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialPart {
    /// J
    pub u: f64,
    /// J/m
    pub du_dz: f64,
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialResult {
    /// m
    pub z: f64,
    /// J
    pub u_nr: f64,
    /// J
    pub u_r: f64,
    /// J
    pub u_total: f64,
    /// N, `−dU/dz`; positive pushes the atom away from the stack.
    pub f_z: f64,
    pub err_nr: f64,
    pub err_r: f64,
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

/// Integrand `[α W, α dW/dz · z]` of the nonresonant part, without prefactor.
fn nonresonant_integrand<'a>(
    atom: &'a AtomModel,
    stack: &'a LayerStack,
    z: f64,
    inner: QuadratureSpec,
    slot: &'a ErrorSlot,
) -> impl Fn(f64) -> [f64; 2] + 'a {
    move |xi: f64| {
        if slot.failed() {
            return [0.0, 0.0];
        }
        let alpha = atom.polarizability_imag_axis(xi);
        if alpha == 0.0 {
            return [0.0, 0.0];
        }
        match weighted_trace_imag_axis(stack, z, xi, &inner) {
            Ok(w) => [alpha * w.value, alpha * w.dvalue_dz * z],
            Err(e) => {
                slot.record(e);
                [0.0, 0.0]
            }
        }
    }
}

/// Nonresonant (imaginary-frequency) part of the potential.
pub fn cp_nonresonant(
    atom: &AtomModel,
    stack: &LayerStack,
    z: f64,
    quad: &QuadratureSpec,
) -> Result<PotentialPart> {
    check_height(z)?;
    quad.validate()?;
    let Some(w_min) = atom.min_frequency() else {
        return Ok(PotentialPart::default());
    };
    let slot = ErrorSlot::new();
    let f = nonresonant_integrand(atom, stack, z, quad.inner(), &slot);
    let scale = (C / (2.0 * z)).min(w_min);
    let mut breaks: Vec<f64> = atom
        .transitions()
        .iter()
        .map(|t| t.omega_kn.abs())
        .collect();
    breaks.push(C / (2.0 * z));
    let r = integrate_semi_infinite_scaled(f, 0.0, scale, &breaks, quad);
    slot.check()?;
    let r = r.map_err(|e| e.into_error("cp_nonresonant"))?;
    let pref = HBAR * MU_0 / (2.0 * PI);
    let [v, dv] = r.value;
    Ok(PotentialPart {
        u: pref * v,
        du_dz: pref * dv / z,
        err: pref * (r.err + quad.inner().rel_tol * v.abs()),
    })
}

/// Resonant part as the discrete sum over the atom's emission lines.
pub fn cp_resonant(
    atom: &AtomModel,
    stack: &LayerStack,
    z: f64,
    quad: &QuadratureSpec,
) -> Result<PotentialPart> {
    check_height(z)?;
    quad.validate()?;
    let mut out = PotentialPart::default();
    for line in sharp_line_spectrum(atom) {
        if line.weight == 0.0 {
            continue;
        }
        let g = green_trace(stack, z, Complex64::new(line.omega, 0.0), quad)?;
        let pref = -HBAR * MU_0 / PI * line.omega * line.omega * line.weight;
        out.u += pref * g.value.re;
        out.du_dz += pref * g.dvalue_dz.re;
        out.err += pref.abs() * g.err;
    }
    Ok(out)
}

/// Finite-linewidth model of `Im α(ω)` on the positive real axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ImAlphaProfile {
    /// Emission lines broadened into Lorentzians,
    /// `Im α = −w (γ/π)/((ω − ω_a)² + γ²)`, truncated to `ω_a(1 ± half_width)`.
    Lorentzian {
        lines: Vec<LorentzianLine>,
        half_width: f64,
    },
    /// Linear interpolation of samples `(ω, Im α)`, ω strictly increasing.
    Tabulated { omega: Vec<f64>, im_alpha: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianLine {
    /// rad/s
    pub omega: f64,
    /// Integrated weight `∫ −Im α dω`, C² m² / J.
    pub weight: f64,
    /// Half width at half maximum, rad/s.
    pub gamma: f64,
}

impl ImAlphaProfile {
    /// Broadens every emission line of `atom` to relative width
    /// `gamma_rel = γ/ω_a`, with windows `ω_a(1 ± 0.5)`.
    pub fn lorentzian(atom: &AtomModel, gamma_rel: f64) -> Result<Self> {
        if !(gamma_rel > 0.0 && gamma_rel < 0.1) {
            return Err(Error::InvalidArgument(format!(
                "relative linewidth must lie in (0, 0.1) (got {gamma_rel})"
            )));
        }
        let lines = sharp_line_spectrum(atom)
            .into_iter()
            .map(|l| LorentzianLine {
                omega: l.omega,
                weight: l.weight,
                gamma: gamma_rel * l.omega,
            })
            .collect();
        Ok(ImAlphaProfile::Lorentzian {
            lines,
            half_width: 0.5,
        })
    }

    pub fn tabulated(omega: Vec<f64>, im_alpha: Vec<f64>) -> Result<Self> {
        if omega.len() != im_alpha.len() || omega.len() < 2 {
            return Err(Error::InvalidArgument(
                "tabulated profile needs at least two (omega, im_alpha) pairs of equal length"
                    .into(),
            ));
        }
        if omega.windows(2).any(|p| !(p[1] > p[0])) || omega[0] <= 0.0 {
            return Err(Error::InvalidArgument(
                "tabulated frequencies must be positive and strictly increasing".into(),
            ));
        }
        if im_alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "tabulated Im alpha must be finite".into(),
            ));
        }
        Ok(ImAlphaProfile::Tabulated { omega, im_alpha })
    }

    /// `Im α(ω)`; zero outside the windows of a Lorentzian profile and
    /// outside the table range.
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            ImAlphaProfile::Lorentzian { lines, half_width } => lines
                .iter()
                .filter(|l| (w - l.omega).abs() <= half_width * l.omega)
                .map(|l| -l.weight * l.gamma / PI / ((w - l.omega).powi(2) + l.gamma * l.gamma))
                .sum(),
            ImAlphaProfile::Tabulated { omega, im_alpha } => {
                if w < omega[0] || w > omega[omega.len() - 1] {
                    return 0.0;
                }
                let j = omega.partition_point(|&x| x <= w).clamp(1, omega.len() - 1);
                let t = (w - omega[j - 1]) / (omega[j] - omega[j - 1]);
                im_alpha[j - 1] + t * (im_alpha[j] - im_alpha[j - 1])
            }
        }
    }

    /// Integration intervals, each with its interior breakpoints.
    pub(crate) fn partitions(&self) -> Vec<Vec<f64>> {
        match self {
            ImAlphaProfile::Lorentzian { lines, half_width } => lines
                .iter()
                .map(|l| {
                    let (lo, hi) = (l.omega * (1.0 - half_width), l.omega * (1.0 + half_width));
                    let mut pts = vec![lo, l.omega, hi];
                    let mut d = l.gamma;
                    while l.omega - d > lo {
                        pts.push(l.omega - d);
                        pts.push(l.omega + d);
                        d *= 3.0;
                    }
                    pts.sort_by(f64::total_cmp);
                    pts
                })
                .collect(),
            ImAlphaProfile::Tabulated { omega, im_alpha } => {
                // Maximal runs where the interpolant is negative.
                let mut parts = Vec::new();
                let mut current: Vec<f64> = Vec::new();
                for j in 0..omega.len() {
                    let neg = im_alpha[j] < 0.0;
                    if neg {
                        if current.is_empty() && j > 0 && im_alpha[j - 1] >= 0.0 {
                            let (a, b) = (im_alpha[j - 1], im_alpha[j]);
                            current.push(omega[j - 1] + (omega[j] - omega[j - 1]) * a / (a - b));
                        }
                        current.push(omega[j]);
                    } else if !current.is_empty() {
                        let (a, b) = (im_alpha[j - 1], im_alpha[j]);
                        current.push(omega[j - 1] + (omega[j] - omega[j - 1]) * a / (a - b));
                        parts.push(std::mem::take(&mut current));
                    }
                }
                if current.len() >= 2 {
                    parts.push(current);
                }
                parts.into_iter().filter(|p| p.len() >= 2).collect()
            }
        }
    }
}

/// Resonant part as a frequency integral over the emission windows of a
/// finite-linewidth profile. Tends to [`cp_resonant`] as the linewidth
/// goes to zero.
pub fn cp_resonant_integral(
    profile: &ImAlphaProfile,
    stack: &LayerStack,
    z: f64,
    quad: &QuadratureSpec,
) -> Result<PotentialPart> {
    check_height(z)?;
    quad.validate()?;
    let inner = quad.inner();
    let slot = ErrorSlot::new();
    let f = |w: f64| -> [f64; 2] {
        if slot.failed() {
            return [0.0, 0.0];
        }
        let im = profile.eval(w).min(0.0);
        if im == 0.0 {
            return [0.0, 0.0];
        }
        match green_trace(stack, z, Complex64::new(w, 0.0), &inner) {
            Ok(g) => {
                let s = w * w * im;
                [s * g.value.re, s * g.dvalue_dz.re * z]
            }
            Err(e) => {
                slot.record(e);
                [0.0, 0.0]
            }
        }
    };
    let mut out = PotentialPart::default();
    let pref = HBAR * MU_0 / PI;
    for pts in profile.partitions() {
        let r = integrate_partitioned(&f, &pts, quad);
        if let Some(e) = slot.take() {
            return Err(e);
        }
        let r = r.map_err(|e| e.into_error("cp_resonant_integral"))?;
        out.u += pref * r.value[0];
        out.du_dz += pref * r.value[1] / z;
        out.err += pref * r.err;
    }
    Ok(out)
}

/// Both parts, their sum and the force `−dU/dz`.
pub fn cp_total(
    atom: &AtomModel,
    stack: &LayerStack,
    z: f64,
    quad: &QuadratureSpec,
) -> Result<PotentialResult> {
    let nr = cp_nonresonant(atom, stack, z, quad)?;
    let r = cp_resonant(atom, stack, z, quad)?;
    Ok(assemble(z, nr, r))
}

fn assemble(z: f64, nr: PotentialPart, r: PotentialPart) -> PotentialResult {
    PotentialResult {
        z,
        u_nr: nr.u,
        u_r: r.u,
        u_total: nr.u + r.u,
        f_z: -(nr.du_dz + r.du_dz),
        err_nr: nr.err,
        err_r: r.err,
    }
}

/// Nonresonant part at temperature `T`, with the frequency integral
/// replaced by a Matsubara sum. `T = 0` gives [`cp_nonresonant`].
pub fn cp_nonresonant_thermal(
    atom: &AtomModel,
    stack: &LayerStack,
    z: f64,
    temperature: f64,
    quad: &QuadratureSpec,
) -> Result<PotentialPart> {
    check_height(z)?;
    quad.validate()?;
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be >= 0 (got {temperature})"
        )));
    }
    if temperature == 0.0 {
        return cp_nonresonant(atom, stack, z, quad);
    }
    let Some(w_min) = atom.min_frequency() else {
        return Ok(PotentialPart::default());
    };
    let slot = ErrorSlot::new();
    let f = nonresonant_integrand(atom, stack, z, quad.inner(), &slot);
    let r = matsubara_sum_scaled(f, temperature, (C / (2.0 * z)).min(w_min), quad);
    slot.check()?;
    let r = r.map_err(|e| e.into_error("cp_nonresonant_thermal"))?;
    // (2π k_B T/ħ)(ħμ0/2π) = μ0 k_B T
    let pref = HBAR * MU_0 / (2.0 * PI);
    let [v, dv] = r.value;
    Ok(PotentialPart {
        u: pref * v,
        du_dz: pref * dv / z,
        err: pref * (r.err + quad.inner().rel_tol * v.abs()),
    })
}

/// Total potential at temperature `T`: thermal nonresonant part plus the
/// zero-temperature resonant part.
pub fn cp_total_thermal(
    atom: &AtomModel,
    stack: &LayerStack,
    z: f64,
    temperature: f64,
    quad: &QuadratureSpec,
) -> Result<PotentialResult> {
    let nr = cp_nonresonant_thermal(atom, stack, z, temperature, quad)?;
    let r = cp_resonant(atom, stack, z, quad)?;
    Ok(assemble(z, nr, r))
}
