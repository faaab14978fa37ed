//! Casimir forces on a dilute slab of atoms above a stack, and between
//! two planar bodies.
//!
//! Forces are per unit area of the slab or plates. Negative values pull the
//! upper body towards the lower one (attraction).
//!
//! For a dilute slab the linearised susceptibility `χ = ηα/ε0` turns the
//! macroscopic force into imaginary- and real-frequency integrals over the
//! scattering Green tensor of the stack, evaluated on the `n_layers + 1`
//! panel boundaries of the slab. [`atom_sum_force`] independently sums the
//! Casimir-Polder forces of the slab's atoms; [`additivity_check`] compares
//! the two.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{C, EPSILON_0, HBAR};
use crate::greens::{green_trace, weighted_trace_imag_axis, ImagAxisReflector, LayerStack};
use crate::materials::{sharp_line_spectrum, AtomModel, PermittivityModel};
use crate::numerics::{
    integrate_partitioned, integrate_semi_infinite_scaled, matsubara_sum_scaled, ErrorSlot,
    QuadratureSpec,
};
use crate::potentials::{cp_nonresonant, cp_resonant, ImAlphaProfile};
use crate::{Error, Result};

/// Homogeneous gas of identical atoms filling `z_lo < z < z_hi` above a stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiluteSlab {
    pub atom: AtomModel,
    /// Number density, 1/m³.
    pub eta: f64,
    /// m
    pub z_lo: f64,
    /// m
    pub z_hi: f64,
    /// Panels of the volume integral over the slab.
    pub n_layers: usize,
}

impl DiluteSlab {
    pub fn new(atom: AtomModel, eta: f64, z_lo: f64, z_hi: f64, n_layers: usize) -> Result<Self> {
        let slab = DiluteSlab {
            atom,
            eta,
            z_lo,
            z_hi,
            n_layers,
        };
        slab.validate()?;
        let chi = slab.max_susceptibility();
        if chi > 1e-2 {
            log::warn!("slab susceptibility |chi| = {chi:.3e} exceeds 1e-2; the dilute limit is questionable");
        }
        Ok(slab)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "density must be >= 0 (got {})",
                self.eta
            )));
        }
        if !(self.z_lo > 0.0 && self.z_hi > self.z_lo && self.z_hi.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "slab needs 0 < z_lo < z_hi (got {}, {})",
                self.z_lo, self.z_hi
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::InvalidModel("slab needs at least one layer".into()));
        }
        Ok(())
    }

    /// `η Σ_k |d|²·2/(3ħ|ω_kn|)/ε0`, the largest `|χ(iξ)|`.
    pub fn max_susceptibility(&self) -> f64 {
        let alpha: f64 = self
            .atom
            .transitions()
            .iter()
            .map(|t| 2.0 * t.d2 / (3.0 * HBAR * t.omega_kn.abs()))
            .sum();
        self.eta * alpha / EPSILON_0
    }

    pub fn thickness(&self) -> f64 {
        self.z_hi - self.z_lo
    }

    /// Panel boundaries `z_lo = z_0 < … < z_n = z_hi`.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_layers;
        (0..=n)
            .map(|j| {
                if j == n {
                    self.z_hi
                } else {
                    self.z_lo + self.thickness() * j as f64 / n as f64
                }
            })
            .collect()
    }

    /// Midpoints of `n` equal panels.
    fn midpoints(&self, n: usize) -> Vec<f64> {
        let h = self.thickness() / n as f64;
        (0..n).map(|j| self.z_lo + (j as f64 + 0.5) * h).collect()
    }
}

/// One force component per unit area.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForcePart {
    /// N/m²
    pub value: f64,
    pub err: f64,
}

/// Macroscopic slab force component, with the panel sum of the volume
/// integral and its endpoint (telescoped) form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlabForce {
    /// Panel sum, N/m².
    pub value: f64,
    /// Endpoint difference, N/m².
    pub endpoint: f64,
    pub err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceResult {
    /// N/m²
    pub f_nr: f64,
    /// N/m²
    pub f_r: f64,
    /// N/m²
    pub f_total: f64,
    pub err_nr: f64,
    pub err_r: f64,
}

impl ForceResult {
    pub fn new(nr: ForcePart, r: ForcePart) -> Self {
        ForceResult {
            f_nr: nr.value,
            f_r: r.value,
            f_total: nr.value + r.value,
            err_nr: nr.err,
            err_r: r.err,
        }
    }
}

fn panel_and_endpoint(values: &[f64]) -> [f64; 2] {
    let panels = values.windows(2).map(|w| w[1] - w[0]).sum();
    [panels, values[values.len() - 1] - values[0]]
}

/// Nonresonant force from the linearised susceptibility,
/// `f = −(ħ/2πc²) ∫_0^∞ dξ χ(iξ) [W(z_hi, ξ) − W(z_lo, ξ)]` with
/// `W = ξ² Tr G⁽¹⁾(z, iξ)`.
pub fn force_nr_dilute(
    slab: &DiluteSlab,
    stack: &LayerStack,
    quad: &QuadratureSpec,
) -> Result<SlabForce> {
    slab.validate()?;
    quad.validate()?;
    let Some(w_min) = slab.atom.min_frequency() else {
        return Ok(SlabForce::default());
    };
    if slab.eta == 0.0 {
        return Ok(SlabForce::default());
    }
    let nodes = slab.nodes();
    let inner = quad.inner();
    let slot = ErrorSlot::new();
    let f = |xi: f64| -> [f64; 2] {
        if slot.failed() {
            return [0.0, 0.0];
        }
        let chi = slab.eta * slab.atom.polarizability_imag_axis(xi) / EPSILON_0;
        let w: Result<Vec<f64>> = nodes
            .par_iter()
            .map(|&z| weighted_trace_imag_axis(stack, z, xi, &inner).map(|w| w.value))
            .collect();
        match w {
            Ok(w) => {
                let [p, e] = panel_and_endpoint(&w);
                [chi * p, chi * e]
            }
            Err(e) => {
                slot.record(e);
                [0.0, 0.0]
            }
        }
    };
    let mut breaks: Vec<f64> = slab
        .atom
        .transitions()
        .iter()
        .map(|t| t.omega_kn.abs())
        .collect();
    breaks.push(C / (2.0 * slab.z_lo));
    breaks.push(C / (2.0 * slab.z_hi));
    let r =
        integrate_semi_infinite_scaled(f, 0.0, (C / (2.0 * slab.z_lo)).min(w_min), &breaks, quad);
    slot.check()?;
    let r = r.map_err(|e| e.into_error("force_nr_dilute"))?;
    let pref = -HBAR / (2.0 * PI * C * C);
    Ok(SlabForce {
        value: pref * r.value[0],
        endpoint: pref * r.value[1],
        err: pref.abs() * (r.err + inner.rel_tol * r.value[1].abs()),
    })
}

/// Resonant force from the sharp emission lines,
/// `f = −(ħ/πc²) Σ ω² (∫χ_I dω) [Re Tr G⁽¹⁾(z_hi, ω) − Re Tr G⁽¹⁾(z_lo, ω)]`.
pub fn force_r_dilute(
    slab: &DiluteSlab,
    stack: &LayerStack,
    quad: &QuadratureSpec,
) -> Result<SlabForce> {
    slab.validate()?;
    quad.validate()?;
    let nodes = slab.nodes();
    let mut out = SlabForce::default();
    if slab.eta == 0.0 {
        return Ok(out);
    }
    for line in sharp_line_spectrum(&slab.atom) {
        if line.weight == 0.0 {
            continue;
        }
        // ∫ χ_I dω over the line.
        let chi_weight = -slab.eta * line.weight / EPSILON_0;
        let traces = nodes
            .par_iter()
            .map(|&z| green_trace(stack, z, Complex64::new(line.omega, 0.0), quad))
            .collect::<Result<Vec<_>>>()?;
        let re: Vec<f64> = traces.iter().map(|g| g.value.re).collect();
        let [p, e] = panel_and_endpoint(&re);
        let pref = -HBAR / (PI * C * C) * line.omega * line.omega * chi_weight;
        out.value += pref * p;
        out.endpoint += pref * e;
        out.err += pref.abs() * (traces[0].err + traces[traces.len() - 1].err);
    }
    Ok(out)
}

/// Resonant force with each emission line broadened to relative width
/// `gamma_rel`, integrated over its frequency window.
pub fn force_r_dilute_window(
    slab: &DiluteSlab,
    stack: &LayerStack,
    gamma_rel: f64,
    quad: &QuadratureSpec,
) -> Result<ForcePart> {
    slab.validate()?;
    quad.validate()?;
    let profile = ImAlphaProfile::lorentzian(&slab.atom, gamma_rel)?;
    let inner = quad.inner();
    let slot = ErrorSlot::new();
    let f = |w: f64| -> f64 {
        if slot.failed() {
            return 0.0;
        }
        let chi_i = slab.eta * profile.eval(w).min(0.0) / EPSILON_0;
        if chi_i == 0.0 {
            return 0.0;
        }
        let omega = Complex64::new(w, 0.0);
        match (
            green_trace(stack, slab.z_hi, omega, &inner),
            green_trace(stack, slab.z_lo, omega, &inner),
        ) {
            (Ok(hi), Ok(lo)) => w * w * chi_i * (hi.value.re - lo.value.re),
            (Err(e), _) | (_, Err(e)) => {
                slot.record(e);
                0.0
            }
        }
    };
    let mut out = ForcePart::default();
    let pref = -HBAR / (PI * C * C);
    for pts in profile.partitions() {
        let r = integrate_partitioned(&f, &pts, quad);
        if let Some(e) = slot.take() {
            return Err(e);
        }
        let r = r.map_err(|e| e.into_error("force_r_dilute_window"))?;
        out.value += pref * r.value;
        out.err += pref.abs() * r.err;
    }
    Ok(out)
}

/// Both components of the macroscopic dilute-slab force.
pub fn force_dilute(
    slab: &DiluteSlab,
    stack: &LayerStack,
    quad: &QuadratureSpec,
) -> Result<ForceResult> {
    let nr = force_nr_dilute(slab, stack, quad)?;
    let r = force_r_dilute(slab, stack, quad)?;
    Ok(ForceResult::new(
        ForcePart {
            value: nr.value,
            err: nr.err,
        },
        ForcePart {
            value: r.value,
            err: r.err,
        },
    ))
}

/// Sum of the Casimir-Polder forces `−∂U/∂z` of the slab's atoms, using
/// midpoint panels at `n_layers` and `2·n_layers` with Richardson
/// extrapolation. `err` includes the extrapolation estimate.
pub fn atom_sum_force(
    slab: &DiluteSlab,
    stack: &LayerStack,
    quad: &QuadratureSpec,
) -> Result<ForceResult> {
    slab.validate()?;
    quad.validate()?;
    let n = slab.n_layers;
    let sums = [n, 2 * n]
        .iter()
        .map(|&m| {
            let h = slab.thickness() / m as f64;
            let parts = slab
                .midpoints(m)
                .par_iter()
                .map(|&z| {
                    Ok((
                        cp_nonresonant(&slab.atom, stack, z, quad)?,
                        cp_resonant(&slab.atom, stack, z, quad)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut s = [0.0; 4];
            for (nr, r) in parts {
                s[0] -= nr.du_dz;
                s[1] -= r.du_dz;
                s[2] += nr.err;
                s[3] += r.err;
            }
            Ok(s.map(|v| v * slab.eta * h))
        })
        .collect::<Result<Vec<_>>>()?;
    let (coarse, fine) = (sums[0], sums[1]);
    let extrapolate = |j: usize| (4.0 * fine[j] - coarse[j]) / 3.0;
    let richardson = |j: usize| (fine[j] - coarse[j]).abs() / 3.0;
    Ok(ForceResult::new(
        ForcePart {
            value: extrapolate(0),
            err: richardson(0) + fine[2],
        },
        ForcePart {
            value: extrapolate(1),
            err: richardson(1) + fine[3],
        },
    ))
}

/// Macroscopic versus atom-sum slab forces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdditivityReport {
    pub macro_force: ForceResult,
    pub micro_force: ForceResult,
    pub deviation_nr: f64,
    pub deviation_r: f64,
    /// `|macro − micro|/|micro|` of the total force.
    pub deviation: f64,
    pub max_susceptibility: f64,
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Compares the macroscopic dilute-slab force with the sum of single-atom
/// Casimir-Polder forces over the slab.
pub fn additivity_check(
    slab: &DiluteSlab,
    stack: &LayerStack,
    quad: &QuadratureSpec,
) -> Result<AdditivityReport> {
    let macro_force = force_dilute(slab, stack, quad)?;
    let micro_force = atom_sum_force(slab, stack, quad)?;
    Ok(AdditivityReport {
        macro_force,
        micro_force,
        deviation_nr: relative_deviation(macro_force.f_nr, micro_force.f_nr),
        deviation_r: relative_deviation(macro_force.f_r, micro_force.f_r),
        deviation: relative_deviation(macro_force.f_total, micro_force.f_total),
        max_susceptibility: slab.max_susceptibility(),
    })
}

/// Imaginary-frequency force on the slab treated as a film of
/// permittivity `1 + χ`, to all orders in `χ`, above the stack.
pub fn force_nr_exact_film(
    slab: &DiluteSlab,
    stack: &LayerStack,
    quad: &QuadratureSpec,
) -> Result<ForcePart> {
    slab.validate()?;
    let w_min = slab.atom.min_frequency().unwrap_or(0.0);
    // The film only enters on the imaginary axis; keep its damping negligible.
    let atom = AtomModel::with_linewidth(slab.atom.transitions().to_vec(), 1e-12 * w_min)?;
    let gas = PermittivityModel::atomic_gas(&atom, slab.eta)?;
    let film = LayerStack::film(gas, slab.thickness())?;
    lifshitz_stacks(&film, stack, slab.z_lo, 0.0, quad)
}

/// Pressure between two planar bodies across a vacuum gap,
/// `P = −(ħ/2π²) ∫_0^∞ dξ ∫_{ξ/c}^∞ dκ κ² Σ_σ r_a r_b e^{−2κd}/(1 − r_a r_b e^{−2κd})`,
/// with a Matsubara sum at `T > 0`. Both stacks are seen from the gap.
pub fn lifshitz_stacks(
    a: &LayerStack,
    b: &LayerStack,
    gap: f64,
    temperature: f64,
    quad: &QuadratureSpec,
) -> Result<ForcePart> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gap must be > 0 (got {gap})"
        )));
    }
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be >= 0 (got {temperature})"
        )));
    }
    quad.validate()?;
    let inner = quad.inner();
    let slot = ErrorSlot::new();
    let mut resonances = a.resonances();
    resonances.extend(b.resonances());

    let per_frequency = |xi: f64| -> f64 {
        if slot.failed() {
            return 0.0;
        }
        let k_xi = xi / C;
        // Beyond e^{-300} the contribution is negligible and the integrand
        // drifts towards subnormal numbers.
        if 2.0 * k_xi * gap > 300.0 {
            return 0.0;
        }
        let (ra, rb) = match (ImagAxisReflector::new(a, xi), ImagAxisReflector::new(b, xi)) {
            (Ok(ra), Ok(rb)) => (ra, rb),
            (Err(e), _) | (_, Err(e)) => {
                slot.record(e);
                return 0.0;
            }
        };
        let unstable = RefCell::new(None);
        let g = |t: f64| -> Complex64 {
            if unstable.borrow().is_some() {
                return Complex64::new(0.0, 0.0);
            }
            let kappa = k_xi + t;
            let e = (-2.0 * kappa * gap).exp();
            let [sa, pa] = ra.at_excess(t);
            let [sb, pb] = rb.at_excess(t);
            let mut sum = Complex64::new(0.0, 0.0);
            for x in [sa * sb * e, pa * pb * e] {
                let den = 1.0 - x;
                if den.re <= 0.0 {
                    unstable.borrow_mut().get_or_insert(t);
                    return Complex64::new(0.0, 0.0);
                }
                sum += x / den;
            }
            kappa * kappa * sum
        };
        let breaks = [1.0 / gap, k_xi];
        let r = integrate_semi_infinite_scaled(g, 0.0, 1.0 / (2.0 * gap), &breaks, &inner);
        if let Some(t) = unstable.into_inner() {
            slot.record(Error::Divergence {
                operation: "lifshitz_two_plates",
                detail: format!(
                    "1 - r_a r_b exp(-2 kappa d) <= 0 at xi = {xi:e}, kappa = {:e}, gap = {gap:e}: \
                     the configuration is unstable",
                    k_xi + t
                ),
            });
            return 0.0;
        }
        match r {
            Ok(r) => {
                if r.value.im.abs() > 1e-9 * r.value.re.abs().max(f64::MIN_POSITIVE) {
                    slot.record(Error::Divergence {
                        operation: "lifshitz_two_plates",
                        detail: format!(
                            "integrand not real at xi = {xi:e}: amplifying plate beyond threshold"
                        ),
                    });
                }
                r.value.re
            }
            Err(e) => {
                slot.record(e.into_error("lifshitz_two_plates"));
                0.0
            }
        }
    };

    let scale = C / (2.0 * gap);
    let r = if temperature == 0.0 {
        let mut breaks = resonances;
        breaks.push(scale);
        integrate_semi_infinite_scaled(per_frequency, 0.0, scale, &breaks, quad)
    } else {
        matsubara_sum_scaled(per_frequency, temperature, scale, quad)
    };
    slot.check()?;
    let r = r.map_err(|e| e.into_error("lifshitz_two_plates"))?;
    let pref = -HBAR / (2.0 * PI * PI);
    Ok(ForcePart {
        value: pref * r.value,
        err: pref.abs() * (r.err + inner.rel_tol * r.value.abs()),
    })
}

/// Pressure between two half-spaces of `mat_a` and `mat_b`.
pub fn lifshitz_two_plates(
    mat_a: &PermittivityModel,
    mat_b: &PermittivityModel,
    gap: f64,
    temperature: f64,
    quad: &QuadratureSpec,
) -> Result<ForcePart> {
    lifshitz_stacks(
        &LayerStack::half_space(mat_a.clone()),
        &LayerStack::half_space(mat_b.clone()),
        gap,
        temperature,
        quad,
    )
}

/// Ideal Casimir pressure between perfect mirrors, `−π²ħc/(240 d⁴)`.
pub fn ideal_casimir_pressure(gap: f64) -> f64 {
    -PI * PI * HBAR * C / (240.0 * gap.powi(4))
}
