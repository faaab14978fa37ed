//! Linear response of media and atoms.
//!
//! Permittivities are sums of Lorentz oscillators. An inverted oscillator
//! carries a sign-flipped strength and models a population-inverted
//! (amplifying) transition: it makes `Im ε < 0` around its resonance and
//! pushes `ε(iξ)` below the background on the whole imaginary axis. Because
//! every term is a causal Lorentzian with damping in the lower half plane,
//! Kramers-Kronig holds by construction.
//!
//! Atoms are described by their dipole transitions out of the state of
//! interest, with signed transition frequencies: positive for upward
//! transitions, negative for downward (emitting) ones.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{EPSILON_0, HBAR};
use crate::numerics::{integrate_semi_infinite_scaled, QuadratureSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzOscillator {
    /// Resonance frequency, rad/s.
    pub omega0: f64,
    /// Coupling strength, rad/s; enters squared.
    pub omegap: f64,
    /// Damping rate, rad/s.
    pub gamma: f64,
    /// Population-inverted (gain) oscillator.
    pub inverted: bool,
}

impl LorentzOscillator {
    pub fn new(omega0: f64, omegap: f64, gamma: f64, inverted: bool) -> Result<Self> {
        let osc = LorentzOscillator {
            omega0,
            omegap,
            gamma,
            inverted,
        };
        osc.validate()?;
        Ok(osc)
    }

    pub fn absorbing(omega0: f64, omegap: f64, gamma: f64) -> Result<Self> {
        Self::new(omega0, omegap, gamma, false)
    }

    pub fn amplifying(omega0: f64, omegap: f64, gamma: f64) -> Result<Self> {
        Self::new(omega0, omegap, gamma, true)
    }

    fn validate(&self) -> Result<()> {
        let finite = self.omega0.is_finite() && self.omegap.is_finite() && self.gamma.is_finite();
        if !finite || self.omega0 <= 0.0 || self.omegap < 0.0 || self.gamma <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "oscillator needs omega0 > 0, omegap >= 0, gamma > 0 (got {:e}, {:e}, {:e})",
                self.omega0, self.omegap, self.gamma
            )));
        }
        Ok(())
    }

    fn sign(&self) -> f64 {
        if self.inverted {
            -1.0
        } else {
            1.0
        }
    }

    /// Contribution `±ωp²/(ω0² − ω² − iγω)` to the susceptibility.
    pub fn susceptibility(&self, omega: Complex64) -> Complex64 {
        let i = Complex64::i();
        let denom = self.omega0 * self.omega0 - omega * omega - i * self.gamma * omega;
        self.sign() * self.omegap * self.omegap / denom
    }

    /// Contribution at `ω = iξ`, which is real.
    pub fn susceptibility_imag_axis(&self, xi: f64) -> f64 {
        self.sign() * self.omegap * self.omegap
            / (self.omega0 * self.omega0 + xi * xi + self.gamma * xi)
    }
}

/// `ε(ω) = background + Σ ±ωp²/(ω0² − ω² − iγω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermittivityModel {
    oscillators: Vec<LorentzOscillator>,
    background: f64,
}

impl Default for PermittivityModel {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl PermittivityModel {
    pub fn new(background: f64, oscillators: Vec<LorentzOscillator>) -> Result<Self> {
        if !(background >= 1.0 && background.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "background permittivity must be finite and >= 1 (got {background})"
            )));
        }
        for osc in &oscillators {
            osc.validate()?;
        }
        Ok(PermittivityModel {
            oscillators,
            background,
        })
    }

    pub fn vacuum() -> Self {
        PermittivityModel {
            oscillators: Vec::new(),
            background: 1.0,
        }
    }

    /// Dispersionless medium with `ε ≡ background`.
    pub fn constant(background: f64) -> Result<Self> {
        Self::new(background, Vec::new())
    }

    pub fn single(osc: LorentzOscillator) -> Result<Self> {
        Self::new(1.0, vec![osc])
    }

    /// Dilute gas of atoms of number density `eta` via the linearised
    /// Clausius-Mossotti law `χ = η α/ε0`. Each transition of the atom
    /// becomes an oscillator at `|ω_kn|` (inverted for downward
    /// transitions) with damping `2·linewidth_epsilon`, which reproduces the
    /// regulated polarizability near the lines and `α(iξ)` up to
    /// `O(ε/ω_kn)`.
    pub fn atomic_gas(atom: &AtomModel, eta: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "number density must be >= 0 (got {eta})"
            )));
        }
        let gamma = 2.0 * atom.linewidth_epsilon();
        let oscillators = atom
            .transitions()
            .iter()
            .map(|t| {
                let w = t.omega_kn.abs();
                let omegap = (2.0 * eta * t.d2 * w / (3.0 * HBAR * EPSILON_0)).sqrt();
                LorentzOscillator::new(w, omegap, gamma, t.omega_kn < 0.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(1.0, oscillators)
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    pub fn oscillators(&self) -> &[LorentzOscillator] {
        &self.oscillators
    }

    pub fn is_vacuum(&self) -> bool {
        self.background == 1.0 && self.oscillators.iter().all(|o| o.omegap == 0.0)
    }

    /// True when any oscillator is inverted.
    pub fn has_gain(&self) -> bool {
        self.oscillators
            .iter()
            .any(|o| o.inverted && o.omegap > 0.0)
    }

    /// Same material with every inversion flag cleared.
    pub fn without_inversion(&self) -> Self {
        PermittivityModel {
            oscillators: self
                .oscillators
                .iter()
                .map(|o| LorentzOscillator {
                    inverted: false,
                    ..*o
                })
                .collect(),
            background: self.background,
        }
    }

    /// Complex permittivity at complex frequency `omega`.
    pub fn eval(&self, omega: Complex64) -> Complex64 {
        self.oscillators
            .iter()
            .fold(Complex64::new(self.background, 0.0), |acc, o| {
                acc + o.susceptibility(omega)
            })
    }

    /// Permittivity at real `omega`.
    pub fn eval_real(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(omega, 0.0))
    }

    /// `ε(iξ)`, real for real `ξ`.
    pub fn eval_imag_axis(&self, xi: f64) -> f64 {
        self.oscillators.iter().fold(self.background, |acc, o| {
            acc + o.susceptibility_imag_axis(xi)
        })
    }
}

/// Frequency scan used to locate gain windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl FrequencyGrid {
    /// Log-spaced scan covering every oscillator of `model` generously, with
    /// a density that resolves the narrowest line.
    pub fn covering(model: &PermittivityModel) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let mut finest = f64::INFINITY;
        for o in model.oscillators() {
            lo = lo.min(o.omega0);
            hi = hi.max(o.omega0);
            finest = finest.min(o.gamma / o.omega0);
        }
        if !lo.is_finite() {
            return FrequencyGrid {
                min: 1.0,
                max: 10.0,
                points: 2,
                log: true,
            };
        }
        let (min, max) = (lo * 1e-3, hi * 1e3);
        let per_decade = (20.0 / finest.min(1.0)).clamp(100.0, 200_000.0);
        FrequencyGrid {
            min,
            max,
            points: (6.0 * per_decade) as usize + 1,
            log: true,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if self.log {
                    self.min * (self.max / self.min).powf(s)
                } else {
                    self.min + (self.max - self.min) * s
                }
            })
            .collect()
    }
}

/// A contiguous frequency interval with `Im ε < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainWindow {
    pub lo: f64,
    pub hi: f64,
}

impl GainWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gain window needs 0 < lo < hi (got {lo:e}, {hi:e})"
            )));
        }
        Ok(GainWindow { lo, hi })
    }

    pub fn contains(&self, omega: f64) -> bool {
        self.lo <= omega && omega <= self.hi
    }
}

/// Maximal intervals of the scan where `Im ε < −tol`, endpoints refined by
/// bisection. Endpoints belong to the window.
pub fn gain_windows(model: &PermittivityModel, grid: &FrequencyGrid, tol: f64) -> Vec<GainWindow> {
    let amplifying = |w: f64| model.eval_real(w).im < -tol;
    let refine = |mut inside: f64, mut outside: f64| -> f64 {
        while (inside - outside).abs() > 1e-10 * inside.abs().max(outside.abs()) {
            let mid = 0.5 * (inside + outside);
            if amplifying(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };

    let nodes = grid.nodes();
    let mut windows = Vec::new();
    let mut start: Option<f64> = None;
    let mut prev: Option<(f64, bool)> = None;
    for &w in &nodes {
        let amp = amplifying(w);
        match (prev, amp) {
            (None, true) => start = Some(w),
            (Some((pw, false)), true) => start = Some(refine(w, pw)),
            (Some((pw, true)), false) => {
                let lo = start.take().expect("window start recorded");
                windows.push(GainWindow {
                    lo,
                    hi: refine(pw, w),
                });
            }
            _ => {}
        }
        prev = Some((w, amp));
    }
    if let Some(lo) = start {
        windows.push(GainWindow {
            lo,
            hi: *nodes.last().expect("grid is non-empty"),
        });
    }
    windows
}

/// Relative mismatch between `ε(iξ) − background` evaluated directly and via
/// the dispersion integral `(2/π)∫_0^∞ ω Im ε(ω)/(ω² + ξ²) dω`.
pub fn kk_check(model: &PermittivityModel, xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidArgument(format!("xi must be > 0 (got {xi})")));
    }
    let direct = model.eval_imag_axis(xi) - model.background();
    if model.oscillators().is_empty() {
        return Ok(0.0);
    }
    let mut breaks = Vec::new();
    let mut scale: f64 = 0.0;
    for o in model.oscillators() {
        scale = scale.max(o.omega0);
        for k in [-25.0, -5.0, -1.0, 0.0, 1.0, 5.0, 25.0] {
            breaks.push(o.omega0 + k * o.gamma);
        }
    }
    let spec = QuadratureSpec {
        max_subdivisions: 20_000,
        ..QuadratureSpec::with_rel_tol(1e-11)
    };
    let integral = integrate_semi_infinite_scaled(
        |w: f64| w * model.eval_real(w).im / (w * w + xi * xi),
        0.0,
        scale,
        &breaks,
        &spec,
    )
    .map_err(|e| e.into_error("kk_check"))?;
    let via_kk = 2.0 / std::f64::consts::PI * integral.value;
    if direct == 0.0 {
        return Ok(via_kk.abs());
    }
    Ok((direct - via_kk).abs() / direct.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomTransition {
    /// Signed transition frequency `ω_kn`, rad/s; negative for downward.
    pub omega_kn: f64,
    /// `|d_nk|²`, C² m².
    pub d2: f64,
}

impl AtomTransition {
    pub fn new(omega_kn: f64, d2: f64) -> Result<Self> {
        if !(omega_kn != 0.0 && omega_kn.is_finite() && d2 >= 0.0 && d2.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "transition needs omega_kn != 0 and d2 >= 0 (got {omega_kn:e}, {d2:e})"
            )));
        }
        Ok(AtomTransition { omega_kn, d2 })
    }
}

/// An atom in state `|n⟩`, described by its transitions to other states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomModel {
    transitions: Vec<AtomTransition>,
    linewidth_epsilon: f64,
}

impl AtomModel {
    /// Uses the default regulator `1e-6·min|ω_kn|`.
    pub fn new(transitions: Vec<AtomTransition>) -> Result<Self> {
        let eps = transitions
            .iter()
            .map(|t| t.omega_kn.abs())
            .fold(f64::INFINITY, f64::min);
        let eps = if eps.is_finite() { 1e-6 * eps } else { 0.0 };
        Self::with_linewidth(transitions, eps)
    }

    pub fn with_linewidth(
        transitions: Vec<AtomTransition>,
        linewidth_epsilon: f64,
    ) -> Result<Self> {
        for t in &transitions {
            AtomTransition::new(t.omega_kn, t.d2)?;
        }
        if !(linewidth_epsilon >= 0.0 && linewidth_epsilon.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "linewidth regulator must be >= 0 (got {linewidth_epsilon})"
            )));
        }
        Ok(AtomModel {
            transitions,
            linewidth_epsilon,
        })
    }

    /// Two-level atom in its ground state (one upward transition).
    pub fn ground_two_level(omega: f64, d2: f64) -> Result<Self> {
        Self::new(vec![AtomTransition::new(omega.abs(), d2)?])
    }

    /// Two-level atom in its excited state (one downward transition).
    pub fn excited_two_level(omega: f64, d2: f64) -> Result<Self> {
        Self::new(vec![AtomTransition::new(-omega.abs(), d2)?])
    }

    pub fn transitions(&self) -> &[AtomTransition] {
        &self.transitions
    }

    pub fn linewidth_epsilon(&self) -> f64 {
        self.linewidth_epsilon
    }

    /// Smallest `|ω_kn|`, if any.
    pub fn min_frequency(&self) -> Option<f64> {
        self.transitions
            .iter()
            .map(|t| t.omega_kn.abs())
            .min_by(f64::total_cmp)
    }

    /// True when some transition is downward, i.e. the state can emit.
    pub fn is_excited(&self) -> bool {
        self.transitions
            .iter()
            .any(|t| t.omega_kn < 0.0 && t.d2 > 0.0)
    }

    /// Same atom with every dipole strength multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let transitions = self
            .transitions
            .iter()
            .map(|t| AtomTransition::new(t.omega_kn, t.d2 * factor))
            .collect::<Result<Vec<_>>>()?;
        Self::with_linewidth(transitions, self.linewidth_epsilon)
    }

    /// `α(iξ) = (2/3ħ) Σ_k |d|² ω_kn/(ω_kn² + ξ²)`.
    pub fn polarizability_imag_axis(&self, xi: f64) -> f64 {
        self.transitions
            .iter()
            .map(|t| t.d2 * t.omega_kn / (t.omega_kn * t.omega_kn + xi * xi))
            .sum::<f64>()
            * 2.0
            / (3.0 * HBAR)
    }
}

/// `α_n(ω) = (1/3ħ) Σ_k [|d|²/(ω + ω_kn + iε) − |d|²/(ω − ω_kn + iε)]`.
///
/// Real frequencies closer than `epsilon` to a line are refused.
pub fn polarizability(atom: &AtomModel, omega: Complex64, epsilon: f64) -> Result<Complex64> {
    if omega.im == 0.0 {
        for t in atom.transitions() {
            let pole = t.omega_kn.abs();
            if (omega.re.abs() - pole).abs() < epsilon {
                return Err(Error::NearPole {
                    operation: "polarizability",
                    omega: omega.re,
                    pole,
                });
            }
        }
    }
    let reg = Complex64::new(0.0, epsilon);
    let sum = atom
        .transitions()
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, t| {
            acc + t.d2 / (omega + t.omega_kn + reg) - t.d2 / (omega - t.omega_kn + reg)
        });
    Ok(sum / (3.0 * HBAR))
}

/// One sharp emission line of an excited atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    /// `ω_nk > 0`, rad/s.
    pub omega: f64,
    /// `π|d_nk|²/3ħ`: `Im α(ω) = −weight·δ(ω − omega)` near the line.
    pub weight: f64,
}

/// The downward transitions of `atom`: exactly the lines where
/// `Im α(ω) < 0` at positive frequency in the sharp-line limit.
pub fn sharp_line_spectrum(atom: &AtomModel) -> Vec<SpectralLine> {
    atom.transitions()
        .iter()
        .filter(|t| t.omega_kn < 0.0)
        .map(|t| SpectralLine {
            omega: -t.omega_kn,
            weight: std::f64::consts::PI * t.d2 / (3.0 * HBAR),
        })
        .collect()
}

/// Linearised Clausius-Mossotti susceptibility `χ = η α(ω)/ε0`. Real
/// frequencies use the atom's own regulator.
pub fn susceptibility_from_atoms(
    atom: &AtomModel,
    eta: f64,
    omega: Complex64,
) -> Result<Complex64> {
    let alpha = if omega.re == 0.0 && omega.im > 0.0 {
        Complex64::new(atom.polarizability_imag_axis(omega.im), 0.0)
    } else {
        polarizability(atom, omega, atom.linewidth_epsilon())?
    };
    let chi = eta * alpha / EPSILON_0;
    if chi.norm() > 1e-2 {
        log::warn!(
            "|chi| = {:.3e} at omega = {omega}: outside the dilute regime",
            chi.norm()
        );
    }
    Ok(chi)
}
