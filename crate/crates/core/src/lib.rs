//! Casimir forces on amplifying and absorbing bodies, and Casimir-Polder
//! potentials of excited atoms, in planar multilayer geometries.
//!
//! The force on a linearly responding body splits into a nonresonant
//! Lifshitz-type part, written as an integral over imaginary frequencies,
//! and a resonant part that only appears when something in the system is
//! amplifying. For an optically dilute gas of excited atoms the two parts
//! reduce to density-weighted sums of the atoms' nonresonant and resonant
//! Casimir-Polder forces; [`forces::additivity_check`] verifies this
//! numerically.
//!
//! Module map:
//!
//! * [`materials`]: Lorentz permittivities with gain, atomic polarizabilities.
//! * [`greens`]: scattering Green tensor trace above a layer stack.
//! * [`numerics`]: adaptive quadrature and Matsubara summation.
//! * [`potentials`]: Casimir-Polder potentials and forces on single atoms.
//! * [`forces`]: dilute slab forces, the atom-sum oracle, Lifshitz plates.
//! * [`json`]: JSON documents for materials, atoms and stacks.

pub mod constants;
mod error;
pub mod forces;
pub mod greens;
pub mod json;
pub mod materials;
pub mod numerics;
pub mod potentials;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
