//! Evaluation of a resolved scenario into a table of rows.

use casimir_gain::forces::{additivity_check, force_dilute, lifshitz_two_plates, DiluteSlab};
use casimir_gain::greens::{green_trace, LayerStack};
use casimir_gain::numerics::QuadratureSpec;
use casimir_gain::potentials::cp_total_thermal;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::CliError;
use crate::scenario::{GreenFixed, Resolved, Scenario, SlabSpec, Variable};

/// Output rows in sweep order, with one error estimate per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub row_errors: Vec<f64>,
}

type Row = (Vec<f64>, f64);

fn context(what: String) -> impl Fn(casimir_gain::Error) -> CliError {
    move |e| match CliError::from(e) {
        CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
        CliError::Schema(m) => CliError::Schema(format!("{what}: {m}")),
    }
}

/// Evaluates `f` on every point concurrently and keeps the sweep order. The
/// first failing point in sweep order is reported.
fn sweep<F>(points: &[f64], f: F) -> Result<(Vec<Vec<f64>>, Vec<f64>), CliError>
where
    F: Fn(f64) -> Result<Row, CliError> + Sync,
{
    let results: Vec<Result<Row, CliError>> = points.par_iter().map(|&x| f(x)).collect();
    let mut rows = Vec::with_capacity(points.len());
    let mut errs = Vec::with_capacity(points.len());
    for r in results {
        let (row, err) = r?;
        rows.push(row);
        errs.push(err);
    }
    Ok((rows, errs))
}

fn slab_at(spec: &SlabSpec, z_lo: f64) -> Result<DiluteSlab, CliError> {
    DiluteSlab::new(
        spec.atom.clone(),
        spec.eta,
        z_lo,
        z_lo + spec.thickness,
        spec.n_layers,
    )
    .map_err(CliError::from)
}

pub fn run(s: &Scenario) -> Result<Table, CliError> {
    let points = match &s.sweep {
        Some(sw) => sw.values(),
        None => Vec::new(),
    };
    let variable = s.sweep.as_ref().map(|sw| sw.variable);
    let quad = &s.quad;
    let temperature = s.temperature.unwrap_or(0.0);
    let (columns, (rows, row_errors)) = match &s.inputs {
        Resolved::Material(m) => {
            let var = variable.unwrap_or(Variable::Omega);
            let cols = vec![var.column(), "eps_re[1]", "eps_im[1]"];
            let out = sweep(&points, |w| {
                let e = if var == Variable::Xi {
                    Complex64::new(m.eval_imag_axis(w), 0.0)
                } else {
                    m.eval_real(w)
                };
                Ok((vec![w, e.re, e.im], 0.0))
            })?;
            (cols, out)
        }
        Resolved::Green(stack, fixed) => green(stack, *fixed, variable, &points, quad)?,
        Resolved::Cp(atom, stack) => {
            let cols = vec![
                "z[m]",
                "u_nr[J]",
                "u_r[J]",
                "u_total[J]",
                "f_z[N]",
                "err_nr[J]",
                "err_r[J]",
            ];
            let out = sweep(&points, |z| {
                let p = cp_total_thermal(atom, stack, z, temperature, quad)
                    .map_err(context(format!("cp at z = {z:e} m, T = {temperature} K")))?;
                Ok((
                    vec![p.z, p.u_nr, p.u_r, p.u_total, p.f_z, p.err_nr, p.err_r],
                    p.err_nr + p.err_r,
                ))
            })?;
            (cols, out)
        }
        Resolved::ForceSlab(spec, stack) => {
            let cols = vec![
                "z[m]",
                "f_nr[N/m^2]",
                "f_r[N/m^2]",
                "f_total[N/m^2]",
                "err[N/m^2]",
            ];
            let out = sweep(&points, |z| {
                let slab = slab_at(spec, z)?;
                let f = force_dilute(&slab, stack, quad)
                    .map_err(context(format!("force-slab at z_lo = {z:e} m")))?;
                let err = f.err_nr + f.err_r;
                Ok((vec![z, f.f_nr, f.f_r, f.f_total, err], err))
            })?;
            (cols, out)
        }
        Resolved::ForcePlates(a, b) => {
            let cols = vec![
                "gap[m]",
                "f_nr[N/m^2]",
                "f_r[N/m^2]",
                "f_total[N/m^2]",
                "err[N/m^2]",
            ];
            // The plate pressure is the imaginary-frequency part; a resonant
            // part for amplifying plates is not modelled.
            let f_r = if a.has_gain() || b.has_gain() {
                log::warn!(
                    "a plate amplifies: f_r and f_total are reported as nan, f_nr is the \
                     imaginary-frequency pressure"
                );
                f64::NAN
            } else {
                0.0
            };
            let out = sweep(&points, |d| {
                let p = lifshitz_two_plates(a, b, d, temperature, quad).map_err(context(
                    format!("force-plates at gap = {d:e} m, T = {temperature} K"),
                ))?;
                Ok((vec![d, p.value, f_r, p.value + f_r, p.err], p.err))
            })?;
            (cols, out)
        }
        Resolved::Check(spec, stack) => {
            let cols = vec![
                "z_lo[m]",
                "z_hi[m]",
                "chi_max[1]",
                "f_macro_nr[N/m^2]",
                "f_micro_nr[N/m^2]",
                "f_macro_r[N/m^2]",
                "f_micro_r[N/m^2]",
                "deviation_nr[1]",
                "deviation_r[1]",
                "deviation[1]",
            ];
            let starts = if points.is_empty() {
                vec![spec.z_lo.expect("checked when resolving")]
            } else {
                points
            };
            let out = sweep(&starts, |z| {
                let slab = slab_at(spec, z)?;
                let r = additivity_check(&slab, stack, quad)
                    .map_err(context(format!("check at z_lo = {z:e} m")))?;
                Ok((
                    vec![
                        slab.z_lo,
                        slab.z_hi,
                        r.max_susceptibility,
                        r.macro_force.f_nr,
                        r.micro_force.f_nr,
                        r.macro_force.f_r,
                        r.micro_force.f_r,
                        r.deviation_nr,
                        r.deviation_r,
                        r.deviation,
                    ],
                    r.macro_force.err_nr + r.macro_force.err_r,
                ))
            })?;
            (cols, out)
        }
    };
    Ok(Table {
        columns,
        rows,
        row_errors,
    })
}

type Columns = Vec<&'static str>;

fn green(
    stack: &LayerStack,
    fixed: GreenFixed,
    variable: Option<Variable>,
    points: &[f64],
    quad: &QuadratureSpec,
) -> Result<(Columns, (Vec<Vec<f64>>, Vec<f64>)), CliError> {
    let imaginary = matches!(fixed, GreenFixed::Xi(_)) || variable == Some(Variable::Xi);
    let freq_col = if imaginary {
        "xi[rad/s]"
    } else {
        "omega[rad/s]"
    };
    let cols = vec![freq_col, "z[m]", "re_trG[1/m]", "im_trG[1/m]", "err[1/m]"];
    let out = sweep(points, |x| {
        let (w, z) = match fixed {
            GreenFixed::Omega(w) | GreenFixed::Xi(w) => (w, x),
            GreenFixed::Height(z) => (x, z),
        };
        let omega = if imaginary {
            Complex64::new(0.0, w)
        } else {
            Complex64::new(w, 0.0)
        };
        let g = green_trace(stack, z, omega, quad).map_err(context(format!(
            "green at {} = {w:e} rad/s, z = {z:e} m",
            if imaginary { "xi" } else { "omega" }
        )))?;
        Ok((vec![w, z, g.value.re, g.value.im, g.err], g.err))
    })?;
    Ok((cols, out))
}
