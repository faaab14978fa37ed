//! Scenario documents: one JSON file describing a task, its inputs and a sweep.

use std::collections::BTreeMap;

use casimir_gain::greens::LayerStack;
use casimir_gain::json::{self, AtomDoc, FrequencyUnit, MaterialDoc, MaterialRef, StackDoc};
use casimir_gain::materials::{AtomModel, PermittivityModel};
use casimir_gain::numerics::QuadratureSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Material,
    Green,
    Cp,
    ForceSlab,
    ForcePlates,
    Check,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Material => "material",
            Task::Green => "green",
            Task::Cp => "cp",
            Task::ForceSlab => "force-slab",
            Task::ForcePlates => "force-plates",
            Task::Check => "check",
        }
    }

    fn sweep_variables(self) -> &'static [Variable] {
        match self {
            Task::Material => &[Variable::Omega, Variable::Xi],
            Task::Green => &[Variable::Z, Variable::Omega, Variable::Xi],
            Task::Cp | Task::ForceSlab | Task::Check => &[Variable::Z],
            Task::ForcePlates => &[Variable::Gap],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Z,
    Gap,
    Omega,
    Xi,
}

impl Variable {
    pub fn column(self) -> &'static str {
        match self {
            Variable::Z => "z[m]",
            Variable::Gap => "gap[m]",
            Variable::Omega => "omega[rad/s]",
            Variable::Xi => "xi[rad/s]",
        }
    }

    fn is_frequency(self) -> bool {
        matches!(self, Variable::Omega | Variable::Xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub variable: Variable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Unit of `min`/`max` for frequency sweeps.
    #[serde(default)]
    pub unit: FrequencyUnit,
}

impl SweepDoc {
    /// Sweep values in SI units, in order.
    pub fn values(&self) -> Vec<f64> {
        let (lo, hi) = (self.unit_factor(self.min), self.unit_factor(self.max));
        if self.points == 1 {
            return vec![lo];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / n;
                if i == self.points - 1 {
                    hi
                } else {
                    match self.spacing {
                        Spacing::Linear => lo + (hi - lo) * t,
                        Spacing::Log => lo * (hi / lo).powf(t),
                    }
                }
            })
            .collect()
    }

    fn unit_factor(&self, v: f64) -> f64 {
        if self.variable.is_frequency() {
            self.unit.to_rad_s(v)
        } else {
            v
        }
    }

    fn validate(&self, task: Task) -> Result<(), CliError> {
        let allowed = task.sweep_variables();
        if !allowed.contains(&self.variable) {
            let names: Vec<String> = allowed
                .iter()
                .map(|v| serde_json::to_string(v).unwrap_or_default())
                .collect();
            return Err(CliError::schema(format!(
                "sweep.variable: task {} sweeps over {}",
                task.name(),
                names.join(" or ")
            )));
        }
        if self.points == 0 {
            return Err(CliError::schema("sweep.points: must be at least 1"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max >= self.min) {
            return Err(CliError::schema(format!(
                "sweep: need finite min <= max (got {}, {})",
                self.min, self.max
            )));
        }
        let positive = !self.variable.is_frequency() || self.spacing == Spacing::Log;
        if positive && self.min <= 0.0 {
            return Err(CliError::schema(format!(
                "sweep.min: must be > 0 for a {} sweep (got {})",
                serde_json::to_string(&self.variable).unwrap_or_default(),
                self.min
            )));
        }
        if self.min < 0.0 {
            return Err(CliError::schema(format!(
                "sweep.min: frequencies must be >= 0 (got {})",
                self.min
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesDoc {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub max_matsubara_terms: Option<usize>,
}

impl TolerancesDoc {
    pub fn spec(&self) -> QuadratureSpec {
        let d = QuadratureSpec::default();
        QuadratureSpec {
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            max_subdivisions: self.max_subdivisions.unwrap_or(d.max_subdivisions),
            max_matsubara_terms: self.max_matsubara_terms.unwrap_or(d.max_matsubara_terms),
            ..d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomRef {
    Id(String),
    Inline(AtomDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StackRef {
    Id(String),
    Inline(Box<StackDoc>),
}

/// Fixed coordinates of a Green-trace dump; the swept one is left out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenDoc {
    pub z: Option<f64>,
    pub omega: Option<f64>,
    pub xi: Option<f64>,
    #[serde(default)]
    pub unit: FrequencyUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabDoc {
    /// Number density, 1/m³.
    pub eta: f64,
    pub z_lo: Option<f64>,
    pub z_hi: Option<f64>,
    pub thickness: Option<f64>,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
}

fn default_layers() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatesDoc {
    pub a: MaterialRef,
    pub b: MaterialRef,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub task: Option<Task>,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialDoc>,
    #[serde(default)]
    pub atoms: BTreeMap<String, AtomDoc>,
    #[serde(default)]
    pub stacks: BTreeMap<String, StackDoc>,
    pub sweep: Option<SweepDoc>,
    #[serde(default)]
    pub tolerances: TolerancesDoc,
    /// Kelvin.
    pub temperature: Option<f64>,
    pub material: Option<MaterialRef>,
    pub atom: Option<AtomRef>,
    pub stack: Option<StackRef>,
    pub green: Option<GreenDoc>,
    pub slab: Option<SlabDoc>,
    pub plates: Option<PlatesDoc>,
}

impl ScenarioDoc {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        json::from_str(text).map_err(CliError::from)
    }
}

/// Green-trace evaluation point with the swept coordinate unset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenFixed {
    /// Sweep over z at fixed real frequency.
    Omega(f64),
    /// Sweep over z at fixed imaginary frequency.
    Xi(f64),
    /// Sweep over frequency at fixed height.
    Height(f64),
}

/// Slab geometry before the sweep shifts it.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSpec {
    pub atom: AtomModel,
    pub eta: f64,
    pub z_lo: Option<f64>,
    pub thickness: f64,
    pub n_layers: usize,
}

/// A scenario with every reference resolved.
#[derive(Debug, Clone)]
pub enum Resolved {
    Material(PermittivityModel),
    Green(LayerStack, GreenFixed),
    Cp(AtomModel, LayerStack),
    ForceSlab(SlabSpec, LayerStack),
    ForcePlates(PermittivityModel, PermittivityModel),
    Check(SlabSpec, LayerStack),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub sweep: Option<SweepDoc>,
    pub quad: QuadratureSpec,
    pub temperature: Option<f64>,
    pub inputs: Resolved,
}

fn require<'a, T>(v: &'a Option<T>, path: &str, task: Task) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::schema(format!("{path}: required by task {}", task.name())))
}

fn positive(v: f64, path: &str) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::schema(format!("{path}: must be > 0 (got {v})")))
    }
}

impl ScenarioDoc {
    /// Resolves ids and checks that the document fits `task`.
    pub fn resolve(&self, task: Task, allow_gain_stack: bool) -> Result<Scenario, CliError> {
        if let Some(t) = self.task {
            if t != task {
                return Err(CliError::schema(format!(
                    "task: scenario is for task {}, invoked as {}",
                    t.name(),
                    task.name()
                )));
            }
        }
        let quad = self.tolerances.spec();
        quad.validate()
            .map_err(|e| CliError::schema(format!("tolerances: {e}")))?;
        if let Some(t) = self.temperature {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::schema(format!(
                    "temperature: must be >= 0 K (got {t})"
                )));
            }
        }
        match &self.sweep {
            Some(s) => s.validate(task)?,
            None if task != Task::Check => {
                return Err(CliError::schema(format!(
                    "sweep: required by task {}",
                    task.name()
                )))
            }
            None => {}
        }

        let materials = json::build_materials(&self.materials, "materials")?;
        let atom = |path: &str| -> Result<AtomModel, CliError> {
            match require(&self.atom, path, task)? {
                AtomRef::Id(id) => self
                    .atoms
                    .get(id)
                    .ok_or_else(|| CliError::schema(format!("{path}: unknown atom id \"{id}\"")))?
                    .build(&format!("atoms.{id}"))
                    .map_err(CliError::from),
                AtomRef::Inline(doc) => doc.build(path).map_err(CliError::from),
            }
        };
        let stack = |path: &str| -> Result<LayerStack, CliError> {
            let s = match require(&self.stack, path, task)? {
                StackRef::Id(id) => self
                    .stacks
                    .get(id)
                    .ok_or_else(|| CliError::schema(format!("{path}: unknown stack id \"{id}\"")))?
                    .build(&materials, &format!("stacks.{id}"))?,
                StackRef::Inline(doc) => doc.build(&materials, path)?,
            };
            let allow = s.gain_allowed() || allow_gain_stack;
            Ok(s.allow_gain(allow))
        };
        let dielectric = |r: &MaterialRef, path: &str| -> Result<PermittivityModel, CliError> {
            match r {
                MaterialRef::Id(id) if id == "vacuum" => Ok(PermittivityModel::vacuum()),
                MaterialRef::Id(id) if id == "perfect_mirror" => Err(CliError::schema(format!(
                    "{path}: a perfect mirror has no permittivity; use a large constant instead"
                ))),
                MaterialRef::Id(id) => materials.get(id).cloned().ok_or_else(|| {
                    CliError::schema(format!("{path}: unknown material id \"{id}\""))
                }),
                MaterialRef::Inline(doc) => doc.build(path).map_err(CliError::from),
            }
        };
        let slab = |path: &str| -> Result<SlabSpec, CliError> {
            let doc = require(&self.slab, path, task)?;
            if !(doc.eta >= 0.0 && doc.eta.is_finite()) {
                return Err(CliError::schema(format!(
                    "{path}.eta: density must be >= 0 (got {})",
                    doc.eta
                )));
            }
            if doc.n_layers == 0 {
                return Err(CliError::schema(format!(
                    "{path}.n_layers: must be at least 1"
                )));
            }
            let z_lo = doc
                .z_lo
                .map(|z| positive(z, &format!("{path}.z_lo")))
                .transpose()?;
            let thickness = match (doc.thickness, z_lo, doc.z_hi) {
                (Some(d), _, None) => positive(d, &format!("{path}.thickness"))?,
                (None, Some(lo), Some(hi)) => positive(hi - lo, &format!("{path}.z_hi - z_lo"))?,
                _ => {
                    return Err(CliError::schema(format!(
                        "{path}: give either thickness or both z_lo and z_hi"
                    )))
                }
            };
            Ok(SlabSpec {
                atom: atom("atom")?,
                eta: doc.eta,
                z_lo,
                thickness,
                n_layers: doc.n_layers,
            })
        };

        let inputs = match task {
            Task::Material => Resolved::Material(dielectric(
                require(&self.material, "material", task)?,
                "material",
            )?),
            Task::Green => {
                let g = require(&self.green, "green", task)?;
                let variable = self.sweep.as_ref().map(|s| s.variable);
                let fixed = match (variable, g.z, g.omega, g.xi) {
                    (Some(Variable::Z), None, Some(w), None) => {
                        GreenFixed::Omega(positive(g.unit.to_rad_s(w), "green.omega")?)
                    }
                    (Some(Variable::Z), None, None, Some(x)) => {
                        GreenFixed::Xi(positive(g.unit.to_rad_s(x), "green.xi")?)
                    }
                    (Some(Variable::Omega | Variable::Xi), Some(z), None, None) => {
                        GreenFixed::Height(positive(z, "green.z")?)
                    }
                    _ => {
                        return Err(CliError::schema(
                            "green: a z sweep needs exactly one of omega or xi; a frequency \
                             sweep needs z only",
                        ))
                    }
                };
                Resolved::Green(stack("stack")?, fixed)
            }
            Task::Cp => Resolved::Cp(atom("atom")?, stack("stack")?),
            Task::ForceSlab => Resolved::ForceSlab(slab("slab")?, stack("stack")?),
            Task::ForcePlates => {
                let p = require(&self.plates, "plates", task)?;
                Resolved::ForcePlates(dielectric(&p.a, "plates.a")?, dielectric(&p.b, "plates.b")?)
            }
            Task::Check => {
                let s = slab("slab")?;
                if s.z_lo.is_none() && self.sweep.is_none() {
                    return Err(CliError::schema(
                        "slab.z_lo: required by task check without a sweep",
                    ));
                }
                Resolved::Check(s, stack("stack")?)
            }
        };
        if task != Task::Green && task != Task::Material && self.green.is_some() {
            log::warn!("green section ignored by task {}", task.name());
        }
        Ok(Scenario {
            sweep: self.sweep.clone(),
            quad,
            temperature: self.temperature,
            inputs,
        })
    }
}
