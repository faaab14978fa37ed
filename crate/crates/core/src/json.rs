//! JSON documents for materials, atoms and layer stacks.
//!
//! Frequencies are in rad/s unless the enclosing object sets
//! `"unit": "eV"`; an oscillator or transition may override the unit of its
//! parent. Lengths are in metres, dipole strengths `d2` in C² m².
//!
//! ```json
//! {
//!   "materials": {
//!     "gold-ish": {"unit": "eV", "background": 1.0,
//!                  "oscillators": [{"omega0": 3.0, "omegap": 9.0, "gamma": 0.1}]}
//!   },
//!   "below": "gold-ish",
//!   "layers": [{"material": "vacuum", "thickness": 1e-8}],
//!   "above": "vacuum"
//! }
//! ```
//!
//! Material references are ids, the reserved names `"vacuum"` and
//! `"perfect_mirror"`, or inline material objects. Error messages name the
//! offending JSON path.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::constants::RAD_S_PER_EV;
use crate::greens::{Layer, LayerStack, Medium};
use crate::materials::{AtomModel, AtomTransition, LorentzOscillator, PermittivityModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrequencyUnit {
    #[default]
    #[serde(rename = "rad_s")]
    RadPerSecond,
    #[serde(rename = "eV")]
    ElectronVolt,
}

impl FrequencyUnit {
    pub fn to_rad_s(self, value: f64) -> f64 {
        match self {
            FrequencyUnit::RadPerSecond => value,
            FrequencyUnit::ElectronVolt => value * RAD_S_PER_EV,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorDoc {
    pub omega0: f64,
    pub omegap: f64,
    pub gamma: f64,
    #[serde(default)]
    pub inverted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<FrequencyUnit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDoc {
    #[serde(default = "one")]
    pub background: f64,
    #[serde(default)]
    pub oscillators: Vec<OscillatorDoc>,
    #[serde(default)]
    pub unit: FrequencyUnit,
}

fn one() -> f64 {
    1.0
}

impl MaterialDoc {
    pub fn build(&self, path: &str) -> Result<PermittivityModel> {
        let oscillators = self
            .oscillators
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let u = o.unit.unwrap_or(self.unit);
                LorentzOscillator::new(
                    u.to_rad_s(o.omega0),
                    u.to_rad_s(o.omegap),
                    u.to_rad_s(o.gamma),
                    o.inverted,
                )
                .map_err(|e| at_path(&format!("{path}.oscillators[{i}]"), e))
            })
            .collect::<Result<Vec<_>>>()?;
        PermittivityModel::new(self.background, oscillators).map_err(|e| at_path(path, e))
    }
}

impl From<&PermittivityModel> for MaterialDoc {
    fn from(m: &PermittivityModel) -> Self {
        MaterialDoc {
            background: m.background(),
            oscillators: m
                .oscillators()
                .iter()
                .map(|o| OscillatorDoc {
                    omega0: o.omega0,
                    omegap: o.omegap,
                    gamma: o.gamma,
                    inverted: o.inverted,
                    unit: None,
                })
                .collect(),
            unit: FrequencyUnit::RadPerSecond,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDoc {
    /// Signed; negative for a downward (emitting) transition.
    pub omega_kn: f64,
    pub d2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<FrequencyUnit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    pub transitions: Vec<TransitionDoc>,
    /// Regulator of real-frequency polarizabilities; defaults to
    /// `1e-6·min|ω_kn|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linewidth_epsilon: Option<f64>,
    #[serde(default)]
    pub unit: FrequencyUnit,
}

impl AtomDoc {
    pub fn build(&self, path: &str) -> Result<AtomModel> {
        let transitions = self
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let u = t.unit.unwrap_or(self.unit);
                AtomTransition::new(u.to_rad_s(t.omega_kn), t.d2)
                    .map_err(|e| at_path(&format!("{path}.transitions[{i}]"), e))
            })
            .collect::<Result<Vec<_>>>()?;
        match self.linewidth_epsilon {
            Some(eps) => AtomModel::with_linewidth(transitions, self.unit.to_rad_s(eps)),
            None => AtomModel::new(transitions),
        }
        .map_err(|e| at_path(path, e))
    }
}

/// A material given by id or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialRef {
    Id(String),
    Inline(MaterialDoc),
}

impl MaterialRef {
    pub fn resolve(
        &self,
        materials: &BTreeMap<String, PermittivityModel>,
        path: &str,
    ) -> Result<Medium> {
        match self {
            MaterialRef::Id(id) => match id.as_str() {
                "vacuum" => Ok(Medium::vacuum()),
                "perfect_mirror" => Ok(Medium::PerfectConductor),
                _ => materials
                    .get(id)
                    .cloned()
                    .map(Medium::Dielectric)
                    .ok_or_else(|| {
                        Error::InvalidModel(format!("{path}: unknown material id \"{id}\""))
                    }),
            },
            MaterialRef::Inline(doc) => doc.build(path).map(Medium::Dielectric),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub material: MaterialRef,
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackDoc {
    /// Materials local to this document, merged over the caller's.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub materials: BTreeMap<String, MaterialDoc>,
    pub below: MaterialRef,
    #[serde(default)]
    pub layers: Vec<LayerDoc>,
    #[serde(default = "vacuum_ref")]
    pub above: MaterialRef,
    #[serde(default)]
    pub allow_gain: bool,
}

fn vacuum_ref() -> MaterialRef {
    MaterialRef::Id("vacuum".into())
}

impl StackDoc {
    pub fn build(
        &self,
        materials: &BTreeMap<String, PermittivityModel>,
        path: &str,
    ) -> Result<LayerStack> {
        let mut all = materials.clone();
        all.extend(build_materials(
            &self.materials,
            &format!("{path}.materials"),
        )?);
        let below = self.below.resolve(&all, &format!("{path}.below"))?;
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let p = format!("{path}.layers[{i}]");
                Ok(Layer {
                    medium: l.material.resolve(&all, &format!("{p}.material"))?,
                    thickness: l.thickness,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let above = self.above.resolve(&all, &format!("{path}.above"))?;
        Ok(LayerStack::new(below, layers, above)
            .map_err(|e| at_path(path, e))?
            .allow_gain(self.allow_gain))
    }
}

pub fn build_materials(
    docs: &BTreeMap<String, MaterialDoc>,
    path: &str,
) -> Result<BTreeMap<String, PermittivityModel>> {
    docs.iter()
        .map(|(id, doc)| {
            if id == "vacuum" || id == "perfect_mirror" {
                return Err(Error::InvalidModel(format!(
                    "{path}.{id}: \"{id}\" is a reserved material id"
                )));
            }
            Ok((id.clone(), doc.build(&format!("{path}.{id}"))?))
        })
        .collect()
}

fn at_path(path: &str, e: Error) -> Error {
    match e {
        Error::InvalidModel(m) => Error::InvalidModel(format!("{path}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{path}: {m}")),
        other => other,
    }
}

/// Deserializes `text`, reporting the JSON path of the first mismatch.
pub fn from_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::InvalidModel(format!("{path}: {}", e.into_inner()))
    })
}

/// Deserializes a `serde_json::Value` found at `base`.
pub fn from_value<T: DeserializeOwned>(value: &serde_json::Value, base: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let full = if path == "." {
            base.to_string()
        } else {
            format!("{base}.{path}")
        };
        Error::InvalidModel(format!("{full}: {}", e.into_inner()))
    })
}

pub fn material_from_json(text: &str) -> Result<PermittivityModel> {
    from_str::<MaterialDoc>(text)?.build("$")
}

pub fn atom_from_json(text: &str) -> Result<AtomModel> {
    from_str::<AtomDoc>(text)?.build("$")
}

pub fn stack_from_json(text: &str) -> Result<LayerStack> {
    from_str::<StackDoc>(text)?.build(&BTreeMap::new(), "$")
}
