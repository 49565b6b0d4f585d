//! Run configuration: one JSON document, layered as preset → config file →
//! `--set key.path=value` overrides. Unknown keys are errors at every layer.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bo::BoConfig;
use crate::cards::CardsConfig;
use crate::dkl::DklConfig;
use crate::error::{Error, Result};
use crate::ferrosim::{FieldFamilyConfig, SimConfig};
use crate::vae::VaeConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolSource {
    Cards,
    Fields,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Existing dataset container; when absent the pool is generated from `source`.
    pub dataset: Option<PathBuf>,
    pub source: PoolSource,
    /// Target column name, or a suit name for one-vs-rest on the `suit` column.
    pub target: String,
    /// Fraction of rows held out from static DKL training.
    pub holdout_fraction: f64,
    /// Artifact directory read by export-plots.
    pub run_dir: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self { dataset: None, source: PoolSource::Cards, target: "hearts".into(), holdout_fraction: 0.0, run_dir: None }
    }
}

#[derive(Default, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBoSection {
    /// Also run the random-acquisition arm with the same seed set.
    pub baseline: bool,
    /// Evaluate field curves with FerroSIM instead of reading a target column.
    pub live_oracle: bool,
    /// Re-fit the surrogate at these steps after the run and require identical choices.
    pub replay_steps: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportSection {
    pub bins: usize,
    pub grid_n: usize,
    pub image_size: u32,
    pub hysteresis_amplitude: f64,
    pub hysteresis_periods: usize,
    pub hysteresis_steps_per_period: usize,
}

impl Default for ExportSection {
    fn default() -> Self {
        Self {
            bins: 20,
            grid_n: 25,
            image_size: 800,
            hysteresis_amplitude: 2.0,
            hysteresis_periods: 1,
            hysteresis_steps_per_period: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckSection {
    pub seeds: u64,
    pub tolerance: f64,
}

impl Default for GradCheckSection {
    fn default() -> Self {
        Self { seeds: 10, tolerance: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    pub cards: CardsConfig,
    pub fields: FieldFamilyConfig,
    pub ferrosim: SimConfig,
    pub dkl: DklConfig,
    pub vae: VaeConfig,
    pub bo: BoConfig,
    pub run_bo: RunBoSection,
    pub data: DataSection,
    pub export: ExportSection,
    pub grad_check: GradCheckSection,
}

pub const PRESETS: [&str; 3] = ["full", "desk-cards", "desk-ferrosim"];

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self::default();
        match name {
            "full" => {}
            "desk-cards" => {
                c.cards = CardsConfig { per_suit: 500, size: 16 };
                c.bo.n_init = 30;
                c.bo.n_steps = 120;
                c.dkl.hidden_sizes = vec![32, 32];
                c.dkl.steps = 100;
            }
            "desk-ferrosim" => {
                c.data.source = PoolSource::Fields;
                c.data.target = "curl".into();
                c.fields.n_curves = 1000;
                c.ferrosim.size = 16;
                c.bo.n_init = 30;
                c.bo.n_steps = 60;
                c.dkl.hidden_sizes = vec![32, 32];
                c.dkl.steps = 100;
                c.vae.hidden_sizes = vec![64, 32];
            }
            other => return Err(Error::Config(format!("unknown preset `{other}`; expected one of {PRESETS:?}"))),
        }
        Ok(c)
    }

    /// Layers a partial JSON document over `self`.
    pub fn merged(&self, patch: &Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, patch, "")?;
        from_value(base)
    }

    /// Applies one `key.path=value` override. The value is parsed as JSON
    /// when possible and taken as a string otherwise.
    pub fn with_override(&self, assignment: &str) -> Result<Self> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut base = serde_json::to_value(self)?;
        let mut slot = &mut base;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| Error::Config(format!("unknown configuration key `{path}`")))?;
        }
        *slot = value;
        from_value(base)
    }
}

fn from_value(v: Value) -> Result<RunConfig> {
    serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
}

fn merge(base: &mut Value, patch: &Value, path: &str) -> Result<()> {
    match (base.as_object_mut(), patch.as_object()) {
        (Some(b), Some(p)) => {
            for (k, v) in p {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                let slot = b.get_mut(k).ok_or_else(|| Error::Config(format!("unknown configuration key `{here}`")))?;
                merge(slot, v, &here)?;
            }
            Ok(())
        }
        _ => {
            *base = patch.clone();
            Ok(())
        }
    }
}
