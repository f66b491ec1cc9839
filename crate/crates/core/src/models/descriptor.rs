use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IntegrableModel;
use crate::error::{Error, Result};

/// JSON form `{"model": name, "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub model: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn count(params: &BTreeMap<String, f64>, key: &str) -> Result<usize> {
    let v = param(params, key, 0.0);
    if v < 0.0 || v.fract() != 0.0 || v > 4.0 {
        return Err(Error::Parameter(format!(
            "params.{key} must be a small non-negative integer (got {v})"
        )));
    }
    Ok(v as usize)
}

impl ModelDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model descriptor: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }

    pub fn of(model: &IntegrableModel) -> Self {
        Self {
            model: model.name().to_string(),
            params: model.params(),
        }
    }

    pub fn build(&self) -> Result<IntegrableModel> {
        let allowed: &[&str] = match self.model.as_str() {
            "spherical_pendulum" | "spin_oscillator" => &[],
            "coupled_angular_momenta" => &["t", "a", "b"],
            "toric_product" => &["r1", "r2"],
            "local_model_Q" => &["k", "k_e", "k_h", "k_ff"],
            other => return Err(Error::Parameter(format!("unknown model `{other}`"))),
        };
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Parameter(format!(
                "params.{k} is not a parameter of {}",
                self.model
            )));
        }
        let p = &self.params;
        match self.model.as_str() {
            "spherical_pendulum" => Ok(IntegrableModel::spherical_pendulum()),
            "spin_oscillator" => Ok(IntegrableModel::spin_oscillator()),
            "coupled_angular_momenta" => IntegrableModel::coupled_angular_momenta(
                param(p, "t", 0.5),
                param(p, "a", 1.0),
                param(p, "b", 2.0),
            ),
            "toric_product" => {
                IntegrableModel::toric_product(param(p, "r1", 1.0), param(p, "r2", 1.0))
            }
            _ => IntegrableModel::local_model(
                count(p, "k")?,
                count(p, "k_e")?,
                count(p, "k_h")?,
                count(p, "k_ff")?,
            ),
        }
    }
}
