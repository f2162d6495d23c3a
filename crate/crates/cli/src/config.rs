use std::path::{Path, PathBuf};

use mane_core::lagrangian::{LagrangianModel, ModelSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Dynamical system the stages act on when they accept more than one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Lagrangian(ModelSpec),
    CatMap,
}

impl SystemSpec {
    pub fn lagrangian(&self) -> Option<mane_core::Result<LagrangianModel>> {
        match self {
            SystemSpec::Lagrangian(m) => Some(LagrangianModel::from_spec(m)),
            SystemSpec::CatMap => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub module: String,
    pub op: String,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub pipeline: Vec<StageConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl ConfigError {
    pub fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field { path: path.into(), message: message.into() }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::field(if path == "." { "config".into() } else { path }, e.into_inner().to_string())
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::field(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
        ));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Deserialize stage parameters, reporting the offending field by path.
pub fn decode_params<T: serde::de::DeserializeOwned>(index: usize, params: &Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(params).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { format!("pipeline[{index}].params") } else { format!("pipeline[{index}].params.{path}") };
        ConfigError::field(at, e.into_inner().to_string())
    })
}

/// Independent stream per stage, so inserting a stage leaves the others unchanged.
pub fn stage_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_is_located() {
        let e = parse_config(r#"{"schema_version": 1, "pipeline": [{"module": "sft", "op": "girth", "parms": {}}]}"#)
            .unwrap_err();
        assert!(e.to_string().starts_with("pipeline[0]"), "{e}");
    }

    #[test]
    fn version_is_checked() {
        let e = parse_config(r#"{"schema_version": 2}"#).unwrap_err();
        assert!(e.to_string().starts_with("schema_version"));
    }

    #[test]
    fn system_spec_round_trip() {
        let cfg = parse_config(
            r#"{"schema_version": 1, "system": {"kind": "lagrangian", "dim": 1, "potential": "cos"}}"#,
        )
        .unwrap();
        let m = cfg.system.unwrap().lagrangian().unwrap().unwrap();
        assert_eq!(m, LagrangianModel::pendulum());
    }
}
