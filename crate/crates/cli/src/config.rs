//! Experiment configuration files.
//!
//! A configuration is a JSON object. Each block is decoded on its own so
//! that errors name the block they come from (`fields[1]`, `grids`, ...).

use lightcone::fields::{AnalyticField, FieldSpec};
use lightcone::geometry::OddDimension;
use lightcone::identities::Grids;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RadonSelftest,
    IsometryU,
    IsometryV,
    InvertUFirst,
    InvertVFirst,
    AdjointU,
    AdjointV,
    InvertUSecond,
    InvertVSecond,
    MeanIsometry,
    MeanInvert,
    RouteXcheck,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::RadonSelftest => "radon-selftest",
            Experiment::IsometryU => "isometry-u",
            Experiment::IsometryV => "isometry-v",
            Experiment::InvertUFirst => "invert-u-first",
            Experiment::InvertVFirst => "invert-v-first",
            Experiment::AdjointU => "adjoint-u",
            Experiment::AdjointV => "adjoint-v",
            Experiment::InvertUSecond => "invert-u-second",
            Experiment::InvertVSecond => "invert-v-second",
            Experiment::MeanIsometry => "mean-isometry",
            Experiment::MeanInvert => "mean-invert",
            Experiment::RouteXcheck => "route-xcheck",
            Experiment::Sweep => "sweep",
        }
    }

    /// Number of field blocks the experiment reads.
    pub fn field_count(self) -> usize {
        match self {
            Experiment::AdjointU | Experiment::AdjointV => 2,
            _ => 1,
        }
    }
}

/// Refinement levels of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// The experiment rerun at each level.
    pub base: Experiment,
    /// Sphere levels, strictly increasing, at least three.
    pub levels: Vec<usize>,
    /// Allowed growth of the error from one level to the next.
    #[serde(default = "default_band")]
    pub band: f64,
}

fn default_band() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_out() }
    }
}

fn default_out() -> String {
    "out".into()
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub fields: Vec<FieldSpec>,
    pub grids: Grids,
    /// Overrides of the default tolerances, by check name.
    pub tolerances: BTreeMap<String, f64>,
    /// Seed of random evaluation points.
    pub seed: u64,
    /// Number of random points of `route-xcheck`.
    pub points: usize,
    pub sweep: Option<SweepSpec>,
    /// Not part of the configuration hash.
    #[serde(skip)]
    pub output: OutputSpec,
}

/// A configuration that could not be used, with the block at fault.
#[derive(Debug, thiserror::Error)]
#[error("{block}: {message}")]
pub struct ConfigError {
    pub block: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(block: impl Into<String>, message: impl std::fmt::Display) -> Self {
        ConfigError { block: block.into(), message: message.to_string() }
    }
}

const KEYS: [&str; 9] = ["experiment", "dim", "fields", "grids", "tolerances", "seed", "points", "sweep", "output"];

fn decode<T: DeserializeOwned>(block: &str, v: Value) -> Result<T, ConfigError> {
    serde_json::from_value(v).map_err(|e| ConfigError::new(block, e))
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("config", e))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, ConfigError> {
        let Value::Object(mut obj) = value else {
            return Err(ConfigError::new("config", "expected a JSON object"));
        };
        if let Some(k) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(ConfigError::new(k.clone(), format!("unknown key, expected one of {}", KEYS.join(", "))));
        }
        let mut take = |k: &str| obj.remove(k);
        let experiment: Experiment =
            decode("experiment", take("experiment").ok_or_else(|| ConfigError::new("experiment", "missing"))?)?;
        let dim: usize = match take("dim") {
            Some(v) => decode("dim", v)?,
            None => 3,
        };
        let odd = OddDimension::new(dim).map_err(|e| ConfigError::new("dim", e))?;
        let fields: Vec<Value> = match take("fields") {
            Some(Value::Array(a)) => a,
            Some(_) => return Err(ConfigError::new("fields", "expected a list of field blocks")),
            None => return Err(ConfigError::new("fields", "missing")),
        };
        let fields = fields
            .into_iter()
            .enumerate()
            .map(|(i, v)| decode::<FieldSpec>(&format!("fields[{i}]"), v))
            .collect::<Result<Vec<_>, _>>()?;
        let grids: Grids = match take("grids") {
            Some(v) => decode("grids", v)?,
            None => Grids::reference(),
        };
        let tolerances: BTreeMap<String, f64> = match take("tolerances") {
            Some(v) => decode("tolerances", v)?,
            None => BTreeMap::new(),
        };
        let seed = match take("seed") {
            Some(v) => decode("seed", v)?,
            None => 7,
        };
        let points = match take("points") {
            Some(v) => decode("points", v)?,
            None => 30,
        };
        let sweep: Option<SweepSpec> = take("sweep").map(|v| decode("sweep", v)).transpose()?;
        let output: OutputSpec = match take("output") {
            Some(v) => decode("output", v)?,
            None => OutputSpec::default(),
        };
        let config = ExperimentConfig { experiment, dim, fields, grids, tolerances, seed, points, sweep, output };
        config.validate(odd)?;
        Ok(config)
    }

    fn validate(&self, dim: OddDimension) -> Result<(), ConfigError> {
        let base = match (self.experiment, &self.sweep) {
            (Experiment::Sweep, Some(s)) => {
                if s.base == Experiment::Sweep {
                    return Err(ConfigError::new("sweep", "a sweep cannot sweep sweeps"));
                }
                if s.levels.len() < 3 || s.levels[0] == 0 || s.levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(ConfigError::new("sweep", "levels must be at least three increasing positive integers"));
                }
                if !(s.band >= 0.0) {
                    return Err(ConfigError::new("sweep", "band must be non-negative"));
                }
                s.base
            }
            (Experiment::Sweep, None) => return Err(ConfigError::new("sweep", "missing")),
            (_, Some(_)) => return Err(ConfigError::new("sweep", "only allowed with experiment \"sweep\"")),
            (e, None) => e,
        };
        if self.fields.len() != base.field_count() {
            return Err(ConfigError::new(
                "fields",
                format!("{} expects {} field block(s), found {}", base.name(), base.field_count(), self.fields.len()),
            ));
        }
        for (i, f) in self.fields.iter().enumerate() {
            let field = f.build(dim).map_err(|e| ConfigError::new(format!("fields[{i}]"), e))?;
            if matches!(field.support(), lightcone::fields::Support::Everywhere) {
                return Err(ConfigError::new(format!("fields[{i}]"), "field must have bounded support"));
            }
        }
        self.grids.validate().map_err(|e| ConfigError::new("grids", e))?;
        for (k, v) in &self.tolerances {
            if !(*v >= 0.0) {
                return Err(ConfigError::new("tolerances", format!("{k} must be non-negative")));
            }
        }
        if self.points == 0 {
            return Err(ConfigError::new("points", "must be positive"));
        }
        Ok(())
    }

    pub fn odd_dim(&self) -> OddDimension {
        OddDimension::new(self.dim).expect("validated")
    }

    pub fn field(&self, i: usize) -> AnalyticField {
        self.fields[i].build(self.odd_dim()).expect("validated")
    }

    /// SHA-256 of the canonical JSON form (sorted keys, defaults filled in).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&serde_json::to_value(self).expect("serializable")).expect("serializable");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Value {
        serde_json::json!({
            "experiment": "isometry-u",
            "fields": [{"kind": "annular_bump", "a": 0.5, "b": 2.0}]
        })
    }

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_value(base()).unwrap();
        assert_eq!(c.dim, 3);
        assert_eq!(c.grids, Grids::reference());
        assert_eq!(c.output.dir, "out");
    }

    #[test]
    fn errors_name_the_block() {
        let mut v = base();
        v["fields"][0]["a"] = 0.0.into();
        let e = ExperimentConfig::from_value(v).unwrap_err();
        assert_eq!(e.block, "fields[0]");

        let mut v = base();
        v["grids"] = serde_json::json!({"sphere_levle": 4});
        let e = ExperimentConfig::from_value(v).unwrap_err();
        assert_eq!(e.block, "grids");
        assert!(e.message.contains("sphere_levle"));

        let mut v = base();
        v["colour"] = 1.into();
        assert_eq!(ExperimentConfig::from_value(v).unwrap_err().block, "colour");

        let mut v = base();
        v["experiment"] = "sweep".into();
        v["sweep"] = serde_json::json!({"base": "isometry-u", "levels": [8, 4, 16]});
        assert_eq!(ExperimentConfig::from_value(v).unwrap_err().block, "sweep");
    }

    #[test]
    fn hash_ignores_key_order_and_defaults() {
        let a = ExperimentConfig::from_json(r#"{"experiment":"isometry-u","fields":[{"kind":"zero"}]}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"fields":[{"kind":"zero"}],"seed":7,"experiment":"isometry-u"}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_json(r#"{"fields":[{"kind":"zero"}],"seed":8,"experiment":"isometry-u"}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
