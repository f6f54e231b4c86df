use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuous::{RealEta, VectorMultiset, ZLaw};
use crate::error::{Error, Result};
use crate::inverse_engine::Calibration;
use crate::rational::{self, Rational};
use crate::walks::EtaSpec;
use crate::StepMultiset;

/// Checked-in schema for [`ExperimentConfig`].
pub const CONFIG_SCHEMA: &str = include_str!("../../schemas/experiment_config.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Exact DP against full enumeration.
    Oracle,
    /// All-ones sharpness plus random nonzero multisets.
    Erdos,
    /// Every distinct `n`-subset of `[-6, 6]` for odd `n <= 7`.
    Stanley,
    /// `rho(V mod p) <= product bound <= exponential bound`.
    Fourier,
    /// Every forward suite in turn.
    Forward,
    /// Measures the pinned constants.
    Calibrate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    /// Instances per suite.
    pub count: usize,
    /// Planted rank for corpora that take one; `0` alternates 1 and 2.
    pub rank: usize,
    /// Volume exponent `C`.
    pub c: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Exceptional fraction, as a rational string.
    pub epsilon: String,
    /// `n' = n / n_prime_divisor` for budget runs.
    pub n_prime_divisor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub report: String,
    pub csv: String,
}

/// Every field is required and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub generator: GeneratorParams,
    pub constants: Calibration,
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn epsilon(&self) -> Result<Rational> {
        rational::parse(&self.generator.epsilon)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.generator;
        if g.n_min == 0 || g.n_min > g.n_max {
            return Err(Error::InvalidInput(
                "generator needs 1 <= n_min <= n_max".into(),
            ));
        }
        if g.n_prime_divisor == 0 {
            return Err(Error::InvalidInput(
                "n_prime_divisor must be positive".into(),
            ));
        }
        if !(g.c > 0.0) {
            return Err(Error::InvalidInput("generator.c must be positive".into()));
        }
        self.epsilon()?;
        Ok(())
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

/// `{"values": [...], "eta": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoInstance {
    pub values: Vec<i64>,
    pub eta: EtaSpec,
}

impl RhoInstance {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("instance: {e}")))
    }

    pub fn multiset(&self) -> Result<StepMultiset> {
        StepMultiset::new(self.values.iter().copied())
    }
}

/// `{"d", "vectors", "beta", "z", "seed"}`, all required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorInstance {
    pub d: usize,
    pub vectors: Vec<Vec<f64>>,
    pub beta: f64,
    pub z: ZLaw,
    pub seed: u64,
}

impl VectorInstance {
    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Self =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("instance: {e}")))?;
        if inst.vectors.iter().any(|v| v.len() != inst.d) {
            return Err(Error::InvalidInput(format!(
                "every vector must have d = {} coordinates",
                inst.d
            )));
        }
        Ok(inst)
    }

    /// Normalizes to unit total squared norm.
    pub fn multiset(&self) -> Result<VectorMultiset> {
        VectorMultiset::new(self.vectors.clone())
    }

    pub fn eta(&self) -> Result<RealEta> {
        RealEta::new(self.z.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "experiment": "erdos",
        "seed": 1,
        "generator": {"count": 5, "rank": 0, "c": 1.5, "n_min": 1, "n_max": 10, "epsilon": "1/10", "n_prime_divisor": 10},
        "constants": CONSTANTS,
        "output": {"report": "r.json", "csv": "r.csv"}
    }"#;

    fn good() -> String {
        GOOD.replace(
            "CONSTANTS",
            &serde_json::to_string(&Calibration::pinned()).unwrap(),
        )
    }

    #[test]
    fn parses() {
        let c = ExperimentConfig::from_json(&good()).unwrap();
        assert_eq!(c.experiment, Experiment::Erdos);
        assert_eq!(c.epsilon().unwrap(), rational::ratio(1, 10));
    }

    #[test]
    fn unknown_and_missing_keys() {
        let extra = good().replace("\"seed\": 1,", "\"seed\": 1, \"colour\": 2,");
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let missing = good().replace("\"seed\": 1,", "");
        assert!(ExperimentConfig::from_json(&missing).is_err());
        let nested = good().replace("\"csv\": \"r.csv\"", "\"csv\": \"r.csv\", \"png\": \"x\"");
        assert!(ExperimentConfig::from_json(&nested).is_err());
    }

    #[test]
    fn schema_lists_every_field() {
        let schema: serde_json::Value = serde_json::from_str(CONFIG_SCHEMA).unwrap();
        let cfg: serde_json::Value = serde_json::from_str(&good()).unwrap();
        fn check(
            root: &serde_json::Value,
            schema: &serde_json::Value,
            value: &serde_json::Value,
            path: &str,
        ) {
            let Some(obj) = value.as_object() else { return };
            let schema = match schema["$ref"].as_str() {
                Some(r) => &root["$defs"][r.trim_start_matches("#/$defs/")],
                None => schema,
            };
            let props = schema["properties"]
                .as_object()
                .unwrap_or_else(|| panic!("{path}: no properties"));
            let required: Vec<&str> = schema["required"]
                .as_array()
                .unwrap_or_else(|| panic!("{path}: no required list"))
                .iter()
                .map(|v| v.as_str().unwrap())
                .collect();
            assert_eq!(
                schema["additionalProperties"],
                serde_json::Value::Bool(false),
                "{path}"
            );
            for key in obj.keys() {
                assert!(props.contains_key(key), "{path}.{key} missing from schema");
                assert!(
                    required.contains(&key.as_str()),
                    "{path}.{key} not required"
                );
                check(root, &props[key], &obj[key], &format!("{path}.{key}"));
            }
            assert_eq!(
                props.len(),
                obj.len(),
                "{path}: schema has extra properties"
            );
        }
        check(&schema, &schema, &cfg, "$");
    }

    #[test]
    fn instances() {
        let r =
            RhoInstance::from_json(r#"{"values":[1,2,3],"eta":{"label":"bernoulli"}}"#).unwrap();
        assert_eq!(r.values.len(), 3);
        assert!(
            RhoInstance::from_json(r#"{"values":[1],"eta":{"label":"bernoulli"},"x":0}"#).is_err()
        );
        let v = r#"{"d":1,"vectors":[[1.0],[2.0]],"beta":0.1,"z":{"kind":"bernoulli"}}"#;
        assert!(VectorInstance::from_json(v).is_err());
        let v = r#"{"d":1,"vectors":[[1.0],[2.0]],"beta":0.1,"z":{"kind":"bernoulli"},"seed":3}"#;
        assert_eq!(VectorInstance::from_json(v).unwrap().seed, 3);
        let v = r#"{"d":2,"vectors":[[1.0],[2.0]],"beta":0.1,"z":{"kind":"bernoulli"},"seed":3}"#;
        assert!(VectorInstance::from_json(v).is_err());
    }
}
