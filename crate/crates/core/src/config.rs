//! Declarative experiment configuration (JSON, unknown keys rejected).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{EquivalenceRule, LogRegConfig};
use crate::datagen::{DatasetSpec, TaskSpec};
use crate::model::{CoreKind, CoreStructure, TrainConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Gated {
        core: CoreKind,
        /// Filter count; output filters for asymmetric cores, `rows·cols`
        /// for topographic ones.
        num_factors: usize,
        hidden: usize,
    },
    SquarePooling { filters: usize, hidden: usize },
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Gated {
                core,
                num_factors,
                hidden,
            } => {
                if *hidden == 0 {
                    return Err(Error::Config("model.hidden must be positive".into()));
                }
                CoreStructure::new(core.clone(), *num_factors)
                    .map(|_| ())
                    .map_err(|e| Error::Config(format!("model: {e}")))
            }
            ModelConfig::SquarePooling { filters, hidden } => {
                if *filters == 0 || *hidden == 0 {
                    return Err(Error::Config("model.filters and model.hidden must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

/// One Table 1 row: a diagonal filter count and, optionally, the grouped
/// count to compare against (computed by `equivalence` when absent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Row {
    pub diagonal: usize,
    #[serde(default)]
    pub grouped: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesConfig {
    pub train_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub num_factors: usize,
    /// Training settings for the square-pooling baseline; the gated model
    /// uses the experiment's `train` section.
    #[serde(default)]
    pub pooling_train: Option<TrainConfig>,
    /// Scale epochs by `largest / size` so every size gets the same number
    /// of parameter updates.
    #[serde(default = "default_true")]
    pub equal_updates: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Config {
    pub tasks: Vec<TaskSpec>,
    pub rows: Vec<Table1Row>,
    pub group_size: usize,
    pub hidden: usize,
    #[serde(default)]
    pub equivalence: EquivalenceRule,
    #[serde(default)]
    pub curves: Option<CurvesConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub classifier: LogRegConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub table1: Option<Table1Config>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset
            .validate()
            .map_err(|e| Error::Config(format!("dataset: {e}")))?;
        self.model.validate()?;
        self.train
            .validate()
            .map_err(|e| Error::Config(format!("train: {e}")))?;
        if self.classifier.l2_grid.is_empty() || self.classifier.l2_grid.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("classifier.l2_grid must be nonempty and >= 0".into()));
        }
        if let Some(t) = &self.table1 {
            if t.tasks.is_empty() || t.rows.is_empty() {
                return Err(Error::Config("table1 needs tasks and rows".into()));
            }
            if t.group_size == 0 || t.hidden == 0 {
                return Err(Error::Config("table1.group_size and table1.hidden must be positive".into()));
            }
            if t.tasks.iter().any(|k| k.num_classes().is_none()) {
                return Err(Error::Config("table1 tasks must be labeled".into()));
            }
            if let Some(c) = &t.curves {
                if c.train_sizes.is_empty() || c.seeds.is_empty() || c.num_factors == 0 {
                    return Err(Error::Config("table1.curves needs sizes, seeds and num_factors".into()));
                }
            }
        }
        Ok(())
    }

    /// Applies the `--seed` override to data generation and training.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.dataset.seed = seed;
        self.train.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dataset": {"task": {"kind": "translation"}, "patch_size": 13,
                    "counts": {"train": 100, "valid": 50, "test": 50}, "seed": 1},
        "model": {"kind": "gated", "core": {"kind": "grouped", "group_size": 3},
                  "num_factors": 30, "hidden": 8},
        "train": {"learning_rate": 0.05, "minibatch_size": 100, "epochs": 2}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.classifier, LogRegConfig::default());
        assert_eq!(c.with_seed(9).train.seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("\"hidden\": 8", "\"hidden\": 8, \"hiden\": 8");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("\"epochs\": 2", "\"epochs\": 2, \"momentum\": 0.9");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = MINIMAL.replace("\"group_size\": 3", "\"group_size\": 0");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = MINIMAL.replace("\"minibatch_size\": 100", "\"minibatch_size\": 0");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }
}
