//! Pipeline configuration shared by every command.
//!
//! Values are resolved in this order, later sources winning:
//! built-in defaults, then a TOML config file, then command-line flags.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingProviderConfig;
use crate::error::{Error, Result};
use crate::features::{Family, FeatureSchema};
use crate::gbdt::{budget_grid, grid_for, GbdtHyperParams, GridMode, Regularization};
use crate::schema::DEFAULT_ROW_CAP;
use crate::tagging::TaggerConfig;
use crate::value_features::DEFAULT_EPSILON;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub row_cap: usize,
    pub epsilon: f64,
    pub embedder: EmbeddingProviderConfig,
    pub tagger: TaggerConfig,
    pub grid: GridMode,
    /// Train on a seeded subsample of this many grid points.
    pub budget: Option<usize>,
    pub regularization: Regularization,
    /// When set, decisions threshold the mean ensemble score instead of member votes.
    pub threshold: Option<f64>,
    /// One-to-one pair selection; off emits every positive pair.
    pub assignment: bool,
    pub drop: BTreeSet<Family>,
    /// Worker cap; does not affect results, so it is left out of output snapshots.
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            row_cap: DEFAULT_ROW_CAP,
            epsilon: DEFAULT_EPSILON,
            embedder: EmbeddingProviderConfig::default(),
            tagger: TaggerConfig::default(),
            grid: GridMode::Full,
            budget: None,
            regularization: Regularization::default(),
            threshold: None,
            assignment: true,
            drop: BTreeSet::new(),
            jobs: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be a small positive number, got {}",
                self.epsilon
            )));
        }
        if self.row_cap == 0 {
            return Err(Error::Config("row cap must be at least 1".into()));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("threshold must lie in (0, 1), got {t}")));
            }
        }
        if self.budget == Some(0) {
            return Err(Error::Config("grid budget must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        let r = &self.regularization;
        if !(r.lambda >= 0.0 && r.gamma >= 0.0 && r.min_child_weight >= 0.0) {
            return Err(Error::Config("regularization terms must be non-negative".into()));
        }
        self.embedder.validate()?;
        self.tagger.validate()
    }

    pub fn feature_schema(&self) -> FeatureSchema {
        FeatureSchema::new(self.drop.clone())
    }

    /// The hyperparameter points searched per fold.
    pub fn search_grid(&self) -> Vec<GbdtHyperParams> {
        let grid = grid_for(self.grid);
        match self.budget {
            Some(b) => budget_grid(&grid, b, self.seed),
            None => grid,
        }
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Audit trail attached to every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub embedder: String,
    pub tagger: String,
    pub feature_schema_hash: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model_hash: Option<String>,
    pub config: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_defaults() {
        let c = PipelineConfig::from_toml(
            "seed = 7\nrow_cap = 50\ngrid = \"fast\"\ndrop = [\"tag\"]\n[embedder]\ndim = 64\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.row_cap, 50);
        assert_eq!(c.grid, GridMode::Fast);
        assert_eq!(c.embedder.dim, 64);
        assert!(c.drop.contains(&Family::Tag));
        assert_eq!(c.epsilon, DEFAULT_EPSILON);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("sed = 1").is_err());
        let c = PipelineConfig {
            threshold: Some(1.5),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = PipelineConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn jobs_stay_out_of_snapshot() {
        let c = PipelineConfig {
            jobs: Some(3),
            ..Default::default()
        };
        assert!(c.snapshot().get("jobs").is_none());
    }
}
