use std::path::Path;

use serde::{Deserialize, Serialize};

use super::boosted::{fit_boosted, BoostParams, BoostedModel};
use super::forest::{fit_forest, ForestModel, ForestParams};
use crate::dataset::{LabeledDataset, TargetKind};
use crate::error::{Error, Result};
use crate::tree::Tree;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    Boosted,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Boosted => "boosted",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest" => Ok(ModelKind::Forest),
            "boosted" => Ok(ModelKind::Boosted),
            _ => Err(Error::Config(format!("unknown model kind `{s}`"))),
        }
    }
}

/// Hyperparameters for either model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Forest(ForestParams),
    Boosted(BoostParams),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Forest => ModelConfig::Forest(ForestParams::default()),
            ModelKind::Boosted => ModelConfig::Boosted(BoostParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Forest(_) => ModelKind::Forest,
            ModelConfig::Boosted(_) => ModelKind::Boosted,
        }
    }

    pub fn fit(&self, train: &LabeledDataset, seed: u64) -> Result<Model> {
        Ok(match self {
            ModelConfig::Forest(p) => Model::Forest(fit_forest(train, p, seed)?),
            ModelConfig::Boosted(p) => Model::Boosted(fit_boosted(train, p, seed)?),
        })
    }

    /// Compact `key=value` description used in leaderboards.
    pub fn describe(&self) -> String {
        let depth = |d: Option<usize>| d.map_or("none".to_string(), |d| d.to_string());
        match self {
            ModelConfig::Forest(p) => format!(
                "n_trees={};max_depth={};min_samples_leaf={}",
                p.n_trees,
                depth(p.tree.max_depth),
                p.tree.min_samples_leaf
            ),
            ModelConfig::Boosted(p) => format!(
                "rounds={};max_depth={};learning_rate={};l2_lambda={};min_samples_leaf={};positive_weight={}",
                p.rounds,
                depth(p.tree.max_depth),
                p.learning_rate,
                p.l2_lambda,
                p.tree.min_samples_leaf,
                match p.positive_weight {
                    super::boosted::PositiveWeight::Fixed(w) => w.to_string(),
                    super::boosted::PositiveWeight::Balanced => "balanced".into(),
                }
            ),
        }
    }
}

/// A fitted model of either family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Forest(ForestModel),
    Boosted(BoostedModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Forest(_) => ModelKind::Forest,
            Model::Boosted(_) => ModelKind::Boosted,
        }
    }

    pub fn trees(&self) -> &[Tree] {
        match self {
            Model::Forest(m) => &m.trees,
            Model::Boosted(m) => &m.trees,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Forest(m) => m.n_features,
            Model::Boosted(m) => m.n_features,
        }
    }

    /// Probability of the positive class for one row.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        match self {
            Model::Forest(m) => m.predict_row(row),
            Model::Boosted(m) => m.predict_row(row),
        }
    }

    pub fn predict(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        match self {
            Model::Forest(m) => m.predict(data),
            Model::Boosted(m) => m.predict(data),
        }
    }
}

/// On-disk model document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub target: TargetKind,
    pub feature_names: Vec<String>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, target: TargetKind, feature_names: Vec<String>) -> Self {
        ModelFile { schema_version: MODEL_SCHEMA_VERSION, target, feature_names, model }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            schema_version: u32,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::SchemaVersion(probe.schema_version));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}
