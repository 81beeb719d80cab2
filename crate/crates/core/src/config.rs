//! TOML run configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::TargetKind;
use crate::ensemble::{BoostParams, ForestParams, GridSpec, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::geo::{BoundaryLayout, Measure};
use crate::ingest::{default_schema, validate_schema, CasualtyLayout, CollisionLayout, ColumnSchema, Field};
use crate::pipeline::CleanOptions;
use crate::resample::{DistanceMetric, SmoteConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub collisions: PathBuf,
    pub casualties: PathBuf,
    pub boundaries: Option<PathBuf>,
    pub collision_layout: CollisionLayout,
    pub casualty_layout: CasualtyLayout,
    pub boundary_layout: BoundaryLayout,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    /// Replaces the built-in schema when non-empty.
    pub columns: Vec<ColumnSchema>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { test_fraction: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub enabled: bool,
    pub k_neighbors: usize,
    pub target_ratio: f64,
}

impl Default for SmoteSection {
    fn default() -> Self {
        SmoteSection { enabled: true, k_neighbors: 5, target_ratio: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub kinds: Vec<ModelKind>,
    pub forest: ForestParams,
    pub boosted: BoostParams,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection {
            kinds: vec![ModelKind::Forest, ModelKind::Boosted],
            forest: ForestParams::default(),
            boosted: BoostParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub forest: GridSpec,
    pub boosted: GridSpec,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { forest: GridSpec::default_forest(), boosted: GridSpec::default_boosted() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    #[default]
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub rows: Partition,
    /// Evenly spaced subset of the partition; `None` explains every row.
    pub max_rows: Option<usize>,
}

impl Default for ExplainSection {
    fn default() -> Self {
        ExplainSection { rows: Partition::Test, max_rows: Some(1000) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialSection {
    pub measure: Measure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescribeSection {
    pub variables: Vec<Field>,
}

impl Default for DescribeSection {
    fn default() -> Self {
        DescribeSection { variables: Field::ALL.to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub target: TargetKind,
    /// Decision threshold used when the target has no entry in `thresholds`.
    pub threshold: f64,
    pub thresholds: BTreeMap<TargetKind, f64>,
    pub output_dir: PathBuf,
    pub features: Vec<Field>,
    pub input: InputConfig,
    pub schema: SchemaConfig,
    pub clean: CleanOptions,
    pub split: SplitConfig,
    pub smote: SmoteSection,
    pub models: ModelsSection,
    pub grid: GridSection,
    pub explain: ExplainSection,
    pub spatial: SpatialSection,
    pub describe: DescribeSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            target: TargetKind::Pedestrian,
            threshold: 0.5,
            thresholds: BTreeMap::new(),
            output_dir: PathBuf::from("out"),
            features: Field::ALL.to_vec(),
            input: InputConfig::default(),
            schema: SchemaConfig::default(),
            clean: CleanOptions::default(),
            split: SplitConfig::default(),
            smote: SmoteSection::default(),
            models: ModelsSection::default(),
            grid: GridSection::default(),
            explain: ExplainSection::default(),
            spatial: SpatialSection::default(),
            describe: DescribeSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.input.collisions);
        fix(&mut self.input.casualties);
        if let Some(b) = self.input.boundaries.as_mut() {
            fix(b);
        }
    }

    pub fn schema(&self) -> Vec<ColumnSchema> {
        if self.schema.columns.is_empty() {
            default_schema()
        } else {
            self.schema.columns.clone()
        }
    }

    pub fn threshold_for(&self, target: TargetKind) -> f64 {
        self.thresholds.get(&target).copied().unwrap_or(self.threshold)
    }

    pub fn smote_config(&self) -> Option<SmoteConfig> {
        self.smote.enabled.then_some(SmoteConfig {
            k_neighbors: self.smote.k_neighbors,
            target_ratio: self.smote.target_ratio,
            seed: self.seed,
            metric: DistanceMetric::Euclidean,
        })
    }

    pub fn model_config(&self, kind: ModelKind) -> ModelConfig {
        match kind {
            ModelKind::Forest => ModelConfig::Forest(self.models.forest.clone()),
            ModelKind::Boosted => ModelConfig::Boosted(self.models.boosted.clone()),
        }
    }

    pub fn grid_spec(&self, kind: ModelKind) -> &GridSpec {
        match kind {
            ModelKind::Forest => &self.grid.forest,
            ModelKind::Boosted => &self.grid.boosted,
        }
    }

    /// Checks values that do not depend on the input files.
    pub fn validate(&self) -> Result<()> {
        validate_schema(&self.schema())?;
        let schema = self.schema();
        for f in self.features.iter().chain(&self.describe.variables) {
            if !schema.iter().any(|c| c.name == *f) {
                return Err(Error::UnknownFeature(f.to_string()));
            }
        }
        if self.features.is_empty() {
            return Err(Error::Config("feature list is empty".into()));
        }
        for (&t, &v) in std::iter::once((&self.target, &self.threshold)).chain(&self.thresholds) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("threshold {v} for {t} outside [0, 1]")));
            }
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::Config("split.test_fraction must lie in (0, 1)".into()));
        }
        if let Some(s) = self.smote_config() {
            s.validate()?;
        }
        if self.models.kinds.is_empty() {
            return Err(Error::Config("models.kinds is empty".into()));
        }
        self.models.forest.tree.validate()?;
        self.models.boosted.validate()?;
        if self.explain.max_rows == Some(0) {
            return Err(Error::Config("explain.max_rows must be positive".into()));
        }
        Ok(())
    }

    /// Checks that the raw input files exist.
    pub fn check_inputs(&self) -> Result<()> {
        for p in [&self.input.collisions, &self.input.casualties] {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::from_toml(
            r#"
seed = 7
target = "over_serious"
[thresholds]
pedestrian_over_serious = 0.3
[input]
collisions = "c.csv"
casualties = "k.csv"
[grid.boosted]
n_trees = [20]
max_depth = [2, 3]
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.threshold_for(TargetKind::PedestrianOverSerious), 0.3);
        assert_eq!(cfg.threshold_for(TargetKind::OverSerious), 0.5);
        assert_eq!(cfg.grid.boosted.n_trees, vec![20]);
        assert!(cfg.grid.boosted.learning_rate.is_empty());
        assert_eq!(cfg.grid.forest, GridSpec::default_forest());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::from_toml("sede = 3"), Err(Error::Config(_))));
        let cfg = RunConfig { threshold: 1.5, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { features: vec![], ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
