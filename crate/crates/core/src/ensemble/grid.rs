//! Exhaustive hyperparameter search with SMOTE applied inside each
//! training fold only.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boosted::{BoostParams, PositiveWeight};
use super::forest::ForestParams;
use super::model::{ModelConfig, ModelKind};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metrics::{report, roc_auc};
use crate::resample::{smote, stratified_folds, stratified_split, SmoteConfig};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    Accuracy,
    #[default]
    RocAuc,
    F1Minority,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    Holdout { fraction: f64 },
    KFold { k: usize },
}

impl Default for Validation {
    fn default() -> Self {
        Validation::Holdout { fraction: 0.2 }
    }
}

/// Parameter axes; the grid is their Cartesian product. An empty axis
/// keeps the base configuration's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Trees for forests, rounds for boosting.
    pub n_trees: Vec<usize>,
    /// `0` stands for unlimited depth.
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub l2_lambda: Vec<f64>,
    pub min_samples_leaf: Vec<usize>,
    pub positive_weight: Vec<PositiveWeight>,
    pub selection_metric: SelectionMetric,
    pub validation: Validation,
    /// Decision threshold for threshold-dependent metrics.
    #[serde(default = "half")]
    pub threshold: f64,
}

fn half() -> f64 {
    0.5
}

impl GridSpec {
    pub fn default_forest() -> Self {
        GridSpec {
            n_trees: vec![100, 300],
            max_depth: vec![0, 10, 20],
            min_samples_leaf: vec![1, 5],
            threshold: 0.5,
            ..GridSpec::default()
        }
    }

    pub fn default_boosted() -> Self {
        GridSpec {
            n_trees: vec![100, 300],
            max_depth: vec![3, 6],
            learning_rate: vec![0.1, 0.3],
            l2_lambda: vec![1.0, 10.0],
            positive_weight: vec![PositiveWeight::Fixed(1.0), PositiveWeight::Balanced],
            threshold: 0.5,
            ..GridSpec::default()
        }
    }

    /// All combinations in a fixed nesting order.
    pub fn expand(&self, base: &ModelConfig) -> Vec<ModelConfig> {
        fn axis<T: Clone>(values: &[T], current: T) -> Vec<T> {
            if values.is_empty() {
                vec![current]
            } else {
                values.to_vec()
            }
        }
        let depth = |d: usize| if d == 0 { None } else { Some(d) };
        let mut out = Vec::new();
        match base {
            ModelConfig::Forest(b) => {
                for &n in &axis(&self.n_trees, b.n_trees) {
                    for d in axis(&self.max_depth.iter().map(|&d| depth(d)).collect::<Vec<_>>(), b.tree.max_depth) {
                        for &leaf in &axis(&self.min_samples_leaf, b.tree.min_samples_leaf) {
                            let mut p: ForestParams = b.clone();
                            p.n_trees = n;
                            p.tree.max_depth = d;
                            p.tree.min_samples_leaf = leaf;
                            out.push(ModelConfig::Forest(p));
                        }
                    }
                }
            }
            ModelConfig::Boosted(b) => {
                for &n in &axis(&self.n_trees, b.rounds) {
                    for d in axis(&self.max_depth.iter().map(|&d| depth(d)).collect::<Vec<_>>(), b.tree.max_depth) {
                        for &lr in &axis(&self.learning_rate, b.learning_rate) {
                            for &l2 in &axis(&self.l2_lambda, b.l2_lambda) {
                                for &leaf in &axis(&self.min_samples_leaf, b.tree.min_samples_leaf) {
                                    for &pw in &axis(&self.positive_weight, b.positive_weight) {
                                        let mut p: BoostParams = b.clone();
                                        p.rounds = n;
                                        p.tree.max_depth = d;
                                        p.learning_rate = lr;
                                        p.l2_lambda = l2;
                                        p.tree.min_samples_leaf = leaf;
                                        p.positive_weight = pw;
                                        out.push(ModelConfig::Boosted(p));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub index: usize,
    pub config: ModelConfig,
    /// Mean validation score over folds; `None` when the cell failed.
    pub score: Option<f64>,
    pub fold_scores: Vec<f64>,
    pub error: Option<String>,
    /// Validation checksums matched before and after the cell.
    pub validation_untouched: bool,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub best: ModelConfig,
    pub best_index: usize,
    pub leaderboard: Vec<LeaderboardEntry>,
}

struct Fold {
    train: LabeledDataset,
    validation: LabeledDataset,
    validation_checksum: u64,
}

fn score(metric: SelectionMetric, labels: &[u8], probs: &[f64], threshold: f64) -> Result<f64> {
    Ok(match metric {
        SelectionMetric::RocAuc => roc_auc(labels, probs)?,
        SelectionMetric::Accuracy => {
            report(labels, probs, threshold, crate::dataset::TargetKind::Pedestrian, "")?.accuracy
        }
        SelectionMetric::F1Minority => {
            report(labels, probs, threshold, crate::dataset::TargetKind::Pedestrian, "")?.f1_minority()
        }
    })
}

fn build_folds(
    train: &LabeledDataset,
    spec: &GridSpec,
    smote_cfg: Option<&SmoteConfig>,
    seed: u64,
) -> Result<Vec<Fold>> {
    let split_seed = rng::derive_seed(seed, rng::label::GRID, 0);
    let parts: Vec<(Vec<usize>, Vec<usize>)> = match spec.validation {
        Validation::Holdout { fraction } => {
            let s = stratified_split(train, fraction, split_seed)?;
            vec![(s.train_indices, s.test_indices)]
        }
        Validation::KFold { k } => {
            let fold = stratified_folds(&train.labels, k, split_seed)?;
            (0..k).map(|f| (0..train.n_rows()).partition::<Vec<usize>, _>(|&i| fold[i] != f)).collect()
        }
    };
    parts
        .into_iter()
        .enumerate()
        .map(|(f, (tr, va))| {
            let fold_train = train.subset(&tr);
            let validation = train.subset(&va);
            let fold_train = match smote_cfg {
                Some(cfg) => {
                    let cfg =
                        SmoteConfig { seed: rng::derive_seed(cfg.seed, rng::label::GRID, f as u64 + 1), ..cfg.clone() };
                    smote(&fold_train, &cfg)?.dataset
                }
                None => fold_train,
            };
            let validation_checksum = validation.checksum();
            Ok(Fold { train: fold_train, validation, validation_checksum })
        })
        .collect()
}

/// Evaluates every grid cell and returns the best by the selection metric;
/// ties go to the earliest cell. Failed cells stay on the leaderboard.
pub fn grid_search(
    train: &LabeledDataset,
    spec: &GridSpec,
    base: &ModelConfig,
    smote_cfg: Option<&SmoteConfig>,
    seed: u64,
) -> Result<GridResult> {
    grid_search_cells(train, spec.expand(base), spec, smote_cfg, seed)
}

/// As [`grid_search`] over an explicit cell list; `spec` supplies only the
/// validation scheme, metric and threshold.
pub fn grid_search_cells(
    train: &LabeledDataset,
    cells: Vec<ModelConfig>,
    spec: &GridSpec,
    smote_cfg: Option<&SmoteConfig>,
    seed: u64,
) -> Result<GridResult> {
    if cells.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    let folds = build_folds(train, spec, smote_cfg, seed)?;
    let model_seed = rng::derive_seed(seed, rng::label::GRID, u64::MAX);

    let leaderboard: Vec<LeaderboardEntry> = cells
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| {
            let mut fold_scores = Vec::new();
            let mut error = None;
            for fold in &folds {
                let outcome = config
                    .fit(&fold.train, model_seed)
                    .and_then(|m| m.predict(&fold.validation))
                    .and_then(|p| score(spec.selection_metric, &fold.validation.labels, &p, spec.threshold));
                match outcome {
                    Ok(s) => fold_scores.push(s),
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            let validation_untouched = folds.iter().all(|f| f.validation.checksum() == f.validation_checksum);
            let score = match error {
                None => Some(fold_scores.iter().sum::<f64>() / fold_scores.len() as f64),
                Some(_) => None,
            };
            LeaderboardEntry { index, config, score, fold_scores, error, validation_untouched }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for e in &leaderboard {
        if let Some(s) = e.score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((e.index, s));
            }
        }
    }
    let (best_index, _) = best.ok_or(Error::GridExhausted)?;
    Ok(GridResult { best: leaderboard[best_index].config.clone(), best_index, leaderboard })
}

pub fn write_leaderboard<W: Write>(sink: W, kind: ModelKind, entries: &[LeaderboardEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["index", "kind", "params", "score", "status"])?;
    for e in entries {
        w.write_record([
            e.index.to_string(),
            kind.name().to_string(),
            e.config.describe(),
            e.score.map(|s| s.to_string()).unwrap_or_default(),
            e.error.clone().unwrap_or_else(|| "ok".into()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}
