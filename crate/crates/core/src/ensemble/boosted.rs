use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::math::{logit, sigmoid, RAW_SCORE_CLIP};
use crate::rng;
use crate::tree::{fit_newton_tree, Tree, TreeParams};

/// Instance weight applied to positive rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveWeight {
    Fixed(f64),
    /// Negatives over positives in the training data.
    Balanced,
}

impl Default for PositiveWeight {
    fn default() -> Self {
        PositiveWeight::Fixed(1.0)
    }
}

impl PositiveWeight {
    pub fn resolve(self, class_counts: [usize; 2]) -> f64 {
        match self {
            PositiveWeight::Fixed(w) => w,
            PositiveWeight::Balanced => {
                if class_counts[1] == 0 {
                    1.0
                } else {
                    class_counts[0] as f64 / class_counts[1] as f64
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub tree: TreeParams,
    pub rounds: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub positive_weight: PositiveWeight,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            tree: TreeParams { max_depth: Some(6), ..TreeParams::default() },
            rounds: 100,
            learning_rate: 0.3,
            l2_lambda: 1.0,
            positive_weight: PositiveWeight::default(),
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        if self.rounds < 1 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!("learning_rate {} outside (0, 1]", self.learning_rate)));
        }
        if !(self.l2_lambda >= 0.0) {
            return Err(Error::Config("l2_lambda must be non-negative".into()));
        }
        if let PositiveWeight::Fixed(w) = self.positive_weight {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config("positive_weight must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    /// Leaves hold unscaled raw-score increments.
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub base_score: f64,
    pub positive_weight: f64,
    pub n_rounds: usize,
    pub params: BoostParams,
    pub seed: u64,
    pub n_features: usize,
    /// Weighted mean log-loss on the training rows after each round.
    #[serde(default)]
    pub train_loss: Vec<f64>,
}

/// Weighted mean log-loss.
pub fn weighted_log_loss(labels: &[u8], probs: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&y, &p), &w) in labels.iter().zip(probs).zip(weights) {
        let p = p.clamp(1e-15, 1.0 - 1e-15);
        num -= w * if y == 1 { p.ln() } else { (1.0 - p).ln() };
        den += w;
    }
    num / den
}

/// Second-order boosting with logistic loss.
pub fn fit_boosted(train: &LabeledDataset, params: &BoostParams, seed: u64) -> Result<BoostedModel> {
    params.validate()?;
    let n = train.n_rows();
    let pw = params.positive_weight.resolve(train.class_counts());
    let weights: Vec<f64> = train.labels.iter().map(|&y| if y == 1 { pw } else { 1.0 }).collect();
    let wsum: f64 = weights.iter().sum();
    let wpos: f64 = weights.iter().zip(&train.labels).filter(|(_, &y)| y == 1).map(|(w, _)| w).sum();
    let base_score = logit(wpos / wsum).clamp(-RAW_SCORE_CLIP, RAW_SCORE_CLIP);

    let mut raw = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut train_loss = Vec::with_capacity(params.rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for round in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad[i] = weights[i] * (p - f64::from(train.labels[i]));
            hess[i] = weights[i] * p * (1.0 - p);
        }
        let mut rng = rng::stream(seed, rng::label::BOOST, round as u64);
        let tree = fit_newton_tree(train, &grad, &hess, params.l2_lambda, &params.tree, &mut rng)?;
        let step: Vec<f64> = (0..n).into_par_iter().map(|i| tree.predict_unchecked(train.row(i))).collect();
        for i in 0..n {
            raw[i] += params.learning_rate * step[i];
        }
        let probs: Vec<f64> = raw.iter().map(|&r| sigmoid(r)).collect();
        train_loss.push(weighted_log_loss(&train.labels, &probs, &weights));
        trees.push(tree);
    }
    Ok(BoostedModel {
        trees,
        learning_rate: params.learning_rate,
        l2_lambda: params.l2_lambda,
        base_score,
        positive_weight: pw,
        n_rounds: params.rounds,
        params: params.clone(),
        seed,
        n_features: train.n_features(),
        train_loss,
    })
}

impl BoostedModel {
    pub fn check_width(&self, width: usize) -> Result<()> {
        if width < self.n_features {
            return Err(Error::FeatureOutOfRange { index: self.n_features - 1, width });
        }
        self.trees.iter().try_for_each(|t| t.check_width(width))
    }

    /// `base_score + learning_rate * Σ tree outputs`, before clipping.
    pub(crate) fn raw_unchecked(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_unchecked(row)).sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict_raw(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row.len())?;
        Ok(self.raw_unchecked(row))
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.predict_raw(row)?))
    }

    pub fn predict(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        self.check_width(data.n_features())?;
        Ok((0..data.n_rows()).into_par_iter().map(|i| sigmoid(self.raw_unchecked(data.row(i)))).collect())
    }
}
