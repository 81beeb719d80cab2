use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::tree::{fit_tree_on_rows, FeatureSubsample, Tree, TreeParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub n_trees: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree: TreeParams { feature_subsample: FeatureSubsample::Sqrt, ..TreeParams::default() },
            n_trees: 100,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
}

/// Fits `n_trees` trees; tree `t` draws its bootstrap sample and split
/// candidates from stream `(seed, t)`, so the result does not depend on
/// how trees are scheduled.
pub fn fit_forest(train: &LabeledDataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if params.n_trees < 1 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    params.tree.validate()?;
    let n = train.n_rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, rng::label::FOREST_TREE, t as u64);
            let rows: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            fit_tree_on_rows(train, rows, &params.tree, None, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel { trees, params: params.clone(), seed, n_features: train.n_features() })
}

impl ForestModel {
    pub fn check_width(&self, width: usize) -> Result<()> {
        if width < self.n_features {
            return Err(Error::FeatureOutOfRange { index: self.n_features - 1, width });
        }
        self.trees.iter().try_for_each(|t| t.check_width(width))
    }

    /// Mean member probability. Member outputs are summed in sorted order
    /// so the result does not depend on tree order.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row.len())?;
        Ok(self.predict_unchecked(row))
    }

    pub(crate) fn predict_unchecked(&self, row: &[f64]) -> f64 {
        let mut outs: Vec<f64> = self.trees.iter().map(|t| t.predict_unchecked(row)).collect();
        outs.sort_unstable_by(f64::total_cmp);
        outs.iter().sum::<f64>() / outs.len() as f64
    }

    pub fn predict(&self, data: &LabeledDataset) -> Result<Vec<f64>> {
        self.check_width(data.n_features())?;
        Ok((0..data.n_rows()).into_par_iter().map(|i| self.predict_unchecked(data.row(i))).collect())
    }
}
