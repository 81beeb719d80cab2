//! Binary classification and regression trees with axis-aligned splits.
//!
//! Nodes live in a flat arena with the root at index 0. Routing sends
//! `row[feature] <= threshold` left and everything else right.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

const GAIN_EPS: f64 = 1e-12;

fn missing_cover() -> f64 {
    f64::NAN
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Training rows that reached this node.
        #[serde(default = "missing_cover")]
        cover: f64,
    },
    Leaf {
        value: f64,
        #[serde(default = "missing_cover")]
        cover: f64,
    },
}

impl TreeNode {
    pub fn cover(&self) -> f64 {
        match *self {
            TreeNode::Internal { cover, .. } | TreeNode::Leaf { cover, .. } => cover,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Tree { nodes: vec![TreeNode::Leaf { value, cover }] }
    }

    /// One split on `feature` with the given leaf values and covers.
    pub fn stump(feature: usize, threshold: f64, left: (f64, f64), right: (f64, f64)) -> Self {
        Tree {
            nodes: vec![
                TreeNode::Internal { feature, threshold, left: 1, right: 2, cover: left.1 + right.1 },
                TreeNode::Leaf { value: left.0, cover: left.1 },
                TreeNode::Leaf { value: right.0, cover: right.1 },
            ],
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Largest feature index referenced, if any split exists.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Internal { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    /// Index of the leaf reached by `row`. The caller guarantees the width.
    pub(crate) fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Internal { feature, threshold, left, right, .. } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub(crate) fn predict_unchecked(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Internal { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn check_width(&self, width: usize) -> Result<()> {
        match self.max_feature() {
            Some(f) if f >= width => Err(Error::FeatureOutOfRange { index: f, width }),
            _ => Ok(()),
        }
    }

    /// Leaf value reached by `row`.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row.len())?;
        Ok(self.predict_unchecked(row))
    }
}

/// How many features are considered at each split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    #[default]
    All,
    Sqrt,
    Count(usize),
}

impl FeatureSubsample {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            FeatureSubsample::All => d,
            FeatureSubsample::Sqrt => ((d as f64).sqrt().floor() as usize).clamp(1, d),
            FeatureSubsample::Count(m) => m.clamp(1, d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until another stopping rule applies.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_impurity_decrease: f64,
    pub feature_subsample: FeatureSubsample,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            min_impurity_decrease: 0.0,
            feature_subsample: FeatureSubsample::All,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        if !(self.min_impurity_decrease >= 0.0) {
            return Err(Error::Config("min_impurity_decrease must be non-negative".into()));
        }
        Ok(())
    }
}

/// Gini impurity of per-class weights.
pub fn gini(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyNode);
    }
    Ok(1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>())
}

fn gini2(w: f64, wpos: f64) -> f64 {
    let p = wpos / w;
    let q = (w - wpos) / w;
    1.0 - p * p - q * q
}

/// Per-node sums. For Gini `a` is weight and `b` weighted positives; for
/// the Newton objective `a` is the gradient sum and `b` the Hessian sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Stats {
    count: usize,
    a: f64,
    b: f64,
}

impl Stats {
    fn add(&mut self, a: f64, b: f64) {
        self.count += 1;
        self.a += a;
        self.b += b;
    }
}

#[derive(Clone, Copy, Debug)]
enum Objective {
    Gini,
    Newton { lambda: f64 },
}

fn newton_score(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

impl Objective {
    fn gain(self, l: Stats, r: Stats, p: Stats) -> f64 {
        match self {
            Objective::Gini => {
                if !(l.a > 0.0 && r.a > 0.0) {
                    return 0.0;
                }
                gini2(p.a, p.b) - (l.a / p.a) * gini2(l.a, l.b) - (r.a / p.a) * gini2(r.a, r.b)
            }
            Objective::Newton { lambda } => {
                0.5 * (newton_score(l.a, l.b, lambda) + newton_score(r.a, r.b, lambda) - newton_score(p.a, p.b, lambda))
            }
        }
    }

    fn leaf(self, s: Stats) -> f64 {
        match self {
            Objective::Gini => {
                if s.a > 0.0 {
                    s.b / s.a
                } else {
                    0.0
                }
            }
            Objective::Newton { lambda } => {
                let denom = s.b + lambda;
                if denom > 0.0 {
                    -s.a / denom
                } else {
                    0.0
                }
            }
        }
    }

    fn is_pure(self, s: Stats) -> bool {
        match self {
            Objective::Gini => s.b <= 0.0 || s.b >= s.a,
            Objective::Newton { .. } => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Impurity decrease (Gini) or second-order gain (Newton) at this node.
    pub gain: f64,
}

struct Grower<'a> {
    data: &'a LabeledDataset,
    a: Vec<f64>,
    b: Vec<f64>,
    objective: Objective,
    params: &'a TreeParams,
    n_candidates: usize,
    nodes: Vec<TreeNode>,
    buf: Vec<(f64, usize)>,
}

impl<'a> Grower<'a> {
    fn node_stats(&self, rows: &[usize]) -> Stats {
        let mut s = Stats::default();
        for &i in rows {
            s.add(self.a[i], self.b[i]);
        }
        s
    }

    fn best_split(&mut self, rows: &[usize], parent: Stats, features: &[usize]) -> Option<Split> {
        let min_leaf = self.params.min_samples_leaf;
        if rows.len() < 2 * min_leaf {
            return None;
        }
        let mut best: Option<Split> = None;
        for &f in features {
            self.buf.clear();
            self.buf.extend(rows.iter().map(|&i| (self.data.get(i, f), i)));
            self.buf.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let mut left = Stats::default();
            for k in 0..self.buf.len() - 1 {
                let (v, i) = self.buf[k];
                left.add(self.a[i], self.b[i]);
                let next = self.buf[k + 1].0;
                if next == v {
                    continue;
                }
                let n_left = k + 1;
                if n_left < min_leaf || rows.len() - n_left < min_leaf {
                    continue;
                }
                let right = Stats { count: parent.count - left.count, a: parent.a - left.a, b: parent.b - left.b };
                let gain = self.objective.gain(left, right, parent);
                if best.is_none_or(|b| gain > b.gain + GAIN_EPS) {
                    best = Some(Split { feature: f, threshold: midpoint(v, next), gain });
                }
            }
        }
        best.filter(|s| s.gain > GAIN_EPS && s.gain >= self.params.min_impurity_decrease)
    }

    fn grow<R: Rng>(&mut self, rows: &mut [usize], depth: usize, rng: &mut R) -> usize {
        let stats = self.node_stats(rows);
        let id = self.nodes.len();
        let cover = rows.len() as f64;
        self.nodes.push(TreeNode::Leaf { value: self.objective.leaf(stats), cover });

        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if !depth_ok || self.objective.is_pure(stats) {
            return id;
        }
        let d = self.data.n_features();
        let features: Vec<usize> = if self.n_candidates >= d {
            (0..d).collect()
        } else {
            let mut f = rand::seq::index::sample(rng, d, self.n_candidates).into_vec();
            f.sort_unstable();
            f
        };
        let Some(split) = self.best_split(rows, stats, &features) else {
            return id;
        };
        let mid = partition(rows, |i| self.data.get(i, split.feature) <= split.threshold);
        let (lrows, rrows) = rows.split_at_mut(mid);
        let left = self.grow(lrows, depth + 1, rng);
        let right = self.grow(rrows, depth + 1, rng);
        self.nodes[id] = TreeNode::Internal { feature: split.feature, threshold: split.threshold, left, right, cover };
        id
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Stable in-place partition; returns the number of rows satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| pred(i));
    let n = yes.len();
    rows[..n].copy_from_slice(&yes);
    rows[n..].copy_from_slice(&no);
    n
}

fn check_weights(data: &LabeledDataset, weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != data.n_rows() {
            return Err(Error::LengthMismatch { left: data.n_rows(), right: w.len() });
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::Config("instance weights must be finite and non-negative".into()));
        }
    }
    Ok(())
}

/// Best Gini split of `rows` over `features`, honoring `min_samples_leaf`
/// and `min_impurity_decrease`. Ties go to the lower feature, then the
/// lower threshold.
pub fn best_split(
    data: &LabeledDataset,
    rows: &[usize],
    params: &TreeParams,
    weights: Option<&[f64]>,
    features: &[usize],
) -> Result<Option<Split>> {
    params.validate()?;
    check_weights(data, weights)?;
    let (a, b) = gini_stats(data, weights);
    let mut g = Grower {
        data,
        a,
        b,
        objective: Objective::Gini,
        params,
        n_candidates: data.n_features(),
        nodes: Vec::new(),
        buf: Vec::new(),
    };
    let mut sorted = features.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&f) = sorted.last() {
        if f >= data.n_features() {
            return Err(Error::FeatureOutOfRange { index: f, width: data.n_features() });
        }
    }
    let parent = g.node_stats(rows);
    Ok(g.best_split(rows, parent, &sorted))
}

fn gini_stats(data: &LabeledDataset, weights: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; data.n_rows()], <[f64]>::to_vec);
    let wy = w.iter().zip(&data.labels).map(|(w, &y)| w * f64::from(y)).collect();
    (w, wy)
}

/// Grows a Gini tree on all rows of `data`. Leaves hold the weighted
/// positive fraction.
pub fn fit_tree<R: Rng>(
    data: &LabeledDataset,
    params: &TreeParams,
    weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<Tree> {
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    fit_tree_on_rows(data, rows, params, weights, rng)
}

/// As [`fit_tree`], on a row multiset (bootstrap draws may repeat rows).
pub fn fit_tree_on_rows<R: Rng>(
    data: &LabeledDataset,
    mut rows: Vec<usize>,
    params: &TreeParams,
    weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<Tree> {
    params.validate()?;
    check_weights(data, weights)?;
    if rows.is_empty() {
        return Err(Error::EmptyNode);
    }
    let (a, b) = gini_stats(data, weights);
    let mut g = Grower {
        data,
        a,
        b,
        objective: Objective::Gini,
        params,
        n_candidates: params.feature_subsample.resolve(data.n_features()),
        nodes: Vec::new(),
        buf: Vec::with_capacity(rows.len()),
    };
    g.grow(&mut rows, 0, rng);
    Ok(Tree { nodes: g.nodes })
}

/// Grows a regression tree on per-row gradients and Hessians. Leaves hold
/// `-G / (H + lambda)`; splits maximize the second-order gain.
pub fn fit_newton_tree<R: Rng>(
    data: &LabeledDataset,
    grad: &[f64],
    hess: &[f64],
    lambda: f64,
    params: &TreeParams,
    rng: &mut R,
) -> Result<Tree> {
    params.validate()?;
    if grad.len() != data.n_rows() || hess.len() != data.n_rows() {
        return Err(Error::LengthMismatch { left: data.n_rows(), right: grad.len().min(hess.len()) });
    }
    if data.n_rows() == 0 {
        return Err(Error::EmptyNode);
    }
    let mut rows: Vec<usize> = (0..data.n_rows()).collect();
    let mut g = Grower {
        data,
        a: grad.to_vec(),
        b: hess.to_vec(),
        objective: Objective::Newton { lambda },
        params,
        n_candidates: params.feature_subsample.resolve(data.n_features()),
        nodes: Vec::new(),
        buf: Vec::with_capacity(rows.len()),
    };
    g.grow(&mut rows, 0, rng);
    Ok(Tree { nodes: g.nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetMeta, TargetKind};
    use crate::ingest::ColumnKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> LabeledDataset {
        let d = rows[0].len();
        let meta = DatasetMeta {
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            column_kinds: vec![ColumnKind::Numeric; d],
            categorical_levels: vec![vec![]; d],
            target: TargetKind::Pedestrian,
        };
        LabeledDataset::new(meta, (0..rows.len()).map(|i| i.to_string()).collect(), rows, labels).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn gini_closed_forms() {
        assert_eq!(gini(&[3.0, 3.0]).unwrap(), 0.5);
        assert_eq!(gini(&[4.0, 0.0]).unwrap(), 0.0);
        assert!((gini(&[1.0, 3.0]).unwrap() - 0.375).abs() < 1e-12);
        assert!(matches!(gini(&[0.0, 0.0]), Err(Error::EmptyNode)));
    }

    #[test]
    fn two_point_split() {
        let d = ds(vec![vec![0.0], vec![1.0]], vec![0, 1]);
        let s = best_split(&d, &[0, 1], &TreeParams::default(), None, &[0]).unwrap().unwrap();
        assert_eq!(s.threshold, 0.5);
        assert!((s.gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_labels_do_not_split() {
        let d = ds(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 1]);
        assert_eq!(best_split(&d, &[0, 1, 2], &TreeParams::default(), None, &[0]).unwrap(), None);
        let t = fit_tree(&d, &TreeParams::default(), None, &mut rng()).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn separable_data_gives_a_stump() {
        let d = ds((0..10).map(|i| vec![i as f64]).collect(), (0..10).map(|i| u8::from(i >= 4)).collect());
        let t = fit_tree(&d, &TreeParams::default(), None, &mut rng()).unwrap();
        assert_eq!(t.depth(), 1);
        for i in 0..10 {
            assert_eq!(t.predict(d.row(i)).unwrap(), f64::from(d.labels[i]));
        }
    }

    #[test]
    fn xor_stump_accuracy_capped() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let d = ds(rows, vec![0, 1, 1, 0]);
        let params = TreeParams { max_depth: Some(1), ..TreeParams::default() };
        let t = fit_tree(&d, &params, None, &mut rng()).unwrap();
        let acc = (0..4).filter(|&i| u8::from(t.predict(d.row(i)).unwrap() >= 0.5) == d.labels[i]).count() as f64 / 4.0;
        assert!(acc <= 0.75);
    }

    #[test]
    fn routing_and_width_check() {
        let t = Tree::stump(0, 0.5, (0.1, 3.0), (0.9, 2.0));
        assert_eq!(t.predict(&[0.0]).unwrap(), 0.1);
        assert_eq!(t.predict(&[0.5]).unwrap(), 0.1);
        assert_eq!(t.predict(&[0.7]).unwrap(), 0.9);
        assert!(matches!(t.predict(&[]), Err(Error::FeatureOutOfRange { index: 0, width: 0 })));
        assert_eq!(Tree::leaf(0.3, 1.0).predict(&[]).unwrap(), 0.3);
    }

    #[test]
    fn min_samples_leaf_respected() {
        let d = ds((0..12).map(|i| vec![i as f64]).collect(), (0..12).map(|i| u8::from(i % 3 == 0)).collect());
        let params = TreeParams { min_samples_leaf: 3, ..TreeParams::default() };
        let t = fit_tree(&d, &params, None, &mut rng()).unwrap();
        for n in &t.nodes {
            if let TreeNode::Leaf { cover, .. } = n {
                assert!(*cover >= 3.0);
            }
        }
    }

    #[test]
    fn json_round_trip_and_missing_cover() {
        let t = Tree::stump(1, 2.5, (0.25, 4.0), (0.75, 4.0));
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<Tree>(&s).unwrap(), t);
        let bare: Tree = serde_json::from_str(r#"{"nodes":[{"type":"leaf","value":0.5}]}"#).unwrap();
        assert!(bare.nodes[0].cover().is_nan());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(TreeParams { max_depth: Some(0), ..TreeParams::default() }.validate().is_err());
        assert!(TreeParams { min_samples_leaf: 0, ..TreeParams::default() }.validate().is_err());
    }
}
