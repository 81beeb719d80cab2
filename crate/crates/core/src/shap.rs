//! Exact path-dependent Shapley attributions for axis-aligned trees and
//! the ensembles built from them.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::ensemble::{BoostedModel, ForestModel, Model};
use crate::error::{Error, Result};
use crate::tree::{Tree, TreeNode};

/// Scale on which contributions add up to the model output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputScale {
    Probability,
    LogOdds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeShap {
    pub base_value: f64,
    pub contributions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapExplanation {
    pub row_id: String,
    pub base_value: f64,
    pub contributions: Vec<f64>,
    pub model_output: f64,
    pub scale: OutputScale,
}

impl ShapExplanation {
    /// `base_value + Σ contributions`.
    pub fn reconstructed(&self) -> f64 {
        self.base_value + self.contributions.iter().sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

const EMPTY: PathElem = PathElem { feature: None, zero: 0.0, one: 0.0, weight: 0.0 };

fn extend(path: &mut [PathElem], len: usize, zero: f64, one: f64, feature: Option<usize>) {
    path[len] = PathElem { feature, zero, one, weight: if len == 0 { 1.0 } else { 0.0 } };
    let denom = (len + 1) as f64;
    for i in (0..len).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero * path[i].weight * (len - i) as f64 / denom;
    }
}

/// Removes element `idx` from a path of `len` elements.
fn unwind(path: &mut [PathElem], len: usize, idx: usize) {
    let depth = len - 1;
    let one = path[idx].one;
    let zero = path[idx].zero;
    let mut next = path[depth].weight;
    let denom = (depth + 1) as f64;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let t = path[i].weight;
            path[i].weight = next * denom / ((i + 1) as f64 * one);
            next = t - path[i].weight * zero * (depth - i) as f64 / denom;
        } else {
            path[i].weight = path[i].weight * denom / (zero * (depth - i) as f64);
        }
    }
    for i in idx..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
}

const INV_LEN: usize = 64;

static INV: [f64; INV_LEN] = {
    let mut t = [0.0; INV_LEN];
    let mut k = 1;
    while k < INV_LEN {
        t[k] = 1.0 / k as f64;
        k += 1;
    }
    t
};

#[inline]
fn inv(k: usize) -> f64 {
    if k < INV_LEN {
        INV[k]
    } else {
        1.0 / k as f64
    }
}

/// Total permutation weight if element `idx` were unwound.
fn unwound_sum(path: &[PathElem], len: usize, idx: usize) -> f64 {
    let depth = len - 1;
    let one = path[idx].one;
    let zero = path[idx].zero;
    let denom = (depth + 1) as f64;
    let mut total = 0.0;
    if one != 0.0 {
        let scale = denom / one;
        let back = zero * inv(depth + 1);
        let mut next = path[depth].weight;
        for i in (0..depth).rev() {
            let t = next * scale * inv(i + 1);
            total += t;
            next = path[i].weight - t * back * (depth - i) as f64;
        }
    } else {
        for i in (0..depth).rev() {
            total += path[i].weight * inv(depth - i);
        }
        total *= denom / zero;
    }
    total
}

struct Walker<'a> {
    tree: &'a Tree,
    row: &'a [f64],
    phi: Vec<f64>,
    buf: Vec<PathElem>,
}

impl Walker<'_> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        node: usize,
        parent_start: usize,
        parent_len: usize,
        zero: f64,
        one: f64,
        feature: Option<usize>,
    ) {
        let start = parent_start + parent_len;
        if self.buf.len() < start + parent_len + 1 {
            self.buf.resize(start + parent_len + 1, EMPTY);
        }
        self.buf.copy_within(parent_start..start, start);
        extend(&mut self.buf[start..], parent_len, zero, one, feature);
        let mut len = parent_len + 1;

        match self.tree.nodes[node] {
            TreeNode::Leaf { value, .. } => {
                let path = &self.buf[start..start + len];
                let depth = len - 1;
                // the one == 0 branch of unwound_sum does not depend on the element
                let cold: f64 = (0..depth).map(|i| path[i].weight * inv(depth - i)).sum();
                for i in 1..len {
                    let e = path[i];
                    let w = if e.one != 0.0 { unwound_sum(path, len, i) } else { cold * (depth + 1) as f64 / e.zero };
                    let f = e.feature.expect("only the root element has no feature");
                    self.phi[f] += w * (e.one - e.zero) * value;
                }
            }
            TreeNode::Internal { feature: f, threshold, left, right, cover } => {
                let (hot, cold) = if self.row[f] <= threshold { (left, right) } else { (right, left) };
                let mut inc_zero = 1.0;
                let mut inc_one = 1.0;
                if let Some(k) = (1..len).find(|&k| self.buf[start + k].feature == Some(f)) {
                    inc_zero = self.buf[start + k].zero;
                    inc_one = self.buf[start + k].one;
                    unwind(&mut self.buf[start..], len, k);
                    len -= 1;
                }
                let hot_cover = self.tree.nodes[hot].cover();
                let cold_cover = self.tree.nodes[cold].cover();
                self.recurse(hot, start, len, inc_zero * hot_cover / cover, inc_one, Some(f));
                self.recurse(cold, start, len, inc_zero * cold_cover / cover, 0.0, Some(f));
            }
        }
    }
}

/// Rejects covers that cannot weight a path.
pub fn check_covers(tree: &Tree) -> Result<()> {
    for (i, n) in tree.nodes.iter().enumerate() {
        let c = n.cover();
        let ok = match n {
            TreeNode::Internal { .. } => c.is_finite() && c > 0.0,
            TreeNode::Leaf { .. } => c.is_finite() && c >= 0.0,
        };
        if !ok {
            return Err(Error::MissingCover(i));
        }
    }
    Ok(())
}

/// Cover-weighted mean leaf value.
pub fn expected_value(tree: &Tree) -> f64 {
    fn go(t: &Tree, i: usize) -> f64 {
        match t.nodes[i] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Internal { left, right, cover, .. } => {
                (t.nodes[left].cover() * go(t, left) + t.nodes[right].cover() * go(t, right)) / cover
            }
        }
    }
    go(tree, 0)
}

fn shap_tree_unchecked(tree: &Tree, row: &[f64]) -> TreeShap {
    let mut w = Walker { tree, row, phi: vec![0.0; row.len()], buf: vec![EMPTY; 64] };
    w.recurse(0, 0, 0, 1.0, 1.0, None);
    TreeShap { base_value: expected_value(tree), contributions: w.phi }
}

/// Shapley values of one tree's output for `row`.
pub fn shap_tree(tree: &Tree, row: &[f64]) -> Result<TreeShap> {
    tree.check_width(row.len())?;
    check_covers(tree)?;
    Ok(shap_tree_unchecked(tree, row))
}

fn check_model(model: &Model, width: usize) -> Result<()> {
    match model {
        Model::Forest(m) => m.check_width(width)?,
        Model::Boosted(m) => m.check_width(width)?,
    }
    model.trees().iter().try_for_each(check_covers)
}

fn forest_shap(m: &ForestModel, row: &[f64]) -> (f64, Vec<f64>) {
    let k = m.trees.len() as f64;
    let mut base = 0.0;
    let mut phi = vec![0.0; row.len()];
    for t in &m.trees {
        let s = shap_tree_unchecked(t, row);
        base += s.base_value;
        for (p, c) in phi.iter_mut().zip(&s.contributions) {
            *p += c;
        }
    }
    phi.iter_mut().for_each(|p| *p /= k);
    (base / k, phi)
}

fn boosted_shap(m: &BoostedModel, row: &[f64]) -> (f64, Vec<f64>) {
    let mut base = 0.0;
    let mut phi = vec![0.0; row.len()];
    for t in &m.trees {
        let s = shap_tree_unchecked(t, row);
        base += s.base_value;
        for (p, c) in phi.iter_mut().zip(&s.contributions) {
            *p += c;
        }
    }
    phi.iter_mut().for_each(|p| *p *= m.learning_rate);
    (m.base_score + m.learning_rate * base, phi)
}

fn explain_unchecked(model: &Model, row_id: &str, row: &[f64]) -> ShapExplanation {
    let (base_value, contributions, model_output, scale) = match model {
        Model::Forest(m) => {
            let (b, c) = forest_shap(m, row);
            (b, c, m.predict_unchecked(row), OutputScale::Probability)
        }
        Model::Boosted(m) => {
            let (b, c) = boosted_shap(m, row);
            (b, c, m.raw_unchecked(row), OutputScale::LogOdds)
        }
    };
    ShapExplanation { row_id: row_id.to_string(), base_value, contributions, model_output, scale }
}

/// Forest attributions are the member mean on the probability scale;
/// boosted attributions are on the raw log-odds scale.
pub fn shap_ensemble(model: &Model, row: &[f64]) -> Result<ShapExplanation> {
    check_model(model, row.len())?;
    Ok(explain_unchecked(model, "", row))
}

/// Explanations for every row of `data`, in row order.
pub fn explain_dataset(model: &Model, data: &LabeledDataset) -> Result<Vec<ShapExplanation>> {
    check_model(model, data.n_features())?;
    Ok((0..data.n_rows()).into_par_iter().map(|i| explain_unchecked(model, &data.row_ids[i], data.row(i))).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub feature_names: Vec<String>,
    pub mean_abs: Vec<f64>,
    /// Feature indices by descending importance, ties by index.
    pub ranking: Vec<usize>,
}

impl GlobalImportance {
    pub fn from_explanations(feature_names: &[String], explanations: &[ShapExplanation]) -> Self {
        let d = feature_names.len();
        let mut mean_abs = vec![0.0; d];
        for e in explanations {
            for (m, c) in mean_abs.iter_mut().zip(&e.contributions) {
                *m += c.abs();
            }
        }
        if !explanations.is_empty() {
            mean_abs.iter_mut().for_each(|m| *m /= explanations.len() as f64);
        }
        let mut ranking: Vec<usize> = (0..d).collect();
        ranking.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
        GlobalImportance { feature_names: feature_names.to_vec(), mean_abs, ranking }
    }

    /// Names in rank order.
    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking.iter().map(|&j| self.feature_names[j].as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Entry<'a> {
            rank: usize,
            feature: &'a str,
            mean_abs_shap: f64,
        }
        let entries: Vec<Entry> = self
            .ranking
            .iter()
            .enumerate()
            .map(|(r, &j)| Entry { rank: r + 1, feature: &self.feature_names[j], mean_abs_shap: self.mean_abs[j] })
            .collect();
        Ok(serde_json::to_string_pretty(&entries)?)
    }
}

pub fn global_importance(model: &Model, data: &LabeledDataset) -> Result<GlobalImportance> {
    let ex = explain_dataset(model, data)?;
    Ok(GlobalImportance::from_explanations(data.feature_names(), &ex))
}

/// Long-form rows `(row_id, feature, feature_value, shap_value)`, grouped
/// by feature in importance order, rows in dataset order within a group.
pub fn write_beeswarm<W: Write>(
    sink: W,
    data: &LabeledDataset,
    explanations: &[ShapExplanation],
    importance: &GlobalImportance,
) -> Result<()> {
    if explanations.len() != data.n_rows() {
        return Err(Error::LengthMismatch { left: explanations.len(), right: data.n_rows() });
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["row_id", "feature", "feature_value", "shap_value"])?;
    for &j in &importance.ranking {
        for (i, e) in explanations.iter().enumerate() {
            w.write_record([
                e.row_id.as_str(),
                importance.feature_names[j].as_str(),
                &data.get(i, j).to_string(),
                &e.contributions[j].to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests;
