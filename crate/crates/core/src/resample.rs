//! Stratified train/test splitting and SMOTE oversampling.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::ingest::ColumnKind;
use crate::rng;

#[derive(Clone, Debug)]
pub struct SplitResult {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// Per-class test counts. The test size is `ceil(n * fraction)`, spread
/// over classes by largest remainder, which for two classes rounds each
/// class share to the nearest integer.
pub fn stratified_test_counts(class_counts: [usize; 2], test_fraction: f64) -> [usize; 2] {
    let n = class_counts[0] + class_counts[1];
    let n_test = ((n as f64 * test_fraction).ceil() as usize).min(n);
    let exact: Vec<f64> = class_counts.iter().map(|&c| n_test as f64 * c as f64 / n as f64).collect();
    let mut counts = [exact[0].floor() as usize, exact[1].floor() as usize];
    let mut short = n_test - counts[0] - counts[1];
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.partial_cmp(&fa).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    for c in order {
        if short == 0 {
            break;
        }
        if counts[c] < class_counts[c] {
            counts[c] += 1;
            short -= 1;
        }
    }
    counts
}

fn check_classes(data: &LabeledDataset, required: usize) -> Result<[usize; 2]> {
    let counts = data.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < required {
            return Err(Error::DegenerateClass { class: class as u8, count, required });
        }
    }
    Ok(counts)
}

/// Seeded stratified split; both partitions keep the source row order.
pub fn stratified_split(data: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<SplitResult> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let counts = check_classes(data, 2)?;
    let test_counts = stratified_test_counts(counts, test_fraction);

    let mut in_test = vec![false; data.n_rows()];
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..data.n_rows()).filter(|&i| data.labels[i] == class).collect();
        let mut rng = rng::stream(seed, rng::label::SPLIT, u64::from(class));
        members.shuffle(&mut rng);
        for &i in &members[..test_counts[usize::from(class)]] {
            in_test[i] = true;
        }
    }
    let (test_indices, train_indices): (Vec<usize>, Vec<usize>) = (0..data.n_rows()).partition(|&i| in_test[i]);
    Ok(SplitResult {
        train: data.subset(&train_indices),
        test: data.subset(&test_indices),
        train_indices,
        test_indices,
        seed,
        test_fraction,
    })
}

/// Stratified k-fold assignment: returns the fold of every row.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut fold = vec![0; labels.len()];
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::DegenerateClass { class, count: members.len(), required: k });
        }
        members.shuffle(&mut rng::stream(seed, rng::label::FOLD, u64::from(class)));
        for (pos, &i) in members.iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    Ok(fold)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Minority/majority ratio after oversampling.
    pub target_ratio: f64,
    pub seed: u64,
    pub metric: DistanceMetric,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig { k_neighbors: 5, target_ratio: 1.0, seed: 0, metric: DistanceMetric::Euclidean }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 1 {
            return Err(Error::Config("smote k_neighbors must be at least 1".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::Config(format!("smote target_ratio {} outside (0, 1]", self.target_ratio)));
        }
        Ok(())
    }
}

/// Audit record for one synthetic row. Indices refer to the input rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoteProvenance {
    pub row_id: String,
    pub parent: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug)]
pub struct SmoteOutput {
    pub dataset: LabeledDataset,
    pub provenance: Vec<SmoteProvenance>,
    pub minority_label: u8,
    pub k_used: usize,
}

fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest other minority rows of `minority[pos]`, ties by row index.
fn nearest(data: &LabeledDataset, minority: &[usize], pos: usize, k: usize) -> Vec<usize> {
    let me = data.row(minority[pos]);
    let mut cand: Vec<(f64, usize)> = minority
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != pos)
        .map(|(_, &j)| (sq_distance(me, data.row(j)), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Nearest observed level; ties go to the lower level.
pub fn snap_to_level(v: f64, levels: &[f64]) -> f64 {
    if levels.is_empty() {
        return v;
    }
    let idx = levels.partition_point(|&l| l < v);
    match (idx.checked_sub(1).map(|i| levels[i]), levels.get(idx)) {
        (Some(lo), Some(&hi)) => {
            if v - lo <= hi - v {
                lo
            } else {
                hi
            }
        }
        (Some(lo), None) => lo,
        (None, Some(&hi)) => hi,
        (None, None) => v,
    }
}

/// Oversamples the minority class of `train`. Original rows come first.
pub fn smote(train: &LabeledDataset, cfg: &SmoteConfig) -> Result<SmoteOutput> {
    cfg.validate()?;
    let counts = train.class_counts();
    let minority_label: u8 = if counts[1] <= counts[0] { 1 } else { 0 };
    let (n_min, n_maj) = (counts[usize::from(minority_label)], counts[usize::from(1 - minority_label)]);
    if n_min < 2 {
        return Err(Error::DegenerateClass { class: minority_label, count: n_min, required: 2 });
    }
    let k = cfg.k_neighbors.min(n_min - 1);
    if k < cfg.k_neighbors {
        log::info!("smote: k_neighbors clamped from {} to {k}", cfg.k_neighbors);
    }
    let wanted = (cfg.target_ratio * n_maj as f64).round() as usize;
    let n_synth = wanted.saturating_sub(n_min);

    let minority: Vec<usize> = (0..train.n_rows()).filter(|&i| train.labels[i] == minority_label).collect();
    let mut order: Vec<usize> = (0..n_min).collect();
    order.shuffle(&mut rng::stream(cfg.seed, rng::label::SMOTE_ORDER, 0));

    let used = n_synth.min(n_min);
    let neighbors: Vec<Vec<usize>> = order[..used].par_iter().map(|&pos| nearest(train, &minority, pos, k)).collect();

    let d = train.n_features();
    let mut out = train.clone();
    let mut provenance = Vec::with_capacity(n_synth);
    let mut row = vec![0.0; d];
    for s in 0..n_synth {
        let slot = s % n_min;
        let parent = minority[order[slot]];
        let mut rng = rng::stream(cfg.seed, rng::label::SMOTE_SAMPLE, s as u64);
        let neighbor = neighbors[slot][rng.gen_range(0..k)];
        let lambda: f64 = rng.gen();
        let (x, z) = (train.row(parent), train.row(neighbor));
        for j in 0..d {
            let v = x[j] + lambda * (z[j] - x[j]);
            row[j] = match train.meta.column_kinds[j] {
                ColumnKind::Categorical => snap_to_level(v, &train.meta.categorical_levels[j]),
                ColumnKind::Numeric => v,
            };
        }
        let id = format!("smote-{s}");
        out.push_row(id.clone(), &row, minority_label);
        provenance.push(SmoteProvenance { row_id: id, parent, neighbor, lambda });
    }
    Ok(SmoteOutput { dataset: out, provenance, minority_label, k_used: k })
}
