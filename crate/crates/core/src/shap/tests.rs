use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dataset::{LabeledDataset, TargetKind};
use crate::ensemble::{fit_boosted, fit_forest, BoostParams, ForestParams};
use crate::ingest::SynthSpec;
use crate::pipeline::synthetic_dataset;
use crate::tree::TreeParams;

/// Conditional expectation given the features in `mask`, following covers
/// elsewhere.
fn cond_expectation(t: &Tree, i: usize, row: &[f64], mask: u32) -> f64 {
    match t.nodes[i] {
        TreeNode::Leaf { value, .. } => value,
        TreeNode::Internal { feature, threshold, left, right, cover } => {
            if mask & (1 << feature) != 0 {
                let next = if row[feature] <= threshold { left } else { right };
                cond_expectation(t, next, row, mask)
            } else {
                (t.nodes[left].cover() * cond_expectation(t, left, row, mask)
                    + t.nodes[right].cover() * cond_expectation(t, right, row, mask))
                    / cover
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn brute_force(t: &Tree, row: &[f64]) -> Vec<f64> {
    let d = row.len();
    let mut phi = vec![0.0; d];
    for (j, p) in phi.iter_mut().enumerate() {
        for mask in 0u32..(1 << d) {
            if mask & (1 << j) != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = factorial(s) * factorial(d - s - 1) / factorial(d);
            *p += w * (cond_expectation(t, 0, row, mask | (1 << j)) - cond_expectation(t, 0, row, mask));
        }
    }
    phi
}

fn random_tree(rng: &mut ChaCha8Rng, d: usize, max_depth: usize) -> Tree {
    fn grow(rng: &mut ChaCha8Rng, nodes: &mut Vec<TreeNode>, d: usize, depth: usize, cover: f64) -> usize {
        let idx = nodes.len();
        if depth == 0 || rng.gen_bool(0.2) {
            nodes.push(TreeNode::Leaf { value: rng.gen_range(-2.0..2.0), cover });
            return idx;
        }
        nodes.push(TreeNode::Leaf { value: 0.0, cover });
        let feature = rng.gen_range(0..d);
        let threshold = rng.gen_range(0..4) as f64 + 0.5;
        let share = rng.gen_range(0.05..0.95);
        let left = grow(rng, nodes, d, depth - 1, cover * share);
        let right = grow(rng, nodes, d, depth - 1, cover * (1.0 - share));
        nodes[idx] = TreeNode::Internal { feature, threshold, left, right, cover };
        idx
    }
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, d, max_depth, 100.0);
    Tree { nodes }
}

proptest! {
    #[test]
    fn matches_subset_enumeration(seed in any::<u64>(), d in 1usize..=4, depth in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, d, depth);
        for _ in 0..4 {
            let row: Vec<f64> = (0..d).map(|_| rng.gen_range(0..5) as f64).collect();
            let got = shap_tree(&tree, &row).unwrap();
            let want = brute_force(&tree, &row);
            for (g, w) in got.contributions.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-9, "{g} vs {w}");
            }
            let total = got.base_value + got.contributions.iter().sum::<f64>();
            prop_assert!((total - tree.predict(&row).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn single_leaf_has_no_attribution() {
    let s = shap_tree(&Tree::leaf(0.3, 5.0), &[1.0, 2.0]).unwrap();
    assert_eq!(s.base_value, 0.3);
    assert_eq!(s.contributions, vec![0.0, 0.0]);
}

#[test]
fn stump_attributes_only_its_feature() {
    let t = Tree::stump(1, 0.5, (0.1, 3.0), (0.9, 1.0));
    let s = shap_tree(&t, &[7.0, 1.0, -3.0]).unwrap();
    let base = (0.1 * 3.0 + 0.9) / 4.0;
    assert!((s.base_value - base).abs() < 1e-15);
    assert_eq!(s.contributions[0], 0.0);
    assert_eq!(s.contributions[2], 0.0);
    assert!((s.contributions[1] - (0.9 - base)).abs() < 1e-15);
}

#[test]
fn symmetric_features_share_equally() {
    // f(x) = 1 iff x0 > 0.5 and x1 > 0.5, built symmetrically.
    let t = Tree {
        nodes: vec![
            TreeNode::Internal { feature: 0, threshold: 0.5, left: 1, right: 2, cover: 4.0 },
            TreeNode::Leaf { value: 0.0, cover: 2.0 },
            TreeNode::Internal { feature: 1, threshold: 0.5, left: 3, right: 4, cover: 2.0 },
            TreeNode::Leaf { value: 0.0, cover: 1.0 },
            TreeNode::Leaf { value: 1.0, cover: 1.0 },
        ],
    };
    let s = shap_tree(&t, &[1.0, 1.0]).unwrap();
    assert!((s.contributions[0] - s.contributions[1]).abs() < 1e-12);
    assert!((s.contributions[0] - 0.375).abs() < 1e-12);
}

#[test]
fn missing_cover_is_rejected() {
    let text = r#"{"nodes":[{"type":"internal","feature":0,"threshold":0.5,"left":1,"right":2},
        {"type":"leaf","value":0.0,"cover":1.0},{"type":"leaf","value":1.0,"cover":1.0}]}"#;
    let t: Tree = serde_json::from_str(text).unwrap();
    assert!(matches!(shap_tree(&t, &[0.0]), Err(Error::MissingCover(0))));
}

fn planted(n: usize, seed: u64) -> LabeledDataset {
    synthetic_dataset(n, seed, &SynthSpec::default(), TargetKind::OverSerious).unwrap()
}

#[test]
fn forest_local_accuracy_and_dummy() {
    let data = planted(2000, 1);
    let params = ForestParams {
        n_trees: 20,
        tree: TreeParams { max_depth: Some(8), ..TreeParams::default() },
        ..ForestParams::default()
    };
    let model = Model::Forest(fit_forest(&data, &params, 3).unwrap());
    let used: std::collections::BTreeSet<usize> = model
        .trees()
        .iter()
        .flat_map(|t| t.nodes.iter())
        .filter_map(|n| match n {
            TreeNode::Internal { feature, .. } => Some(*feature),
            TreeNode::Leaf { .. } => None,
        })
        .collect();
    for i in 0..100 {
        let e = shap_ensemble(&model, data.row(i)).unwrap();
        assert_eq!(e.scale, OutputScale::Probability);
        assert!((e.reconstructed() - model.predict_row(data.row(i)).unwrap()).abs() < 1e-9);
        for j in 0..data.n_features() {
            if !used.contains(&j) {
                assert_eq!(e.contributions[j], 0.0);
            }
        }
    }
}

#[test]
fn boosted_local_accuracy_on_raw_scale() {
    let data = planted(2000, 2);
    let params = BoostParams { rounds: 30, ..BoostParams::default() };
    let m = fit_boosted(&data, &params, 3).unwrap();
    let model = Model::Boosted(m.clone());
    for i in 0..100 {
        let e = shap_ensemble(&model, data.row(i)).unwrap();
        assert_eq!(e.scale, OutputScale::LogOdds);
        assert!((e.reconstructed() - m.predict_raw(data.row(i)).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn duplicated_forest_tree_changes_nothing() {
    let t = Tree::stump(0, 0.5, (0.2, 2.0), (0.7, 3.0));
    let one =
        Model::Forest(ForestModel { trees: vec![t.clone()], params: ForestParams::default(), seed: 0, n_features: 2 });
    let two = Model::Forest(ForestModel {
        trees: vec![t.clone(), t],
        params: ForestParams::default(),
        seed: 0,
        n_features: 2,
    });
    let a = shap_ensemble(&one, &[1.0, 0.0]).unwrap();
    let b = shap_ensemble(&two, &[1.0, 0.0]).unwrap();
    assert_eq!(a.contributions, b.contributions);
    assert_eq!(a.base_value, b.base_value);
}

#[test]
fn one_round_boosted_is_scaled_stump() {
    let t = Tree::stump(1, 0.5, (-0.4, 2.0), (1.2, 3.0));
    let stump = shap_tree(&t, &[0.0, 1.0]).unwrap();
    let m = BoostedModel {
        trees: vec![t],
        learning_rate: 0.3,
        l2_lambda: 1.0,
        base_score: -0.2,
        positive_weight: 1.0,
        n_rounds: 1,
        params: BoostParams::default(),
        seed: 0,
        n_features: 2,
        train_loss: vec![],
    };
    let e = shap_ensemble(&Model::Boosted(m), &[0.0, 1.0]).unwrap();
    assert_eq!(e.contributions[1], 0.3 * stump.contributions[1]);
    assert_eq!(e.contributions[0], 0.0);
    assert!((e.base_value - (-0.2 + 0.3 * stump.base_value)).abs() < 1e-15);
}

#[test]
fn stump_importance_and_beeswarm_shape() {
    let data = LabeledDataset::from_numeric(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 5.0]], vec![0, 1]).unwrap();
    let model = Model::Forest(ForestModel {
        trees: vec![Tree::stump(2, 3.0, (0.1, 1.0), (0.8, 1.0))],
        params: ForestParams::default(),
        seed: 0,
        n_features: 3,
    });
    let ex = explain_dataset(&model, &data).unwrap();
    let imp = GlobalImportance::from_explanations(data.feature_names(), &ex);
    assert_eq!(imp.ranking, vec![2, 0, 1]);
    assert_eq!(imp.mean_abs[0], 0.0);
    assert_eq!(imp.mean_abs[1], 0.0);
    assert!(imp.mean_abs[2] > 0.0);

    let mut out = Vec::new();
    write_beeswarm(&mut out, &data, &ex, &imp).unwrap();
    let mut reader = csv::Reader::from_reader(out.as_slice());
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 6);
    assert_eq!(&records[0][1], "f2");
    assert_eq!(&records[2][1], "f0");
    let shap: f64 = records[1][3].parse().unwrap();
    assert_eq!(shap, ex[1].contributions[2]);
}

#[test]
fn planted_speed_ranks_high() {
    let data = planted(4000, 7);
    let model = Model::Forest(fit_forest(&data, &ForestParams { n_trees: 30, ..ForestParams::default() }, 2).unwrap());
    let sample = data.subset(&(0..300).collect::<Vec<_>>());
    let imp = global_importance(&model, &sample).unwrap();
    let top: Vec<&str> = imp.ranked_names()[..3].to_vec();
    assert!(top.contains(&"speed_limit"), "{top:?}");
}
