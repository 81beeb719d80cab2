use proptest::prelude::*;

use super::*;
use crate::dataset::{LabeledDataset, TargetKind};
use crate::ingest::{Condition, EffectSpec, Field, LogitModel, SynthSpec, Term};
use crate::math::{logit, sigmoid};
use crate::metrics::roc_auc;
use crate::pipeline::synthetic_dataset;
use crate::resample::stratified_split;
use crate::rng;
use crate::tree::{fit_tree, FeatureSubsample, Tree, TreeParams};

fn planted(n: usize, seed: u64) -> (LabeledDataset, LabeledDataset) {
    let data = synthetic_dataset(n, seed, &SynthSpec::default(), TargetKind::OverSerious).unwrap();
    let split = stratified_split(&data, 0.2, seed).unwrap();
    (split.train, split.test)
}

#[test]
fn single_unbootstrapped_tree_matches_fit_tree() {
    let (train, test) = planted(1500, 3);
    let params = ForestParams { n_trees: 1, bootstrap: false, ..ForestParams::default() };
    let forest = fit_forest(&train, &params, 11).unwrap();
    let mut rng = rng::stream(11, rng::label::FOREST_TREE, 0);
    let tree = fit_tree(&train, &params.tree, None, &mut rng).unwrap();
    assert_eq!(forest.trees[0], tree);
    for row in test.rows() {
        assert_eq!(forest.predict_row(row).unwrap(), tree.predict(row).unwrap());
    }
}

#[test]
fn forest_mean_of_two_trees() {
    let model = ForestModel {
        trees: vec![Tree::leaf(0.2, 1.0), Tree::leaf(0.8, 1.0)],
        params: ForestParams::default(),
        seed: 0,
        n_features: 1,
    };
    assert!((model.predict_row(&[0.0]).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn forest_is_deterministic_and_permutation_invariant() {
    let (train, test) = planted(1500, 5);
    let params = ForestParams { n_trees: 15, ..ForestParams::default() };
    let a = fit_forest(&train, &params, 9).unwrap();
    let b = fit_forest(&train, &params, 9).unwrap();
    assert_eq!(a, b);
    let mut shuffled = a.clone();
    shuffled.trees.reverse();
    shuffled.trees.swap(0, 7);
    assert_eq!(a.predict(&test).unwrap(), shuffled.predict(&test).unwrap());
}

#[test]
fn forest_beats_single_tree_on_planted_signal() {
    let (train, test) = planted(5000, 21);
    let tree_params = TreeParams::default();
    let mut rng = rng::stream(1, rng::label::FOREST_TREE, 0);
    let tree = fit_tree(&train, &tree_params, None, &mut rng).unwrap();
    let tree_probs: Vec<f64> = test.rows().map(|r| tree.predict(r).unwrap()).collect();
    let forest = fit_forest(&train, &ForestParams { n_trees: 60, ..ForestParams::default() }, 1).unwrap();
    let forest_probs = forest.predict(&test).unwrap();
    let t = roc_auc(&test.labels, &tree_probs).unwrap();
    let f = roc_auc(&test.labels, &forest_probs).unwrap();
    assert!(f >= t, "forest {f} vs tree {t}");
}

#[test]
fn forest_rejects_narrow_rows() {
    let model = ForestModel {
        trees: vec![Tree::stump(2, 0.5, (0.1, 1.0), (0.9, 1.0))],
        params: ForestParams::default(),
        seed: 0,
        n_features: 3,
    };
    assert!(matches!(model.predict_row(&[0.0, 1.0]), Err(crate::Error::FeatureOutOfRange { .. })));
}

proptest! {
    #[test]
    fn forest_output_within_member_range(values in prop::collection::vec(0.0f64..1.0, 1..12), x in -2.0f64..2.0) {
        let trees: Vec<Tree> = values
            .chunks(2)
            .map(|c| Tree::stump(0, 0.0, (c[0], 1.0), (*c.last().unwrap(), 1.0)))
            .collect();
        let model = ForestModel { trees, params: ForestParams::default(), seed: 0, n_features: 1 };
        let p = model.predict_row(&[x]).unwrap();
        let outs: Vec<f64> = model.trees.iter().map(|t| t.predict(&[x]).unwrap()).collect();
        let lo = outs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = outs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(p >= lo - 1e-15 && p <= hi + 1e-15);
    }
}

/// Step-by-step recurrence with an exhaustive stump search.
fn oracle_boost(x: &[[f64; 2]], y: &[u8], rounds: usize, eta: f64, lambda: f64) -> Vec<Vec<f64>> {
    let n = y.len();
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let base = (pos / n as f64 / (1.0 - pos / n as f64)).ln();
    let mut raw = vec![base; n];
    let mut history = Vec::new();
    for _ in 0..rounds {
        let p: Vec<f64> = raw.iter().map(|r| 1.0 / (1.0 + (-r).exp())).collect();
        let g: Vec<f64> = (0..n).map(|i| p[i] - y[i] as f64).collect();
        let h: Vec<f64> = (0..n).map(|i| p[i] * (1.0 - p[i])).collect();
        let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
        let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..2 {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = (w[0] + w[1]) / 2.0;
                let (mut gl, mut hl) = (0.0, 0.0);
                for i in 0..n {
                    if x[i][f] <= thr {
                        gl += g[i];
                        hl += h[i];
                    }
                }
                let gain = 0.5 * (score(gl, hl) + score(gt - gl, ht - hl) - score(gt, ht));
                if best.map_or(gain > 1e-12, |(b, _, _)| gain > b + 1e-12) {
                    best = Some((gain, f, thr));
                }
            }
        }
        let leaf = |sel: &dyn Fn(usize) -> bool| {
            let gs: f64 = (0..n).filter(|&i| sel(i)).map(|i| g[i]).sum();
            let hs: f64 = (0..n).filter(|&i| sel(i)).map(|i| h[i]).sum();
            -gs / (hs + lambda)
        };
        match best {
            Some((_, f, thr)) => {
                let wl = leaf(&|i| x[i][f] <= thr);
                let wr = leaf(&|i| x[i][f] > thr);
                for i in 0..n {
                    raw[i] += eta * if x[i][f] <= thr { wl } else { wr };
                }
            }
            None => {
                let w = leaf(&|_| true);
                for r in raw.iter_mut() {
                    *r += eta * w;
                }
            }
        }
        history.push(raw.iter().map(|r| 1.0 / (1.0 + (-r).exp())).collect());
    }
    history
}

#[test]
fn boosting_matches_hand_recurrence() {
    let x = [[1.0, 5.0], [2.0, 3.0], [3.0, 8.0], [4.0, 1.0], [5.0, 7.0], [6.0, 2.0], [7.0, 6.0], [8.0, 4.0]];
    let y = [0u8, 0, 1, 0, 1, 1, 0, 1];
    let data = LabeledDataset::from_numeric(x.iter().map(|r| r.to_vec()).collect(), y.to_vec()).unwrap();
    let expected = oracle_boost(&x, &y, 2, 0.3, 1.0);
    for rounds in 1..=2 {
        let params = BoostParams {
            tree: TreeParams { max_depth: Some(1), ..TreeParams::default() },
            rounds,
            learning_rate: 0.3,
            l2_lambda: 1.0,
            positive_weight: PositiveWeight::Fixed(1.0),
        };
        let model = fit_boosted(&data, &params, 0).unwrap();
        let got = model.predict(&data).unwrap();
        for (g, e) in got.iter().zip(&expected[rounds - 1]) {
            assert!((g - e).abs() < 1e-9, "round {rounds}: {g} vs {e}");
        }
    }
}

#[test]
fn single_leaf_weight_is_newton_step() {
    // Constant features force a root leaf.
    let data = LabeledDataset::from_numeric(vec![vec![1.0]; 5], vec![1, 0, 0, 1, 1]).unwrap();
    let params = BoostParams { rounds: 1, l2_lambda: 0.0, learning_rate: 1.0, ..BoostParams::default() };
    let model = fit_boosted(&data, &params, 0).unwrap();
    let p = sigmoid(logit(0.6));
    let g: f64 = data.labels.iter().map(|&y| p - y as f64).sum();
    let h = 5.0 * p * (1.0 - p);
    let w = model.trees[0].predict(&[1.0]).unwrap();
    assert!((w - (-g / h)).abs() < 1e-12);
    // Prior already optimal: the step is zero and predictions equal the prior.
    assert!((model.predict_row(&[1.0]).unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn boosted_base_case_and_learning_rate() {
    let mut model = BoostedModel {
        trees: vec![],
        learning_rate: 1.0,
        l2_lambda: 1.0,
        base_score: 0.0,
        positive_weight: 1.0,
        n_rounds: 0,
        params: BoostParams::default(),
        seed: 0,
        n_features: 1,
        train_loss: vec![],
    };
    assert_eq!(model.predict_row(&[0.3]).unwrap(), 0.5);
    model.trees = vec![Tree::stump(0, 0.5, (-1.0, 1.0), (2.0, 1.0))];
    model.base_score = 0.25;
    let full = model.predict_row(&[0.9]).unwrap();
    model.learning_rate = 0.5;
    let half = model.predict_row(&[0.9]).unwrap();
    assert!((full - sigmoid(0.25 + 2.0)).abs() < 1e-15);
    assert!((half - sigmoid(0.25 + 1.0)).abs() < 1e-15);
}

proptest! {
    #[test]
    fn raising_a_leaf_never_lowers_probability(base in -5.0f64..5.0, a in -3.0f64..3.0, bump in 0.0f64..3.0, x in -1.0f64..1.0) {
        let make = |v: f64| BoostedModel {
            trees: vec![Tree::stump(0, 0.0, (v, 1.0), (v, 1.0))],
            learning_rate: 0.3,
            l2_lambda: 1.0,
            base_score: base,
            positive_weight: 1.0,
            n_rounds: 1,
            params: BoostParams::default(),
            seed: 0,
            n_features: 1,
            train_loss: vec![],
        };
        prop_assert!(make(a + bump).predict_row(&[x]).unwrap() >= make(a).predict_row(&[x]).unwrap());
    }
}

#[test]
fn boosted_training_loss_non_increasing() {
    let (train, _) = planted(3000, 8);
    let params = BoostParams {
        rounds: 50,
        tree: TreeParams { max_depth: Some(3), ..TreeParams::default() },
        ..BoostParams::default()
    };
    let model = fit_boosted(&train, &params, 4).unwrap();
    assert_eq!(model.train_loss.len(), 50);
    for w in model.train_loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn boosted_is_deterministic_and_round_trips() {
    let (train, test) = planted(1200, 2);
    let params = BoostParams { rounds: 10, ..BoostParams::default() };
    let a = fit_boosted(&train, &params, 6).unwrap();
    let b = fit_boosted(&train, &params, 6).unwrap();
    assert_eq!(a, b);
    let file = ModelFile::new(Model::Boosted(a.clone()), TargetKind::OverSerious, train.feature_names().to_vec());
    let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.model.predict(&test).unwrap(), a.predict(&test).unwrap());
}

#[test]
fn model_file_checks_schema_version() {
    let file = ModelFile::new(
        Model::Forest(ForestModel {
            trees: vec![Tree::leaf(0.5, 1.0)],
            params: ForestParams::default(),
            seed: 0,
            n_features: 1,
        }),
        TargetKind::Pedestrian,
        vec!["f0".into()],
    );
    let text = file.to_json().unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
    assert!(matches!(ModelFile::from_json(&text), Err(crate::Error::SchemaVersion(7))));
}

#[test]
fn grid_single_cell_and_duplicate_tie() {
    let (train, _) = planted(1500, 12);
    let base = ModelConfig::Forest(ForestParams { n_trees: 10, ..ForestParams::default() });
    let one = GridSpec { n_trees: vec![10], ..GridSpec::default() };
    let res = grid_search(&train, &one, &base, None, 3).unwrap();
    assert_eq!(res.leaderboard.len(), 1);
    assert_eq!(res.best_index, 0);

    let dup = GridSpec { n_trees: vec![10, 10], ..GridSpec::default() };
    let res = grid_search(&train, &dup, &base, None, 3).unwrap();
    assert_eq!(res.leaderboard[0].score, res.leaderboard[1].score);
    assert_eq!(res.best_index, 0);
}

#[test]
fn grid_keeps_validation_rows_clean_under_smote() {
    let (train, _) = planted(1500, 13);
    let base = ModelConfig::Boosted(BoostParams { rounds: 5, ..BoostParams::default() });
    let spec = GridSpec { max_depth: vec![2, 3], validation: Validation::KFold { k: 3 }, ..GridSpec::default() };
    let smote_cfg = crate::resample::SmoteConfig { seed: 4, ..Default::default() };
    let res = grid_search(&train, &spec, &base, Some(&smote_cfg), 3).unwrap();
    assert_eq!(res.leaderboard.len(), 2);
    for e in &res.leaderboard {
        assert!(e.validation_untouched);
        assert_eq!(e.fold_scores.len(), 3);
    }
}

#[test]
fn grid_records_failed_cells() {
    let (train, _) = planted(800, 14);
    let base = ModelConfig::Boosted(BoostParams { rounds: 3, ..BoostParams::default() });
    let spec = GridSpec { learning_rate: vec![2.0, 0.3], ..GridSpec::default() };
    let res = grid_search(&train, &spec, &base, None, 3).unwrap();
    assert!(res.leaderboard[0].error.is_some());
    assert_eq!(res.best_index, 1);
    let mut csv = Vec::new();
    write_leaderboard(&mut csv, ModelKind::Boosted, &res.leaderboard).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
}

#[test]
fn deeper_trees_win_on_interaction_effect() {
    let effects = EffectSpec {
        severity: LogitModel {
            intercept: -2.5,
            terms: vec![Term::Interaction {
                first: Condition { field: Field::SpeedLimit, codes: vec![50, 60, 70] },
                second: Condition { field: Field::LightConditions, codes: vec![4, 5, 6, 7] },
                coef: 4.0,
            }],
        },
        pedestrian: LogitModel::default(),
    };
    let spec = SynthSpec { effects, ..SynthSpec::default() };
    let data = synthetic_dataset(4000, 30, &spec, TargetKind::OverSerious).unwrap();
    let base = ModelConfig::Forest(ForestParams {
        n_trees: 30,
        tree: TreeParams { feature_subsample: FeatureSubsample::All, ..TreeParams::default() },
        ..ForestParams::default()
    });
    let grid = GridSpec { max_depth: vec![1, 4], ..GridSpec::default() };
    let res = grid_search(&data, &grid, &base, None, 5).unwrap();
    assert_eq!(res.best_index, 1, "{:?}", res.leaderboard.iter().map(|e| e.score).collect::<Vec<_>>());
}
