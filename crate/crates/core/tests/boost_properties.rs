mod common;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transformer_dga::boost::{self, grow_tree, TrainConfig, TreeNode};
use transformer_dga::emd::{self, EmdAxis, SiftConfig};
use transformer_dga::pipeline;
use transformer_dga::ranking::{self, RankMode};

fn random_tiny<R: Rng>(rng: &mut R) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let m = rng.gen_range(2..=20);
    let f = rng.gen_range(1..=3);
    let integer = rng.gen_bool(0.5);
    let x = (0..m)
        .map(|_| {
            (0..f)
                .map(|_| {
                    if integer {
                        rng.gen_range(0..4) as f64
                    } else {
                        rng.gen_range(-5.0..5.0)
                    }
                })
                .collect()
        })
        .collect();
    let g = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    (x, g, h)
}

fn oracle_gain_at(x: &[Vec<f64>], g: &[f64], h: &[f64], f: usize, t: f64, lambda: f64) -> f64 {
    let (mut gl, mut hl, mut gr, mut hr) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        if x[i][f] < t {
            gl += g[i];
            hl += h[i];
        } else {
            gr += g[i];
            hr += h[i];
        }
    }
    let s = |a: f64, b: f64| a * a / (b + lambda);
    0.5 * (s(gl, hl) + s(gr, hr) - s(gl + gr, hl + hr))
}

#[test]
fn root_split_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let (x, g, h) = random_tiny(&mut rng);
        let config = TrainConfig {
            max_depth: 1,
            min_child_hessian: rng.gen_range(0.0..1.5),
            ..TrainConfig::default()
        };
        let tree = grow_tree(&x, &g, &h, &config);
        let expected = common::exhaustive_root_split(
            &x,
            &g,
            &h,
            config.l2_lambda,
            config.min_split_gain,
            config.min_child_hessian,
        );
        match (&tree, expected) {
            (TreeNode::Leaf { .. }, None) => {}
            (
                TreeNode::Split {
                    feature, threshold, ..
                },
                Some((ef, et, egain)),
            ) => {
                if (*feature, *threshold) != (ef, et) {
                    // only acceptable as a floating-point tie
                    let got = oracle_gain_at(&x, &g, &h, *feature, *threshold, config.l2_lambda);
                    assert!(
                        (got - egain).abs() <= 1e-12 * egain.abs().max(1.0),
                        "case {case}"
                    );
                }
            }
            (t, e) => panic!("case {case}: tree {t:?} vs oracle {e:?}"),
        }
    }
}

fn check_leaves(
    node: &TreeNode,
    rows: &[usize],
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    lambda: f64,
) {
    match node {
        TreeNode::Leaf { weight } => {
            let gs: f64 = rows.iter().map(|&i| g[i]).sum();
            let hs: f64 = rows.iter().map(|&i| h[i]).sum();
            assert!((weight - (-gs / (hs + lambda))).abs() <= 1e-12);
        }
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x[i][*feature] < *threshold);
            check_leaves(left, &l, x, g, h, lambda);
            check_leaves(right, &r, x, g, h, lambda);
        }
    }
}

#[test]
fn every_leaf_is_the_newton_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let m = rng.gen_range(5..=60);
        let x: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..0.25)).collect();
        let config = TrainConfig {
            min_child_hessian: 0.1,
            l2_lambda: rng.gen_range(0.0..2.0),
            ..TrainConfig::default()
        };
        let tree = grow_tree(&x, &g, &h, &config);
        assert!(tree.depth() <= config.max_depth);
        let rows: Vec<usize> = (0..m).collect();
        check_leaves(&tree, &rows, &x, &g, &h, config.l2_lambda);
    }
}

#[test]
fn training_loss_never_increases_on_fixture() {
    let dataset = common::fixture();
    let labels: Vec<usize> = dataset.labels().iter().map(|c| c.index()).collect();
    let features = dataset.feature_matrix().unwrap();
    let ranking = ranking::rank_features(features, RankMode::Absolute).unwrap();
    let window = pipeline::choose_window(&ranking, 12, 1).unwrap();
    let imf = emd::transform_matrix(
        &window.select(features),
        EmdAxis::Column,
        &SiftConfig::default(),
    )
    .unwrap();
    for x in [&imf.values, &features.to_vec()] {
        let (_, trace) = boost::train_with_trace(x, &labels, 6, &TrainConfig::default()).unwrap();
        assert_eq!(trace.log_loss.len(), 101);
        for w in trace.log_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn row_order_does_not_change_the_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x: Vec<Vec<f64>> = (0..90)
        .map(|_| (0..5).map(|_| rng.gen_range(0.0f64..4.0).floor()).collect())
        .collect();
    let y: Vec<usize> = (0..90).map(|i| (i * 7 + x[i][0] as usize) % 3).collect();
    let config = TrainConfig {
        rounds: 20,
        ..TrainConfig::default()
    };
    let base = boost::train(&x, &y, 3, &config).unwrap();
    let probes: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..5).map(|_| rng.gen_range(-1.0..5.0)).collect())
        .collect();
    for _ in 0..5 {
        let mut idx: Vec<usize> = (0..90).collect();
        idx.shuffle(&mut rng);
        let px: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let py: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
        let other = boost::train(&px, &py, 3, &config).unwrap();
        assert_eq!(other, base);
        for p in &probes {
            let a = base.predict(p).unwrap();
            let b = other.predict(p).unwrap();
            assert_eq!(a.class, b.class);
            assert!(a
                .probs
                .iter()
                .zip(&b.probs)
                .all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }
}
