mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transformer_dga::boost::TrainConfig;
use transformer_dga::features::{FaultClass, SuperClass};
use transformer_dga::hierarchy::{predict_hierarchy, train_hierarchy, HierarchyConfig};

/// Overlapping noisy classes so the root and branches disagree sometimes.
fn noisy_set<R: Rng>(rng: &mut R, n: usize) -> (Vec<Vec<f64>>, Vec<FaultClass>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let c = FaultClass::ALL[i % 6];
        let k = c.index() as f64;
        x.push(
            (0..6)
                .map(|j| k * (j as f64 + 1.0) * 0.3 + rng.gen_range(-2.0..2.0))
                .collect(),
        );
        y.push(c);
    }
    (x, y)
}

#[test]
fn predicted_fault_belongs_to_routed_superclass() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (x, y) = noisy_set(&mut rng, 240);
    let config = HierarchyConfig::uniform(TrainConfig {
        rounds: 30,
        ..TrainConfig::default()
    });
    let model = train_hierarchy(&x, &y, &config).unwrap();
    let mut seen = [false; 6];
    for _ in 0..10_000 {
        let probe: Vec<f64> = (0..6).map(|_| rng.gen_range(-5.0..12.0)).collect();
        let p = predict_hierarchy(&model, &probe).unwrap();
        let root_choice = if p.root_probs[1] > p.root_probs[0] {
            SuperClass::Thermal
        } else {
            SuperClass::Discharge
        };
        assert_eq!(p.superclass, root_choice);
        assert_eq!(p.fault.superclass(), p.superclass);
        seen[p.fault.index()] = true;
    }
    assert!(seen.iter().filter(|s| **s).count() >= 4);
}

#[test]
fn branches_only_see_their_own_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let (mut x, mut y) = noisy_set(&mut rng, 60);
    // unbalance the superclasses
    for _ in 0..7 {
        x.push(vec![0.0; 6]);
        y.push(FaultClass::T2);
    }
    let config = HierarchyConfig::uniform(TrainConfig {
        rounds: 5,
        ..TrainConfig::default()
    });
    let model = train_hierarchy(&x, &y, &config).unwrap();
    assert_eq!(model.root.trained_rows, 67);
    assert_eq!(model.discharge.trained_rows, 30);
    assert_eq!(model.thermal.trained_rows, 37);
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (x, y) = noisy_set(&mut rng, 120);
    let config = HierarchyConfig::uniform(TrainConfig {
        rounds: 20,
        ..TrainConfig::default()
    });
    let a = train_hierarchy(&x, &y, &config).unwrap();
    let b = train_hierarchy(&x, &y, &config).unwrap();
    assert_eq!(a, b);
}
