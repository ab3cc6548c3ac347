mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transformer_dga::emd::{self, sift_imf1, EmdAxis, SiftConfig, Signal};

#[test]
fn reconstruction_on_random_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = SiftConfig::default();
    for _ in 0..1000 {
        let n = rng.gen_range(16..=512);
        let x = common::random_signal(&mut rng, n);
        let r = sift_imf1(&Signal::new(x.clone()).unwrap(), &cfg);
        let bound = 1e-9 * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            assert!((x[i] - (r.imf[i] + r.residue[i])).abs() <= bound);
        }
    }
}

#[test]
fn converged_imfs_oscillate_about_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = SiftConfig::default();
    let (mut eligible, mut good) = (0, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(64..=512);
        let x = common::smooth_signal(&mut rng, n);
        let r = sift_imf1(&Signal::new(x).unwrap(), &cfg);
        if r.degenerate || !r.converged {
            continue;
        }
        eligible += 1;
        let extrema = common::extrema_count(&r.imf);
        let crossings = common::zero_crossings(&r.imf);
        if extrema.abs_diff(crossings) <= 1 {
            good += 1;
        }
    }
    let rate = good as f64 / eligible as f64;
    println!("IMF property held on {good}/{eligible} converged signals");
    assert!(eligible >= 500);
    assert!(rate >= 0.95, "rate {rate}");
}

#[test]
fn fast_component_lands_in_imf1() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SiftConfig::default();
    let mut ok = 0;
    for _ in 0..200 {
        let (fast, trend) = common::fast_plus_trend(&mut rng);
        let x: Vec<f64> = fast.iter().zip(&trend).map(|(a, b)| a + b).collect();
        let r = sift_imf1(&Signal::new(x).unwrap(), &cfg);
        if common::pearson(&r.imf, &fast) > 0.9 && common::pearson(&r.residue, &trend) > 0.9 {
            ok += 1;
        }
    }
    assert!(ok >= 190, "{ok}/200");
}

#[test]
fn knots_sandwich_the_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n = rng.gen_range(16..=256);
        let x = common::random_signal(&mut rng, n);
        let (mx, mn) = emd::find_extrema(&x);
        if mx.len() < 2 || mn.len() < 2 {
            continue;
        }
        let (up, lo) = emd::cubic_envelopes(&x, &mx, &mn, emd::Boundary::Mirror).unwrap();
        let tol = 1e-9 * x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for &i in &mx {
            assert!((up[i] - x[i]).abs() <= tol);
        }
        for &i in &mn {
            assert!((lo[i] - x[i]).abs() <= tol);
        }
    }
}

#[test]
fn matrix_transform_is_scheduling_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..80)
        .map(|_| (0..12).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let cfg = SiftConfig::default();
    for axis in [EmdAxis::Column, EmdAxis::Row] {
        let a = emd::transform_matrix(&rows, axis, &cfg).unwrap();
        let b = emd::transform_matrix(&rows, axis, &cfg).unwrap();
        let bits = |m: &emd::MatrixTransform| -> Vec<u64> {
            m.values.iter().flatten().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.degenerate, b.degenerate);
    }
}
