//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::Rng;
use transformer_dga::eval::{ConfusionMatrix, LabeledDataset};
use transformer_dga::io;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic_60.csv")
}

pub fn fixture() -> LabeledDataset {
    io::ingest(&fixture_path()).expect("bundled fixture parses")
}

/// Reference 6x6 test-set confusion matrix, rows actual, columns predicted.
pub fn reference_confusion() -> ConfusionMatrix {
    ConfusionMatrix {
        counts: [
            [5, 2, 0, 0, 0, 0],
            [0, 10, 1, 0, 0, 0],
            [0, 1, 18, 0, 0, 0],
            [0, 0, 0, 9, 0, 0],
            [0, 0, 0, 0, 1, 0],
            [0, 0, 0, 0, 1, 8],
        ],
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

/// A random signal of the given length: white noise, a smooth sum of sines, or a random walk.
pub fn random_signal<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-3.0..4.0));
    match rng.gen_range(0..3) {
        0 => (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect(),
        1 => smooth_signal(rng, n)
            .into_iter()
            .map(|v| v * scale)
            .collect(),
        _ => {
            let mut acc = 0.0;
            (0..n)
                .map(|_| {
                    acc += scale * rng.gen_range(-1.0..1.0);
                    acc
                })
                .collect()
        }
    }
}

/// Sum of two or three sinusoids at well-sampled frequencies.
pub fn smooth_signal<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let parts: Vec<(f64, f64, f64)> = (0..rng.gen_range(2..=3))
        .map(|_| {
            (
                rng.gen_range(0.2..1.0),
                rng.gen_range(2.0..(n as f64 / 8.0).max(3.0)),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            parts
                .iter()
                .map(|(a, cycles, phase)| {
                    a * (2.0 * PI * cycles * i as f64 / n as f64 + phase).sin()
                })
                .sum()
        })
        .collect()
}

/// Fast oscillation plus a slow trend, returned as (fast, trend).
pub fn fast_plus_trend<R: Rng>(rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(128..=512);
    let period = rng.gen_range(6.0..16.0);
    let amp = rng.gen_range(0.5..2.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let slope = rng.gen_range(-0.02..0.02);
    let bow = rng.gen_range(0.5..3.0);
    let fast = (0..n)
        .map(|i| amp * (2.0 * PI * i as f64 / period + phase).sin())
        .collect();
    let trend = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            slope * i as f64 + bow * (PI * t).sin() + 0.5
        })
        .collect();
    (fast, trend)
}

/// Counts sign changes, skipping exact zeros.
pub fn zero_crossings(xs: &[f64]) -> usize {
    let signs: Vec<bool> = xs.iter().filter(|v| **v != 0.0).map(|v| *v > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Counts strict interior extrema, a flat run counting once.
pub fn extrema_count(xs: &[f64]) -> usize {
    let mut dedup: Vec<f64> = Vec::with_capacity(xs.len());
    for &v in xs {
        if dedup.last() != Some(&v) {
            dedup.push(v);
        }
    }
    dedup
        .windows(3)
        .filter(|w| (w[1] > w[0] && w[1] > w[2]) || (w[1] < w[0] && w[1] < w[2]))
        .count()
}

/// Best root split found by trying every midpoint between distinct sorted values.
///
/// Gain is `0.5 * (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma`; a split needs
/// positive gain and child hessian sums of at least `min_h`. Ties keep the lowest
/// feature, then the lowest threshold.
pub fn exhaustive_root_split(
    x: &[Vec<f64>],
    g: &[f64],
    h: &[f64],
    lambda: f64,
    gamma: f64,
    min_h: f64,
) -> Option<(usize, f64, f64)> {
    let total_g: f64 = g.iter().sum();
    let total_h: f64 = h.iter().sum();
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x[0].len() {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = 0.5 * (pair[0] + pair[1]);
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..x.len() {
                if x[i][f] < threshold {
                    gl += g[i];
                    hl += h[i];
                }
            }
            let (gr, hr) = (total_g - gl, total_h - hl);
            if hl < min_h || hr < min_h {
                continue;
            }
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(total_g, total_h)) - gamma;
            if gain <= 0.0 {
                continue;
            }
            if best.is_none_or(|(_, _, b)| gain > b) {
                best = Some((f, threshold, gain));
            }
        }
    }
    best
}

/// Distance from a point to the segment a-b.
pub fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}
