//! Skewness ranking of feature columns and sliding windows over the ranking.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of ranked features per window.
pub const WINDOW_WIDTH: usize = 12;

/// Below this second central moment a column counts as constant.
const CONSTANT_M2: f64 = 1e-12;

/// Sort key for ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    /// Ascending `|g1|`.
    #[default]
    Absolute,
    /// Ascending signed `g1`.
    Signed,
}

impl FromStr for RankMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" => Ok(RankMode::Absolute),
            "signed" => Ok(RankMode::Signed),
            other => Err(format!(
                "unknown rank mode `{other}` (expected absolute|signed)"
            )),
        }
    }
}

impl fmt::Display for RankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMode::Absolute => "absolute",
            RankMode::Signed => "signed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    /// 1-based feature number.
    pub feature: usize,
    pub skewness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewnessRanking {
    pub mode: RankMode,
    pub entries: Vec<RankEntry>,
}

impl SkewnessRanking {
    /// Feature numbers in rank order.
    pub fn order(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.feature).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureWindow {
    /// 1-based rank of the first feature in the window.
    pub rank_start: usize,
    /// 1-based feature numbers, in rank order.
    pub features: Vec<usize>,
}

impl FeatureWindow {
    /// Picks the window's columns out of a row-major matrix whose column `j`
    /// holds feature `j + 1`.
    pub fn select(&self, matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
        matrix
            .iter()
            .map(|row| self.features.iter().map(|&f| row[f - 1]).collect())
            .collect()
    }
}

/// Biased Fisher-Pearson coefficient `g1 = m3 / m2^(3/2)`.
pub fn skewness(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= nf;
    m3 /= nf;
    if m2 < CONSTANT_M2 {
        return Ok(0.0);
    }
    Ok(m3 / m2.powf(1.5))
}

/// Ranks every column of a row-major matrix. Column `j` is reported as feature `j + 1`.
pub fn rank_columns(matrix: &[Vec<f64>], mode: RankMode) -> Result<SkewnessRanking> {
    let n = matrix.len();
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    let width = matrix[0].len();
    if let Some(bad) = matrix.iter().find(|r| r.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            actual: bad.len(),
        });
    }

    let mut entries = (0..width)
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = matrix.iter().map(|r| r[j]).collect();
            skewness(&column).map(|s| RankEntry {
                feature: j + 1,
                skewness: s,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let key = |e: &RankEntry| match mode {
        RankMode::Absolute => e.skewness.abs(),
        RankMode::Signed => e.skewness,
    };
    entries.sort_by(|a, b| match key(a).total_cmp(&key(b)) {
        Ordering::Equal => a.feature.cmp(&b.feature),
        o => o,
    });
    Ok(SkewnessRanking { mode, entries })
}

/// Ranks the 37 DGA parameters.
pub fn rank_features(feature_matrix: &[Vec<f64>], mode: RankMode) -> Result<SkewnessRanking> {
    if let Some(bad) = feature_matrix
        .iter()
        .find(|r| r.len() != crate::features::FEATURE_COUNT)
    {
        return Err(Error::DimensionMismatch {
            expected: crate::features::FEATURE_COUNT,
            actual: bad.len(),
        });
    }
    rank_columns(feature_matrix, mode)
}

pub fn enumerate_windows(ranking: &SkewnessRanking, width: usize) -> Result<Vec<FeatureWindow>> {
    let total = ranking.len();
    if width == 0 || width > total {
        return Err(Error::BadWidth { width, max: total });
    }
    let order = ranking.order();
    Ok(order
        .windows(width)
        .enumerate()
        .map(|(i, w)| FeatureWindow {
            rank_start: i + 1,
            features: w.to_vec(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Central moments straight from the definition.
    fn oracle_skew(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        m3 / m2.sqrt().powi(3)
    }

    #[test]
    fn skewness_examples() {
        assert_eq!(skewness(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(skewness(&[5.0; 4]).unwrap(), 0.0);
        // m2 = 0.1875, m3 = 0.09375
        let expected = 0.09375 / 0.1875f64.powf(1.5);
        assert!((expected - 1.1547).abs() < 1e-3);
        assert!((skewness(&[0.0, 0.0, 0.0, 1.0]).unwrap() - expected).abs() < 1e-12);
        assert!(matches!(
            skewness(&[1.0, 2.0]),
            Err(Error::TooFewSamples(2))
        ));
    }

    fn matrix_from_columns(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..cols[0].len())
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect()
    }

    #[test]
    fn symmetric_column_ranks_before_right_tailed() {
        let symmetric = vec![1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.0];
        let tailed = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 20.0];
        assert!(oracle_skew(&symmetric).abs() < oracle_skew(&tailed).abs());
        // put the tailed column first so the order must come from skewness
        let r = rank_columns(
            &matrix_from_columns(&[tailed, symmetric]),
            RankMode::Absolute,
        )
        .unwrap();
        assert_eq!(r.order(), vec![2, 1]);
    }

    #[test]
    fn ties_break_by_feature_number() {
        let a = vec![0.0, 0.0, 0.0, 1.0];
        let b = vec![1.0, 0.0, 0.0, 0.0];
        let r = rank_columns(&matrix_from_columns(&[a.clone(), b, a]), RankMode::Absolute).unwrap();
        assert_eq!(r.order(), vec![1, 2, 3]);
    }

    #[test]
    fn signed_mode_orders_negative_first() {
        let right = vec![0.0, 0.0, 0.0, 1.0];
        let left = vec![0.0, 1.0, 1.0, 1.0];
        let m = matrix_from_columns(&[right, left]);
        assert_eq!(
            rank_columns(&m, RankMode::Signed).unwrap().order(),
            vec![2, 1]
        );
        assert_eq!(
            rank_columns(&m, RankMode::Absolute).unwrap().order(),
            vec![1, 2]
        );
    }

    fn identity_ranking(n: usize) -> SkewnessRanking {
        SkewnessRanking {
            mode: RankMode::Absolute,
            entries: (1..=n)
                .map(|f| RankEntry {
                    feature: f,
                    skewness: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn window_counts() {
        let r = identity_ranking(37);
        let w = enumerate_windows(&r, 12).unwrap();
        assert_eq!(w.len(), 26);
        assert_eq!(w[0].features, (1..=12).collect::<Vec<_>>());
        assert_eq!(w[25].rank_start, 26);
        let full = enumerate_windows(&r, 37).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].features, r.order());
        assert!(matches!(
            enumerate_windows(&r, 0),
            Err(Error::BadWidth { .. })
        ));
        assert!(matches!(
            enumerate_windows(&r, 38),
            Err(Error::BadWidth { .. })
        ));
        for w in 1..=37 {
            assert_eq!(enumerate_windows(&r, w).unwrap().len(), 38 - w);
        }
    }

    proptest! {
        #[test]
        fn skewness_affine_behaviour(
            xs in proptest::collection::vec(-100.0..100.0f64, 3..60),
            a in 0.1..10.0f64,
            b in -50.0..50.0f64,
        ) {
            let base = skewness(&xs).unwrap();
            prop_assume!(base != 0.0);
            let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let flipped: Vec<f64> = xs.iter().map(|x| -a * x + b).collect();
            prop_assert!((skewness(&scaled).unwrap() - base).abs() < 1e-9);
            prop_assert!((skewness(&flipped).unwrap() + base).abs() < 1e-9);
            prop_assert!((base - oracle_skew(&xs)).abs() < 1e-9);
        }

        #[test]
        fn ranking_is_permutation(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3..1e3f64, 37), 3..30)
        ) {
            let r = rank_features(&rows, RankMode::Absolute).unwrap();
            let mut order = r.order();
            order.sort_unstable();
            prop_assert_eq!(order, (1..=37).collect::<Vec<_>>());
            for pair in r.entries.windows(2) {
                let (a, b) = (pair[0].skewness.abs(), pair[1].skewness.abs());
                prop_assert!(a < b || (a == b && pair[0].feature < pair[1].feature));
            }
        }
    }
}
