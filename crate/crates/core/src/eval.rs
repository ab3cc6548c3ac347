//! Train/test splitting, confusion matrices, sensitivity and accuracy, the
//! ranked-window accuracy sweep and the method comparison report.

use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::Verdict;
use crate::boost::{self, TrainConfig};
use crate::emd::{self, EmdAxis, SiftConfig};
use crate::error::{Error, Result};
use crate::features::{self, FaultClass, GasSample};
use crate::ranking::{self, FeatureWindow, SkewnessRanking};

/// Samples that all carry a fault label, in file order.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    samples: Vec<GasSample>,
    labels: Vec<FaultClass>,
    features: OnceLock<Vec<Vec<f64>>>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<GasSample>) -> Result<Self> {
        let labels = samples
            .iter()
            .enumerate()
            .map(|(row, s)| s.label.ok_or(Error::MissingLabel { row: row + 1 }))
            .collect::<Result<Vec<_>>>()?;
        for s in &samples {
            s.validate()?;
        }
        Ok(Self {
            samples,
            labels,
            features: OnceLock::new(),
        })
    }

    pub fn samples(&self) -> &[GasSample] {
        &self.samples
    }

    pub fn labels(&self) -> &[FaultClass] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The `N x 37` feature matrix, computed once.
    pub fn feature_matrix(&self) -> Result<&[Vec<f64>]> {
        if let Some(m) = self.features.get() {
            return Ok(m);
        }
        let m = features::feature_matrix(&self.samples)?;
        Ok(self.features.get_or_init(|| m))
    }

    pub fn class_counts(&self) -> [usize; 6] {
        let mut counts = [0; 6];
        for c in &self.labels {
            counts[c.index()] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.85,
            seed: 42,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Ascending row indices.
    pub train: Vec<usize>,
    /// Ascending row indices.
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `total` seats over `counts`; ties go to the lower index.
fn apportion(counts: &[usize], total: usize) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return vec![0; counts.len()];
    }
    let mut seats: Vec<usize> = counts.iter().map(|&c| c * total / n).collect();
    let mut left = total - seats.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..counts.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        ((counts[b] * total) % n)
            .cmp(&((counts[a] * total) % n))
            .then(a.cmp(&b))
    });
    for i in by_remainder {
        if left == 0 {
            break;
        }
        if seats[i] < counts[i] {
            seats[i] += 1;
            left -= 1;
        }
    }
    seats
}

/// Test-set size per class under stratified splitting.
pub fn stratified_test_counts(class_counts: &[usize], train_fraction: f64) -> Vec<usize> {
    let n: usize = class_counts.iter().sum();
    let train_total = (n as f64 * train_fraction).round() as usize;
    apportion(class_counts, n - train_total.min(n))
}

pub fn split_labels(labels: &[FaultClass], config: &SplitConfig) -> Result<Split> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(
            "train_fraction must lie in (0, 1)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = labels.len();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    if config.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); 6];
        for (i, c) in labels.iter().enumerate() {
            by_class[c.index()].push(i);
        }
        if let Some(empty) = by_class.iter().position(Vec::is_empty) {
            return Err(Error::EmptyClass(FaultClass::ALL[empty].to_string()));
        }
        let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
        let test_counts = stratified_test_counts(&counts, config.train_fraction);
        for (mut rows, k) in by_class.into_iter().zip(test_counts) {
            rows.shuffle(&mut rng);
            test.extend_from_slice(&rows[..k]);
            train.extend_from_slice(&rows[k..]);
        }
    } else {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        let k = ((n as f64 * config.train_fraction).round() as usize).min(n);
        train.extend_from_slice(&rows[..k]);
        test.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub fn split_dataset(dataset: &LabeledDataset, config: &SplitConfig) -> Result<Split> {
    split_labels(dataset.labels(), config)
}

/// Rows are actual classes, columns predicted, both in `FaultClass::ALL` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 6]; 6],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, class: FaultClass) -> u64 {
        self.counts[class.index()].iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..6).map(|i| self.counts[i][i]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("actual\\predicted,PD,D1,D2,T1,T2,T3,total\n");
        for c in FaultClass::ALL {
            let row = &self.counts[c.index()];
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "{c},{},{}", cells.join(","), self.row_total(c));
        }
        out
    }
}

pub fn confusion_matrix(
    actual: &[FaultClass],
    predicted: &[FaultClass],
) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch(actual.len(), predicted.len()));
    }
    let mut cm = ConfusionMatrix::default();
    for (a, p) in actual.iter().zip(predicted) {
        cm.counts[a.index()][p.index()] += 1;
    }
    Ok(cm)
}

/// `100 * diag / row total` for one class.
pub fn sensitivity(cm: &ConfusionMatrix, class: FaultClass) -> Result<f64> {
    let row = cm.row_total(class);
    if row == 0 {
        return Err(Error::UndefinedForEmptyClass(class.to_string()));
    }
    Ok(100.0 * cm.counts[class.index()][class.index()] as f64 / row as f64)
}

/// `100 * trace / total`.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(100.0 * cm.trace() as f64 / total as f64)
}

/// Mean sensitivity over the classes that have test rows.
pub fn average_sensitivity(cm: &ConfusionMatrix) -> Result<f64> {
    let values: Vec<f64> = FaultClass::ALL
        .iter()
        .filter_map(|&c| sensitivity(cm, c).ok())
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// How baseline "no result" verdicts are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoResultMode {
    /// Count as misclassified.
    #[default]
    Wrong,
    /// Drop from the denominators.
    Exclude,
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    /// Per-class accuracy (%); `None` where the class has no scored rows.
    pub per_class: [Option<f64>; 6],
    /// Overall accuracy (%) over scored rows.
    pub average: Option<f64>,
    pub no_result: usize,
}

impl MethodRow {
    /// Scores verdicts against labels.
    pub fn from_verdicts(
        method: &str,
        actual: &[FaultClass],
        verdicts: &[Verdict],
        mode: NoResultMode,
    ) -> Self {
        let mut correct = [0usize; 6];
        let mut scored = [0usize; 6];
        let mut no_result = 0;
        for (a, v) in actual.iter().zip(verdicts) {
            if *v == Verdict::NoResult {
                no_result += 1;
                if mode == NoResultMode::Exclude {
                    continue;
                }
            }
            scored[a.index()] += 1;
            if v.fault() == Some(*a) {
                correct[a.index()] += 1;
            }
        }
        let pct = |c: usize, n: usize| (n > 0).then(|| 100.0 * c as f64 / n as f64);
        let mut per_class = [None; 6];
        for i in 0..6 {
            per_class[i] = pct(correct[i], scored[i]);
        }
        MethodRow {
            method: method.to_string(),
            per_class,
            average: pct(correct.iter().sum(), scored.iter().sum()),
            no_result,
        }
    }

    pub fn from_confusion(method: &str, cm: &ConfusionMatrix) -> Self {
        let mut per_class = [None; 6];
        for c in FaultClass::ALL {
            per_class[c.index()] = sensitivity(cm, c).ok();
        }
        MethodRow {
            method: method.to_string(),
            per_class,
            average: overall_accuracy(cm).ok(),
            no_result: 0,
        }
    }
}

/// Published accuracy rows (%) for methods that are not re-implemented here.
pub const PUBLISHED_ROWS: [(&str, [f64; 6], f64); 3] = [
    (
        "Ensemble Learning (published)",
        [85.71, 58.33, 94.74, 100.0, 0.0, 88.89],
        84.21,
    ),
    (
        "BA-PNN (published)",
        [85.71, 41.67, 73.68, 77.78, 100.0, 33.33],
        63.16,
    ),
    (
        "HGA-SVM (published)",
        [71.43, 66.67, 94.73, 44.45, 0.0, 100.0],
        77.19,
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub test_size: usize,
    pub confusion: ConfusionMatrix,
    /// Per-class sensitivity (%) of the hierarchical classifier.
    pub sensitivity: [Option<f64>; 6],
    pub average_sensitivity: f64,
    pub overall_accuracy: f64,
    /// Hierarchical classifier first, then the rule-based baselines.
    pub rows: Vec<MethodRow>,
    pub no_result_mode: NoResultMode,
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"))
}

impl MetricsReport {
    /// Comparison table as CSV, published rows included and marked.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,PD,D1,D2,T1,T2,T3,average,no_result,source\n");
        for row in &self.rows {
            let cells: Vec<String> = row.per_class.iter().map(|v| fmt_pct(*v)).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},computed",
                row.method,
                cells.join(","),
                fmt_pct(row.average),
                row.no_result
            );
        }
        for (name, per_class, avg) in PUBLISHED_ROWS {
            let cells: Vec<String> = per_class.iter().map(|v| format!("{v:.2}")).collect();
            let _ = writeln!(out, "{name},{},{avg:.2},NA,published", cells.join(","));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "test rows: {}", self.test_size);
        for c in FaultClass::ALL {
            let _ = writeln!(
                out,
                "sensitivity {c} ({}): {}",
                self.confusion.row_total(c),
                fmt_pct(self.sensitivity[c.index()])
            );
        }
        let _ = writeln!(out, "average sensitivity: {:.2}", self.average_sensitivity);
        let _ = writeln!(out, "overall accuracy: {:.2}", self.overall_accuracy);
        let _ = writeln!(out, "no-result scoring: {:?}", self.no_result_mode);
        out
    }
}

/// Settings for the ranked-window sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub sift: SiftConfig,
    pub axis: EmdAxis,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            sift: SiftConfig::default(),
            axis: EmdAxis::Column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub windows: Vec<FeatureWindow>,
    /// Test accuracy (%) per window, in rank order.
    pub accuracies: Vec<f64>,
    /// Index into `windows` of the best accuracy; earliest window on ties.
    pub best: usize,
}

impl SweepResult {
    pub fn best_window(&self) -> &FeatureWindow {
        &self.windows[self.best]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("window,rank_start,features,accuracy\n");
        for (i, (w, acc)) in self.windows.iter().zip(&self.accuracies).enumerate() {
            let ids: Vec<String> = w.features.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{},{},{},{acc:.4}", i + 1, w.rank_start, ids.join(" "));
        }
        out
    }
}

/// Gathers rows by index.
pub fn take_rows<T: Clone>(rows: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// Accuracy of a flat 6-class ensemble on every ranked window.
///
/// EMD runs on all rows of each window before the split is applied.
pub fn sweep_windows(
    feature_matrix: &[Vec<f64>],
    labels: &[FaultClass],
    ranking: &SkewnessRanking,
    width: usize,
    config: &SweepConfig,
) -> Result<SweepResult> {
    let windows = ranking::enumerate_windows(ranking, width)?;
    let split = split_labels(labels, &config.split)?;
    let y: Vec<usize> = labels.iter().map(|c| c.index()).collect();
    let y_train = take_rows(&y, &split.train);
    let y_test = take_rows(&y, &split.test);

    let accuracies = windows
        .par_iter()
        .map(|w| {
            let imf = emd::transform_matrix(&w.select(feature_matrix), config.axis, &config.sift)?;
            let model = boost::train(
                &take_rows(&imf.values, &split.train),
                &y_train,
                6,
                &config.train,
            )?;
            let test_x = take_rows(&imf.values, &split.test);
            let mut correct = 0usize;
            for (x, &c) in test_x.iter().zip(&y_test) {
                if model.predict(x)?.class == c {
                    correct += 1;
                }
            }
            Ok(if y_test.is_empty() {
                0.0
            } else {
                100.0 * correct as f64 / y_test.len() as f64
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = boost::argmax(&accuracies);
    Ok(SweepResult {
        windows,
        accuracies,
        best,
    })
}

/// Evaluates the hierarchical pipeline and the three baselines on one test split.
pub fn compare_methods(
    dataset: &LabeledDataset,
    config: &crate::pipeline::PipelineConfig,
) -> Result<MetricsReport> {
    crate::pipeline::run(dataset, config).map(|o| o.report)
}
