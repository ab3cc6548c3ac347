//! End-to-end orchestration: features, ranking, window choice, EMD, split,
//! hierarchical training, evaluation and baseline comparison.

use serde::{Deserialize, Serialize};

use crate::baselines::{Method, RuleSet, Verdict};
use crate::boost::TrainConfig;
use crate::emd::{self, EmdAxis, MatrixTransform, SiftConfig};
use crate::error::{Error, Result};
use crate::eval::{
    self, LabeledDataset, MethodRow, MetricsReport, NoResultMode, Split, SplitConfig, SweepConfig,
    SweepResult,
};
use crate::features::{self, FaultClass, GasSample};
use crate::hierarchy::{self, HierarchicalModel, HierarchicalPrediction, HierarchyConfig};
use crate::ranking::{self, FeatureWindow, RankMode, SkewnessRanking, WINDOW_WIDTH};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub split: SplitConfig,
    pub train: HierarchyConfig,
    /// Flat ensemble settings used by the window sweep.
    pub sweep_train: TrainConfig,
    pub sift: SiftConfig,
    pub axis: EmdAxis,
    pub rank_mode: RankMode,
    pub width: usize,
    /// 1-based window; `None` runs the sweep and takes its best window.
    pub window: Option<usize>,
    pub no_result: NoResultMode,
    pub rules: RuleSet,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            split: SplitConfig::default(),
            train: HierarchyConfig::default(),
            sweep_train: TrainConfig::default(),
            sift: SiftConfig::default(),
            axis: EmdAxis::Column,
            rank_mode: RankMode::Absolute,
            width: WINDOW_WIDTH,
            window: None,
            no_result: NoResultMode::Wrong,
            rules: RuleSet::bundled(),
        }
    }
}

impl PipelineConfig {
    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            split: self.split.clone(),
            train: self.sweep_train.clone(),
            sift: self.sift.clone(),
            axis: self.axis,
        }
    }
}

/// Everything a pipeline run produced, stage by stage.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub features: Vec<Vec<f64>>,
    pub ranking: SkewnessRanking,
    pub sweep: Option<SweepResult>,
    pub window: FeatureWindow,
    pub imf: MatrixTransform,
    pub split: Split,
    pub model: HierarchicalModel,
    /// Predictions for `split.test`, in the same order.
    pub predictions: Vec<HierarchicalPrediction>,
    pub report: MetricsReport,
}

/// Picks window `n` (1-based) out of the ranked windows.
pub fn choose_window(ranking: &SkewnessRanking, width: usize, n: usize) -> Result<FeatureWindow> {
    let windows = ranking::enumerate_windows(ranking, width)?;
    let count = windows.len();
    if n == 0 || n > count {
        return Err(Error::InvalidConfig(format!(
            "window {n} outside 1..={count}"
        )));
    }
    Ok(windows.into_iter().nth(n - 1).expect("index checked"))
}

fn resolve_window(
    features: &[Vec<f64>],
    labels: &[FaultClass],
    ranking: &SkewnessRanking,
    config: &PipelineConfig,
) -> Result<(FeatureWindow, Option<SweepResult>)> {
    match config.window {
        Some(n) => Ok((choose_window(ranking, config.width, n)?, None)),
        None => {
            let sweep = eval::sweep_windows(
                features,
                labels,
                ranking,
                config.width,
                &config.sweep_config(),
            )?;
            Ok((sweep.best_window().clone(), Some(sweep)))
        }
    }
}

pub fn run(dataset: &LabeledDataset, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let labels = dataset.labels();
    let features = dataset
        .feature_matrix()
        .map_err(Error::at_stage("features"))?
        .to_vec();
    let ranking =
        ranking::rank_features(&features, config.rank_mode).map_err(Error::at_stage("rank"))?;
    let (window, sweep) =
        resolve_window(&features, labels, &ranking, config).map_err(Error::at_stage("window"))?;
    let imf = emd::transform_matrix(&window.select(&features), config.axis, &config.sift)
        .map_err(Error::at_stage("emd"))?;
    let split = eval::split_labels(labels, &config.split).map_err(Error::at_stage("split"))?;

    let train_x = eval::take_rows(&imf.values, &split.train);
    let train_y = eval::take_rows(labels, &split.train);
    let model = hierarchy::train_hierarchy(&train_x, &train_y, &config.train)
        .map_err(Error::at_stage("train"))?;

    let test_y = eval::take_rows(labels, &split.test);
    let predictions = split
        .test
        .iter()
        .map(|&i| hierarchy::predict_hierarchy(&model, &imf.values[i]))
        .collect::<Result<Vec<_>>>()
        .map_err(Error::at_stage("evaluate"))?;
    let predicted: Vec<FaultClass> = predictions.iter().map(|p| p.fault).collect();
    let report = build_report(dataset, &split, &test_y, &predicted, config)
        .map_err(Error::at_stage("evaluate"))?;

    Ok(PipelineOutcome {
        features,
        ranking,
        sweep,
        window,
        imf,
        split,
        model,
        predictions,
        report,
    })
}

fn build_report(
    dataset: &LabeledDataset,
    split: &Split,
    actual: &[FaultClass],
    predicted: &[FaultClass],
    config: &PipelineConfig,
) -> Result<MetricsReport> {
    let confusion = eval::confusion_matrix(actual, predicted)?;
    let mut sensitivity = [None; 6];
    for c in FaultClass::ALL {
        sensitivity[c.index()] = eval::sensitivity(&confusion, c).ok();
    }
    let mut rows = vec![MethodRow::from_confusion("Proposed method", &confusion)];
    let test_samples = eval::take_rows(dataset.samples(), &split.test);
    for method in Method::ALL {
        let verdicts: Vec<Verdict> = test_samples
            .iter()
            .map(|s| config.rules.diagnose(method, s))
            .collect();
        rows.push(MethodRow::from_verdicts(
            method.label(),
            actual,
            &verdicts,
            config.no_result,
        ));
    }
    Ok(MetricsReport {
        test_size: actual.len(),
        sensitivity,
        average_sensitivity: eval::average_sensitivity(&confusion)?,
        overall_accuracy: eval::overall_accuracy(&confusion)?,
        confusion,
        rows,
        no_result_mode: config.no_result,
    })
}

/// A trained model together with everything needed to transform new samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub ranking: SkewnessRanking,
    pub window: FeatureWindow,
    pub axis: EmdAxis,
    pub sift: SiftConfig,
    pub train: HierarchyConfig,
    pub model: HierarchicalModel,
    /// Window-selected feature rows the model was fitted on. Column-axis EMD
    /// decomposes new rows together with these.
    pub reference_rows: Vec<Vec<f64>>,
    /// SHA-256 of the training file, when known.
    pub dataset_fingerprint: Option<String>,
}

/// Trains on every row of the dataset.
pub fn fit(dataset: &LabeledDataset, config: &PipelineConfig) -> Result<FittedPipeline> {
    let labels = dataset.labels();
    let features = dataset
        .feature_matrix()
        .map_err(Error::at_stage("features"))?;
    let ranking =
        ranking::rank_features(features, config.rank_mode).map_err(Error::at_stage("rank"))?;
    let (window, _) =
        resolve_window(features, labels, &ranking, config).map_err(Error::at_stage("window"))?;
    let reference_rows = window.select(features);
    let imf = emd::transform_matrix(&reference_rows, config.axis, &config.sift)
        .map_err(Error::at_stage("emd"))?;
    let model = hierarchy::train_hierarchy(&imf.values, labels, &config.train)
        .map_err(Error::at_stage("train"))?;
    Ok(FittedPipeline {
        ranking,
        window,
        axis: config.axis,
        sift: config.sift.clone(),
        train: config.train.clone(),
        model,
        reference_rows,
        dataset_fingerprint: None,
    })
}

impl FittedPipeline {
    /// IMF features of `samples` as the model sees them.
    pub fn transform(&self, samples: &[GasSample]) -> Result<Vec<Vec<f64>>> {
        let rows = self.window.select(&features::feature_matrix(samples)?);
        match self.axis {
            EmdAxis::Row => Ok(emd::transform_matrix(&rows, EmdAxis::Row, &self.sift)?.values),
            EmdAxis::Column => {
                let offset = self.reference_rows.len();
                let mut stacked = self.reference_rows.clone();
                stacked.extend(rows);
                let mut values =
                    emd::transform_matrix(&stacked, EmdAxis::Column, &self.sift)?.values;
                Ok(values.split_off(offset))
            }
        }
    }

    pub fn predict(&self, samples: &[GasSample]) -> Result<Vec<HierarchicalPrediction>> {
        self.transform(samples)?
            .iter()
            .map(|x| hierarchy::predict_hierarchy(&self.model, x))
            .collect()
    }
}
