//! Dataset ingestion, model artifacts, plot data and the file-based pipeline run.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{LabeledDataset, MetricsReport};
use crate::features::{FaultClass, GasSample, FEATURE_NAMES};
use crate::pipeline::{self, FittedPipeline, PipelineConfig, PipelineOutcome};

pub const DATASET_HEADER: [&str; 7] = ["id", "h2", "ch4", "c2h6", "c2h4", "c2h2", "label"];
pub const ARTIFACT_VERSION: u64 = 1;

/// A parsed row with its 1-based line number in the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub line: u64,
    pub sample: GasSample,
}

fn parse_error(line: u64, reason: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        reason: reason.into(),
    }
}

/// Parses dataset text. Total over arbitrary input: returns rows or an error.
pub fn parse_dataset(bytes: &[u8]) -> Result<Vec<ParsedRow>> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyFile);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut records = reader.byte_records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_error(1, e.to_string()))?,
        None => return Err(Error::EmptyFile),
    };
    let names: Vec<&[u8]> = header.iter().collect();
    let expected: Vec<&[u8]> = DATASET_HEADER.iter().map(|s| s.as_bytes()).collect();
    if names != expected {
        return Err(parse_error(
            1,
            format!("header must be `{}`", DATASET_HEADER.join(",")),
        ));
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != DATASET_HEADER.len() {
            return Err(parse_error(
                line,
                format!(
                    "expected {} fields, found {}",
                    DATASET_HEADER.len(),
                    record.len()
                ),
            ));
        }
        let field = |i: usize| {
            std::str::from_utf8(&record[i]).map(str::trim).map_err(|_| {
                parse_error(
                    line,
                    format!("column `{}` is not valid UTF-8", DATASET_HEADER[i]),
                )
            })
        };
        let id = field(0)?.to_string();
        let mut gases = [0.0; 5];
        for (k, gas) in gases.iter_mut().enumerate() {
            let name = DATASET_HEADER[k + 1];
            let text = field(k + 1)?;
            let v: f64 = text.parse().map_err(|_| {
                parse_error(line, format!("column `{name}`: `{text}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(parse_error(line, format!("column `{name}` must be finite")));
            }
            if v < 0.0 {
                return Err(parse_error(
                    line,
                    format!("column `{name}` is negative ({v})"),
                ));
            }
            *gas = v;
        }
        let label_text = field(6)?;
        let label = if label_text.is_empty() {
            None
        } else {
            Some(
                label_text
                    .parse::<FaultClass>()
                    .map_err(|e| parse_error(line, e.to_string()))?,
            )
        };
        rows.push(ParsedRow {
            line,
            sample: GasSample::new(id, gases, label)
                .map_err(|e| parse_error(line, e.to_string()))?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(rows)
}

/// Reads samples whose labels may be absent (prediction input).
pub fn read_samples(path: &Path) -> Result<Vec<GasSample>> {
    Ok(parse_dataset(&fs::read(path)?)?
        .into_iter()
        .map(|r| r.sample)
        .collect())
}

/// Builds a labeled dataset; every row must carry a label.
pub fn dataset_from_bytes(bytes: &[u8]) -> Result<LabeledDataset> {
    let rows = parse_dataset(bytes)?;
    if let Some(r) = rows.iter().find(|r| r.sample.label.is_none()) {
        return Err(parse_error(r.line, "missing label"));
    }
    LabeledDataset::new(rows.into_iter().map(|r| r.sample).collect())
}

pub fn ingest(path: &Path) -> Result<LabeledDataset> {
    dataset_from_bytes(&fs::read(path)?)
}

/// Per-class row counts as a small table.
pub fn class_summary(dataset: &LabeledDataset) -> String {
    let counts = dataset.class_counts();
    let mut out = String::from("class,count\n");
    for c in FaultClass::ALL {
        let _ = writeln!(out, "{c},{}", counts[c.index()]);
    }
    let _ = writeln!(out, "total,{}", dataset.len());
    out
}

/// Hex SHA-256 of the given bytes.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ArtifactFile {
    schema_version: u64,
    checksum: String,
    payload: serde_json::Value,
}

fn corrupt(e: impl ToString) -> Error {
    Error::CorruptArtifact(e.to_string())
}

pub fn model_to_string(model: &FittedPipeline) -> Result<String> {
    let payload = serde_json::to_value(model).map_err(corrupt)?;
    let checksum = fingerprint(payload.to_string().as_bytes());
    let file = ArtifactFile {
        schema_version: ARTIFACT_VERSION,
        checksum,
        payload,
    };
    serde_json::to_string_pretty(&file).map_err(corrupt)
}

pub fn model_from_str(text: &str) -> Result<FittedPipeline> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(corrupt)?;
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing schema_version"))?;
    if version != ARTIFACT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: ARTIFACT_VERSION,
        });
    }
    let file: ArtifactFile = serde_json::from_value(value).map_err(corrupt)?;
    if fingerprint(file.payload.to_string().as_bytes()) != file.checksum {
        return Err(corrupt("checksum mismatch"));
    }
    serde_json::from_value(file.payload).map_err(corrupt)
}

pub fn save_model(model: &FittedPipeline, path: &Path) -> Result<()> {
    write_atomic(path, model_to_string(model)?.as_bytes())
}

pub fn load_model(path: &Path) -> Result<FittedPipeline> {
    let bytes = fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(corrupt)?;
    model_from_str(text)
}

/// Which matrix a box plot summarises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotStage {
    RawFeature,
    Imf,
}

impl PlotStage {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotStage::RawFeature => "raw-feature",
            PlotStage::Imf => "imf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxPlotRecord {
    pub stage: PlotStage,
    pub feature: usize,
    pub class: FaultClass,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme values inside `[q1 - 1.5 iqr, q3 + 1.5 iqr]`.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile of sorted data by linear interpolation between order statistics:
/// position `p * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn box_record(
    stage: PlotStage,
    feature: usize,
    class: FaultClass,
    mut values: Vec<f64>,
) -> BoxPlotRecord {
    values.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&values, 0.25);
    let q3 = quantile_sorted(&values, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || {
        values
            .iter()
            .copied()
            .filter(|&v| v >= lo_fence && v <= hi_fence)
    };
    BoxPlotRecord {
        stage,
        feature,
        class,
        count: values.len(),
        min: values[0],
        q1,
        median: quantile_sorted(&values, 0.5),
        q3,
        max: values[values.len() - 1],
        whisker_low: inside().next().unwrap_or(q1),
        whisker_high: inside().next_back().unwrap_or(q3),
        outliers: values
            .iter()
            .copied()
            .filter(|&v| v < lo_fence || v > hi_fence)
            .collect(),
    }
}

/// One record per (column, class present), columns in order, classes in label order.
/// `feature_ids[j]` names column `j`.
pub fn emit_boxplot_data(
    matrix: &[Vec<f64>],
    labels: &[FaultClass],
    feature_ids: &[usize],
    stage: PlotStage,
) -> Vec<BoxPlotRecord> {
    let mut records = Vec::new();
    for (j, &feature) in feature_ids.iter().enumerate() {
        for class in FaultClass::ALL {
            let values: Vec<f64> = matrix
                .iter()
                .zip(labels)
                .filter(|(_, &c)| c == class)
                .map(|(row, _)| row[j])
                .collect();
            if !values.is_empty() {
                records.push(box_record(stage, feature, class, values));
            }
        }
    }
    records
}

pub fn boxplot_csv(records: &[BoxPlotRecord]) -> String {
    let mut out = String::from(
        "stage,feature,class,count,min,q1,median,q3,max,whisker_low,whisker_high,outliers\n",
    );
    for r in records {
        let outliers: Vec<String> = r.outliers.iter().map(f64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.stage.as_str(),
            r.feature,
            r.class,
            r.count,
            r.min,
            r.q1,
            r.median,
            r.q3,
            r.max,
            r.whisker_low,
            r.whisker_high,
            outliers.join(";")
        );
    }
    out
}

pub fn features_csv(samples: &[GasSample], matrix: &[Vec<f64>]) -> String {
    let mut out = String::from("id,label");
    for k in 1..=FEATURE_NAMES.len() {
        let _ = write!(out, ",f{k}");
    }
    out.push('\n');
    for (s, row) in samples.iter().zip(matrix) {
        let label = s.label.map_or("", FaultClass::as_str);
        let _ = write!(out, "{},{label}", csv_field(&s.id));
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn ranking_csv(ranking: &crate::ranking::SkewnessRanking) -> String {
    let mut out = String::from("rank,feature,name,skewness\n");
    for (i, e) in ranking.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            e.feature,
            FEATURE_NAMES[e.feature - 1],
            e.skewness
        );
    }
    out
}

pub fn windows_csv(windows: &[crate::ranking::FeatureWindow]) -> String {
    let mut out = String::from("window,rank_start,features\n");
    for (i, w) in windows.iter().enumerate() {
        let ids: Vec<String> = w.features.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{},{},{}", i + 1, w.rank_start, ids.join(" "));
    }
    out
}

fn predictions_csv(dataset: &LabeledDataset, outcome: &PipelineOutcome) -> String {
    let mut out = String::from("id,actual,predicted,superclass,confidence\n");
    for (&i, p) in outcome.split.test.iter().zip(&outcome.predictions) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&dataset.samples()[i].id),
            dataset.labels()[i],
            p.fault,
            p.superclass.as_str(),
            p.confidence
        );
    }
    out
}

/// Results of a file-based pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: MetricsReport,
    pub model: FittedPipeline,
    pub outcome: PipelineOutcome,
    pub dataset: LabeledDataset,
}

/// Runs the full pipeline on a dataset file and writes every stage under `out`:
/// `features/`, `ranking/`, `sweep/`, `model/`, `report/`.
pub fn run_pipeline(
    dataset_path: &Path,
    out: &Path,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    let bytes = fs::read(dataset_path).map_err(|e| Error::at_stage("ingest")(e.into()))?;
    let dataset = dataset_from_bytes(&bytes).map_err(Error::at_stage("ingest"))?;
    let outcome = pipeline::run(&dataset, config)?;
    let model = FittedPipeline {
        ranking: outcome.ranking.clone(),
        window: outcome.window.clone(),
        axis: config.axis,
        sift: config.sift.clone(),
        train: config.train.clone(),
        model: outcome.model.clone(),
        reference_rows: outcome.window.select(&outcome.features),
        dataset_fingerprint: Some(fingerprint(&bytes)),
    };
    write_outputs(out, &dataset, &outcome, &model).map_err(Error::at_stage("write"))?;
    Ok(PipelineRun {
        report: outcome.report.clone(),
        model,
        outcome,
        dataset,
    })
}

fn write_outputs(
    out: &Path,
    dataset: &LabeledDataset,
    outcome: &PipelineOutcome,
    model: &FittedPipeline,
) -> Result<()> {
    let labels = dataset.labels();
    let all_ids: Vec<usize> = (1..=FEATURE_NAMES.len()).collect();
    write_atomic(
        &out.join("features/features.csv"),
        features_csv(dataset.samples(), &outcome.features).as_bytes(),
    )?;
    write_atomic(
        &out.join("features/boxplot_raw.csv"),
        boxplot_csv(&emit_boxplot_data(
            &outcome.features,
            labels,
            &all_ids,
            PlotStage::RawFeature,
        ))
        .as_bytes(),
    )?;
    write_atomic(
        &out.join("features/boxplot_imf.csv"),
        boxplot_csv(&emit_boxplot_data(
            &outcome.imf.values,
            labels,
            &outcome.window.features,
            PlotStage::Imf,
        ))
        .as_bytes(),
    )?;
    write_atomic(
        &out.join("ranking/ranking.csv"),
        ranking_csv(&outcome.ranking).as_bytes(),
    )?;
    let windows =
        crate::ranking::enumerate_windows(&outcome.ranking, outcome.window.features.len())?;
    write_atomic(
        &out.join("ranking/windows.csv"),
        windows_csv(&windows).as_bytes(),
    )?;
    if let Some(sweep) = &outcome.sweep {
        write_atomic(&out.join("sweep/sweep.csv"), sweep.to_csv().as_bytes())?;
    }
    save_model(model, &out.join("model/model.json"))?;
    let report = &outcome.report;
    write_atomic(
        &out.join("report/comparison.csv"),
        report.to_csv().as_bytes(),
    )?;
    write_atomic(
        &out.join("report/confusion.csv"),
        report.confusion.to_csv().as_bytes(),
    )?;
    write_atomic(&out.join("report/summary.txt"), report.summary().as_bytes())?;
    write_atomic(
        &out.join("report/predictions.csv"),
        predictions_csv(dataset, outcome).as_bytes(),
    )?;
    Ok(())
}
