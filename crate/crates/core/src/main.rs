use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use transformer_dga::baselines::{Method, RuleSet};
use transformer_dga::emd::EmdAxis;
use transformer_dga::eval::{self, MethodRow, NoResultMode, SplitConfig};
use transformer_dga::features::FEATURE_COUNT;
use transformer_dga::io::{self, PlotStage};
use transformer_dga::pipeline::{self, PipelineConfig};
use transformer_dga::ranking::{self, RankMode};
use transformer_dga::{Error, Result};

/// Transformer fault diagnosis from dissolved gas analysis.
#[derive(Parser)]
#[command(name = "dga", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for the train/test split.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.85)]
    train_fraction: f64,
    /// Split without stratifying by class.
    #[arg(long)]
    unstratified: bool,
    #[arg(long, default_value_t = EmdAxis::Column)]
    emd_axis: EmdAxis,
    /// Ranked window to use (1-based); runs the sweep when omitted.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, default_value_t = RankMode::Absolute)]
    rank_mode: RankMode,
    /// Rule tables for the baseline diagnosers (TOML).
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Drop "no result" verdicts instead of scoring them as wrong.
    #[arg(long)]
    exclude_no_result: bool,
    /// Output directory; results go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let rules = match &self.rules {
            Some(path) => RuleSet::load(path)?,
            None => RuleSet::bundled(),
        };
        Ok(PipelineConfig {
            split: SplitConfig {
                train_fraction: self.train_fraction,
                seed: self.seed,
                stratified: !self.unstratified,
            },
            axis: self.emd_axis,
            rank_mode: self.rank_mode,
            window: self.window,
            no_result: if self.exclude_no_result {
                NoResultMode::Exclude
            } else {
                NoResultMode::Wrong
            },
            rules,
            ..PipelineConfig::default()
        })
    }

    /// Writes to `<out>/<rel>` or prints.
    fn emit(&self, rel: &str, text: &str) -> Result<()> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(rel);
                io::write_atomic(&path, text.as_bytes())?;
                eprintln!("wrote {}", path.display());
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and print per-class counts.
    Ingest { data: PathBuf },
    /// Compute the 37 ratio features.
    Features {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Rank features by skewness and emit box-plot data.
    Rank {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Accuracy of a flat ensemble on every ranked window.
    Sweep {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train the hierarchical model on all rows.
    Train {
        data: PathBuf,
        /// Artifact path; defaults to `<out>/model/model.json`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Diagnose samples with a trained model.
    Predict {
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train on a split and compare against the baselines.
    Evaluate {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Diagnose with a rule-based method.
    Baseline {
        data: PathBuf,
        #[arg(long)]
        method: Method,
        #[command(flatten)]
        common: Common,
    },
    /// Run every stage and write all outputs.
    Pipeline {
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                msg.push_str(&format!("\n  caused by: {s}"));
                source = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { data } => {
            let bytes = std::fs::read(&data)?;
            let dataset = io::dataset_from_bytes(&bytes)?;
            print!("{}", io::class_summary(&dataset));
            println!("fingerprint,{}", io::fingerprint(&bytes));
            Ok(())
        }
        Command::Features { data, common } => {
            let samples = io::read_samples(&data)?;
            let matrix = transformer_dga::features::feature_matrix(&samples)?;
            common.emit(
                "features/features.csv",
                &io::features_csv(&samples, &matrix),
            )
        }
        Command::Rank { data, common } => {
            let dataset = io::ingest(&data)?;
            let matrix = dataset.feature_matrix()?;
            let ranking = ranking::rank_features(matrix, common.rank_mode)?;
            common.emit("ranking/ranking.csv", &io::ranking_csv(&ranking))?;
            if common.out.is_some() {
                let ids: Vec<usize> = (1..=FEATURE_COUNT).collect();
                let records =
                    io::emit_boxplot_data(matrix, dataset.labels(), &ids, PlotStage::RawFeature);
                common.emit("features/boxplot_raw.csv", &io::boxplot_csv(&records))?;
                let windows = ranking::enumerate_windows(&ranking, ranking::WINDOW_WIDTH)?;
                common.emit("ranking/windows.csv", &io::windows_csv(&windows))?;
            }
            Ok(())
        }
        Command::Sweep { data, common } => {
            let dataset = io::ingest(&data)?;
            let config = common.pipeline_config()?;
            let matrix = dataset.feature_matrix()?;
            let ranking = ranking::rank_features(matrix, config.rank_mode)?;
            let sweep = eval::sweep_windows(
                matrix,
                dataset.labels(),
                &ranking,
                config.width,
                &config.sweep_config(),
            )?;
            common.emit("sweep/sweep.csv", &sweep.to_csv())?;
            eprintln!(
                "best window: {} ({:.2}%)",
                sweep.best + 1,
                sweep.accuracies[sweep.best]
            );
            Ok(())
        }
        Command::Train {
            data,
            model,
            common,
        } => {
            let bytes = std::fs::read(&data)?;
            let dataset = io::dataset_from_bytes(&bytes)?;
            let mut fitted = pipeline::fit(&dataset, &common.pipeline_config()?)?;
            fitted.dataset_fingerprint = Some(io::fingerprint(&bytes));
            let path = model_path(model, common.out.as_deref())?;
            io::save_model(&fitted, &path)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Predict {
            data,
            model,
            common,
        } => {
            let fitted = io::load_model(&model)?;
            let samples = io::read_samples(&data)?;
            let predictions = fitted.predict(&samples)?;
            let mut text = String::from("id,predicted,superclass,confidence\n");
            for (s, p) in samples.iter().zip(&predictions) {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    s.id,
                    p.fault,
                    p.superclass.as_str(),
                    p.confidence
                ));
            }
            common.emit("report/predictions.csv", &text)
        }
        Command::Evaluate { data, common } => {
            let dataset = io::ingest(&data)?;
            let outcome = pipeline::run(&dataset, &common.pipeline_config()?)?;
            common.emit("report/summary.txt", &outcome.report.summary())?;
            common.emit("report/confusion.csv", &outcome.report.confusion.to_csv())?;
            common.emit("report/comparison.csv", &outcome.report.to_csv())
        }
        Command::Baseline {
            data,
            method,
            common,
        } => {
            let samples = io::read_samples(&data)?;
            let config = common.pipeline_config()?;
            let mut text = String::from("id,label,verdict\n");
            let mut labeled = (Vec::new(), Vec::new());
            for s in &samples {
                let v = config.rules.diagnose(method, s);
                let label = s.label.map_or(String::new(), |c| c.to_string());
                text.push_str(&format!("{},{label},{v}\n", s.id));
                if let Some(c) = s.label {
                    labeled.0.push(c);
                    labeled.1.push(v);
                }
            }
            common.emit(&format!("report/baseline_{method}.csv"), &text)?;
            if !labeled.0.is_empty() {
                let row = MethodRow::from_verdicts(
                    method.label(),
                    &labeled.0,
                    &labeled.1,
                    config.no_result,
                );
                eprintln!(
                    "{}: accuracy {} over {} labeled rows, {} without result",
                    row.method,
                    row.average.map_or("NA".into(), |a| format!("{a:.2}%")),
                    labeled.0.len(),
                    row.no_result
                );
            }
            Ok(())
        }
        Command::Pipeline { data, common } => {
            let out = common
                .out
                .clone()
                .ok_or_else(|| Error::InvalidConfig("pipeline needs --out".into()))?;
            let run = io::run_pipeline(&data, &out, &common.pipeline_config()?)?;
            print!("{}", run.report.summary());
            println!(
                "window: ranks {}..{}",
                run.model.window.rank_start,
                run.model.window.rank_start + run.model.window.features.len() - 1
            );
            println!("outputs: {}", out.display());
            Ok(())
        }
    }
}

fn model_path(model: Option<PathBuf>, out: Option<&Path>) -> Result<PathBuf> {
    match (model, out) {
        (Some(p), _) => Ok(p),
        (None, Some(dir)) => Ok(dir.join("model/model.json")),
        (None, None) => Err(Error::InvalidConfig("train needs --model or --out".into())),
    }
}
