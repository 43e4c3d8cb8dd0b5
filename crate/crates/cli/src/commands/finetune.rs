//! `photostyle finetune` — swaps a fresh head onto the base model, tunes it
//! on the labeled crops, and writes the classifier plus its loss history
//! and held-out per-class accuracy.

use super::{
    emit, ensure_outdir, external, load_labeled_dataset, model_input_size, require, run_error,
    ACCURACY_CSV, BASE_MODEL_BIN, LOSS_HISTORY_CSV, MODEL_BIN,
};
use crate::commands::train::train_config;
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::persist_table;
use photostyle_core::nn;
use photostyle_core::pipeline::{evaluate_per_class, finetune, split_dataset, FineTuneConfig, SplitSpec};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Starting model (overrides `train.base_model`; default is the train artifact)
    #[arg(long, value_name = "PATH")]
    pub base_model: Option<PathBuf>,
    /// Labeled image directory (overrides `train.train_dir`)
    #[arg(long, value_name = "DIR")]
    pub train_dir: Option<PathBuf>,
    /// Training share of the split (overrides `train.train_fraction`)
    #[arg(long, value_name = "X")]
    pub train_fraction: Option<f64>,
    /// Leading layers held fixed (overrides `train.freeze_prefix`)
    #[arg(long, value_name = "N")]
    pub freeze_prefix: Option<usize>,
    /// Classes in the new head (overrides `train.head_classes`)
    #[arg(long, value_name = "N")]
    pub head_classes: Option<usize>,
    /// Tuning updates (overrides `train.initial_iterations`)
    #[arg(long, value_name = "N")]
    pub initial_iterations: Option<usize>,
    /// Validation folds for per-class accuracy (overrides `train.folds`)
    #[arg(long, value_name = "N")]
    pub folds: Option<usize>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = &self.base_model {
            s.train.base_model = Some(v.clone());
        }
        if let Some(v) = &self.train_dir {
            s.train.train_dir = v.clone();
        }
        if let Some(v) = self.train_fraction {
            s.train.train_fraction = v;
        }
        if let Some(v) = self.freeze_prefix {
            s.train.freeze_prefix = v;
        }
        if let Some(v) = self.head_classes {
            s.train.head_classes = v;
        }
        if let Some(v) = self.initial_iterations {
            s.train.initial_iterations = v;
        }
        if let Some(v) = self.folds {
            s.train.folds = v;
        }
    }
}

/// The base comes from `train.base_model` when set, otherwise from the
/// artifact `photostyle train` writes.
pub fn locate_base_model(settings: &Settings) -> Result<PathBuf, CliError> {
    match &settings.train.base_model {
        Some(path) => {
            external(path, "base model", "train.base_model")?;
            Ok(path.clone())
        }
        None => {
            let path = settings.output_dir.join(BASE_MODEL_BIN);
            require(&path, "base model", "train")?;
            Ok(path)
        }
    }
}

pub fn fine_tune_config(settings: &Settings) -> FineTuneConfig {
    let t = &settings.train;
    FineTuneConfig {
        freeze_prefix: t.freeze_prefix,
        head_classes: t.head_classes,
        initial_iterations: t.initial_iterations,
        bootstrap_iterations: t.bootstrap_iterations,
        confidence_threshold: t.confidence_threshold,
        train_config: train_config(settings, t.initial_iterations),
    }
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    let base_path = locate_base_model(settings)?;
    let base = nn::load_model(&base_path).map_err(run_error)?;
    let input_size = model_input_size(&base)?;
    if !settings.train.train_dir.is_dir() {
        return Err(CliError::Run(format!(
            "training directory not found at `{}` — check `train.train_dir` in the config",
            settings.train.train_dir.display()
        )));
    }
    let data = load_labeled_dataset(&settings.train.train_dir, input_size)?;
    let split = SplitSpec {
        train_fraction: settings.train.train_fraction,
        seed: settings.seed,
    };
    let (train_set, val_set) = split_dataset(&data, &split).map_err(run_error)?;

    let mut report = RunReport::new("finetune");
    report.kv("base model", base_path.display());
    report.kv("model input side", input_size);
    report.kv("training examples", train_set.examples.len());
    report.kv("validation examples", val_set.examples.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    let cfg = fine_tune_config(settings);
    let (model, history) = finetune(&base, &train_set, &cfg).map_err(run_error)?;
    let accuracy =
        evaluate_per_class(&model, &val_set, settings.train.folds, settings.seed).map_err(run_error)?;

    if let Some(last) = history.last() {
        report.kv("last batch loss", format!("{last:.6}"));
    }
    for row in &accuracy {
        let shown = match row.accuracy {
            Some(a) => format!("{:.3} ({}/{})", a, row.correct, row.total),
            None => "n/a (no examples)".into(),
        };
        report.kv(&format!("accuracy[{}]", row.label), shown);
    }
    report.config(settings, config_source);

    ensure_outdir(&settings.output_dir)?;
    nn::save_model(&model, &settings.output_dir.join(MODEL_BIN)).map_err(run_error)?;
    nn::write_loss_history(&history, &settings.output_dir.join(LOSS_HISTORY_CSV)).map_err(run_error)?;
    persist_table(&accuracy, &settings.output_dir.join(ACCURACY_CSV)).map_err(run_error)?;
    emit(&report, settings, dry_run)
}
