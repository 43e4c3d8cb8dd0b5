//! `photostyle train` — trains a fresh compact conv net on a labeled crop
//! directory and writes the base model for later fine-tuning.

use super::{
    compact_stack, emit, ensure_outdir, load_labeled_dataset, run_error, BASE_MODEL_BIN,
    TRAIN_LOSS_CSV,
};
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::nn::{self, NetworkModel, TrainConfig};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Labeled image directory, one subdirectory per class (overrides `train.train_dir`)
    #[arg(long, value_name = "DIR")]
    pub train_dir: Option<PathBuf>,
    /// Model input side in pixels (overrides `train.input_size`)
    #[arg(long, value_name = "N")]
    pub input_size: Option<u32>,
    /// Conv/pool blocks in the stack (overrides `train.conv_blocks`)
    #[arg(long, value_name = "N")]
    pub conv_blocks: Option<u32>,
    /// Channels out of the first block (overrides `train.conv_channels`)
    #[arg(long, value_name = "N")]
    pub conv_channels: Option<usize>,
    /// Step size (overrides `train.learning_rate`)
    #[arg(long, value_name = "X")]
    pub learning_rate: Option<f64>,
    /// Gradient momentum (overrides `train.momentum`)
    #[arg(long, value_name = "X")]
    pub momentum: Option<f64>,
    /// Examples per update (overrides `train.batch_size`)
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,
    /// Update count (overrides `train.iterations`)
    #[arg(long, value_name = "N")]
    pub iterations: Option<usize>,
    /// L2 penalty (overrides `train.weight_decay`)
    #[arg(long, value_name = "X")]
    pub weight_decay: Option<f64>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = &self.train_dir {
            s.train.train_dir = v.clone();
        }
        if let Some(v) = self.input_size {
            s.train.input_size = v;
        }
        if let Some(v) = self.conv_blocks {
            s.train.conv_blocks = v;
        }
        if let Some(v) = self.conv_channels {
            s.train.conv_channels = v;
        }
        if let Some(v) = self.learning_rate {
            s.train.learning_rate = v;
        }
        if let Some(v) = self.momentum {
            s.train.momentum = v;
        }
        if let Some(v) = self.batch_size {
            s.train.batch_size = v;
        }
        if let Some(v) = self.iterations {
            s.train.iterations = v;
        }
        if let Some(v) = self.weight_decay {
            s.train.weight_decay = v;
        }
    }
}

pub fn train_config(settings: &Settings, iterations: usize) -> TrainConfig {
    TrainConfig {
        learning_rate: settings.train.learning_rate,
        momentum: settings.train.momentum,
        batch_size: settings.train.batch_size,
        iterations,
        seed: settings.seed,
        weight_decay: settings.train.weight_decay,
    }
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    let t = &settings.train;
    if !t.train_dir.is_dir() {
        return Err(CliError::Run(format!(
            "training directory not found at `{}` — check `train.train_dir` in the config",
            t.train_dir.display()
        )));
    }
    let data = load_labeled_dataset(&t.train_dir, t.input_size)?;

    let mut report = RunReport::new("train");
    report.kv("examples", data.examples.len());
    report.kv("classes", data.class_labels.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    let side = t.input_size as usize;
    let layers = compact_stack(t.input_size, t.conv_blocks, t.conv_channels, data.class_labels.len());
    let mut model = NetworkModel::new([1, side, side], layers, data.class_labels.clone(), settings.seed)
        .map_err(run_error)?;
    let cfg = train_config(settings, t.iterations);
    let history = nn::train(&mut model, &data, &cfg).map_err(run_error)?;

    report.kv("iterations", history.len());
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        report.kv("first batch loss", format!("{first:.6}"));
        report.kv("last batch loss", format!("{last:.6}"));
    }
    report.config(settings, config_source);

    ensure_outdir(&settings.output_dir)?;
    nn::save_model(&model, &settings.output_dir.join(BASE_MODEL_BIN)).map_err(run_error)?;
    nn::write_loss_history(&history, &settings.output_dir.join(TRAIN_LOSS_CSV)).map_err(run_error)?;
    emit(&report, settings, dry_run)
}
