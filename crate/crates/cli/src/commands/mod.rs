//! Subcommand implementations. Every stage writes its artifacts into the
//! output directory under fixed names, so the chain is discoverable: when a
//! stage's input is missing, the error names the stage that produces it.

pub mod aggregate;
pub mod bootstrap;
pub mod classify;
pub mod compare;
pub mod detect;
pub mod experiment;
pub mod finetune;
pub mod ingest;
pub mod plotcmd;
pub mod train;

use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::nn::{Dataset, LayerSpec, NetworkModel, RaceLabel};
use photostyle_core::raster;
use std::path::Path;

pub const LEGISLATORS_CSV: &str = "legislators.csv";
pub const PHOTOS_CSV: &str = "photos.csv";
pub const DETECTIONS_CSV: &str = "detections.csv";
pub const BASE_MODEL_BIN: &str = "base_model.bin";
pub const TRAIN_LOSS_CSV: &str = "train_loss.csv";
pub const MODEL_BIN: &str = "model.bin";
pub const LOSS_HISTORY_CSV: &str = "loss_history.csv";
pub const ACCURACY_CSV: &str = "accuracy.csv";
pub const REVIEW_QUEUE_CSV: &str = "review_queue.csv";
pub const BOOTSTRAP_LOSS_CSV: &str = "bootstrap_loss.csv";
pub const CLASSIFIED_CSV: &str = "classified.csv";
pub const DEMOGRAPHICS_CSV: &str = "demographics.csv";
pub const ANALYSIS_CSV: &str = "analysis.csv";
pub const REGRESSION_CSV: &str = "regression.csv";
pub const EXPERIMENT_SUMMARY_CSV: &str = "experiment_summary.csv";

/// Chain artifact gate: points the user at the stage that writes the file.
pub fn require(path: &Path, what: &str, producer: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Run(format!(
            "{what} not found at `{}` — run `photostyle {producer}` first",
            path.display()
        )))
    }
}

/// External input gate: points the user at the config key naming the file.
pub fn external(path: &Path, what: &str, key: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Run(format!(
            "{what} not found at `{}` — check `{key}` in the config",
            path.display()
        )))
    }
}

pub fn run_error(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

pub fn ensure_outdir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Run(format!("cannot create output directory `{}`: {e}", dir.display())))
}

/// Prints the report and, outside dry runs, also files it in the output
/// directory. Dry runs end here so nothing touches disk.
pub fn emit(report: &RunReport, settings: &Settings, dry_run: bool) -> Result<(), CliError> {
    print!("{}", report.render());
    if dry_run {
        return Ok(());
    }
    ensure_outdir(&settings.output_dir)?;
    report.write(&settings.output_dir)?;
    Ok(())
}

/// Small conv net: `blocks` conv/relu/pool stages that double channels and
/// halve the side each time, then a dense softmax head. `input` must be
/// divisible by 2^blocks, which the config validation guarantees.
pub fn compact_stack(input: u32, blocks: u32, channels: usize, classes: usize) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    let mut in_ch = 1usize;
    let mut side = input as usize;
    for b in 0..blocks {
        let out_channels = channels << b;
        layers.push(LayerSpec::Conv {
            in_channels: in_ch,
            out_channels,
            kernel: 3,
            stride: 1,
            padding: 1,
        });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::MaxPool { window: 2, stride: 2 });
        in_ch = out_channels;
        side /= 2;
    }
    layers.push(LayerSpec::Flatten);
    layers.push(LayerSpec::Dense { in_units: in_ch * side * side, out_units: classes });
    layers.push(LayerSpec::Softmax);
    layers
}

/// Side length of the grayscale square a model consumes.
pub fn model_input_size(model: &NetworkModel) -> Result<u32, CliError> {
    let [c, h, w] = model.input_shape();
    if c != 1 || h != w {
        return Err(CliError::Run(format!(
            "model expects input {c}x{h}x{w}; this pipeline only feeds grayscale squares"
        )));
    }
    Ok(h as u32)
}

/// Loads `<dir>/<class>/<image>` into a dataset. Class order is canonical
/// when the directory names are exactly the four photo-demographic labels
/// (downstream classification requires that order); otherwise alphabetical.
/// Images are grayscaled and resized to `input_size` on the way in.
pub fn load_labeled_dataset(dir: &Path, input_size: u32) -> Result<Dataset, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Run(format!("cannot read training directory `{}`: {e}", dir.display())))?;
    let mut class_dirs: Vec<_> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    let mut labels: Vec<String> = class_dirs
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let canonical = RaceLabel::class_labels();
    if labels.len() == canonical.len() && canonical.iter().all(|l| labels.contains(l)) {
        labels = canonical;
    }

    let mut examples = Vec::new();
    for (idx, label) in labels.iter().enumerate() {
        let class_dir = dir.join(label);
        let files = std::fs::read_dir(&class_dir)
            .map_err(|e| CliError::Run(format!("cannot read `{}`: {e}", class_dir.display())))?;
        let mut paths: Vec<_> = files.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()).collect();
        paths.sort();
        for path in paths {
            let img = raster::decode_image_path(&path)
                .map_err(|e| CliError::Run(format!("cannot decode `{}`: {e}", path.display())))?;
            let gray = raster::to_grayscale(&img);
            let scaled = raster::resize(&gray, input_size, input_size).map_err(run_error)?;
            examples.push((raster::to_tensor(&scaled), idx));
        }
    }
    if examples.is_empty() {
        return Err(CliError::Run(format!(
            "no training images under `{}`; expected one subdirectory per class",
            dir.display()
        )));
    }
    Dataset::new(examples, labels).map_err(run_error)
}
