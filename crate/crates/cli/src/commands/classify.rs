//! `photostyle classify` — runs detection plus the classifier over the
//! corpus (optionally a per-member sample) and writes one labeled face row
//! per photo with a usable face.

use super::{
    emit, ensure_outdir, external, require, run_error, CLASSIFIED_CSV, MODEL_BIN, PHOTOS_CSV,
};
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::{load_table, persist_table, PhotoRecord};
use photostyle_core::detect::load_cascade;
use photostyle_core::nn;
use photostyle_core::pipeline::{classify_corpus, sample_per_member};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Per-member photo share to classify (overrides `analyze.sample_fraction`)
    #[arg(long, value_name = "X")]
    pub sample_fraction: Option<f64>,
    /// Cascade model file (overrides `detect.cascade`)
    #[arg(long, value_name = "PATH")]
    pub cascade: Option<PathBuf>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = self.sample_fraction {
            s.analyze.sample_fraction = v;
        }
        if let Some(v) = &self.cascade {
            s.detect.cascade = v.clone();
        }
    }
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    let model_path = settings.output_dir.join(MODEL_BIN);
    require(&model_path, "classifier model", "finetune")?;
    let photos_path = settings.output_dir.join(PHOTOS_CSV);
    require(&photos_path, "photo table", "ingest")?;
    external(&settings.detect.cascade, "cascade model", "detect.cascade")?;

    let model = nn::load_model(&model_path).map_err(run_error)?;
    let all_photos: Vec<PhotoRecord> = load_table(&photos_path).map_err(run_error)?;
    let cascade = load_cascade(&settings.detect.cascade).map_err(run_error)?;
    let params = settings.detect.params();

    let fraction = settings.analyze.sample_fraction;
    let photos = if fraction < 1.0 {
        sample_per_member(&all_photos, fraction, settings.seed).map_err(run_error)?
    } else {
        all_photos.clone()
    };

    let mut report = RunReport::new("classify");
    report.kv("photos in corpus", all_photos.len());
    report.kv("photos sampled", photos.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    let outcome = classify_corpus(&model, &cascade, &params, &photos).map_err(run_error)?;
    report.kv("photos processed", outcome.photos_processed);
    report.kv("faces classified", outcome.faces.len());
    report.kv("photos without a usable face", outcome.unreadable.len());
    for photo_id in &outcome.unreadable {
        report.note(format!("no face used from: {photo_id}"));
    }
    report.config(settings, config_source);

    ensure_outdir(&settings.output_dir)?;
    persist_table(&outcome.faces, &settings.output_dir.join(CLASSIFIED_CSV)).map_err(run_error)?;
    emit(&report, settings, dry_run)
}
