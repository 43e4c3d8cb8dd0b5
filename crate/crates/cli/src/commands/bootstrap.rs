//! `photostyle bootstrap` — the human-in-the-loop round. Without
//! `--review` it scores every corpus face with the current model and writes
//! the high-confidence ones to a review sheet; with `--review <sheet>` it
//! replays the same scoring, joins the sheet back on (photo, box), and
//! trains further on the accepted examples.

use super::{
    emit, ensure_outdir, external, model_input_size, require, run_error, BOOTSTRAP_LOSS_CSV,
    MODEL_BIN, PHOTOS_CSV, REVIEW_QUEUE_CSV,
};
use crate::commands::finetune::fine_tune_config;
use crate::commands::load_labeled_dataset;
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::{load_table, persist_table, PhotoRecord};
use photostyle_core::detect::load_cascade;
use photostyle_core::nn;
use photostyle_core::pipeline::{
    apply_review, bootstrap_round, preprocess_portrait_with_box, select_high_confidence, ReviewRow,
};
use photostyle_core::raster::{self, Rect, Tensor};
use photostyle_core::{CascadeModel, DetectParams};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Completed review sheet; absent means write a fresh one
    #[arg(long, value_name = "PATH")]
    pub review: Option<PathBuf>,
    /// Queue admission bar (overrides `train.confidence_threshold`)
    #[arg(long, value_name = "X")]
    pub confidence_threshold: Option<f64>,
    /// Extra updates on the augmented set (overrides `train.bootstrap_iterations`)
    #[arg(long, value_name = "N")]
    pub bootstrap_iterations: Option<usize>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = self.confidence_threshold {
            s.train.confidence_threshold = v;
        }
        if let Some(v) = self.bootstrap_iterations {
            s.train.bootstrap_iterations = v;
        }
    }
}

/// Detects and crops the best face of every readable photo, sized for the
/// model. Candidates are keyed `member_id/photo_id` because photo ids are
/// only unique within a member, and the review join must never collide.
/// Order follows the photo table, so the candidate list — and everything
/// derived from it — is reproducible.
fn face_candidates(
    photos: &[PhotoRecord],
    cascade: &CascadeModel,
    params: &DetectParams,
    input_size: u32,
) -> (Vec<(String, Tensor, Rect)>, usize) {
    let found: Vec<Option<(String, Tensor, Rect)>> = photos
        .par_iter()
        .map(|photo| {
            let img = raster::decode_image_path(Path::new(&photo.file_path)).ok()?;
            let (tensor, bbox) =
                preprocess_portrait_with_box(&img, cascade, params, input_size).ok()??;
            Some((format!("{}/{}", photo.member_id, photo.photo_id), tensor, bbox))
        })
        .collect();
    let skipped = found.iter().filter(|c| c.is_none()).count();
    (found.into_iter().flatten().collect(), skipped)
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>, args: &Args) -> Result<(), CliError> {
    let model_path = settings.output_dir.join(MODEL_BIN);
    require(&model_path, "classifier model", "finetune")?;
    let photos_path = settings.output_dir.join(PHOTOS_CSV);
    require(&photos_path, "photo table", "ingest")?;
    external(&settings.detect.cascade, "cascade model", "detect.cascade")?;

    let model = nn::load_model(&model_path).map_err(run_error)?;
    let input_size = model_input_size(&model)?;
    let photos: Vec<PhotoRecord> = load_table(&photos_path).map_err(run_error)?;
    let cascade = load_cascade(&settings.detect.cascade).map_err(run_error)?;
    let params = settings.detect.params();

    let mut report = RunReport::new("bootstrap");
    report.kv("photos", photos.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    let (candidates, skipped) = face_candidates(&photos, &cascade, &params, input_size);
    report.kv("face candidates", candidates.len());
    report.kv("photos without a usable face", skipped);
    let queue = select_high_confidence(&model, &candidates, settings.train.confidence_threshold)
        .map_err(run_error)?;
    report.kv("queued for review", queue.items.len());

    match &args.review {
        None => {
            report.note("review the sheet, then rerun with --review <sheet>:");
            report.note("  verdicts: confirm | reject | relabel:<class>");
            report.note("  delete any rows you did not review");
            report.config(settings, config_source);
            ensure_outdir(&settings.output_dir)?;
            persist_table(&queue.to_rows(), &settings.output_dir.join(REVIEW_QUEUE_CSV))
                .map_err(run_error)?;
            emit(&report, settings, dry_run)
        }
        Some(sheet) => {
            external(sheet, "review sheet", "--review")?;
            let rows: Vec<ReviewRow> = load_table(sheet).map_err(run_error)?;
            let reviewed = apply_review(&queue, &rows).map_err(|e| {
                CliError::Run(format!(
                    "review sheet does not line up with the current queue \
                     (model or photos changed since it was written?): {e}"
                ))
            })?;
            let mut confirmed = 0;
            let mut rejected = 0;
            let mut relabeled = 0;
            for row in &rows {
                match row.verdict.as_str() {
                    "confirm" => confirmed += 1,
                    "reject" => rejected += 1,
                    v if v.starts_with("relabel:") => relabeled += 1,
                    _ => {}
                }
            }
            report.kv("sheet rows", rows.len());
            report.kv("confirmed", confirmed);
            report.kv("rejected", rejected);
            report.kv("relabeled", relabeled);
            report.kv("examples accepted", reviewed.len());

            if !settings.train.train_dir.is_dir() {
                return Err(CliError::Run(format!(
                    "training directory not found at `{}` — check `train.train_dir` in the config",
                    settings.train.train_dir.display()
                )));
            }
            let data = load_labeled_dataset(&settings.train.train_dir, input_size)?;
            let cfg = fine_tune_config(settings);
            let outcome = bootstrap_round(&model, &data, &reviewed, &cfg).map_err(run_error)?;
            report.kv("original examples", outcome.original_examples);
            report.kv("augmented examples", outcome.augmented_examples);
            if let Some(last) = outcome.loss_history.last() {
                report.kv("last batch loss", format!("{last:.6}"));
            }
            report.config(settings, config_source);

            ensure_outdir(&settings.output_dir)?;
            nn::save_model(&outcome.model, &model_path).map_err(run_error)?;
            nn::write_loss_history(&outcome.loss_history, &settings.output_dir.join(BOOTSTRAP_LOSS_CSV))
                .map_err(run_error)?;
            emit(&report, settings, dry_run)
        }
    }
}
