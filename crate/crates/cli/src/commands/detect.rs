//! `photostyle detect` — runs the cascade over every ingested photo and
//! writes one row per merged face box. Decoding failures are counted and
//! reported, not fatal. Photos fan out across the worker pool; output
//! order stays the table order, so the artifact is identical at any job
//! count.

use super::{emit, ensure_outdir, external, require, run_error, DETECTIONS_CSV, PHOTOS_CSV};
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::{load_table, persist_table, PhotoRecord, TableRow};
use photostyle_core::detect::load_cascade;
use photostyle_core::raster::{self, Rect};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Cascade model file (overrides `detect.cascade`)
    #[arg(long, value_name = "PATH")]
    pub cascade: Option<PathBuf>,
    /// Pyramid growth per level (overrides `detect.scale_factor`)
    #[arg(long, value_name = "X")]
    pub scale_factor: Option<f64>,
    /// Slide step as a fraction of window size (overrides `detect.step_fraction`)
    #[arg(long, value_name = "X")]
    pub step_fraction: Option<f64>,
    /// Smallest window side in pixels (overrides `detect.min_size`)
    #[arg(long, value_name = "N")]
    pub min_size: Option<u32>,
    /// Overlap ratio that clusters boxes (overrides `detect.overlap_threshold`)
    #[arg(long, value_name = "X")]
    pub overlap_threshold: Option<f64>,
    /// Raw hits required to keep a cluster (overrides `detect.min_neighbors`)
    #[arg(long, value_name = "N")]
    pub min_neighbors: Option<usize>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = &self.cascade {
            s.detect.cascade = v.clone();
        }
        if let Some(v) = self.scale_factor {
            s.detect.scale_factor = v;
        }
        if let Some(v) = self.step_fraction {
            s.detect.step_fraction = v;
        }
        if let Some(v) = self.min_size {
            s.detect.min_size = v;
        }
        if let Some(v) = self.overlap_threshold {
            s.detect.overlap_threshold = v;
        }
        if let Some(v) = self.min_neighbors {
            s.detect.min_neighbors = v;
        }
    }
}

/// One merged face box in one photo.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub photo_id: String,
    pub member_id: String,
    pub bbox: Rect,
    pub score: f64,
}

impl TableRow for DetectionRow {
    const COLUMNS: &'static [&'static str] =
        &["photo_id", "member_id", "box_x", "box_y", "box_w", "box_h", "score"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.photo_id.clone(),
            self.member_id.clone(),
            self.bbox.x.to_string(),
            self.bbox.y.to_string(),
            self.bbox.w.to_string(),
            self.bbox.h.to_string(),
            self.score.to_string(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        let num = |i: usize, name: &str| {
            fields[i]
                .parse()
                .map_err(|_| format!("bad {name}: {:?}", fields[i]))
        };
        Ok(DetectionRow {
            photo_id: fields[0].clone(),
            member_id: fields[1].clone(),
            bbox: Rect::new(num(2, "box_x")?, num(3, "box_y")?, num(4, "box_w")?, num(5, "box_h")?),
            score: fields[6]
                .parse()
                .map_err(|_| format!("bad score: {:?}", fields[6]))?,
        })
    }
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    let photos_path = settings.output_dir.join(PHOTOS_CSV);
    require(&photos_path, "photo table", "ingest")?;
    external(&settings.detect.cascade, "cascade model", "detect.cascade")?;
    let photos: Vec<PhotoRecord> = load_table(&photos_path).map_err(run_error)?;
    let cascade = load_cascade(&settings.detect.cascade).map_err(run_error)?;
    let params = settings.detect.params();

    let mut report = RunReport::new("detect");
    report.kv("photos", photos.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    // one result slot per photo keeps the output independent of scheduling
    let scanned: Vec<Result<Vec<DetectionRow>, String>> = photos
        .par_iter()
        .map(|photo| {
            let img = match raster::decode_image_path(Path::new(&photo.file_path)) {
                Ok(img) => img,
                Err(e) => return Err(format!("{}: {e}", photo.photo_id)),
            };
            let faces = photostyle_core::detect::detect_faces(&img, &cascade, &params)
                .map_err(|e| format!("{}: {e}", photo.photo_id))?;
            Ok(faces
                .into_iter()
                .map(|f| DetectionRow {
                    photo_id: photo.photo_id.clone(),
                    member_id: photo.member_id.clone(),
                    bbox: f.rect,
                    score: f.score,
                })
                .collect())
        })
        .collect();

    let mut rows = Vec::new();
    let mut unreadable = 0;
    for result in scanned {
        match result {
            Ok(found) => rows.extend(found),
            Err(note) => {
                unreadable += 1;
                report.note(format!("skipped: {note}"));
            }
        }
    }
    report.kv("faces found", rows.len());
    report.kv("unreadable photos", unreadable);
    report.config(settings, config_source);

    ensure_outdir(&settings.output_dir)?;
    persist_table(&rows, &settings.output_dir.join(DETECTIONS_CSV)).map_err(run_error)?;
    emit(&report, settings, dry_run)
}
