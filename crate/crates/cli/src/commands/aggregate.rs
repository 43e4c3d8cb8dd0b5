//! `photostyle aggregate` — rolls classified faces up to per-member
//! demographic counts and proportions.

use super::{emit, ensure_outdir, require, run_error, CLASSIFIED_CSV, DEMOGRAPHICS_CSV, LEGISLATORS_CSV};
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::{load_table, persist_table, LegislatorRecord};
use photostyle_core::pipeline::ClassifiedFace;
use photostyle_core::stats::aggregate_demographics;
use std::path::Path;

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Drop each member's own likeness from their counts (overrides `analyze.exclude_self`)
    #[arg(long)]
    pub exclude_self: bool,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if self.exclude_self {
            s.analyze.exclude_self = true;
        }
    }
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    let faces_path = settings.output_dir.join(CLASSIFIED_CSV);
    require(&faces_path, "classified face table", "classify")?;
    let roster_path = settings.output_dir.join(LEGISLATORS_CSV);
    require(&roster_path, "legislator table", "ingest")?;

    let faces: Vec<ClassifiedFace> = load_table(&faces_path).map_err(run_error)?;
    let roster: Vec<LegislatorRecord> = load_table(&roster_path).map_err(run_error)?;

    let mut report = RunReport::new("aggregate");
    report.kv("faces", faces.len());
    report.kv("members", roster.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    let demo =
        aggregate_demographics(&faces, &roster, settings.analyze.exclude_self).map_err(run_error)?;
    let insufficient = demo.iter().filter(|d| d.insufficient).count();
    report.kv("members with too few faces", insufficient);
    report.config(settings, config_source);

    ensure_outdir(&settings.output_dir)?;
    persist_table(&demo, &settings.output_dir.join(DEMOGRAPHICS_CSV)).map_err(run_error)?;
    emit(&report, settings, dry_run)
}
