//! `photostyle ingest` — parses the roster manifest, optionally merges the
//! member race table and fetches remote photos, scans the corpus directory,
//! and writes the legislator and photo tables everything downstream reads.

use super::{emit, ensure_outdir, external, run_error, LEGISLATORS_CSV, PHOTOS_CSV};
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::{
    fetch_photos, parse_legislator_manifest, persist_table, scan_local_corpus, FetchLimits,
    LegislatorRecord,
};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Roster manifest (overrides `fetch.manifest`)
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    /// Corpus directory to scan (overrides `fetch.corpus_root`)
    #[arg(long, value_name = "DIR")]
    pub corpus_root: Option<PathBuf>,
    /// member_id,is_white table merged onto the roster (overrides `fetch.member_race`)
    #[arg(long, value_name = "PATH")]
    pub member_race: Option<PathBuf>,
    /// Fetch endpoint template with {username} and {page} holes (overrides `fetch.base_url`)
    #[arg(long, value_name = "URL")]
    pub base_url: Option<String>,
    /// Per-member download cap (overrides `fetch.max_photos`)
    #[arg(long, value_name = "N")]
    pub max_photos: Option<usize>,
    /// Request budget per second (overrides `fetch.rate_per_sec`)
    #[arg(long, value_name = "N")]
    pub rate_per_sec: Option<f64>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = &self.manifest {
            s.fetch.manifest = v.clone();
        }
        if let Some(v) = &self.corpus_root {
            s.fetch.corpus_root = v.clone();
        }
        if let Some(v) = &self.member_race {
            s.fetch.member_race = Some(v.clone());
        }
        if let Some(v) = &self.base_url {
            s.fetch.base_url = Some(v.clone());
        }
        if let Some(v) = self.max_photos {
            s.fetch.max_photos = v;
        }
        if let Some(v) = self.rate_per_sec {
            s.fetch.rate_per_sec = v;
        }
    }
}

/// Reads a `member_id,is_white` table (extra columns ignored).
fn load_member_race(path: &Path) -> Result<BTreeMap<String, bool>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Run(format!("cannot read `{}`: {e}", path.display())))?;
    let headers = reader.headers().map_err(run_error)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Run(format!("`{}` is missing column `{name}`", path.display())))
    };
    let id_col = col("member_id")?;
    let white_col = col("is_white")?;
    let mut table = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(run_error)?;
        let id = record.get(id_col).unwrap_or_default().to_string();
        let raw = record.get(white_col).unwrap_or_default();
        let is_white = raw.parse::<bool>().map_err(|_| {
            CliError::Run(format!(
                "`{}` row {}: is_white must be true or false, got {raw:?}",
                path.display(),
                i + 2
            ))
        })?;
        table.insert(id, is_white);
    }
    Ok(table)
}

/// Marks roster members found in the race table; a table entry naming no
/// roster member is an error, a roster member absent from the table keeps
/// the default (not coded as white). Returns how many members the table
/// covered.
fn merge_member_race(
    roster: &mut [LegislatorRecord],
    table: &BTreeMap<String, bool>,
    source: &Path,
) -> Result<usize, CliError> {
    for id in table.keys() {
        if !roster.iter().any(|r| &r.member_id == id) {
            return Err(CliError::Run(format!(
                "`{}` names unknown member `{id}`",
                source.display()
            )));
        }
    }
    let mut covered = 0;
    for record in roster.iter_mut() {
        if let Some(&is_white) = table.get(&record.member_id) {
            record.is_white = is_white;
            covered += 1;
        }
    }
    Ok(covered)
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    let fetch = &settings.fetch;
    external(&fetch.manifest, "roster manifest", "fetch.manifest")?;
    let text = std::fs::read_to_string(&fetch.manifest)
        .map_err(|e| CliError::Run(format!("cannot read `{}`: {e}", fetch.manifest.display())))?;
    let mut roster = parse_legislator_manifest(&text).map_err(run_error)?;

    let mut report = RunReport::new("ingest");
    report.kv("roster members", roster.len());

    if let Some(race_path) = &fetch.member_race {
        external(race_path, "member race table", "fetch.member_race")?;
        let table = load_member_race(race_path)?;
        let covered = merge_member_race(&mut roster, &table, race_path)?;
        report.kv("race-coded members", covered);
        report.kv("members without race coding", roster.len() - covered);
    }

    if let Some(template) = &fetch.base_url {
        let limits = FetchLimits {
            max_photos: fetch.max_photos,
            rate_per_sec: fetch.rate_per_sec,
        };
        if dry_run {
            report.note(format!("dry run: would fetch via `{template}`"));
        } else {
            ensure_outdir(&fetch.corpus_root)?;
            let mut fetched = 0;
            let mut failures = 0;
            let mut skipped = 0;
            let mut no_username = 0;
            for record in &roster {
                if record.facebook_username.is_none() {
                    no_username += 1;
                    continue;
                }
                let outcome =
                    fetch_photos(record, template, &fetch.corpus_root, &limits).map_err(run_error)?;
                fetched += outcome.records.len();
                failures += outcome.failures.len();
                skipped += outcome.skipped_non_image;
            }
            report.kv("photos fetched", fetched);
            report.kv("fetch failures", failures);
            report.kv("non-image responses skipped", skipped);
            report.kv("members without a username", no_username);
        }
    }

    if !fetch.corpus_root.is_dir() {
        return Err(CliError::Run(format!(
            "corpus directory not found at `{}` — check `fetch.corpus_root` in the config",
            fetch.corpus_root.display()
        )));
    }
    let manifest = scan_local_corpus(&fetch.corpus_root, &roster).map_err(run_error)?;
    let zero_photo = manifest.counts.values().filter(|&&n| n == 0).count();
    report.kv("photos on disk", manifest.photos.len());
    report.kv("members with no photos", zero_photo);
    report.kv("orphan directories", manifest.orphans.len());
    for orphan in &manifest.orphans {
        report.note(format!("orphan directory ignored: {orphan}"));
    }
    report.config(settings, config_source);

    if !dry_run {
        ensure_outdir(&settings.output_dir)?;
        persist_table(&manifest.legislators, &settings.output_dir.join(LEGISLATORS_CSV))
            .map_err(run_error)?;
        persist_table(&manifest.photos, &settings.output_dir.join(PHOTOS_CSV)).map_err(run_error)?;
    } else {
        report.note("dry run: no files written");
    }
    emit(&report, settings, dry_run)
}
