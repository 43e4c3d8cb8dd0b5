//! `photostyle experiment` — summarizes the survey responses per treatment
//! arm: sample size, mean, 95% interval, and for the rating outcomes a
//! rank-sum p-value against the control arm.

use super::{emit, ensure_outdir, external, run_error, EXPERIMENT_SUMMARY_CSV};
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::{load_table, persist_table, TableRow};
use photostyle_core::stats::{experiment_table, ExperimentResponse};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Survey response table (overrides `analyze.responses`)
    #[arg(long, value_name = "PATH")]
    pub responses: Option<PathBuf>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = &self.responses {
            s.analyze.responses = v.clone();
        }
    }
}

/// One arm summary for one outcome, flattened for CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub outcome: String,
    pub group: String,
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub wilcoxon_p: Option<f64>,
}

impl TableRow for SummaryRow {
    const COLUMNS: &'static [&'static str] =
        &["outcome", "group", "n", "mean", "ci_low", "ci_high", "wilcoxon_p"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.outcome.clone(),
            self.group.clone(),
            self.n.to_string(),
            self.mean.to_string(),
            self.ci_low.to_string(),
            self.ci_high.to_string(),
            // the binary outcome and the control arm have no test to run
            self.wilcoxon_p.map(|p| p.to_string()).unwrap_or_else(|| "n/a".into()),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        let num = |i: usize, name: &str| -> Result<f64, String> {
            fields[i]
                .parse()
                .map_err(|_| format!("bad {name}: {:?}", fields[i]))
        };
        let wilcoxon_p = if fields[6] == "n/a" {
            None
        } else {
            Some(num(6, "wilcoxon_p")?)
        };
        Ok(SummaryRow {
            outcome: fields[0].clone(),
            group: fields[1].clone(),
            n: fields[2]
                .parse()
                .map_err(|_| format!("bad n: {:?}", fields[2]))?,
            mean: num(3, "mean")?,
            ci_low: num(4, "ci_low")?,
            ci_high: num(5, "ci_high")?,
            wilcoxon_p,
        })
    }
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    external(&settings.analyze.responses, "survey response table", "analyze.responses")?;
    let rows: Vec<ExperimentResponse> = load_table(&settings.analyze.responses).map_err(run_error)?;

    let mut report = RunReport::new("experiment");
    report.kv("responses", rows.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    let tables = experiment_table(&rows).map_err(run_error)?;
    let mut out = Vec::new();
    for table in &tables {
        for group in &table.groups {
            out.push(SummaryRow {
                outcome: table.outcome.clone(),
                group: group.group.clone(),
                n: group.n,
                mean: group.mean,
                ci_low: group.ci_low,
                ci_high: group.ci_high,
                wilcoxon_p: group.wilcoxon_p,
            });
        }
    }
    report.kv("outcomes", tables.len());
    report.kv("summary rows", out.len());
    for table in &tables {
        if let Some(control) = table.groups.iter().find(|g| g.group == "control") {
            report.kv(
                &format!("mean[{}][control]", table.outcome),
                format!("{:.4}", control.mean),
            );
        }
    }
    report.config(settings, config_source);

    ensure_outdir(&settings.output_dir)?;
    persist_table(&out, &settings.output_dir.join(EXPERIMENT_SUMMARY_CSV)).map_err(run_error)?;
    emit(&report, settings, dry_run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_rows_round_trip_including_the_missing_p() {
        let rows = vec![
            SummaryRow {
                outcome: "party_guess".into(),
                group: "control".into(),
                n: 100,
                mean: 0.4,
                ci_low: 0.304,
                ci_high: 0.496,
                wilcoxon_p: None,
            },
            SummaryRow {
                outcome: "trustworthy".into(),
                group: "black_man".into(),
                n: 100,
                mean: 2.71,
                ci_low: 2.5,
                ci_high: 2.92,
                wilcoxon_p: Some(0.0012),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        persist_table(&rows, &path).unwrap();
        let back: Vec<SummaryRow> = load_table(&path).unwrap();
        assert_eq!(back, rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("n/a"));
    }
}
