//! `photostyle compare` — joins member photo demographics with district
//! census shares and regresses the former on the latter, per party, both
//! plain and with state fixed effects. The interesting read is whether one
//! party's photo mix tracks constituency demographics more closely than
//! the other's.

use super::{
    emit, ensure_outdir, external, require, run_error, ANALYSIS_CSV, DEMOGRAPHICS_CSV,
    LEGISLATORS_CSV, REGRESSION_CSV,
};
use crate::config::Settings;
use crate::report::RunReport;
use crate::CliError;
use photostyle_core::corpus::{load_table, persist_table, LegislatorRecord, Party, TableRow};
use photostyle_core::stats::{
    join_acs, ols, ols_fixed_effects, AnalysisRow, Column, DistrictDemographics,
    MemberPhotoDemographics,
};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// District demographics table (overrides `analyze.acs`)
    #[arg(long, value_name = "PATH")]
    pub acs: Option<PathBuf>,
}

impl Args {
    pub fn apply(&self, s: &mut Settings) {
        if let Some(v) = &self.acs {
            s.analyze.acs = v.clone();
        }
    }
}

/// One fitted slope. `model` is `ols` or `state_fe`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub model: String,
    pub party: String,
    pub outcome: String,
    pub regressor: String,
    pub estimate: f64,
    pub std_error: f64,
    pub r_squared: f64,
    pub n_obs: usize,
}

impl TableRow for RegressionRow {
    const COLUMNS: &'static [&'static str] = &[
        "model",
        "party",
        "outcome",
        "regressor",
        "estimate",
        "std_error",
        "r_squared",
        "n_obs",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.model.clone(),
            self.party.clone(),
            self.outcome.clone(),
            self.regressor.clone(),
            self.estimate.to_string(),
            self.std_error.to_string(),
            self.r_squared.to_string(),
            self.n_obs.to_string(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        let num = |i: usize, name: &str| -> Result<f64, String> {
            fields[i]
                .parse()
                .map_err(|_| format!("bad {name}: {:?}", fields[i]))
        };
        Ok(RegressionRow {
            model: fields[0].clone(),
            party: fields[1].clone(),
            outcome: fields[2].clone(),
            regressor: fields[3].clone(),
            estimate: num(4, "estimate")?,
            std_error: num(5, "std_error")?,
            r_squared: num(6, "r_squared")?,
            n_obs: fields[7]
                .parse()
                .map_err(|_| format!("bad n_obs: {:?}", fields[7]))?,
        })
    }
}

/// The outcome/regressor pairs fitted per party.
const PAIRS: [(&str, &str); 4] = [
    ("prop_white", "acs_pct_white"),
    ("prop_african_american", "acs_pct_black"),
    ("prop_asian", "acs_pct_asian"),
    ("prop_hispanic", "acs_pct_hispanic"),
];

fn field(row: &AnalysisRow, name: &str) -> f64 {
    match name {
        "prop_white" => row.prop_white,
        "prop_african_american" => row.prop_african_american,
        "prop_asian" => row.prop_asian,
        "prop_hispanic" => row.prop_hispanic,
        "acs_pct_white" => row.acs_pct_white,
        "acs_pct_black" => row.acs_pct_black,
        "acs_pct_asian" => row.acs_pct_asian,
        "acs_pct_hispanic" => row.acs_pct_hispanic,
        other => unreachable!("unknown analysis field {other}"),
    }
}

/// Fits every pair for one party. Fits that cannot be identified with the
/// rows at hand are skipped with a note rather than failing the run.
fn party_fits(rows: &[&AnalysisRow], party: Party, notes: &mut Vec<String>) -> Vec<RegressionRow> {
    let mut out = Vec::new();
    let code = party.code();
    for (outcome, regressor) in PAIRS {
        let y: Vec<f64> = rows.iter().map(|r| field(r, outcome)).collect();
        let x: Vec<f64> = rows.iter().map(|r| field(r, regressor)).collect();
        if rows.len() >= 3 {
            match ols(&y, &[Column::new(regressor, x.clone())], true) {
                Ok(fit) => out.push(RegressionRow {
                    model: "ols".into(),
                    party: code.into(),
                    outcome: outcome.into(),
                    regressor: regressor.into(),
                    estimate: fit.coefficients[1].1,
                    std_error: fit.standard_errors[1],
                    r_squared: fit.r_squared,
                    n_obs: fit.n_obs,
                }),
                Err(e) => notes.push(format!("{code} {outcome} ~ {regressor} (ols) skipped: {e}")),
            }
        } else {
            notes.push(format!(
                "{code} {outcome} ~ {regressor} (ols) skipped: {} members is too few",
                rows.len()
            ));
        }
        let states: BTreeSet<&str> = rows.iter().map(|r| r.state.as_str()).collect();
        if rows.len() >= states.len() + 2 {
            let groups: Vec<String> = rows.iter().map(|r| r.state.clone()).collect();
            match ols_fixed_effects(&y, &[Column::new(regressor, x)], &groups) {
                Ok(fit) => out.push(RegressionRow {
                    model: "state_fe".into(),
                    party: code.into(),
                    outcome: outcome.into(),
                    regressor: regressor.into(),
                    estimate: fit.coefficients[0].1,
                    std_error: fit.standard_errors[0],
                    r_squared: fit.r_squared,
                    n_obs: fit.n_obs,
                }),
                Err(e) => notes.push(format!("{code} {outcome} ~ {regressor} (state_fe) skipped: {e}")),
            }
        } else {
            notes.push(format!(
                "{code} {outcome} ~ {regressor} (state_fe) skipped: {} members across {} states",
                rows.len(),
                states.len()
            ));
        }
    }
    out
}

pub fn run(settings: &Settings, dry_run: bool, config_source: Option<&Path>) -> Result<(), CliError> {
    let demo_path = settings.output_dir.join(DEMOGRAPHICS_CSV);
    require(&demo_path, "member demographics table", "aggregate")?;
    let roster_path = settings.output_dir.join(LEGISLATORS_CSV);
    require(&roster_path, "legislator table", "ingest")?;
    external(&settings.analyze.acs, "district demographics table", "analyze.acs")?;

    let demo: Vec<MemberPhotoDemographics> = load_table(&demo_path).map_err(run_error)?;
    let roster: Vec<LegislatorRecord> = load_table(&roster_path).map_err(run_error)?;
    let acs: Vec<DistrictDemographics> = load_table(&settings.analyze.acs).map_err(run_error)?;

    let mut report = RunReport::new("compare");
    report.kv("members", demo.len());
    report.kv("district rows", acs.len());

    if dry_run {
        report.note("dry run: no files written");
        report.config(settings, config_source);
        return emit(&report, settings, dry_run);
    }

    let analysis = join_acs(&demo, &acs, &roster).map_err(run_error)?;
    let with_faces: Vec<&AnalysisRow> = analysis.iter().filter(|r| r.n_faces > 0).collect();
    report.kv("members with faces", with_faces.len());
    report.kv("members excluded (no faces)", analysis.len() - with_faces.len());

    let mut notes = Vec::new();
    let mut fits = Vec::new();
    for party in [Party::Democrat, Party::Republican] {
        let rows: Vec<&AnalysisRow> = with_faces.iter().copied().filter(|r| r.party == party).collect();
        fits.extend(party_fits(&rows, party, &mut notes));
    }
    for note in notes {
        report.note(note);
    }
    let slope = |party: &str| {
        fits.iter()
            .find(|f| f.model == "ols" && f.party == party && f.outcome == "prop_african_american")
            .map(|f| f.estimate)
    };
    if let (Some(d), Some(r)) = (slope("D"), slope("R")) {
        report.kv("D slope, black share", format!("{d:.4}"));
        report.kv("R slope, black share", format!("{r:.4}"));
    }
    report.config(settings, config_source);

    ensure_outdir(&settings.output_dir)?;
    persist_table(&analysis, &settings.output_dir.join(ANALYSIS_CSV)).map_err(run_error)?;
    persist_table(&fits, &settings.output_dir.join(REGRESSION_CSV)).map_err(run_error)?;
    emit(&report, settings, dry_run)
}
