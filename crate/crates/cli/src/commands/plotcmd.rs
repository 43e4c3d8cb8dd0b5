//! `photostyle plot` — renders an SVG figure from one of the pipeline's
//! CSV artifacts (or any table with the right columns). The kind picks the
//! figure and its default input; column flags rebind which columns feed it.

use super::{emit, ensure_outdir, require, ANALYSIS_CSV, EXPERIMENT_SUMMARY_CSV, REGRESSION_CSV};
use crate::config::Settings;
use crate::plot::{
    render_svg, BarGroup, BoxCell, CoefPoint, PlotData, PlotKind, PlotSpec, ScatterSeries,
};
use crate::report::RunReport;
use crate::CliError;
use std::path::{Path, PathBuf};

// matches the interval convention used by the summary tables
const Z95: f64 = 1.959964;

#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// Figure kind: scatter_with_fit | boxplot_grid | coefficient_dotplot |
    /// bar_with_ci (or the short forms scatter | boxplot | dotplot | bar)
    #[arg(long, value_name = "KIND")]
    pub kind: String,
    /// Input table; defaults to the artifact the kind usually reads
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// X / group / label column (kind-dependent)
    #[arg(long, value_name = "COL")]
    pub x: Option<String>,
    /// Y / value column (kind-dependent)
    #[arg(long, value_name = "COL")]
    pub y: Option<String>,
    /// Column whose values split rows into series
    #[arg(long, value_name = "COL")]
    pub by: Option<String>,
    /// Standard-error column; whiskers span estimate +/- 1.96 se
    #[arg(long, value_name = "COL")]
    pub se: Option<String>,
    /// Interval bounds columns for bars
    #[arg(long, value_name = "COL")]
    pub lo: Option<String>,
    #[arg(long, value_name = "COL")]
    pub hi: Option<String>,
    /// Keep only rows where column=value (repeatable)
    #[arg(long, value_name = "COL=VALUE")]
    pub filter: Vec<String>,
    /// Output file; default `<kind>.svg` in the output directory
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Axis captions; default to the column names
    #[arg(long, value_name = "TEXT")]
    pub x_label: Option<String>,
    #[arg(long, value_name = "TEXT")]
    pub y_label: Option<String>,
}

struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Table, CliError> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| CliError::Run(format!("cannot read `{}`: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Run(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| CliError::Run(e.to_string()))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Table { path: path.to_path_buf(), headers, rows })
    }

    fn col(&self, name: &str) -> Result<usize, CliError> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Usage(format!(
                "`{}` has no column `{name}` (columns: {})",
                self.path.display(),
                self.headers.join(", ")
            ))
        })
    }

    fn number(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let raw = &self.rows[row][col];
        raw.parse().map_err(|_| {
            CliError::Run(format!(
                "`{}` line {}: column `{}` is not numeric: {raw:?}",
                self.path.display(),
                row + 2,
                self.headers[col]
            ))
        })
    }

    fn retain(&mut self, filters: &[(usize, String)]) {
        self.rows
            .retain(|row| filters.iter().all(|(col, want)| &row[*col] == want));
    }
}

/// Where each kind reads from when `--input` is not given, and which stage
/// writes that artifact.
fn default_input(kind: PlotKind) -> (&'static str, &'static str) {
    match kind {
        PlotKind::ScatterWithFit | PlotKind::BoxplotGrid => (ANALYSIS_CSV, "compare"),
        PlotKind::CoefficientDotplot => (REGRESSION_CSV, "compare"),
        PlotKind::BarWithCi => (EXPERIMENT_SUMMARY_CSV, "experiment"),
    }
}

fn required<'a>(flag: &'a Option<String>, name: &str, kind: PlotKind) -> Result<&'a str, CliError> {
    flag.as_deref().ok_or_else(|| {
        CliError::Usage(format!("--{name} is required for {}", kind.name()))
    })
}

/// Distinct values of a column in first-seen order, then sorted, so series
/// assignment never depends on row order.
fn series_values(table: &Table, col: usize) -> Vec<String> {
    let mut values: Vec<String> = Vec::new();
    for row in &table.rows {
        if !values.contains(&row[col]) {
            values.push(row[col].clone());
        }
    }
    values.sort();
    values
}

fn build_data(args: &Args, kind: PlotKind, table: &Table) -> Result<(PlotData, String, String), CliError> {
    match kind {
        PlotKind::ScatterWithFit => {
            let x_name = required(&args.x, "x", kind)?;
            let y_name = required(&args.y, "y", kind)?;
            let x = table.col(x_name)?;
            let y = table.col(y_name)?;
            let mut series = Vec::new();
            match &args.by {
                Some(by) => {
                    let byc = table.col(by)?;
                    for name in series_values(table, byc) {
                        let mut points = Vec::new();
                        for (i, row) in table.rows.iter().enumerate() {
                            if row[byc] == name {
                                points.push((table.number(i, x)?, table.number(i, y)?));
                            }
                        }
                        series.push(ScatterSeries { name, points });
                    }
                }
                None => {
                    let mut points = Vec::new();
                    for i in 0..table.rows.len() {
                        points.push((table.number(i, x)?, table.number(i, y)?));
                    }
                    series.push(ScatterSeries { name: y_name.to_string(), points });
                }
            }
            Ok((PlotData::Scatter(series), x_name.to_string(), y_name.to_string()))
        }
        PlotKind::BoxplotGrid => {
            let x_name = required(&args.x, "x", kind)?;
            let y_name = required(&args.y, "y", kind)?;
            let x = table.col(x_name)?;
            let y = table.col(y_name)?;
            let byc = args.by.as_deref().map(|b| table.col(b)).transpose()?;
            let mut cells: Vec<BoxCell> = Vec::new();
            for (i, row) in table.rows.iter().enumerate() {
                let group = row[x].clone();
                let series = byc.map(|c| row[c].clone()).unwrap_or_default();
                let value = table.number(i, y)?;
                match cells.iter_mut().find(|c| c.group == group && c.series == series) {
                    Some(cell) => cell.values.push(value),
                    None => cells.push(BoxCell { group, series, values: vec![value] }),
                }
            }
            cells.sort_by(|a, b| (&a.group, &a.series).cmp(&(&b.group, &b.series)));
            Ok((PlotData::Boxes(cells), x_name.to_string(), y_name.to_string()))
        }
        PlotKind::CoefficientDotplot => {
            let label_name = args.x.as_deref().unwrap_or("outcome");
            let est_name = args.y.as_deref().unwrap_or("estimate");
            let se_name = args.se.as_deref().unwrap_or("std_error");
            let label = table.col(label_name)?;
            let est = table.col(est_name)?;
            let se = table.col(se_name)?;
            let byc = match &args.by {
                Some(by) => Some(table.col(by)?),
                // regression tables carry a party column; other tables may not
                None => table.headers.iter().position(|h| h == "party"),
            };
            let mut rows = Vec::new();
            for (i, row) in table.rows.iter().enumerate() {
                rows.push(CoefPoint {
                    label: row[label].clone(),
                    series: byc.map(|c| row[c].clone()).unwrap_or_default(),
                    estimate: table.number(i, est)?,
                    half_width: Z95 * table.number(i, se)?,
                });
            }
            Ok((PlotData::Coefficients(rows), est_name.to_string(), String::new()))
        }
        PlotKind::BarWithCi => {
            let x_name = args.x.as_deref().unwrap_or("group");
            let y_name = args.y.as_deref().unwrap_or("mean");
            let lo_name = args.lo.as_deref().unwrap_or("ci_low");
            let hi_name = args.hi.as_deref().unwrap_or("ci_high");
            let x = table.col(x_name)?;
            let y = table.col(y_name)?;
            let lo = table.col(lo_name)?;
            let hi = table.col(hi_name)?;
            let byc = args.by.as_deref().map(|b| table.col(b)).transpose()?;
            let mut bars = Vec::new();
            for (i, row) in table.rows.iter().enumerate() {
                bars.push(BarGroup {
                    label: row[x].clone(),
                    series: byc.map(|c| row[c].clone()).unwrap_or_default(),
                    value: table.number(i, y)?,
                    lo: table.number(i, lo)?,
                    hi: table.number(i, hi)?,
                });
            }
            Ok((PlotData::Bars(bars), x_name.to_string(), y_name.to_string()))
        }
    }
}

/// Short names accepted on the command line next to the canonical ones.
fn parse_kind(name: &str) -> Result<PlotKind, CliError> {
    match name {
        "scatter" => Ok(PlotKind::ScatterWithFit),
        "boxplot" => Ok(PlotKind::BoxplotGrid),
        "dotplot" => Ok(PlotKind::CoefficientDotplot),
        "bar" => Ok(PlotKind::BarWithCi),
        other => other.parse().map_err(CliError::Usage),
    }
}

pub fn run(
    settings: &Settings,
    dry_run: bool,
    config_source: Option<&Path>,
    args: &Args,
) -> Result<(), CliError> {
    let kind = parse_kind(&args.kind)?;

    let input = match &args.input {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::Run(format!("input table not found at `{}`", path.display())));
            }
            path.clone()
        }
        None => {
            let (name, producer) = default_input(kind);
            let path = settings.output_dir.join(name);
            require(&path, "plot input table", producer)?;
            path
        }
    };

    let mut table = Table::read(&input)?;
    let total_rows = table.rows.len();
    let mut filters = Vec::new();
    for spec in &args.filter {
        let (col, value) = spec.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--filter takes COL=VALUE, got `{spec}`"))
        })?;
        filters.push((table.col(col)?, value.to_string()));
    }
    table.retain(&filters);

    let (data, x_default, y_default) = build_data(args, kind, &table)?;
    let spec = PlotSpec {
        kind,
        x_label: args.x_label.clone().unwrap_or(x_default),
        y_label: args.y_label.clone().unwrap_or(y_default),
    };
    let svg = render_svg(&spec, &data).map_err(|e| CliError::Run(e.to_string()))?;

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| settings.output_dir.join(format!("{}.svg", kind.name())));

    let mut report = RunReport::new("plot");
    report.kv("kind", kind.name());
    report.kv("input", input.display());
    report.kv("rows", format!("{} of {total_rows} after filters", table.rows.len()));
    report.kv("output", out.display());
    report.config(settings, config_source);

    if dry_run {
        report.note("dry run: no files written");
        return emit(&report, settings, dry_run);
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_outdir(parent)?;
        }
    }
    std::fs::write(&out, &svg)
        .map_err(|e| CliError::Run(format!("cannot write `{}`: {e}", out.display())))?;
    emit(&report, settings, dry_run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, text).unwrap();
        Table::read(&path).unwrap()
    }

    #[test]
    fn scatter_splits_series_by_column_in_sorted_order() {
        let t = table("party,x,y\nR,1,2\nD,1,1\nD,2,2\n");
        let args = Args {
            kind: "scatter_with_fit".into(),
            x: Some("x".into()),
            y: Some("y".into()),
            by: Some("party".into()),
            ..Default::default()
        };
        let (data, _, _) = build_data(&args, PlotKind::ScatterWithFit, &t).unwrap();
        let PlotData::Scatter(series) = data else { panic!() };
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].name, "D");
        assert_eq!(series[0].points, vec![(1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(series[1].name, "R");
    }

    #[test]
    fn missing_column_is_a_usage_error_naming_the_table() {
        let t = table("a,b\n1,2\n");
        let err = t.col("missing").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("missing"), "{err}");
        assert!(err.to_string().contains("a, b"), "{err}");
    }

    #[test]
    fn non_numeric_cell_names_the_line() {
        let t = table("x\nabc\n");
        let err = t.number(0, 0).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn dotplot_defaults_fit_the_regression_table() {
        let t = table(
            "model,party,outcome,regressor,estimate,std_error,r_squared,n_obs\n\
             ols,D,prop_african_american,acs_pct_black,0.9,0.1,0.8,200\n",
        );
        let args = Args { kind: "coefficient_dotplot".into(), ..Default::default() };
        let (data, _, _) = build_data(&args, PlotKind::CoefficientDotplot, &t).unwrap();
        let PlotData::Coefficients(rows) = data else { panic!() };
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].series, "D");
        assert!((rows[0].half_width - 1.959964 * 0.1).abs() < 1e-12);
    }

    #[test]
    fn filters_drop_non_matching_rows() {
        let mut t = table("model,estimate\nols,1\nstate_fe,2\nols,3\n");
        let col = t.col("model").unwrap();
        t.retain(&[(col, "ols".to_string())]);
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r[0] == "ols"));
    }

    #[test]
    fn boxplot_cells_group_and_sort_deterministically() {
        let t = table("state,party,share\nPA,R,0.2\nPA,D,0.1\nOH,D,0.3\nPA,D,0.15\n");
        let args = Args {
            kind: "boxplot_grid".into(),
            x: Some("state".into()),
            y: Some("share".into()),
            by: Some("party".into()),
            ..Default::default()
        };
        let (data, _, _) = build_data(&args, PlotKind::BoxplotGrid, &t).unwrap();
        let PlotData::Boxes(cells) = data else { panic!() };
        let keys: Vec<(String, String)> =
            cells.iter().map(|c| (c.group.clone(), c.series.clone())).collect();
        assert_eq!(
            keys,
            vec![
                ("OH".to_string(), "D".to_string()),
                ("PA".to_string(), "D".to_string()),
                ("PA".to_string(), "R".to_string()),
            ]
        );
        assert_eq!(cells[1].values, vec![0.1, 0.15]);
    }
}
