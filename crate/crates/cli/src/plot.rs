//! Deterministic SVG 1.1 figures. Four kinds: scatter with per-series
//! fitted lines, a grid of box plots, a coefficient dot plot, and bars with
//! 95% interval whiskers. Output is plain text built from the input alone —
//! no timestamps, no randomness — so identical data renders to identical
//! bytes, and tests can read structure back out of the classed elements:
//!
//! * every figure: `rect.bg`, `line.axis`, `line.tickmark`, `text.tick`
//!   (with a `data-axis` attribute), `text.label`, `rect.key`,
//!   `text.key-label`
//! * scatter: `circle.pt` and `line.fit`, both tagged `data-series`
//! * box grid: `rect.box` (tagged `data-group`/`data-series`),
//!   `line.whisker`, `line.median`, `circle.outlier`
//! * dot plot: `circle.coef`, `line.ci`, `line.zero`
//! * bars: `rect.bar` (tagged `data-group`), `line.ci`, `line.cap`
//!
//! Series named after a party take its color: Democrats blue, Republicans
//! red. Everything else draws from a fixed palette in series order.

use photostyle_core::stats::{self, Column};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("{0}")]
    Invalid(String),
    #[error("series `{0}` is empty")]
    EmptySeries(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    ScatterWithFit,
    BoxplotGrid,
    CoefficientDotplot,
    BarWithCi,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::ScatterWithFit,
        PlotKind::BoxplotGrid,
        PlotKind::CoefficientDotplot,
        PlotKind::BarWithCi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::ScatterWithFit => "scatter_with_fit",
            PlotKind::BoxplotGrid => "boxplot_grid",
            PlotKind::CoefficientDotplot => "coefficient_dotplot",
            PlotKind::BarWithCi => "bar_with_ci",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = PlotKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown plot kind `{s}`; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub x_label: String,
    pub y_label: String,
}

#[derive(Debug, Clone)]
pub struct ScatterSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// One cell of the box grid: raw values for a (group, series) pair.
#[derive(Debug, Clone)]
pub struct BoxCell {
    pub group: String,
    pub series: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CoefPoint {
    pub label: String,
    pub series: String,
    pub estimate: f64,
    /// Half-width of the interval whisker around the estimate.
    pub half_width: f64,
}

#[derive(Debug, Clone)]
pub struct BarGroup {
    pub label: String,
    pub series: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub enum PlotData {
    Scatter(Vec<ScatterSeries>),
    Boxes(Vec<BoxCell>),
    Coefficients(Vec<CoefPoint>),
    Bars(Vec<BarGroup>),
}

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 132.0; // legend lives here
const TOP: f64 = 20.0;
const BOTTOM: f64 = 52.0;

const PALETTE: [&str; 6] =
    ["steelblue", "darkorange", "seagreen", "mediumpurple", "goldenrod", "teal"];

/// Party series get the conventional colors; anything else cycles a fixed
/// palette by series position, so color assignment never depends on
/// anything but the input order.
pub fn series_color(name: &str, index: usize) -> &'static str {
    match name {
        "D" | "Democrat" => "blue",
        "R" | "Republican" => "red",
        "I" | "Independent" => "dimgray",
        _ => PALETTE[index % PALETTE.len()],
    }
}

pub fn render_svg(spec: &PlotSpec, data: &PlotData) -> Result<String, PlotError> {
    match (spec.kind, data) {
        (PlotKind::ScatterWithFit, PlotData::Scatter(series)) => scatter(spec, series),
        (PlotKind::BoxplotGrid, PlotData::Boxes(cells)) => boxes(spec, cells),
        (PlotKind::CoefficientDotplot, PlotData::Coefficients(rows)) => dots(spec, rows),
        (PlotKind::BarWithCi, PlotData::Bars(bars)) => bar_chart(spec, bars),
        (kind, _) => Err(PlotError::Invalid(format!(
            "data rows do not match plot kind `{}`",
            kind.name()
        ))),
    }
}

// ---- linear scale and ticks ----

struct LinScale {
    lo: f64,
    hi: f64,
    r0: f64,
    r1: f64,
}

impl LinScale {
    /// Pads the data extent by 5% each side; a degenerate extent becomes a
    /// unit-ish window around the value so division stays sound.
    fn fit(mut lo: f64, mut hi: f64, r0: f64, r1: f64) -> LinScale {
        if lo == hi {
            let w = (lo.abs() * 0.05).max(0.5);
            lo -= w;
            hi += w;
        }
        let pad = (hi - lo) * 0.05;
        LinScale { lo: lo - pad, hi: hi + pad, r0, r1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.r0 + (v - self.lo) / (self.hi - self.lo) * (self.r1 - self.r0)
    }

    /// Round tick values at a 1-2-5 step, all inside the scale's domain.
    fn ticks(&self) -> Vec<f64> {
        let raw = (self.hi - self.lo) / 4.0;
        let mag = 10f64.powf(raw.log10().floor());
        let mut step = 10.0 * mag;
        for m in [1.0, 2.0, 5.0] {
            if raw <= m * mag {
                step = m * mag;
                break;
            }
        }
        let k0 = (self.lo / step - 1e-9).ceil() as i64;
        let k1 = (self.hi / step + 1e-9).floor() as i64;
        (k0..=k1).map(|k| k as f64 * step).collect()
    }
}

/// Tick label: enough decimals to be exact at plot precision, no trailing
/// zeros, and never `-0`.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mut s = format!("{v:.10}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

// ---- shared scaffolding ----

fn open_svg() -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        s,
        "<rect class=\"bg\" x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    s
}

fn plot_right() -> f64 {
    WIDTH - RIGHT
}

fn plot_bottom() -> f64 {
    HEIGHT - BOTTOM
}

fn axes_frame(s: &mut String) {
    let _ = writeln!(
        s,
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        px(LEFT),
        px(plot_bottom()),
        px(plot_right()),
        px(plot_bottom())
    );
    let _ = writeln!(
        s,
        "<line class=\"axis\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        px(LEFT),
        px(TOP),
        px(LEFT),
        px(plot_bottom())
    );
}

fn x_numeric_ticks(s: &mut String, scale: &LinScale) {
    for t in scale.ticks() {
        let x = scale.map(t);
        let _ = writeln!(
            s,
            "<line class=\"tickmark\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            px(x),
            px(plot_bottom()),
            px(x),
            px(plot_bottom() + 4.0)
        );
        let _ = writeln!(
            s,
            "<text class=\"tick\" data-axis=\"x\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            px(x),
            px(plot_bottom() + 18.0),
            fmt_num(t)
        );
    }
}

fn y_numeric_ticks(s: &mut String, scale: &LinScale) {
    for t in scale.ticks() {
        let y = scale.map(t);
        let _ = writeln!(
            s,
            "<line class=\"tickmark\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            px(LEFT - 4.0),
            px(y),
            px(LEFT),
            px(y)
        );
        let _ = writeln!(
            s,
            "<text class=\"tick\" data-axis=\"y\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            px(LEFT - 8.0),
            px(y + 4.0),
            fmt_num(t)
        );
    }
}

fn x_category_ticks(s: &mut String, names: &[String]) {
    let slot = (plot_right() - LEFT) / names.len() as f64;
    for (i, name) in names.iter().enumerate() {
        let x = LEFT + slot * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            "<text class=\"tick\" data-axis=\"x\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            px(x),
            px(plot_bottom() + 18.0),
            xml_escape(name)
        );
    }
}

fn axis_labels(s: &mut String, x_label: &str, y_label: &str) {
    if !x_label.is_empty() {
        let _ = writeln!(
            s,
            "<text class=\"label\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            px((LEFT + plot_right()) / 2.0),
            px(HEIGHT - 12.0),
            xml_escape(x_label)
        );
    }
    if !y_label.is_empty() {
        let _ = writeln!(
            s,
            "<text class=\"label\" transform=\"rotate(-90)\" x=\"{}\" y=\"14\" text-anchor=\"middle\">{}</text>",
            px(-(TOP + plot_bottom()) / 2.0),
            xml_escape(y_label)
        );
    }
}

fn legend(s: &mut String, entries: &[(String, &'static str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        if name.is_empty() {
            continue;
        }
        let y = TOP + 10.0 + i as f64 * 18.0;
        let _ = writeln!(
            s,
            "<rect class=\"key\" x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>",
            px(plot_right() + 12.0),
            px(y)
        );
        let _ = writeln!(
            s,
            "<text class=\"key-label\" x=\"{}\" y=\"{}\">{}</text>",
            px(plot_right() + 30.0),
            px(y + 10.0),
            xml_escape(name)
        );
    }
}

fn check_finite(name: &str, values: impl IntoIterator<Item = f64>) -> Result<(), PlotError> {
    for v in values {
        if !v.is_finite() {
            return Err(PlotError::Invalid(format!("non-finite value in series `{name}`")));
        }
    }
    Ok(())
}

// ---- scatter with fitted lines ----

/// Least-squares line through the points. Two points get the exact line —
/// which is what the regression would return with zero residual — and
/// anything longer goes through the regression proper. No line when the
/// x values do not span an interval.
fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return None;
    }
    if points.len() == 2 {
        let (x0, y0) = points[0];
        let (x1, y1) = points[1];
        let slope = (y1 - y0) / (x1 - x0);
        return Some((slope, y0 - slope * x0));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let col = Column::new("x", points.iter().map(|p| p.0).collect());
    let fit = stats::ols(&ys, &[col], true).ok()?;
    Some((fit.coefficients[1].1, fit.coefficients[0].1))
}

fn scatter(spec: &PlotSpec, series: &[ScatterSeries]) -> Result<String, PlotError> {
    if series.is_empty() {
        return Err(PlotError::Invalid("no series to draw".into()));
    }
    for sr in series {
        if sr.points.is_empty() {
            return Err(PlotError::EmptySeries(sr.name.clone()));
        }
        check_finite(&sr.name, sr.points.iter().flat_map(|&(x, y)| [x, y]))?;
    }
    let all = || series.iter().flat_map(|sr| sr.points.iter());
    let (xmin, xmax) = extent(all().map(|p| p.0));
    let (ymin, ymax) = extent(all().map(|p| p.1));
    let sx = LinScale::fit(xmin, xmax, LEFT, plot_right());
    let sy = LinScale::fit(ymin, ymax, plot_bottom(), TOP);

    let mut s = open_svg();
    axes_frame(&mut s);
    x_numeric_ticks(&mut s, &sx);
    y_numeric_ticks(&mut s, &sy);
    axis_labels(&mut s, &spec.x_label, &spec.y_label);
    let mut keys = Vec::new();
    for (i, sr) in series.iter().enumerate() {
        let color = series_color(&sr.name, i);
        keys.push((sr.name.clone(), color));
        let name = xml_escape(&sr.name);
        for &(x, y) in &sr.points {
            let _ = writeln!(
                s,
                "<circle class=\"pt\" data-series=\"{name}\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
                px(sx.map(x)),
                px(sy.map(y))
            );
        }
        if let Some((slope, intercept)) = fit_line(&sr.points) {
            let (x0, x1) = extent(sr.points.iter().map(|p| p.0));
            let _ = writeln!(
                s,
                "<line class=\"fit\" data-series=\"{name}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                px(sx.map(x0)),
                px(sy.map(slope * x0 + intercept)),
                px(sx.map(x1)),
                px(sy.map(slope * x1 + intercept))
            );
        }
    }
    legend(&mut s, &keys);
    s.push_str("</svg>\n");
    Ok(s)
}

// ---- box plot grid ----

fn boxes(spec: &PlotSpec, cells: &[BoxCell]) -> Result<String, PlotError> {
    if cells.is_empty() {
        return Err(PlotError::Invalid("no cells to draw".into()));
    }
    let mut groups: Vec<String> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for c in cells {
        if c.values.is_empty() {
            return Err(PlotError::EmptySeries(format!("{}/{}", c.group, c.series)));
        }
        if !groups.contains(&c.group) {
            groups.push(c.group.clone());
        }
        if !names.contains(&c.series) {
            names.push(c.series.clone());
        }
    }
    let labelled: Vec<(String, Vec<f64>)> = cells
        .iter()
        .map(|c| (format!("{}/{}", c.group, c.series), c.values.clone()))
        .collect();
    let summaries = stats::boxplot_stats(&labelled).map_err(|e| PlotError::Invalid(e.to_string()))?;
    let (ymin, ymax) = extent(summaries.iter().flat_map(|b| [b.min, b.max]));
    let sy = LinScale::fit(ymin, ymax, plot_bottom(), TOP);

    let slot = (plot_right() - LEFT) / groups.len() as f64;
    let lanes = names.len() as f64;
    let box_w = (slot / (lanes + 1.0)).min(48.0) * 0.8;

    let mut s = open_svg();
    axes_frame(&mut s);
    x_category_ticks(&mut s, &groups);
    y_numeric_ticks(&mut s, &sy);
    axis_labels(&mut s, &spec.x_label, &spec.y_label);
    let mut keys = Vec::new();
    for (cell, summary) in cells.iter().zip(&summaries) {
        let gi = groups.iter().position(|g| g == &cell.group).unwrap();
        let si = names.iter().position(|n| n == &cell.series).unwrap();
        let color = series_color(&cell.series, si);
        if !keys.iter().any(|(n, _)| n == &cell.series) {
            keys.push((cell.series.clone(), color));
        }
        let cx = LEFT + slot * (gi as f64 + (si as f64 + 1.0) / (lanes + 1.0));
        let group = xml_escape(&cell.group);
        let name = xml_escape(&cell.series);
        for (a, b) in [(summary.q3, summary.whisker_high), (summary.whisker_low, summary.q1)] {
            let _ = writeln!(
                s,
                "<line class=\"whisker\" data-group=\"{group}\" data-series=\"{name}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
                px(cx),
                px(sy.map(a)),
                px(cx),
                px(sy.map(b))
            );
        }
        let _ = writeln!(
            s,
            "<rect class=\"box\" data-group=\"{group}\" data-series=\"{name}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\" fill-opacity=\"0.6\" stroke=\"black\"/>",
            px(cx - box_w / 2.0),
            px(sy.map(summary.q3)),
            px(box_w),
            px(sy.map(summary.q1) - sy.map(summary.q3))
        );
        let _ = writeln!(
            s,
            "<line class=\"median\" data-group=\"{group}\" data-series=\"{name}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"2\"/>",
            px(cx - box_w / 2.0),
            px(sy.map(summary.median)),
            px(cx + box_w / 2.0),
            px(sy.map(summary.median))
        );
        for &v in &summary.outliers {
            let _ = writeln!(
                s,
                "<circle class=\"outlier\" data-group=\"{group}\" data-series=\"{name}\" cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"none\" stroke=\"black\"/>",
                px(cx),
                px(sy.map(v))
            );
        }
    }
    legend(&mut s, &keys);
    s.push_str("</svg>\n");
    Ok(s)
}

// ---- coefficient dot plot ----

fn dots(spec: &PlotSpec, rows: &[CoefPoint]) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Invalid("no coefficients to draw".into()));
    }
    for r in rows {
        check_finite(&r.label, [r.estimate, r.half_width])?;
        if r.half_width < 0.0 {
            return Err(PlotError::Invalid(format!(
                "negative interval half-width for `{}`",
                r.label
            )));
        }
    }
    let lo = rows.iter().map(|r| r.estimate - r.half_width).fold(0.0f64, f64::min);
    let hi = rows.iter().map(|r| r.estimate + r.half_width).fold(0.0f64, f64::max);
    let sx = LinScale::fit(lo, hi, LEFT, plot_right());
    let slot = (plot_bottom() - TOP) / rows.len() as f64;

    let mut s = open_svg();
    axes_frame(&mut s);
    x_numeric_ticks(&mut s, &sx);
    axis_labels(&mut s, &spec.x_label, &spec.y_label);
    // vertical zero reference: the no-effect line
    let _ = writeln!(
        s,
        "<line class=\"zero\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>",
        px(sx.map(0.0)),
        px(TOP),
        px(sx.map(0.0)),
        px(plot_bottom())
    );
    let mut keys: Vec<(String, &'static str)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let si = match keys.iter().position(|(n, _)| n == &r.series) {
            Some(p) => p,
            None => {
                keys.push((r.series.clone(), series_color(&r.series, keys.len())));
                keys.len() - 1
            }
        };
        let color = keys[si].1;
        let y = TOP + slot * (i as f64 + 0.5);
        let label = xml_escape(&r.label);
        let _ = writeln!(
            s,
            "<text class=\"tick\" data-axis=\"y\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{label}</text>",
            px(LEFT - 8.0),
            px(y + 4.0)
        );
        let _ = writeln!(
            s,
            "<line class=\"ci\" data-label=\"{label}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>",
            px(sx.map(r.estimate - r.half_width)),
            px(y),
            px(sx.map(r.estimate + r.half_width)),
            px(y)
        );
        let _ = writeln!(
            s,
            "<circle class=\"coef\" data-label=\"{label}\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>",
            px(sx.map(r.estimate)),
            px(y)
        );
    }
    legend(&mut s, &keys);
    s.push_str("</svg>\n");
    Ok(s)
}

// ---- bars with interval whiskers ----

fn bar_chart(spec: &PlotSpec, bars: &[BarGroup]) -> Result<String, PlotError> {
    if bars.is_empty() {
        return Err(PlotError::Invalid("no bars to draw".into()));
    }
    for b in bars {
        check_finite(&b.label, [b.value, b.lo, b.hi])?;
        if b.lo > b.hi {
            return Err(PlotError::Invalid(format!("interval of `{}` is inverted", b.label)));
        }
    }
    // bars hang from zero, so zero is always in the window
    let lo = bars.iter().map(|b| b.lo.min(b.value)).fold(0.0f64, f64::min);
    let hi = bars.iter().map(|b| b.hi.max(b.value)).fold(0.0f64, f64::max);
    let sy = LinScale::fit(lo, hi, plot_bottom(), TOP);
    let labels: Vec<String> = bars.iter().map(|b| b.label.clone()).collect();
    let slot = (plot_right() - LEFT) / bars.len() as f64;
    let bar_w = (slot * 0.6).min(56.0);

    let mut s = open_svg();
    axes_frame(&mut s);
    x_category_ticks(&mut s, &labels);
    y_numeric_ticks(&mut s, &sy);
    axis_labels(&mut s, &spec.x_label, &spec.y_label);
    let mut keys: Vec<(String, &'static str)> = Vec::new();
    for (i, b) in bars.iter().enumerate() {
        let color = match keys.iter().position(|(n, _)| n == &b.series) {
            Some(p) => keys[p].1,
            None => {
                let c = series_color(&b.series, keys.len());
                keys.push((b.series.clone(), c));
                c
            }
        };
        let cx = LEFT + slot * (i as f64 + 0.5);
        let label = xml_escape(&b.label);
        let y_zero = sy.map(0.0);
        let y_val = sy.map(b.value);
        let (top, height) = if b.value >= 0.0 { (y_val, y_zero - y_val) } else { (y_zero, y_val - y_zero) };
        let _ = writeln!(
            s,
            "<rect class=\"bar\" data-group=\"{label}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\"/>",
            px(cx - bar_w / 2.0),
            px(top),
            px(bar_w),
            px(height)
        );
        let _ = writeln!(
            s,
            "<line class=\"ci\" data-group=\"{label}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            px(cx),
            px(sy.map(b.lo)),
            px(cx),
            px(sy.map(b.hi))
        );
        for v in [b.lo, b.hi] {
            let _ = writeln!(
                s,
                "<line class=\"cap\" data-group=\"{label}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
                px(cx - 6.0),
                px(sy.map(v)),
                px(cx + 6.0),
                px(sy.map(v))
            );
        }
    }
    legend(&mut s, &keys);
    s.push_str("</svg>\n");
    Ok(s)
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
