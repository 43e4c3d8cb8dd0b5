//! Line-oriented text serialization for cascade models.
//!
//! ```text
//! # comment lines start with '#'
//! cascade <base_w> <base_h> <n_stages>
//! stage <n_weak> <threshold>
//! weak <threshold> <left_value> <right_value> <n_rects>
//! rect <x> <y> <w> <h> <weight>
//! ```
//!
//! Every `stage` line is followed by its `weak` lines, each followed by its
//! `rect` lines. Floats are written in shortest round-trip form, so
//! save/load reproduces a model exactly.

use super::{
    CascadeModel, CascadeStage, DetectError, HaarFeature, WeakClassifier, WeightedRect,
};
use crate::raster::Rect;
use std::fmt::Write as _;
use std::path::Path;

pub fn cascade_to_string(model: &CascadeModel) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "cascade {} {} {}",
        model.base_width(),
        model.base_height(),
        model.stages().len()
    )
    .unwrap();
    for stage in model.stages() {
        writeln!(out, "stage {} {}", stage.weak.len(), stage.threshold).unwrap();
        for weak in &stage.weak {
            writeln!(
                out,
                "weak {} {} {} {}",
                weak.threshold,
                weak.left_value,
                weak.right_value,
                weak.feature.rects().len()
            )
            .unwrap();
            for wr in weak.feature.rects() {
                writeln!(
                    out,
                    "rect {} {} {} {} {}",
                    wr.rect.x, wr.rect.y, wr.rect.w, wr.rect.h, wr.weight
                )
                .unwrap();
            }
        }
    }
    out
}

struct Cursor<'a> {
    origin: &'a str,
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, origin: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, line)| {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    None
                } else {
                    Some((i + 1, trimmed.split_whitespace().collect()))
                }
            })
            .collect();
        Cursor {
            origin,
            lines,
            pos: 0,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> DetectError {
        DetectError::Parse {
            path: self.origin.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn next(&mut self, expect: &str) -> Result<(usize, Vec<&'a str>), DetectError> {
        match self.lines.get(self.pos) {
            Some((line, tokens)) => {
                if tokens[0] != expect {
                    return Err(self.err(
                        *line,
                        format!("expected `{expect}` directive, found `{}`", tokens[0]),
                    ));
                }
                self.pos += 1;
                Ok((*line, tokens.clone()))
            }
            None => {
                let last = self.lines.last().map(|(l, _)| *l).unwrap_or(0);
                Err(self.err(last, format!("unexpected end of file, expected `{expect}`")))
            }
        }
    }
}

fn parse_u32(cur: &Cursor, line: usize, tok: &str, what: &str) -> Result<u32, DetectError> {
    tok.parse()
        .map_err(|_| cur.err(line, format!("invalid {what} `{tok}`")))
}

fn parse_usize(cur: &Cursor, line: usize, tok: &str, what: &str) -> Result<usize, DetectError> {
    tok.parse()
        .map_err(|_| cur.err(line, format!("invalid {what} `{tok}`")))
}

fn parse_f64(cur: &Cursor, line: usize, tok: &str, what: &str) -> Result<f64, DetectError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| cur.err(line, format!("invalid {what} `{tok}`")))?;
    if !v.is_finite() {
        return Err(cur.err(line, format!("{what} must be finite, got `{tok}`")));
    }
    Ok(v)
}

fn expect_arity(
    cur: &Cursor,
    line: usize,
    tokens: &[&str],
    arity: usize,
) -> Result<(), DetectError> {
    if tokens.len() != arity + 1 {
        return Err(cur.err(
            line,
            format!(
                "`{}` takes {arity} fields, found {}",
                tokens[0],
                tokens.len() - 1
            ),
        ));
    }
    Ok(())
}

pub fn cascade_from_str(text: &str, origin: &str) -> Result<CascadeModel, DetectError> {
    let mut cur = Cursor::new(text, origin);
    let (line, tokens) = cur.next("cascade")?;
    expect_arity(&cur, line, &tokens, 3)?;

    let base_w = parse_u32(&cur, line, tokens[1], "base width")?;
    let base_h = parse_u32(&cur, line, tokens[2], "base height")?;
    let n_stages = parse_usize(&cur, line, tokens[3], "stage count")?;

    let mut stages = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let (line, tokens) = cur.next("stage")?;
        expect_arity(&cur, line, &tokens, 2)?;

        let n_weak = parse_usize(&cur, line, tokens[1], "weak count")?;
        let threshold = parse_f64(&cur, line, tokens[2], "stage threshold")?;
        let mut weak = Vec::with_capacity(n_weak);
        for _ in 0..n_weak {
            let (line, tokens) = cur.next("weak")?;
            expect_arity(&cur, line, &tokens, 4)?;
            let tokens = tokens.to_vec();
            let w_threshold = parse_f64(&cur, line, tokens[1], "weak threshold")?;
            let left_value = parse_f64(&cur, line, tokens[2], "left value")?;
            let right_value = parse_f64(&cur, line, tokens[3], "right value")?;
            let n_rects = parse_usize(&cur, line, tokens[4], "rect count")?;
            let mut rects = Vec::with_capacity(n_rects);
            let mut feature_line = line;
            for _ in 0..n_rects {
                let (line, tokens) = cur.next("rect")?;
                expect_arity(&cur, line, &tokens, 5)?;
                let tokens = tokens.to_vec();
                feature_line = line;
                rects.push(WeightedRect {
                    rect: Rect::new(
                        parse_u32(&cur, line, tokens[1], "rect x")?,
                        parse_u32(&cur, line, tokens[2], "rect y")?,
                        parse_u32(&cur, line, tokens[3], "rect width")?,
                        parse_u32(&cur, line, tokens[4], "rect height")?,
                    ),
                    weight: parse_f64(&cur, line, tokens[5], "rect weight")?,
                });
            }
            let feature = HaarFeature::new(rects)
                .map_err(|e| cur.err(feature_line, e.to_string()))?;
            weak.push(WeakClassifier {
                feature,
                threshold: w_threshold,
                left_value,
                right_value,
            });
        }
        stages.push(CascadeStage { weak, threshold });
    }
    if let Some((line, tokens)) = cur.lines.get(cur.pos) {
        return Err(cur.err(*line, format!("unexpected trailing directive `{}`", tokens[0])));
    }
    CascadeModel::new(base_w, base_h, stages)
}

pub fn save_cascade(model: &CascadeModel, path: &Path) -> Result<(), DetectError> {
    std::fs::write(path, cascade_to_string(model)).map_err(|source| DetectError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_cascade(path: &Path) -> Result<CascadeModel, DetectError> {
    let text = std::fs::read_to_string(path).map_err(|source| DetectError::Io {
        path: path.display().to_string(),
        source,
    })?;
    cascade_from_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::super::demonstration_cascade;
    use super::*;

    #[test]
    fn round_trip_preserves_model_exactly() {
        let model = demonstration_cascade();
        let text = cascade_to_string(&model);
        let parsed = cascade_from_str(&text, "<memory>").unwrap();
        assert_eq!(parsed, model);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cascade.txt");
        let model = demonstration_cascade();
        save_cascade(&model, &path).unwrap();
        assert_eq!(load_cascade(&path).unwrap(), model);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\n# demo cascade\ncascade 24 24 1\n\nstage 1 0.5\n# the only weak\nweak -0.6 1 0 2\nrect 0 0 24 12 1\nrect 0 12 24 12 -1\n";
        let parsed = cascade_from_str(text, "<memory>").unwrap();
        assert_eq!(parsed, demonstration_cascade());
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = "cascade 24 24 1\nstage 1 0.5\nweak -0.6 one 0 2\nrect 0 0 24 12 1\nrect 0 12 24 12 -1\n";
        match cascade_from_str(text, "bad.txt") {
            Err(DetectError::Parse { path, line, msg }) => {
                assert_eq!(path, "bad.txt");
                assert_eq!(line, 3);
                assert!(msg.contains("one"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_reports_what_was_expected() {
        let text = "cascade 24 24 2\nstage 1 0.5\nweak -0.6 1 0 2\nrect 0 0 24 12 1\nrect 0 12 24 12 -1\n";
        match cascade_from_str(text, "short.txt") {
            Err(DetectError::Parse { msg, .. }) => assert!(msg.contains("stage"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn zero_stages_is_a_validation_error() {
        let err = cascade_from_str("cascade 24 24 0\n", "empty.txt").unwrap_err();
        assert!(err.to_string().contains("at least one stage"), "{err}");
    }

    #[test]
    fn trailing_directives_are_rejected() {
        let text = "cascade 24 24 1\nstage 1 0.5\nweak -0.6 1 0 2\nrect 0 0 24 12 1\nrect 0 12 24 12 -1\nrect 0 0 1 1 0\n";
        match cascade_from_str(text, "<memory>") {
            Err(DetectError::Parse { line, msg, .. }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("trailing"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let text = "cascade 24 24 1\nstage 1 NaN\nweak -0.6 1 0 2\nrect 0 0 24 12 1\nrect 0 12 24 12 -1\n";
        match cascade_from_str(text, "<memory>") {
            Err(DetectError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn fractional_weights_round_trip_exactly() {
        let feature = HaarFeature::new(vec![
            WeightedRect {
                rect: Rect::new(0, 0, 8, 8),
                weight: 0.1 + 0.2, // deliberately not a short decimal
            },
            WeightedRect {
                rect: Rect::new(8, 0, 8, 8),
                weight: -(0.1 + 0.2),
            },
        ])
        .unwrap();
        let model = CascadeModel::new(
            16,
            8,
            vec![CascadeStage {
                weak: vec![WeakClassifier {
                    feature,
                    threshold: 1.0 / 3.0,
                    left_value: 0.25,
                    right_value: -0.125,
                }],
                threshold: std::f64::consts::PI,
            }],
        )
        .unwrap();
        let parsed = cascade_from_str(&cascade_to_string(&model), "<memory>").unwrap();
        assert_eq!(parsed, model);
    }
}
