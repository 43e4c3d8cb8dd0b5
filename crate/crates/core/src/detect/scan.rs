//! Window evaluation, pyramid scanning and detection merging.

use super::{
    CascadeModel, DetectError, DetectParams, FaceBox, IntegralImage, VARIANCE_FLOOR,
};
use crate::raster::{PixelGrid, Rect};

/// Outcome of running the cascade on one window. `score` is the margin of
/// the last stage evaluated: final-stage sum minus its threshold for
/// accepted windows, the failing stage's shortfall otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowDecision {
    pub passed: bool,
    pub score: f64,
}

fn scale_round(v: u32, factor: f64) -> u32 {
    (v as f64 * factor).round() as u32
}

/// Runs every cascade stage on the window `win`, with feature rectangles
/// scaled from base-window coordinates by `win`'s size. Windows whose pixel
/// standard deviation is below [`VARIANCE_FLOOR`] are rejected without
/// evaluating any stage.
pub fn eval_window(
    cascade: &CascadeModel,
    ii: &IntegralImage,
    win: Rect,
) -> Result<WindowDecision, DetectError> {
    let (mean, sd) = ii.rect_stats(win)?;
    if sd < VARIANCE_FLOOR {
        return Ok(WindowDecision {
            passed: false,
            score: 0.0,
        });
    }
    let sx = win.w as f64 / cascade.base_width() as f64;
    let sy = win.h as f64 / cascade.base_height() as f64;
    let area = win.area() as f64;
    let mut margin = 0.0;
    for stage in cascade.stages() {
        let mut stage_sum = 0.0;
        for weak in &stage.weak {
            let mut raw = 0.0;
            let mut weighted_area = 0.0;
            for wr in weak.feature.rects() {
                let r = wr.rect;
                let scaled = Rect {
                    x: win.x + scale_round(r.x, sx),
                    y: win.y + scale_round(r.y, sy),
                    w: scale_round(r.w, sx).max(1),
                    h: scale_round(r.h, sy).max(1),
                };
                // rounding can push a rect past the window edge; pull it back
                let scaled = Rect {
                    x: scaled.x.min(win.x + win.w - 1),
                    y: scaled.y.min(win.y + win.h - 1),
                    ..scaled
                };
                let scaled = Rect {
                    w: scaled.w.min(win.x + win.w - scaled.x),
                    h: scaled.h.min(win.y + win.h - scaled.y),
                    ..scaled
                };
                raw += wr.weight * ii.rect_sum(scaled)? as f64;
                weighted_area += wr.weight * scaled.area() as f64;
            }
            let value = (raw - mean * weighted_area) / (sd * area);
            stage_sum += if value < weak.threshold {
                weak.left_value
            } else {
                weak.right_value
            };
        }
        margin = stage_sum - stage.threshold;
        if stage_sum < stage.threshold {
            return Ok(WindowDecision {
                passed: false,
                score: margin,
            });
        }
    }
    Ok(WindowDecision {
        passed: true,
        score: margin,
    })
}

/// Intersection-over-union of two pixel rectangles.
pub(crate) fn iou(a: Rect, b: Rect) -> f64 {
    let x0 = a.x.max(b.x) as i64;
    let y0 = a.y.max(b.y) as i64;
    let x1 = (a.x + a.w).min(b.x + b.w) as i64;
    let y1 = (a.y + a.h).min(b.y + b.h) as i64;
    let iw = (x1 - x0).max(0);
    let ih = (y1 - y0).max(0);
    let inter = (iw * ih) as f64;
    let union = a.area() as f64 + b.area() as f64 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn sort_boxes(boxes: &mut [FaceBox]) {
    boxes.sort_by(|a, b| {
        (a.rect.y, a.rect.x, a.scale)
            .partial_cmp(&(b.rect.y, b.rect.x, b.scale))
            .expect("scores and scales are finite")
    });
}

/// Clusters detections by transitive IoU overlap, drops clusters with fewer
/// than `min_neighbors` raw members, and replaces each surviving cluster by
/// its coordinate-wise mean box carrying the maximum member score.
///
/// Clustering repeats until no two output boxes overlap at or above the
/// threshold, so merging its own output is a no-op.
pub fn merge_detections(
    boxes: &[FaceBox],
    overlap_threshold: f64,
    min_neighbors: usize,
) -> Result<Vec<FaceBox>, DetectError> {
    if !(overlap_threshold > 0.0 && overlap_threshold <= 1.0) {
        return Err(DetectError::BadParam(format!(
            "overlap_threshold must lie in (0, 1], got {overlap_threshold}"
        )));
    }
    if min_neighbors == 0 {
        return Err(DetectError::BadParam(
            "min_neighbors must be at least 1".into(),
        ));
    }
    // (box, number of raw detections it stands for)
    let mut items: Vec<(FaceBox, usize)> = boxes.iter().map(|b| (b.clone(), 1)).collect();
    loop {
        let n = items.len();
        let mut sets = DisjointSet::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if iou(items[i].0.rect, items[j].0.rect) >= overlap_threshold {
                    sets.union(i, j);
                }
            }
        }
        let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            clusters.entry(sets.find(i)).or_default().push(i);
        }
        if clusters.len() == n {
            break;
        }
        let mut next = Vec::with_capacity(clusters.len());
        for members in clusters.values() {
            let k = members.len() as f64;
            let mean =
                |f: &dyn Fn(&FaceBox) -> f64| members.iter().map(|&i| f(&items[i].0)).sum::<f64>() / k;
            let rect = Rect {
                x: mean(&|b| b.rect.x as f64).round() as u32,
                y: mean(&|b| b.rect.y as f64).round() as u32,
                w: mean(&|b| b.rect.w as f64).round().max(1.0) as u32,
                h: mean(&|b| b.rect.h as f64).round().max(1.0) as u32,
            };
            let score = members
                .iter()
                .map(|&i| items[i].0.score)
                .fold(f64::NEG_INFINITY, f64::max);
            let scale = mean(&|b| b.scale);
            let count = members.iter().map(|&i| items[i].1).sum();
            next.push((FaceBox { rect, score, scale }, count));
        }
        items = next;
    }
    let mut out: Vec<FaceBox> = items
        .into_iter()
        .filter(|(_, count)| *count >= min_neighbors)
        .map(|(b, _)| b)
        .collect();
    sort_boxes(&mut out);
    Ok(out)
}

/// Slides the cascade over a scale pyramid and returns the merged
/// detections, sorted by `(y, x, scale)`.
///
/// The pyramid scales the feature coordinates, never the image: window sizes
/// grow from the cascade base by `scale_factor` per level, and the slide
/// step is `step_fraction` of the current window size (at least one pixel).
/// A `min_size` larger than the image simply yields no detections.
pub fn detect_faces(
    img: &PixelGrid,
    cascade: &CascadeModel,
    params: &DetectParams,
) -> Result<Vec<FaceBox>, DetectError> {
    if params.scale_factor <= 1.0 {
        return Err(DetectError::BadParam(format!(
            "scale_factor must exceed 1.0, got {}",
            params.scale_factor
        )));
    }
    if !(params.step_fraction > 0.0) {
        return Err(DetectError::BadParam(format!(
            "step_fraction must be positive, got {}",
            params.step_fraction
        )));
    }
    let ii = IntegralImage::new(img);
    let (width, height) = (img.width(), img.height());
    let mut raw = Vec::new();
    let mut scale = 1.0f64;
    loop {
        let win_w = scale_round(cascade.base_width(), scale);
        let win_h = scale_round(cascade.base_height(), scale);
        if win_w > width || win_h > height {
            break;
        }
        if win_w >= params.min_size && win_h >= params.min_size {
            let step_x = scale_round(win_w, params.step_fraction).max(1);
            let step_y = scale_round(win_h, params.step_fraction).max(1);
            let mut y = 0;
            while y + win_h <= height {
                let mut x = 0;
                while x + win_w <= width {
                    let win = Rect::new(x, y, win_w, win_h);
                    let decision = eval_window(cascade, &ii, win)?;
                    if decision.passed {
                        raw.push(FaceBox {
                            rect: win,
                            score: decision.score,
                            scale,
                        });
                    }
                    x += step_x;
                }
                y += step_y;
            }
        }
        scale *= params.scale_factor;
    }
    merge_detections(&raw, params.overlap_threshold, params.min_neighbors)
}
