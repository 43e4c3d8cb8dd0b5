//! Haar-cascade face detection over integral images.
//!
//! A detection window slides across a scale pyramid; at each position the
//! cascade's stages vote on scaled rectangle features. Feature values are
//! evaluated on the z-scored window (mean subtracted, divided by the pixel
//! standard deviation) and divided by the window area, which makes them
//! invariant under affine intensity rescaling and comparable across scales.
//! Near-uniform windows (standard deviation below [`VARIANCE_FLOOR`]) are
//! rejected outright.

mod format;
mod integral;
mod scan;

pub use format::{load_cascade, save_cascade};
pub use integral::IntegralImage;
pub use scan::{detect_faces, eval_window, merge_detections, WindowDecision};

use crate::raster::Rect;
use thiserror::Error;

/// Windows whose pixel standard deviation falls below this are skipped.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("{0}")]
    Validation(String),
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("rect {rect:?} out of bounds for {width}x{height}")]
    RectOutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("degenerate rect {0:?}: width and height must be positive")]
    EmptyRect(Rect),
    #[error("cascade file {path}, line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Haar feature layouts over a detection window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    TwoRectHorizontal,
    TwoRectVertical,
    ThreeRect,
    FourRect,
}

/// One rectangle of a Haar feature with its vote weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRect {
    pub rect: Rect,
    pub weight: f64,
}

/// A rectangle-difference feature in base-window coordinates. Weights sum to
/// zero so the raw value measures contrast, not brightness.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarFeature {
    kind: FeatureKind,
    rects: Vec<WeightedRect>,
}

impl HaarFeature {
    pub fn new(rects: Vec<WeightedRect>) -> Result<Self, DetectError> {
        if !(2..=4).contains(&rects.len()) {
            return Err(DetectError::Validation(format!(
                "feature needs 2 to 4 rects, got {}",
                rects.len()
            )));
        }
        for wr in &rects {
            if wr.rect.w == 0 || wr.rect.h == 0 {
                return Err(DetectError::EmptyRect(wr.rect));
            }
        }
        let weight_sum: f64 = rects.iter().map(|r| r.weight).sum();
        if weight_sum.abs() > 1e-9 {
            return Err(DetectError::Validation(format!(
                "feature weights must sum to 0, got {weight_sum}"
            )));
        }
        let kind = match rects.len() {
            2 => {
                if rects[0].rect.y == rects[1].rect.y {
                    FeatureKind::TwoRectHorizontal
                } else {
                    FeatureKind::TwoRectVertical
                }
            }
            3 => FeatureKind::ThreeRect,
            _ => FeatureKind::FourRect,
        };
        Ok(HaarFeature { kind, rects })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn rects(&self) -> &[WeightedRect] {
        &self.rects
    }
}

/// Thresholded Haar feature: emits `left_value` when the normalized feature
/// value falls below `threshold`, otherwise `right_value`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub threshold: f64,
    pub left_value: f64,
    pub right_value: f64,
}

/// One boosting stage: the sum of its weak outputs must reach `threshold`
/// for a window to survive.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStage {
    pub weak: Vec<WeakClassifier>,
    pub threshold: f64,
}

/// A full detection cascade with the window geometry it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    base_width: u32,
    base_height: u32,
    stages: Vec<CascadeStage>,
}

impl CascadeModel {
    pub fn new(
        base_width: u32,
        base_height: u32,
        stages: Vec<CascadeStage>,
    ) -> Result<Self, DetectError> {
        if base_width < 8 || base_height < 8 {
            return Err(DetectError::Validation(format!(
                "base window {base_width}x{base_height} below the 8x8 minimum"
            )));
        }
        if stages.is_empty() {
            return Err(DetectError::Validation(
                "cascade needs at least one stage".into(),
            ));
        }
        for (si, stage) in stages.iter().enumerate() {
            if stage.weak.is_empty() {
                return Err(DetectError::Validation(format!(
                    "stage {si} has no weak classifiers"
                )));
            }
            for weak in &stage.weak {
                for wr in weak.feature.rects() {
                    let r = wr.rect;
                    if r.x as u64 + r.w as u64 > base_width as u64
                        || r.y as u64 + r.h as u64 > base_height as u64
                    {
                        return Err(DetectError::RectOutOfBounds {
                            rect: r,
                            width: base_width,
                            height: base_height,
                        });
                    }
                }
            }
        }
        Ok(CascadeModel {
            base_width,
            base_height,
            stages,
        })
    }

    pub fn base_width(&self) -> u32 {
        self.base_width
    }

    pub fn base_height(&self) -> u32 {
        self.base_height
    }

    pub fn stages(&self) -> &[CascadeStage] {
        &self.stages
    }
}

/// A detection: window rectangle, final-stage margin and pyramid scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceBox {
    pub rect: Rect,
    pub score: f64,
    pub scale: f64,
}

/// Scan parameters for [`detect_faces`].
#[derive(Debug, Clone, PartialEq)]
pub struct DetectParams {
    /// Multiplicative window growth between pyramid levels. Must exceed 1.
    pub scale_factor: f64,
    /// Slide step as a fraction of the current window size, at least 1 px.
    pub step_fraction: f64,
    /// Smallest window side worth reporting, in pixels.
    pub min_size: u32,
    /// Minimum IoU for two detections to land in the same cluster.
    pub overlap_threshold: f64,
    /// Clusters with fewer raw detections than this are dropped.
    pub min_neighbors: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            scale_factor: 1.1,
            step_fraction: 0.05,
            min_size: 24,
            overlap_threshold: 0.3,
            min_neighbors: 3,
        }
    }
}

/// A single-stage cascade tuned for the synthetic portrait used in tests and
/// the demo corpus: a dark upper half over a bright lower half, 24x24 base
/// window. Real cascades are trained offline and loaded with
/// [`load_cascade`]; this one exists so the pipeline can run end to end
/// without any external model file.
pub fn demonstration_cascade() -> CascadeModel {
    let feature = HaarFeature::new(vec![
        WeightedRect {
            rect: Rect::new(0, 0, 24, 12),
            weight: 1.0,
        },
        WeightedRect {
            rect: Rect::new(0, 12, 24, 12),
            weight: -1.0,
        },
    ])
    .expect("static feature is well-formed");
    let stage = CascadeStage {
        weak: vec![WeakClassifier {
            feature,
            threshold: -0.6,
            left_value: 1.0,
            right_value: 0.0,
        }],
        threshold: 0.5,
    };
    CascadeModel::new(24, 24, vec![stage]).expect("static cascade is well-formed")
}
