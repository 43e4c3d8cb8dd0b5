//! The photo-classification pipeline: portrait preprocessing, dataset
//! splitting, fine-tuning with frozen layers, review-driven bootstrapping,
//! per-class evaluation, per-member sampling, and corpus-wide classification.

mod classify;
mod evaluate;
mod finetune;
mod review;

pub use classify::{classify_corpus, sample_per_member, ClassifiedFace, ClassifyReport};
pub use evaluate::{evaluate_per_class, ClassAccuracy};
pub use finetune::{bootstrap_round, finetune, BootstrapOutcome};
pub use review::{apply_review, select_high_confidence, ReviewItem, ReviewQueue, ReviewRow};

use crate::corpus::CorpusError;
use crate::detect::{CascadeModel, DetectError, DetectParams};
use crate::nn::{Dataset, NetError, TrainConfig};
use crate::raster::{self, PixelGrid, RasterError, Rect, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(String),
    #[error("split: {0}")]
    Split(String),
    #[error("review: {0}")]
    Review(String),
    #[error("evaluation: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Settings for [`finetune`] and [`bootstrap_round`].
#[derive(Debug, Clone)]
pub struct FineTuneConfig {
    /// Leading layers whose weights stay bitwise fixed during training.
    pub freeze_prefix: usize,
    /// Output units of the replacement head; must match the dataset classes.
    pub head_classes: usize,
    pub initial_iterations: usize,
    pub bootstrap_iterations: usize,
    /// Minimum max-probability for a prediction to enter the review queue.
    pub confidence_threshold: f64,
    pub train_config: TrainConfig,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        FineTuneConfig {
            freeze_prefix: 0,
            head_classes: 4,
            initial_iterations: 100_000,
            bootstrap_iterations: 20_000,
            confidence_threshold: 0.9,
            train_config: TrainConfig::default(),
        }
    }
}

impl FineTuneConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.head_classes < 2 {
            return Err(PipelineError::Validation(format!(
                "head_classes must be at least 2, got {}",
                self.head_classes
            )));
        }
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold <= 1.0) {
            return Err(PipelineError::Validation(format!(
                "confidence_threshold must lie in (0, 1], got {}",
                self.confidence_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Detects the best face in a portrait and standardizes it for the network:
/// crop to the face box, grayscale, resize to `input_size` square, scale to
/// [0, 1]. Returns `None` when no face is found — absence is a value here,
/// not an error. Among equal scores the first box in the detector's
/// canonical (y, x, scale) order wins.
pub fn preprocess_portrait(
    img: &PixelGrid,
    cascade: &CascadeModel,
    params: &DetectParams,
    input_size: u32,
) -> Result<Option<Tensor>, PipelineError> {
    Ok(preprocess_portrait_with_box(img, cascade, params, input_size)?.map(|(t, _)| t))
}

/// Like [`preprocess_portrait`], but also returns the face box that was
/// cropped, for callers that must refer back to the original photo (review
/// sheets key entries by photo and box).
pub fn preprocess_portrait_with_box(
    img: &PixelGrid,
    cascade: &CascadeModel,
    params: &DetectParams,
    input_size: u32,
) -> Result<Option<(Tensor, Rect)>, PipelineError> {
    if input_size == 0 {
        return Err(PipelineError::Validation("input_size must be positive".into()));
    }
    let boxes = crate::detect::detect_faces(img, cascade, params)?;
    let Some(best) = boxes
        .iter()
        .reduce(|best, b| if b.score > best.score { b } else { best })
    else {
        return Ok(None);
    };
    let face = raster::crop(img, best.rect)?;
    let gray = raster::to_grayscale(&face);
    let scaled = raster::resize(&gray, input_size, input_size)?;
    Ok(Some((raster::to_tensor(&scaled), best.rect)))
}

/// Seeded shuffle, then a cut at `round(n * train_fraction)`. The two sides
/// partition the input exactly; an empty side is an error.
pub fn split_dataset(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), PipelineError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(PipelineError::Split(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n = d.examples.len();
    if n == 0 {
        return Err(PipelineError::Split("dataset is empty".into()));
    }
    let cut = (n as f64 * spec.train_fraction).round() as usize;
    if cut == 0 || cut == n {
        return Err(PipelineError::Split(format!(
            "fraction {} leaves an empty side when splitting {} examples",
            spec.train_fraction, n
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let take = |idx: &[usize]| -> Dataset {
        Dataset {
            examples: idx.iter().map(|&i| d.examples[i].clone()).collect(),
            class_labels: d.class_labels.clone(),
        }
    };
    Ok((take(&order[..cut]), take(&order[cut..])))
}
