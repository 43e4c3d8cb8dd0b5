//! Per-class accuracy measurement, optionally averaged over seeded folds.

use super::PipelineError;
use crate::corpus::TableRow;
use crate::nn::{self, Dataset, NetworkModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Accuracy of one class. `correct` and `total` count over the whole
/// validation set regardless of folding; `accuracy` is `None` when the
/// class never appears.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAccuracy {
    pub label: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: Option<f64>,
}

impl TableRow for ClassAccuracy {
    const COLUMNS: &'static [&'static str] = &["label", "correct", "total", "accuracy"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.label.clone(),
            self.correct.to_string(),
            self.total.to_string(),
            // absent classes report n/a, not zero
            self.accuracy.map(|a| a.to_string()).unwrap_or_else(|| "n/a".into()),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        let [label, correct, total, accuracy] = fields else {
            return Err(format!("expected 4 fields, got {}", fields.len()));
        };
        Ok(ClassAccuracy {
            label: label.clone(),
            correct: correct.parse().map_err(|_| format!("bad correct count {correct:?}"))?,
            total: total.parse().map_err(|_| format!("bad total count {total:?}"))?,
            accuracy: if accuracy == "n/a" {
                None
            } else {
                Some(accuracy.parse().map_err(|_| format!("bad accuracy {accuracy:?}"))?)
            },
        })
    }
}

/// Scores `model` on `validation` and reports one row per model class, in
/// the model's class order. With `folds == 1` the accuracy is the plain
/// ratio; with more folds the set is split by a seeded shuffle into
/// near-equal chunks and each class's accuracy is the mean over the folds
/// where it appears, which exposes variance that a single ratio hides.
/// The model is only read — no example ever feeds back into training here.
pub fn evaluate_per_class(
    model: &NetworkModel,
    validation: &Dataset,
    folds: usize,
    seed: u64,
) -> Result<Vec<ClassAccuracy>, PipelineError> {
    if folds == 0 {
        return Err(PipelineError::Validation("folds must be positive".into()));
    }
    if validation.examples.is_empty() {
        return Err(PipelineError::Evaluation("validation set is empty".into()));
    }
    if validation.class_labels != model.class_labels() {
        return Err(PipelineError::Evaluation(format!(
            "validation classes {:?} do not match the model's {:?}",
            validation.class_labels,
            model.class_labels()
        )));
    }
    let classes = model.num_classes();
    let n = validation.examples.len();

    // hit[i] = was example i classified correctly
    let mut hit = vec![false; n];
    for (i, (tensor, label)) in validation.examples.iter().enumerate() {
        hit[i] = nn::predict(model, tensor)?.class_index == *label;
    }

    let mut order: Vec<usize> = (0..n).collect();
    if folds > 1 {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    // per class: global counts plus per-fold accuracy accumulation
    let mut correct = vec![0usize; classes];
    let mut total = vec![0usize; classes];
    let mut acc_sum = vec![0.0f64; classes];
    let mut acc_folds = vec![0usize; classes];
    for f in 0..folds {
        let chunk = &order[f * n / folds..(f + 1) * n / folds];
        let mut fold_correct = vec![0usize; classes];
        let mut fold_total = vec![0usize; classes];
        for &i in chunk {
            let label = validation.examples[i].1;
            fold_total[label] += 1;
            fold_correct[label] += usize::from(hit[i]);
        }
        for c in 0..classes {
            if fold_total[c] > 0 {
                correct[c] += fold_correct[c];
                total[c] += fold_total[c];
                acc_sum[c] += fold_correct[c] as f64 / fold_total[c] as f64;
                acc_folds[c] += 1;
            }
        }
    }

    Ok(model
        .class_labels()
        .iter()
        .enumerate()
        .map(|(c, label)| ClassAccuracy {
            label: label.clone(),
            correct: correct[c],
            total: total[c],
            accuracy: (acc_folds[c] > 0).then(|| acc_sum[c] / acc_folds[c] as f64),
        })
        .collect())
}
