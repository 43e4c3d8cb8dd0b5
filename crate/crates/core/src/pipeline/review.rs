//! The confident-prediction review loop: queue emission, verdict parsing,
//! and conversion of verdicts back into labeled training examples.

use super::PipelineError;
use crate::corpus::TableRow;
use crate::nn::{self, NetworkModel};
use crate::raster::{Rect, Tensor};
use std::collections::HashMap;

/// One face awaiting a human verdict; `tensor` is the exact network input
/// that produced the prediction, so a confirmation can be trained on
/// without re-running detection.
#[derive(Debug, Clone)]
pub struct ReviewItem {
    pub photo_id: String,
    pub bbox: Rect,
    pub predicted: String,
    pub confidence: f64,
    pub tensor: Tensor,
}

/// Items ordered most-confident-first, plus the label vocabulary verdicts
/// are checked against.
#[derive(Debug, Clone)]
pub struct ReviewQueue {
    pub items: Vec<ReviewItem>,
    pub class_labels: Vec<String>,
}

impl ReviewQueue {
    /// CSV projection of the queue with verdicts left blank for the
    /// reviewer to fill in.
    pub fn to_rows(&self) -> Vec<ReviewRow> {
        self.items
            .iter()
            .map(|item| ReviewRow {
                photo_id: item.photo_id.clone(),
                bbox: item.bbox,
                predicted: item.predicted.clone(),
                confidence: item.confidence,
                verdict: String::new(),
            })
            .collect()
    }
}

/// One line of a review sheet. A row is keyed by `(photo_id, bbox)`;
/// `predicted` and `confidence` are echoes for the reviewer's benefit and
/// are not re-checked on the way back in.
#[derive(Debug, Clone, PartialEq)]
pub struct ReviewRow {
    pub photo_id: String,
    pub bbox: Rect,
    pub predicted: String,
    pub confidence: f64,
    pub verdict: String,
}

impl TableRow for ReviewRow {
    const COLUMNS: &'static [&'static str] = &[
        "photo_id",
        "box_x",
        "box_y",
        "box_w",
        "box_h",
        "predicted",
        "confidence",
        "verdict",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.photo_id.clone(),
            self.bbox.x.to_string(),
            self.bbox.y.to_string(),
            self.bbox.w.to_string(),
            self.bbox.h.to_string(),
            self.predicted.clone(),
            self.confidence.to_string(),
            self.verdict.clone(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        fn num<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, String> {
            raw.parse()
                .map_err(|_| format!("bad value `{raw}` for column `{name}`"))
        }
        Ok(ReviewRow {
            photo_id: fields[0].clone(),
            bbox: Rect {
                x: num("box_x", &fields[1])?,
                y: num("box_y", &fields[2])?,
                w: num("box_w", &fields[3])?,
                h: num("box_h", &fields[4])?,
            },
            predicted: fields[5].clone(),
            confidence: num("confidence", &fields[6])?,
            verdict: fields[7].trim().to_string(),
        })
    }
}

/// Runs the model over `candidates` (photo id, network input, face box) and
/// queues every prediction whose confidence reaches `threshold`. The queue
/// is sorted by descending confidence; exact ties fall back to photo id and
/// then box position so reruns produce byte-identical sheets.
pub fn select_high_confidence(
    model: &NetworkModel,
    candidates: &[(String, Tensor, Rect)],
    threshold: f64,
) -> Result<ReviewQueue, PipelineError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(PipelineError::Validation(format!(
            "confidence threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let mut items = Vec::new();
    for (photo_id, tensor, bbox) in candidates {
        let pred = nn::predict(model, tensor)?;
        if pred.confidence >= threshold {
            items.push(ReviewItem {
                photo_id: photo_id.clone(),
                bbox: *bbox,
                predicted: pred.label,
                confidence: pred.confidence,
                tensor: tensor.clone(),
            });
        }
    }
    items.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .expect("predict never yields NaN confidence")
            .then_with(|| a.photo_id.cmp(&b.photo_id))
            .then_with(|| (a.bbox.y, a.bbox.x).cmp(&(b.bbox.y, b.bbox.x)))
    });
    Ok(ReviewQueue {
        items,
        class_labels: model.class_labels().to_vec(),
    })
}

/// Turns reviewed rows back into training examples. Verdicts are
/// `confirm`, `reject`, or `relabel:<label>`; anything else (including a
/// blank) is an error, as is a row that names no queue item or names one
/// twice. Queue items without a row are simply left out, so a partial
/// review sheet is usable. Output order follows the row order.
pub fn apply_review(
    queue: &ReviewQueue,
    rows: &[ReviewRow],
) -> Result<Vec<(Tensor, usize)>, PipelineError> {
    let index: HashMap<(&str, Rect), usize> = queue
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| ((item.photo_id.as_str(), item.bbox), i))
        .collect();
    let label_index = |label: &str| -> Result<usize, PipelineError> {
        queue
            .class_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| {
                PipelineError::Review(format!("unknown label `{label}` in verdict"))
            })
    };
    let mut seen = vec![false; queue.items.len()];
    let mut examples = Vec::new();
    for row in rows {
        let &i = index.get(&(row.photo_id.as_str(), row.bbox)).ok_or_else(|| {
            PipelineError::Review(format!(
                "row for photo `{}` box ({}, {}, {}, {}) matches nothing in the queue",
                row.photo_id, row.bbox.x, row.bbox.y, row.bbox.w, row.bbox.h
            ))
        })?;
        if seen[i] {
            return Err(PipelineError::Review(format!(
                "photo `{}` box ({}, {}) is reviewed twice",
                row.photo_id, row.bbox.x, row.bbox.y
            )));
        }
        seen[i] = true;
        let item = &queue.items[i];
        let verdict = row.verdict.trim();
        if verdict == "confirm" {
            examples.push((item.tensor.clone(), label_index(&item.predicted)?));
        } else if verdict == "reject" {
            continue;
        } else if let Some(label) = verdict.strip_prefix("relabel:") {
            examples.push((item.tensor.clone(), label_index(label.trim())?));
        } else {
            return Err(PipelineError::Review(format!(
                "photo `{}`: verdict must be `confirm`, `reject`, or `relabel:<label>`, got `{verdict}`",
                row.photo_id
            )));
        }
    }
    Ok(examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_table, persist_table};
    use crate::nn::{Dataset, LayerSpec, TrainConfig};

    /// Model trained until x < 0.5 predicts "low" and x > 0.5 predicts
    /// "high", with confidence growing toward the extremes.
    fn confident_model() -> NetworkModel {
        let mut model = NetworkModel::new(
            [1, 1, 1],
            vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    in_units: 1,
                    out_units: 2,
                },
                LayerSpec::Softmax,
            ],
            vec!["low".into(), "high".into()],
            3,
        )
        .unwrap();
        let examples: Vec<(Tensor, usize)> = (0..20)
            .map(|i| {
                let x = i as f64 / 19.0;
                (
                    Tensor::new(vec![1, 1, 1], vec![x]).unwrap(),
                    usize::from(x > 0.5),
                )
            })
            .collect();
        let data = Dataset::new(examples, vec!["low".into(), "high".into()]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 2.0,
            iterations: 400,
            batch_size: 20,
            seed: 1,
            ..TrainConfig::default()
        };
        nn::train(&mut model, &data, &cfg).unwrap();
        model
    }

    fn pixel(x: f64) -> Tensor {
        Tensor::new(vec![1, 1, 1], vec![x]).unwrap()
    }

    fn candidates() -> Vec<(String, Tensor, Rect)> {
        vec![
            ("p-mid".into(), pixel(0.5), Rect::new(0, 0, 4, 4)),
            ("p-low".into(), pixel(0.0), Rect::new(1, 1, 4, 4)),
            ("p-high".into(), pixel(1.0), Rect::new(2, 2, 4, 4)),
        ]
    }

    #[test]
    fn queue_keeps_confident_predictions_sorted() {
        let model = confident_model();
        let queue = select_high_confidence(&model, &candidates(), 0.9).unwrap();
        // x = 0.5 sits on the decision boundary at ~50% and is excluded
        assert_eq!(queue.items.len(), 2);
        assert!(queue.items[0].confidence >= queue.items[1].confidence);
        for item in &queue.items {
            assert!(item.confidence >= 0.9);
            assert_ne!(item.photo_id, "p-mid");
        }
        assert_eq!(queue.class_labels, ["low", "high"]);
    }

    #[test]
    fn threshold_one_keeps_only_certainty() {
        let model = confident_model();
        let queue = select_high_confidence(&model, &candidates(), 1.0).unwrap();
        assert!(queue.items.len() <= 2);
        assert!(matches!(
            select_high_confidence(&model, &candidates(), 0.0),
            Err(PipelineError::Validation(_))
        ));
        assert!(matches!(
            select_high_confidence(&model, &candidates(), 1.1),
            Err(PipelineError::Validation(_))
        ));
    }

    #[test]
    fn ties_order_by_photo_id_then_position() {
        let queue = ReviewQueue {
            items: Vec::new(),
            class_labels: vec!["low".into(), "high".into()],
        };
        assert!(queue.to_rows().is_empty());
        let model = confident_model();
        // identical tensors give identical confidences; ids break the tie
        let cands = vec![
            ("zz".into(), pixel(0.0), Rect::new(5, 5, 4, 4)),
            ("aa".into(), pixel(0.0), Rect::new(9, 9, 4, 4)),
            ("aa".into(), pixel(0.0), Rect::new(3, 3, 4, 4)),
        ];
        let queue = select_high_confidence(&model, &cands, 0.5).unwrap();
        let keys: Vec<(&str, u32)> = queue
            .items
            .iter()
            .map(|i| (i.photo_id.as_str(), i.bbox.y))
            .collect();
        assert_eq!(keys, [("aa", 3), ("aa", 9), ("zz", 5)]);
    }

    fn small_queue() -> ReviewQueue {
        ReviewQueue {
            items: vec![
                ReviewItem {
                    photo_id: "ph1".into(),
                    bbox: Rect::new(0, 0, 8, 8),
                    predicted: "high".into(),
                    confidence: 0.99,
                    tensor: pixel(0.9),
                },
                ReviewItem {
                    photo_id: "ph2".into(),
                    bbox: Rect::new(4, 4, 8, 8),
                    predicted: "low".into(),
                    confidence: 0.95,
                    tensor: pixel(0.1),
                },
            ],
            class_labels: vec!["low".into(), "high".into()],
        }
    }

    fn row(queue: &ReviewQueue, i: usize, verdict: &str) -> ReviewRow {
        let mut rows = queue.to_rows();
        rows[i].verdict = verdict.into();
        rows.remove(i)
    }

    #[test]
    fn confirm_reject_and_relabel_verdicts() {
        let queue = small_queue();
        let rows = vec![
            row(&queue, 0, "confirm"),
            row(&queue, 1, "relabel:high"),
        ];
        let examples = apply_review(&queue, &rows).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[0].1, 1); // confirmed "high"
        assert_eq!(examples[1].1, 1); // relabeled to "high"
        assert_eq!(examples[0].0.data(), queue.items[0].tensor.data());

        let rejected = apply_review(&queue, &[row(&queue, 0, "reject")]).unwrap();
        assert!(rejected.is_empty());
    }

    #[test]
    fn partial_reviews_are_allowed() {
        let queue = small_queue();
        let examples = apply_review(&queue, &[row(&queue, 1, "confirm")]).unwrap();
        assert_eq!(examples.len(), 1);
        assert_eq!(examples[0].1, 0); // "low"
    }

    #[test]
    fn blank_and_malformed_verdicts_are_errors() {
        let queue = small_queue();
        for verdict in ["", "  ", "maybe", "relabel:purple", "CONFIRM"] {
            let got = apply_review(&queue, &[row(&queue, 0, verdict)]);
            assert!(
                matches!(got, Err(PipelineError::Review(_))),
                "verdict {verdict:?} was accepted"
            );
        }
    }

    #[test]
    fn unknown_and_duplicate_references_are_errors() {
        let queue = small_queue();
        let mut stray = row(&queue, 0, "confirm");
        stray.photo_id = "ph9".into();
        match apply_review(&queue, &[stray]) {
            Err(PipelineError::Review(msg)) => assert!(msg.contains("ph9"), "{msg}"),
            other => panic!("expected review error, got {other:?}"),
        }

        let twice = vec![row(&queue, 0, "confirm"), row(&queue, 0, "reject")];
        match apply_review(&queue, &twice) {
            Err(PipelineError::Review(msg)) => assert!(msg.contains("twice"), "{msg}"),
            other => panic!("expected review error, got {other:?}"),
        }
    }

    #[test]
    fn review_sheet_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("review.csv");
        let queue = small_queue();
        let mut rows = queue.to_rows();
        rows[0].verdict = "relabel:low".into();
        rows[1].verdict = "confirm".into();
        persist_table(&rows, &path).unwrap();
        let loaded: Vec<ReviewRow> = load_table(&path).unwrap();
        assert_eq!(loaded, rows);
        let examples = apply_review(&queue, &loaded).unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(examples[0].1, 0);
    }
}
