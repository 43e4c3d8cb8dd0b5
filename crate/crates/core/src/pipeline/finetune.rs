//! Head replacement, frozen-prefix fine-tuning, and bootstrap rounds.

use super::{FineTuneConfig, PipelineError};
use crate::nn::{self, Dataset, LayerSpec, NetworkModel, TrainConfig};
use crate::raster::Tensor;

/// Replaces the terminal dense layer of `base` with a freshly initialized
/// head sized for the dataset's classes, then trains
/// `cfg.initial_iterations` steps with the first `cfg.freeze_prefix` layers
/// held bitwise fixed. Returns the tuned model and its loss history.
pub fn finetune(
    base: &NetworkModel,
    train: &Dataset,
    cfg: &FineTuneConfig,
) -> Result<(NetworkModel, Vec<f64>), PipelineError> {
    cfg.validate()?;
    if train.class_labels.len() != cfg.head_classes {
        return Err(PipelineError::Validation(format!(
            "head_classes is {} but the dataset has {} classes",
            cfg.head_classes,
            train.class_labels.len()
        )));
    }
    let mut model = replace_head(base, &train.class_labels, cfg.train_config.seed)?;
    let tc = TrainConfig {
        iterations: cfg.initial_iterations,
        ..cfg.train_config
    };
    let history = nn::train_with_frozen_prefix(&mut model, train, &tc, cfg.freeze_prefix)?;
    Ok((model, history))
}

/// Augments the training set with reviewed examples and trains
/// `cfg.bootstrap_iterations` further steps from the given model.
pub fn bootstrap_round(
    model: &NetworkModel,
    train: &Dataset,
    reviewed: &[(Tensor, usize)],
    cfg: &FineTuneConfig,
) -> Result<BootstrapOutcome, PipelineError> {
    cfg.validate()?;
    if reviewed.is_empty() {
        return Err(PipelineError::Validation(
            "bootstrap round requires at least one reviewed example".into(),
        ));
    }
    let mut examples = train.examples.clone();
    examples.extend(reviewed.iter().cloned());
    let augmented = Dataset::new(examples, train.class_labels.clone()).map_err(PipelineError::Net)?;
    let mut tuned = model.clone();
    let tc = TrainConfig {
        iterations: cfg.bootstrap_iterations,
        ..cfg.train_config
    };
    let history = nn::train_with_frozen_prefix(&mut tuned, &augmented, &tc, cfg.freeze_prefix)?;
    Ok(BootstrapOutcome {
        model: tuned,
        loss_history: history,
        original_examples: train.examples.len(),
        reviewed_examples: reviewed.len(),
        augmented_examples: augmented.examples.len(),
    })
}

#[derive(Debug)]
pub struct BootstrapOutcome {
    pub model: NetworkModel,
    pub loss_history: Vec<f64>,
    pub original_examples: usize,
    pub reviewed_examples: usize,
    pub augmented_examples: usize,
}

/// Fresh seeded head, everything else copied bit for bit from `base`.
fn replace_head(
    base: &NetworkModel,
    class_labels: &[String],
    seed: u64,
) -> Result<NetworkModel, PipelineError> {
    let mut specs = base.layers().to_vec();
    let head_index = specs.len().checked_sub(2).ok_or_else(|| {
        PipelineError::Validation("model is too small to carry a dense head".into())
    })?;
    let LayerSpec::Dense { in_units, .. } = specs[head_index] else {
        return Err(PipelineError::Validation(format!(
            "layer before the softmax is {}, not a replaceable dense head",
            specs[head_index].name()
        )));
    };
    specs[head_index] = LayerSpec::Dense {
        in_units,
        out_units: class_labels.len(),
    };
    let mut model =
        NetworkModel::new(base.input_shape(), specs, class_labels.to_vec(), seed)?;
    for i in 0..model.params().len() {
        if i != head_index {
            model.params_mut()[i] = base.params()[i].clone();
        }
    }
    Ok(model)
}
