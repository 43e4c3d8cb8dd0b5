//! Loss, batch gradients, the SGD loop and prediction.

use super::layers::{backward_layer, forward_layer};
use super::{Dataset, Gradients, LayerParams, NetError, NetworkModel, TrainConfig};
use crate::raster::Tensor;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Probabilities are clamped to at least this before taking the log, so a
/// confidently wrong prediction yields a large but finite loss.
pub const PROB_FLOOR: f64 = 1e-12;

/// All layer inputs plus the final output for one example.
fn forward_trace(model: &NetworkModel, input: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = Vec::with_capacity(model.layers().len() + 1);
    acts.push(input.to_vec());
    for (i, spec) in model.layers().iter().enumerate() {
        let out = forward_layer(
            spec,
            &model.params()[i],
            acts.last().unwrap(),
            model.shapes()[i],
            model.shapes()[i + 1],
        );
        acts.push(out);
    }
    acts
}

/// Runs the network on one input and returns the class probabilities.
/// The output sums to 1 (within 1e-9) with non-negative entries.
pub fn forward(model: &NetworkModel, input: &Tensor) -> Result<Tensor, NetError> {
    model.check_input(input)?;
    let trace = forward_trace(model, input.data());
    let out = trace.into_iter().next_back().unwrap();
    Tensor::new(model.output_dims(), out)
        .map_err(|_| NetError::NonFinite("forward activations"))
}

/// Mean cross-entropy `-(1/n) sum ln p(true class)` over a batch of
/// probability vectors, with probabilities clamped to [`PROB_FLOOR`].
pub fn cross_entropy(probabilities: &[Tensor], labels: &[usize]) -> Result<f64, NetError> {
    if probabilities.is_empty() {
        return Err(NetError::EmptyBatch);
    }
    if probabilities.len() != labels.len() {
        return Err(NetError::Validation(format!(
            "{} probability vectors for {} labels",
            probabilities.len(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (p, &label) in probabilities.iter().zip(labels) {
        let classes = p.len();
        if label >= classes {
            return Err(NetError::BadLabel { label, classes });
        }
        total += -(p.data()[label].max(PROB_FLOOR)).ln();
    }
    Ok(total / probabilities.len() as f64)
}

fn zero_gradients(model: &NetworkModel) -> Gradients {
    Gradients {
        layers: model.params().iter().map(LayerParams::zeros_like).collect(),
    }
}

pub(crate) fn backward_refs(
    model: &NetworkModel,
    batch: &[(&Tensor, usize)],
) -> Result<(f64, Gradients), NetError> {
    if batch.is_empty() {
        return Err(NetError::EmptyBatch);
    }
    let classes = model.num_classes();
    let mut grads = zero_gradients(model);
    let mut loss_sum = 0.0;
    let last = model.layers().len() - 1; // the softmax layer
    for &(input, label) in batch {
        model.check_input(input)?;
        if label >= classes {
            return Err(NetError::BadLabel { label, classes });
        }
        let trace = forward_trace(model, input.data());
        let probs = &trace[last + 1];
        if probs.iter().any(|v| !v.is_finite()) {
            // NaN would otherwise vanish into the probability clamp below
            return Err(NetError::NonFinite("forward activations"));
        }
        loss_sum += -(probs[label].max(PROB_FLOOR)).ln();
        // gradient of the clamped cross-entropy through the softmax
        let mut delta: Vec<f64> = probs.to_vec();
        delta[label] -= 1.0;
        for i in (0..last).rev() {
            delta = backward_layer(
                &model.layers()[i],
                &model.params()[i],
                &trace[i],
                &delta,
                model.shapes()[i],
                model.shapes()[i + 1],
                &mut grads.layers[i],
            );
        }
    }
    let scale = 1.0 / batch.len() as f64;
    for layer in &mut grads.layers {
        for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *v *= scale;
        }
    }
    Ok((loss_sum * scale, grads))
}

/// Mean loss over the batch and its gradient with respect to every
/// parameter, traversing layers in reverse.
pub fn backward(
    model: &NetworkModel,
    batch: &[(Tensor, usize)],
) -> Result<(f64, Gradients), NetError> {
    let refs: Vec<(&Tensor, usize)> = batch.iter().map(|(t, l)| (t, *l)).collect();
    backward_refs(model, &refs)
}

/// SGD with momentum. Velocity persists across steps:
/// `v <- momentum * v - lr * (grad + weight_decay * w)`, then `w <- w + v`.
/// Updated weights are rounded to `f32` precision, the storage grid of the
/// model file format; velocity stays full `f64`.
pub struct SgdOptimizer {
    velocity: Vec<LayerParams>,
}

impl SgdOptimizer {
    pub fn new(model: &NetworkModel) -> Self {
        SgdOptimizer {
            velocity: model.params().iter().map(LayerParams::zeros_like).collect(),
        }
    }

    pub fn step(
        &mut self,
        model: &mut NetworkModel,
        grads: &Gradients,
        config: &TrainConfig,
    ) -> Result<(), NetError> {
        self.step_frozen(model, grads, config, 0)
    }

    pub(crate) fn step_frozen(
        &mut self,
        model: &mut NetworkModel,
        grads: &Gradients,
        config: &TrainConfig,
        freeze_prefix: usize,
    ) -> Result<(), NetError> {
        config.validate()?;
        model.check_gradients(grads)?;
        if self.velocity.len() != model.params().len() {
            return Err(NetError::GradientShape(
                "optimizer was built for a different model".into(),
            ));
        }
        let (lr, m, wd) = (config.learning_rate, config.momentum, config.weight_decay);
        for (li, params) in model.params_mut().iter_mut().enumerate() {
            if li < freeze_prefix {
                continue;
            }
            let vel = &mut self.velocity[li];
            let g = &grads.layers[li];
            for ((w, v), gv) in params
                .weights
                .iter_mut()
                .zip(vel.weights.iter_mut())
                .chain(params.bias.iter_mut().zip(vel.bias.iter_mut()))
                .zip(g.weights.iter().chain(g.bias.iter()))
            {
                *v = m * *v - lr * (gv + wd * *w);
                *w = (*w + *v) as f32 as f64;
            }
        }
        Ok(())
    }
}

/// Trains in place for `config.iterations` mini-batch steps and returns the
/// per-iteration loss history. Batches come from a seeded shuffle that is
/// redrawn each epoch, so a fixed seed reproduces the run bit for bit.
pub fn train(
    model: &mut NetworkModel,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<Vec<f64>, NetError> {
    train_with_frozen_prefix(model, data, config, 0)
}

pub(crate) fn train_with_frozen_prefix(
    model: &mut NetworkModel,
    data: &Dataset,
    config: &TrainConfig,
    freeze_prefix: usize,
) -> Result<Vec<f64>, NetError> {
    config.validate()?;
    if data.is_empty() {
        return Err(NetError::Validation("training dataset is empty".into()));
    }
    if data.class_labels != model.class_labels() {
        return Err(NetError::Validation(format!(
            "dataset classes {:?} do not match model classes {:?}",
            data.class_labels,
            model.class_labels()
        )));
    }
    if freeze_prefix > model.layers().len() {
        return Err(NetError::Validation(format!(
            "freeze prefix {} exceeds {} layers",
            freeze_prefix,
            model.layers().len()
        )));
    }
    for (input, label) in &data.examples {
        model.check_input(input)?;
        if *label >= model.num_classes() {
            return Err(NetError::BadLabel {
                label: *label,
                classes: model.num_classes(),
            });
        }
    }
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0usize;
    let mut optimizer = SgdOptimizer::new(model);
    let mut history = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        if cursor >= n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let end = (cursor + config.batch_size).min(n);
        let batch: Vec<(&Tensor, usize)> = order[cursor..end]
            .iter()
            .map(|&i| (&data.examples[i].0, data.examples[i].1))
            .collect();
        cursor = end;
        let (loss, grads) = match backward_refs(model, &batch) {
            Ok(r) => r,
            Err(NetError::NonFinite(_)) => return Err(NetError::Diverged { iteration }),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(NetError::Diverged { iteration });
        }
        history.push(loss);
        optimizer.step_frozen(model, &grads, config, freeze_prefix)?;
    }
    Ok(history)
}

/// Argmax prediction; ties resolve to the lowest class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    pub confidence: f64,
}

pub fn predict(model: &NetworkModel, input: &Tensor) -> Result<Prediction, NetError> {
    let probs = forward(model, input)?;
    let mut best = 0usize;
    for (i, &p) in probs.data().iter().enumerate() {
        if p > probs.data()[best] {
            best = i;
        }
    }
    Ok(Prediction {
        class_index: best,
        label: model.class_labels()[best].clone(),
        confidence: probs.data()[best],
    })
}
