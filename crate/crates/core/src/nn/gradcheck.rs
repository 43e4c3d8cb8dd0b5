//! Central-difference verification of the analytic gradients.

use super::train::{backward, PROB_FLOOR};
use super::{NetError, NetworkModel};
use crate::raster::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Above this many parameters only a seeded random subsample is checked.
const SUBSAMPLE_LIMIT: usize = 10_000;
/// Seed for the subsample draw; fixed so reports are reproducible.
const SUBSAMPLE_SEED: u64 = 0x9e3779b9;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error over all checked parameters.
    pub max_rel_err: f64,
    /// Number of parameters actually perturbed.
    pub checked: usize,
}

fn batch_loss(model: &NetworkModel, batch: &[(Tensor, usize)]) -> Result<f64, NetError> {
    let mut total = 0.0;
    for (input, label) in batch {
        let probs = super::train::forward(model, input)?;
        total += -(probs.data()[*label].max(PROB_FLOOR)).ln();
    }
    Ok(total / batch.len() as f64)
}

/// Compares the analytic batch gradient against `(L(w + eps) - L(w - eps)) / 2 eps`
/// for every parameter (or a seeded subsample of 10,000 on large models).
/// Relative error is `|analytic - fd| / max(|analytic|, |fd|, 1e-8)`.
/// Perturbations are applied in full `f64`, bypassing the `f32` storage grid.
pub fn gradient_check(
    model: &NetworkModel,
    batch: &[(Tensor, usize)],
    epsilon: f64,
) -> Result<GradCheckReport, NetError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(NetError::BadConfig(format!(
            "epsilon must be a positive finite number, got {epsilon}"
        )));
    }
    if batch.is_empty() {
        return Err(NetError::EmptyBatch);
    }
    let (_, analytic) = backward(model, batch)?;

    // (layer, parameter offset) with bias entries following the weights
    let mut positions: Vec<(usize, usize)> = Vec::new();
    for (li, p) in model.params().iter().enumerate() {
        for off in 0..p.len() {
            positions.push((li, off));
        }
    }
    if positions.len() > SUBSAMPLE_LIMIT {
        let mut rng = ChaCha8Rng::seed_from_u64(SUBSAMPLE_SEED);
        let picked = rand::seq::index::sample(&mut rng, positions.len(), SUBSAMPLE_LIMIT);
        let mut subset: Vec<(usize, usize)> = picked.iter().map(|i| positions[i]).collect();
        subset.sort_unstable();
        positions = subset;
    }

    let mut scratch = model.clone();
    let mut max_rel_err = 0.0f64;
    for &(li, off) in &positions {
        let read = |p: &super::LayerParams| {
            let nw = p.weights.len();
            if off < nw {
                p.weights[off]
            } else {
                p.bias[off - nw]
            }
        };
        let original = read(&model.params()[li]);
        let write = |m: &mut NetworkModel, v: f64| {
            let p = &mut m.params_mut()[li];
            let nw = p.weights.len();
            if off < nw {
                p.weights[off] = v;
            } else {
                p.bias[off - nw] = v;
            }
        };
        write(&mut scratch, original + epsilon);
        let plus = batch_loss(&scratch, batch)?;
        write(&mut scratch, original - epsilon);
        let minus = batch_loss(&scratch, batch)?;
        write(&mut scratch, original);

        let fd = (plus - minus) / (2.0 * epsilon);
        let a = read(&analytic.layers[li]);
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
        if rel > max_rel_err {
            max_rel_err = rel;
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        checked: positions.len(),
    })
}
