//! A small convolutional classifier: explicit forward/backward passes over
//! `f64` buffers, SGD with momentum, and perturbation-based gradient
//! verification.
//!
//! Networks are feed-forward stacks of conv / relu / maxpool / flatten /
//! dense layers terminated by a single softmax. Layer output shapes are
//! derived once at construction, so every later operation can assume the
//! stack composes. All arithmetic runs in `f64`, but weights are kept on the
//! `f32` grid (at init and after every optimizer step) so that the `f32`
//! on-disk format (see [`save_model`]) round-trips bit for bit.

mod gradcheck;
mod io;
mod layers;
mod train;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use io::{load_model, save_model, write_loss_history};
pub use train::{backward, cross_entropy, forward, predict, train, Prediction, SgdOptimizer};
pub(crate) use train::train_with_frozen_prefix;

use crate::raster::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("{0}")]
    Validation(String),
    #[error("layer {index} ({layer}): {msg}")]
    Compose {
        index: usize,
        layer: &'static str,
        msg: String,
    },
    #[error("input shape {got:?} does not match model input {expected:?}")]
    InputShape { expected: Vec<usize>, got: Vec<usize> },
    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("training diverged at iteration {iteration}: loss is not finite")]
    Diverged { iteration: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("gradient layout does not match model: {0}")]
    GradientShape(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file {path}: {msg}")]
    Format { path: String, msg: String },
}

/// The four photo-demographic classes the pipeline works with, in class
/// index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RaceLabel {
    White,
    AfricanAmerican,
    Asian,
    Hispanic,
}

impl RaceLabel {
    pub const ALL: [RaceLabel; 4] = [
        RaceLabel::White,
        RaceLabel::AfricanAmerican,
        RaceLabel::Asian,
        RaceLabel::Hispanic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RaceLabel::White => "White",
            RaceLabel::AfricanAmerican => "AfricanAmerican",
            RaceLabel::Asian => "Asian",
            RaceLabel::Hispanic => "Hispanic",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn from_index(i: usize) -> Option<RaceLabel> {
        RaceLabel::ALL.get(i).copied()
    }

    /// Class label strings in index order, for building 4-class models.
    pub fn class_labels() -> Vec<String> {
        RaceLabel::ALL.iter().map(|l| l.as_str().to_string()).collect()
    }
}

impl std::fmt::Display for RaceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RaceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RaceLabel::ALL
            .iter()
            .find(|l| l.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown race label `{s}`"))
    }
}

/// One layer of the network. Spatial layers carry `[channels, height,
/// width]` data; `Flatten` hands the stack over to the dense head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool {
        window: usize,
        stride: usize,
    },
    Flatten,
    Dense {
        in_units: usize,
        out_units: usize,
    },
    Softmax,
}

impl LayerSpec {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Softmax => "softmax",
        }
    }
}

/// Shape of the data flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Spatial { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Spatial { c, h, w } => c * h * w,
            Shape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Spatial { c, h, w } => vec![c, h, w],
            Shape::Flat(n) => vec![n],
        }
    }
}

fn compose(index: usize, spec: &LayerSpec, input: Shape) -> Result<Shape, NetError> {
    let fail = |msg: String| {
        Err(NetError::Compose {
            index,
            layer: spec.name(),
            msg,
        })
    };
    match *spec {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        } => {
            if kernel == 0 || stride == 0 || out_channels == 0 {
                return fail("kernel, stride and out_channels must be positive".into());
            }
            let Shape::Spatial { c, h, w } = input else {
                return fail(format!("needs spatial input, got {input:?}"));
            };
            if c != in_channels {
                return fail(format!("expects {in_channels} channels, got {c}"));
            }
            if h + 2 * padding < kernel || w + 2 * padding < kernel {
                return fail(format!(
                    "kernel {kernel} exceeds padded input {h}x{w} (padding {padding})"
                ));
            }
            Ok(Shape::Spatial {
                c: out_channels,
                h: (h + 2 * padding - kernel) / stride + 1,
                w: (w + 2 * padding - kernel) / stride + 1,
            })
        }
        LayerSpec::Relu => Ok(input),
        LayerSpec::MaxPool { window, stride } => {
            if window == 0 || stride == 0 {
                return fail("window and stride must be positive".into());
            }
            let Shape::Spatial { c, h, w } = input else {
                return fail(format!("needs spatial input, got {input:?}"));
            };
            if h < window || w < window {
                return fail(format!("window {window} exceeds input {h}x{w}"));
            }
            Ok(Shape::Spatial {
                c,
                h: (h - window) / stride + 1,
                w: (w - window) / stride + 1,
            })
        }
        LayerSpec::Flatten => match input {
            Shape::Spatial { .. } => Ok(Shape::Flat(input.len())),
            Shape::Flat(_) => fail("input is already flat".into()),
        },
        LayerSpec::Dense { in_units, out_units } => {
            if out_units == 0 {
                return fail("out_units must be positive".into());
            }
            let Shape::Flat(n) = input else {
                return fail(format!("needs flat input, got {input:?}; add a flatten layer"));
            };
            if n != in_units {
                return fail(format!("expects {in_units} inputs, got {n}"));
            }
            Ok(Shape::Flat(out_units))
        }
        LayerSpec::Softmax => {
            let Shape::Flat(n) = input else {
                return fail(format!("needs flat input, got {input:?}"));
            };
            Ok(Shape::Flat(n))
        }
    }
}

/// Weights and biases of one layer; both empty for parameter-free layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub(crate) fn empty() -> Self {
        LayerParams {
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }

    pub(crate) fn zeros_like(other: &LayerParams) -> Self {
        LayerParams {
            weights: vec![0.0; other.weights.len()],
            bias: vec![0.0; other.bias.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-layer parameter gradients, congruent with the model's params.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

/// Expected (weights, bias) lengths for one layer spec.
fn param_counts(spec: &LayerSpec) -> (usize, usize) {
    match *spec {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel,
            ..
        } => (out_channels * in_channels * kernel * kernel, out_channels),
        LayerSpec::Dense { in_units, out_units } => (out_units * in_units, out_units),
        _ => (0, 0),
    }
}

/// A validated feed-forward network plus its class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    input_shape: [usize; 3],
    layers: Vec<LayerSpec>,
    shapes: Vec<Shape>, // shapes[0] = input, shapes[i + 1] = output of layer i
    params: Vec<LayerParams>,
    class_labels: Vec<String>,
}

impl NetworkModel {
    /// Builds a model with seeded scaled-uniform weights (bound
    /// `sqrt(6 / fan_in)`, the usual choice ahead of relu) and zero biases.
    /// Weights are rounded to `f32` precision so a freshly initialised model
    /// is bit-identical to itself after a save/load round trip.
    pub fn new(
        input_shape: [usize; 3],
        layers: Vec<LayerSpec>,
        class_labels: Vec<String>,
        seed: u64,
    ) -> Result<Self, NetError> {
        let shapes = Self::validate(input_shape, &layers, &class_labels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = layers
            .iter()
            .map(|spec| {
                let (w_len, b_len) = param_counts(spec);
                let fan_in = match *spec {
                    LayerSpec::Conv {
                        in_channels, kernel, ..
                    } => in_channels * kernel * kernel,
                    LayerSpec::Dense { in_units, .. } => in_units,
                    _ => 0,
                };
                if w_len == 0 {
                    return LayerParams::empty();
                }
                let bound = (6.0 / fan_in as f64).sqrt();
                let weights = (0..w_len)
                    .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound)
                    .map(|w| w as f32 as f64)
                    .collect();
                LayerParams {
                    weights,
                    bias: vec![0.0; b_len],
                }
            })
            .collect();
        Ok(NetworkModel {
            input_shape,
            layers,
            shapes,
            params,
            class_labels,
        })
    }

    /// Assembles a model from existing parameters, validating congruence.
    pub fn from_parts(
        input_shape: [usize; 3],
        layers: Vec<LayerSpec>,
        class_labels: Vec<String>,
        params: Vec<LayerParams>,
    ) -> Result<Self, NetError> {
        let shapes = Self::validate(input_shape, &layers, &class_labels)?;
        if params.len() != layers.len() {
            return Err(NetError::Validation(format!(
                "{} parameter blocks for {} layers",
                params.len(),
                layers.len()
            )));
        }
        for (i, (spec, p)) in layers.iter().zip(&params).enumerate() {
            let (w_len, b_len) = param_counts(spec);
            if p.weights.len() != w_len || p.bias.len() != b_len {
                return Err(NetError::Validation(format!(
                    "layer {i} ({}) expects {w_len}+{b_len} parameters, got {}+{}",
                    spec.name(),
                    p.weights.len(),
                    p.bias.len()
                )));
            }
            if let Some(bad) = p
                .weights
                .iter()
                .chain(&p.bias)
                .find(|v| !v.is_finite())
            {
                return Err(NetError::Validation(format!(
                    "layer {i} holds non-finite parameter {bad}"
                )));
            }
        }
        Ok(NetworkModel {
            input_shape,
            layers,
            shapes,
            params,
            class_labels,
        })
    }

    fn validate(
        input_shape: [usize; 3],
        layers: &[LayerSpec],
        class_labels: &[String],
    ) -> Result<Vec<Shape>, NetError> {
        if input_shape.iter().any(|&d| d == 0) {
            return Err(NetError::Validation(format!(
                "input shape {input_shape:?} has a zero dimension"
            )));
        }
        if layers.is_empty() {
            return Err(NetError::Validation("model has no layers".into()));
        }
        match layers.last() {
            Some(LayerSpec::Softmax) => {}
            _ => {
                return Err(NetError::Validation(
                    "last layer must be softmax".into(),
                ))
            }
        }
        let softmax_count = layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::Softmax))
            .count();
        if softmax_count != 1 {
            return Err(NetError::Validation(format!(
                "exactly one softmax allowed, found {softmax_count}"
            )));
        }
        let mut shapes = Vec::with_capacity(layers.len() + 1);
        shapes.push(Shape::Spatial {
            c: input_shape[0],
            h: input_shape[1],
            w: input_shape[2],
        });
        for (i, spec) in layers.iter().enumerate() {
            let next = compose(i, spec, *shapes.last().unwrap())?;
            shapes.push(next);
        }
        let out = shapes.last().unwrap();
        if class_labels.is_empty() {
            return Err(NetError::Validation("class label list is empty".into()));
        }
        if out.len() != class_labels.len() {
            return Err(NetError::Validation(format!(
                "network emits {} values but {} class labels were given",
                out.len(),
                class_labels.len()
            )));
        }
        Ok(shapes)
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [LayerParams] {
        &mut self.params
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    pub(crate) fn check_input(&self, input: &Tensor) -> Result<(), NetError> {
        let expected: Vec<usize> = self.input_shape.to_vec();
        if input.shape() != expected.as_slice() {
            return Err(NetError::InputShape {
                expected,
                got: input.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_gradients(&self, grads: &Gradients) -> Result<(), NetError> {
        if grads.layers.len() != self.params.len() {
            return Err(NetError::GradientShape(format!(
                "{} gradient blocks for {} layers",
                grads.layers.len(),
                self.params.len()
            )));
        }
        for (i, (g, p)) in grads.layers.iter().zip(&self.params).enumerate() {
            if g.weights.len() != p.weights.len() || g.bias.len() != p.bias.len() {
                return Err(NetError::GradientShape(format!(
                    "layer {i}: {}+{} gradient values for {}+{} parameters",
                    g.weights.len(),
                    g.bias.len(),
                    p.weights.len(),
                    p.bias.len()
                )));
            }
        }
        Ok(())
    }

    /// Output shape dims of the final layer (always flat).
    pub fn output_dims(&self) -> Vec<usize> {
        self.shapes.last().unwrap().dims()
    }
}

/// Labelled training examples; labels index into `class_labels`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<(Tensor, usize)>,
    pub class_labels: Vec<String>,
}

impl Dataset {
    pub fn new(
        examples: Vec<(Tensor, usize)>,
        class_labels: Vec<String>,
    ) -> Result<Self, NetError> {
        if class_labels.is_empty() {
            return Err(NetError::Validation("class label list is empty".into()));
        }
        for (_, label) in &examples {
            if *label >= class_labels.len() {
                return Err(NetError::BadLabel {
                    label: *label,
                    classes: class_labels.len(),
                });
            }
        }
        Ok(Dataset {
            examples,
            class_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// SGD hyper-parameters. `iterations` counts mini-batch steps, not epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 16,
            iterations: 100,
            seed: 0,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NetError::BadConfig(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(NetError::BadConfig(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(NetError::BadConfig("batch_size must be positive".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(NetError::BadConfig(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_layers(classes: usize) -> Vec<LayerSpec> {
        vec![
            LayerSpec::Conv {
                in_channels: 1,
                out_channels: 4,
                kernel: 3,
                stride: 1,
                padding: 0,
            },
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2, stride: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_units: 4 * 3 * 3,
                out_units: classes,
            },
            LayerSpec::Softmax,
        ]
    }

    #[test]
    fn shapes_compose_through_the_stack() {
        let m = NetworkModel::new(
            [1, 8, 8],
            tiny_layers(2),
            vec!["a".into(), "b".into()],
            1,
        )
        .unwrap();
        assert_eq!(
            m.shapes(),
            &[
                Shape::Spatial { c: 1, h: 8, w: 8 },
                Shape::Spatial { c: 4, h: 6, w: 6 },
                Shape::Spatial { c: 4, h: 6, w: 6 },
                Shape::Spatial { c: 4, h: 3, w: 3 },
                Shape::Flat(36),
                Shape::Flat(2),
                Shape::Flat(2),
            ]
        );
        assert_eq!(m.param_count(), 36 + 4 + 72 + 2);
    }

    #[test]
    fn rejects_misplaced_softmax() {
        let mut layers = tiny_layers(2);
        layers.pop();
        let err = NetworkModel::new([1, 8, 8], layers, vec!["a".into(), "b".into()], 1)
            .unwrap_err();
        assert!(err.to_string().contains("softmax"), "{err}");

        let double = vec![
            LayerSpec::Flatten,
            LayerSpec::Softmax,
            LayerSpec::Softmax,
        ];
        let err = NetworkModel::new([1, 2, 2], double, vec!["a".into(); 4], 1).unwrap_err();
        assert!(err.to_string().contains("exactly one softmax"), "{err}");
    }

    #[test]
    fn rejects_non_composing_shapes() {
        let layers = vec![
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_units: 99,
                out_units: 2,
            },
            LayerSpec::Softmax,
        ];
        match NetworkModel::new([1, 4, 4], layers, vec!["a".into(), "b".into()], 1) {
            Err(NetError::Compose { index, layer, msg }) => {
                assert_eq!((index, layer), (1, "dense"));
                assert!(msg.contains("16"), "{msg}");
            }
            other => panic!("expected compose error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_pool_window_exceeding_input() {
        let layers = vec![
            LayerSpec::MaxPool { window: 5, stride: 1 },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                in_units: 1,
                out_units: 1,
            },
            LayerSpec::Softmax,
        ];
        assert!(matches!(
            NetworkModel::new([1, 4, 4], layers, vec!["a".into()], 1),
            Err(NetError::Compose { index: 0, .. })
        ));
    }

    #[test]
    fn rejects_label_count_mismatch() {
        let err = NetworkModel::new([1, 8, 8], tiny_layers(2), vec!["only".into()], 1)
            .unwrap_err();
        assert!(err.to_string().contains("class labels"), "{err}");
    }

    #[test]
    fn same_seed_same_weights_different_seed_different() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let m1 = NetworkModel::new([1, 8, 8], tiny_layers(2), labels.clone(), 7).unwrap();
        let m2 = NetworkModel::new([1, 8, 8], tiny_layers(2), labels.clone(), 7).unwrap();
        let m3 = NetworkModel::new([1, 8, 8], tiny_layers(2), labels, 8).unwrap();
        assert_eq!(m1.params(), m2.params());
        assert_ne!(m1.params(), m3.params());
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let m = NetworkModel::new(
            [1, 8, 8],
            tiny_layers(2),
            vec!["a".into(), "b".into()],
            42,
        )
        .unwrap();
        let conv_bound = (6.0f64 / 9.0).sqrt();
        assert!(m.params()[0].weights.iter().all(|w| w.abs() <= conv_bound));
        assert!(m.params()[0].bias.iter().all(|&b| b == 0.0));
        let dense_bound = (6.0f64 / 36.0).sqrt();
        assert!(m.params()[4].weights.iter().all(|w| w.abs() <= dense_bound));
    }

    #[test]
    fn from_parts_validates_counts_and_finiteness() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let m = NetworkModel::new([1, 8, 8], tiny_layers(2), labels.clone(), 7).unwrap();
        let mut params = m.params().to_vec();
        params[0].weights.pop();
        assert!(NetworkModel::from_parts([1, 8, 8], tiny_layers(2), labels.clone(), params)
            .is_err());

        let mut params = m.params().to_vec();
        params[4].weights[0] = f64::INFINITY;
        assert!(NetworkModel::from_parts([1, 8, 8], tiny_layers(2), labels, params).is_err());
    }

    #[test]
    fn dataset_rejects_out_of_range_labels() {
        let t = Tensor::zeros(vec![1, 2, 2]);
        let err = Dataset::new(vec![(t, 3)], vec!["a".into(), "b".into()]).unwrap_err();
        assert!(matches!(err, NetError::BadLabel { label: 3, classes: 2 }));
    }

    #[test]
    fn train_config_bounds() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { learning_rate: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { momentum: 1.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { momentum: -0.1, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { weight_decay: -1.0, ..ok }.validate().is_err());
    }

    #[test]
    fn race_label_round_trips() {
        for l in RaceLabel::ALL {
            assert_eq!(l.as_str().parse::<RaceLabel>().unwrap(), l);
            assert_eq!(RaceLabel::from_index(l.index()).unwrap(), l);
        }
        assert!("Martian".parse::<RaceLabel>().is_err());
        assert_eq!(
            RaceLabel::class_labels(),
            vec!["White", "AfricanAmerican", "Asian", "Hispanic"]
        );
    }
}
