//! On-disk model format.
//!
//! Little-endian binary: magic `PHSN`, format version, input shape, layer
//! list, class labels, then per-layer weight and bias arrays as `f32`.
//! In-memory weights always sit on the `f32` grid (enforced at init and
//! after every optimizer step), so a save/load round trip is bitwise exact.

use super::{LayerParams, LayerSpec, NetError, NetworkModel};
use std::fs;
use std::path::Path;

const MAGIC: [u8; 4] = *b"PHSN";
const VERSION: u32 = 1;

const TAG_CONV: u8 = 0;
const TAG_RELU: u8 = 1;
const TAG_MAXPOOL: u8 = 2;
const TAG_FLATTEN: u8 = 3;
const TAG_DENSE: u8 = 4;
const TAG_SOFTMAX: u8 = 5;

pub fn save_model(model: &NetworkModel, path: &Path) -> Result<(), NetError> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in model.input_shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for spec in model.layers() {
        match *spec {
            LayerSpec::Conv {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                out.push(TAG_CONV);
                for v in [in_channels, out_channels, kernel, stride, padding] {
                    out.extend_from_slice(&(v as u32).to_le_bytes());
                }
            }
            LayerSpec::Relu => out.push(TAG_RELU),
            LayerSpec::MaxPool { window, stride } => {
                out.push(TAG_MAXPOOL);
                for v in [window, stride] {
                    out.extend_from_slice(&(v as u32).to_le_bytes());
                }
            }
            LayerSpec::Flatten => out.push(TAG_FLATTEN),
            LayerSpec::Dense { in_units, out_units } => {
                out.push(TAG_DENSE);
                for v in [in_units, out_units] {
                    out.extend_from_slice(&(v as u32).to_le_bytes());
                }
            }
            LayerSpec::Softmax => out.push(TAG_SOFTMAX),
        }
    }
    out.extend_from_slice(&(model.class_labels().len() as u32).to_le_bytes());
    for label in model.class_labels() {
        out.extend_from_slice(&(label.len() as u32).to_le_bytes());
        out.extend_from_slice(label.as_bytes());
    }
    for params in model.params() {
        out.extend_from_slice(&(params.weights.len() as u32).to_le_bytes());
        out.extend_from_slice(&(params.bias.len() as u32).to_le_bytes());
        for &w in params.weights.iter().chain(params.bias.iter()) {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| NetError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn fail(&self, msg: impl Into<String>) -> NetError {
        NetError::Format {
            path: self.path.display().to_string(),
            msg: msg.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], NetError> {
        if self.pos + n > self.bytes.len() {
            return Err(self.fail(format!("unexpected end of file while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, NetError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32, NetError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f32_array(&mut self, n: usize, what: &str) -> Result<Vec<f64>, NetError> {
        let b = self.take(4 * n, what)?;
        Ok(b.chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

pub fn load_model(path: &Path) -> Result<NetworkModel, NetError> {
    let bytes = fs::read(path).map_err(|e| NetError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.fail("bad magic; not a model file"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.fail(format!("unsupported format version {version}")));
    }
    let mut shape = [0usize; 3];
    for (d, what) in shape.iter_mut().zip(["channels", "height", "width"]) {
        *d = r.u32(what)? as usize;
    }
    let n_layers = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let tag = r.u8("layer tag")?;
        let spec = match tag {
            TAG_CONV => {
                let mut f = [0usize; 5];
                for v in &mut f {
                    *v = r.u32("conv field")? as usize;
                }
                LayerSpec::Conv {
                    in_channels: f[0],
                    out_channels: f[1],
                    kernel: f[2],
                    stride: f[3],
                    padding: f[4],
                }
            }
            TAG_RELU => LayerSpec::Relu,
            TAG_MAXPOOL => LayerSpec::MaxPool {
                window: r.u32("pool window")? as usize,
                stride: r.u32("pool stride")? as usize,
            },
            TAG_FLATTEN => LayerSpec::Flatten,
            TAG_DENSE => LayerSpec::Dense {
                in_units: r.u32("dense fan-in")? as usize,
                out_units: r.u32("dense fan-out")? as usize,
            },
            TAG_SOFTMAX => LayerSpec::Softmax,
            other => return Err(r.fail(format!("unknown layer tag {other} at layer {i}"))),
        };
        layers.push(spec);
    }
    let n_classes = r.u32("class count")? as usize;
    let mut labels = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let len = r.u32("label length")? as usize;
        let raw = r.take(len, "label text")?;
        let s = std::str::from_utf8(raw).map_err(|_| r.fail("class label is not UTF-8"))?;
        labels.push(s.to_string());
    }
    let mut params = Vec::with_capacity(n_layers);
    for (i, spec) in layers.iter().enumerate() {
        let w_len = r.u32("weight count")? as usize;
        let b_len = r.u32("bias count")? as usize;
        let (want_w, want_b) = super::param_counts(spec);
        if w_len != want_w || b_len != want_b {
            return Err(r.fail(format!(
                "layer {i} ({}) stores {w_len} weights and {b_len} biases \
                 but its shape needs {want_w} and {want_b}",
                spec.name()
            )));
        }
        let weights = r.f32_array(w_len, "weights")?;
        let bias = r.f32_array(b_len, "biases")?;
        params.push(LayerParams { weights, bias });
    }
    if r.pos != bytes.len() {
        return Err(r.fail(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    NetworkModel::from_parts(shape, layers, labels, params)
}

/// Writes the per-iteration training losses as a two-column CSV.
pub fn write_loss_history(history: &[f64], path: &Path) -> Result<(), NetError> {
    let mut out = String::from("iteration,loss\n");
    for (i, loss) in history.iter().enumerate() {
        out.push_str(&format!("{i},{loss}\n"));
    }
    fs::write(path, out).map_err(|e| NetError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{train, Dataset, TrainConfig};
    use crate::raster::Tensor;

    fn sample_model(seed: u64) -> NetworkModel {
        NetworkModel::new(
            [1, 8, 8],
            crate::nn::tests::tiny_layers(4),
            vec!["w".into(), "x".into(), "y".into(), "z".into()],
            seed,
        )
        .unwrap()
    }

    #[test]
    fn fresh_model_round_trips_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let model = sample_model(5);
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.input_shape(), model.input_shape());
        assert_eq!(back.layers(), model.layers());
        assert_eq!(back.class_labels(), model.class_labels());
        assert_eq!(back.params(), model.params());
    }

    #[test]
    fn trained_model_round_trips_and_predicts_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let mut model = sample_model(9);
        let examples: Vec<(Tensor, usize)> = (0..8)
            .map(|i| {
                let data: Vec<f64> = (0..64).map(|j| ((i * 64 + j) as f64 * 0.13).sin().abs()).collect();
                (Tensor::new(vec![1, 8, 8], data).unwrap(), i % 4)
            })
            .collect();
        let data = Dataset::new(
            examples.clone(),
            vec!["w".into(), "x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        let cfg = TrainConfig {
            iterations: 12,
            batch_size: 4,
            ..TrainConfig::default()
        };
        train(&mut model, &data, &cfg).unwrap();
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.params(), model.params());
        for (input, _) in &examples {
            let a = crate::nn::forward(&model, input).unwrap();
            let b = crate::nn::forward(&back, input).unwrap();
            let bits_a: Vec<u64> = a.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        match load_model(&path) {
            Err(NetError::Format { msg, .. }) => assert!(msg.contains("magic"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_names_the_missing_piece() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let model = sample_model(2);
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        match load_model(&path) {
            Err(NetError::Format { msg, .. }) => {
                assert!(msg.contains("unexpected end"), "{msg}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let model = sample_model(2);
        save_model(&model, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99;
        std::fs::write(&path, &bytes).unwrap();
        match load_model(&path) {
            Err(NetError::Format { msg, .. }) => assert!(msg.contains("version 99"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn weight_count_mismatch_names_the_layer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let model = NetworkModel::new(
            [1, 1, 2],
            vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    in_units: 2,
                    out_units: 2,
                },
                LayerSpec::Softmax,
            ],
            vec!["a".into(), "b".into()],
            1,
        )
        .unwrap();
        save_model(&model, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // header 24 B, tags flatten(1) + dense(9) + softmax(1), class count 4,
        // two labels of 5 B each, flatten w/b counts 8 B -> dense w_len at 57
        let off = 24 + 11 + 4 + 10 + 8;
        assert_eq!(
            u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()),
            4
        );
        bytes[off] = 5;
        std::fs::write(&path, &bytes).unwrap();
        match load_model(&path) {
            Err(NetError::Format { msg, .. }) => {
                assert!(msg.contains("layer 1") && msg.contains("dense"), "{msg}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let model = sample_model(3);
        save_model(&model, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0, 0, 0]);
        std::fs::write(&path, &bytes).unwrap();
        match load_model(&path) {
            Err(NetError::Format { msg, .. }) => assert!(msg.contains("trailing"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn loss_history_csv_lists_iterations_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loss.csv");
        write_loss_history(&[1.5, 0.75, 0.5], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "iteration,loss\n0,1.5\n1,0.75\n2,0.5\n");
    }
}
