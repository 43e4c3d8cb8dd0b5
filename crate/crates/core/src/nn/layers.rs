//! Per-layer forward and backward arithmetic on flat `f64` buffers.
//!
//! Buffers are indexed `[channel][row][col]` row-major for spatial shapes.
//! Conv weights are `[out_ch][in_ch][ky][kx]`, dense weights `[out][in]`.

use super::{LayerParams, LayerSpec, Shape};

pub(crate) fn forward_layer(
    spec: &LayerSpec,
    params: &LayerParams,
    input: &[f64],
    in_shape: Shape,
    out_shape: Shape,
) -> Vec<f64> {
    match *spec {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        } => {
            let Shape::Spatial { h, w, .. } = in_shape else {
                unreachable!("validated at construction")
            };
            let Shape::Spatial { h: oh, w: ow, .. } = out_shape else {
                unreachable!()
            };
            let mut out = vec![0.0; out_channels * oh * ow];
            for oc in 0..out_channels {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = params.bias[oc];
                        for ic in 0..in_channels {
                            for ky in 0..kernel {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..kernel {
                                    let ix = (ox * stride + kx) as isize - padding as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let wv = params.weights
                                        [((oc * in_channels + ic) * kernel + ky) * kernel + kx];
                                    acc += wv * input[(ic * h + iy as usize) * w + ix as usize];
                                }
                            }
                        }
                        out[(oc * oh + oy) * ow + ox] = acc;
                    }
                }
            }
            out
        }
        LayerSpec::Relu => input.iter().map(|&v| v.max(0.0)).collect(),
        LayerSpec::MaxPool { window, stride } => {
            let Shape::Spatial { c, h, w } = in_shape else {
                unreachable!()
            };
            let Shape::Spatial { h: oh, w: ow, .. } = out_shape else {
                unreachable!()
            };
            let mut out = vec![0.0; c * oh * ow];
            for ch in 0..c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = f64::NEG_INFINITY;
                        for ky in 0..window {
                            for kx in 0..window {
                                let v = input[(ch * h + oy * stride + ky) * w + ox * stride + kx];
                                if v > best {
                                    best = v;
                                }
                            }
                        }
                        out[(ch * oh + oy) * ow + ox] = best;
                    }
                }
            }
            out
        }
        LayerSpec::Flatten => input.to_vec(),
        LayerSpec::Dense { in_units, out_units } => {
            let mut out = vec![0.0; out_units];
            for (o, slot) in out.iter_mut().enumerate() {
                let row = &params.weights[o * in_units..(o + 1) * in_units];
                let mut acc = params.bias[o];
                for (wv, xv) in row.iter().zip(input) {
                    acc += wv * xv;
                }
                *slot = acc;
            }
            out
        }
        LayerSpec::Softmax => {
            let max = input.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = input.iter().map(|&v| (v - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            exps.iter().map(|&e| e / total).collect()
        }
    }
}

/// Backward pass of one layer (softmax excluded; its gradient is fused with
/// the cross-entropy loss by the caller). `delta` is d(loss)/d(output);
/// returns d(loss)/d(input) and accumulates parameter gradients into `grad`.
pub(crate) fn backward_layer(
    spec: &LayerSpec,
    params: &LayerParams,
    input: &[f64],
    delta: &[f64],
    in_shape: Shape,
    out_shape: Shape,
    grad: &mut LayerParams,
) -> Vec<f64> {
    match *spec {
        LayerSpec::Conv {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        } => {
            let Shape::Spatial { h, w, .. } = in_shape else {
                unreachable!()
            };
            let Shape::Spatial { h: oh, w: ow, .. } = out_shape else {
                unreachable!()
            };
            let mut dinput = vec![0.0; input.len()];
            for oc in 0..out_channels {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let d = delta[(oc * oh + oy) * ow + ox];
                        grad.bias[oc] += d;
                        for ic in 0..in_channels {
                            for ky in 0..kernel {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for kx in 0..kernel {
                                    let ix = (ox * stride + kx) as isize - padding as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let widx =
                                        ((oc * in_channels + ic) * kernel + ky) * kernel + kx;
                                    let iidx = (ic * h + iy as usize) * w + ix as usize;
                                    grad.weights[widx] += d * input[iidx];
                                    dinput[iidx] += d * params.weights[widx];
                                }
                            }
                        }
                    }
                }
            }
            dinput
        }
        LayerSpec::Relu => input
            .iter()
            .zip(delta)
            .map(|(&x, &d)| if x > 0.0 { d } else { 0.0 })
            .collect(),
        LayerSpec::MaxPool { window, stride } => {
            let Shape::Spatial { c, h, w } = in_shape else {
                unreachable!()
            };
            let Shape::Spatial { h: oh, w: ow, .. } = out_shape else {
                unreachable!()
            };
            let mut dinput = vec![0.0; input.len()];
            for ch in 0..c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        // route to the first maximum in scan order; ties are
                        // resolved the same way on every pass
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0;
                        for ky in 0..window {
                            for kx in 0..window {
                                let idx =
                                    (ch * h + oy * stride + ky) * w + ox * stride + kx;
                                if input[idx] > best {
                                    best = input[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        dinput[best_idx] += delta[(ch * oh + oy) * ow + ox];
                    }
                }
            }
            dinput
        }
        LayerSpec::Flatten => delta.to_vec(),
        LayerSpec::Dense { in_units, out_units } => {
            let mut dinput = vec![0.0; in_units];
            for o in 0..out_units {
                let d = delta[o];
                grad.bias[o] += d;
                let row = &params.weights[o * in_units..(o + 1) * in_units];
                let grow = &mut grad.weights[o * in_units..(o + 1) * in_units];
                for i in 0..in_units {
                    grow[i] += d * input[i];
                    dinput[i] += d * row[i];
                }
            }
            dinput
        }
        LayerSpec::Softmax => unreachable!("softmax gradient is fused with the loss"),
    }
}
