//! Primitive layer operations (forward and backward) on flat `f64` buffers.
//!
//! Shapes follow a fixed convention: convolutional tensors are
//! `[channel][row][col]` flattened row-major; batched dense activations are
//! `[sample][unit]`. Every backward function takes the upstream gradient in
//! the same layout as its forward output and returns gradients in the same
//! layouts as its inputs.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Valid (no padding) 3x3 convolution. `input` is `[in_ch][side][side]`,
/// `w` is `[out_ch][in_ch][3][3]`, output is `[out_ch][side-2][side-2]`.
pub fn conv3x3_forward(
    input: &[f64],
    side: usize,
    in_ch: usize,
    w: &[f64],
    b: &[f64],
    out_ch: usize,
) -> Vec<f64> {
    let out_side = side - 2;
    let mut out = vec![0.0f64; out_ch * out_side * out_side];
    for o in 0..out_ch {
        let w_o = &w[o * in_ch * 9..(o + 1) * in_ch * 9];
        let out_plane = &mut out[o * out_side * out_side..(o + 1) * out_side * out_side];
        for i in 0..in_ch {
            let w_k = &w_o[i * 9..i * 9 + 9];
            let plane = &input[i * side * side..(i + 1) * side * side];
            for y in 0..out_side {
                let r0 = &plane[y * side..y * side + side];
                let r1 = &plane[(y + 1) * side..(y + 1) * side + side];
                let r2 = &plane[(y + 2) * side..(y + 2) * side + side];
                let out_row = &mut out_plane[y * out_side..(y + 1) * out_side];
                for x in 0..out_side {
                    out_row[x] += w_k[0] * r0[x]
                        + w_k[1] * r0[x + 1]
                        + w_k[2] * r0[x + 2]
                        + w_k[3] * r1[x]
                        + w_k[4] * r1[x + 1]
                        + w_k[5] * r1[x + 2]
                        + w_k[6] * r2[x]
                        + w_k[7] * r2[x + 1]
                        + w_k[8] * r2[x + 2];
                }
            }
        }
        for v in out_plane.iter_mut() {
            *v += b[o];
        }
    }
    out
}

/// Gradients of [`conv3x3_forward`]: returns `(d_input, d_w, d_b)`.
pub fn conv3x3_backward(
    input: &[f64],
    side: usize,
    in_ch: usize,
    w: &[f64],
    out_ch: usize,
    d_out: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let out_side = side - 2;
    let mut d_input = vec![0.0f64; in_ch * side * side];
    let mut d_w = vec![0.0f64; out_ch * in_ch * 9];
    let mut d_b = vec![0.0f64; out_ch];
    for o in 0..out_ch {
        let d_plane = &d_out[o * out_side * out_side..(o + 1) * out_side * out_side];
        d_b[o] += d_plane.iter().sum::<f64>();
        for i in 0..in_ch {
            let w_k = &w[(o * in_ch + i) * 9..(o * in_ch + i) * 9 + 9];
            let dw_k = &mut d_w[(o * in_ch + i) * 9..(o * in_ch + i) * 9 + 9];
            let plane = &input[i * side * side..(i + 1) * side * side];
            let d_in_plane = &mut d_input[i * side * side..(i + 1) * side * side];
            for y in 0..out_side {
                for x in 0..out_side {
                    let g = d_plane[y * out_side + x];
                    if g == 0.0 {
                        continue;
                    }
                    for ky in 0..3 {
                        let row = (y + ky) * side + x;
                        dw_k[ky * 3] += g * plane[row];
                        dw_k[ky * 3 + 1] += g * plane[row + 1];
                        dw_k[ky * 3 + 2] += g * plane[row + 2];
                        d_in_plane[row] += g * w_k[ky * 3];
                        d_in_plane[row + 1] += g * w_k[ky * 3 + 1];
                        d_in_plane[row + 2] += g * w_k[ky * 3 + 2];
                    }
                }
            }
        }
    }
    (d_input, d_w, d_b)
}

/// Elementwise rectifier.
pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Backward through the rectifier given the pre-activation values.
pub fn relu_backward(d_out: &[f64], pre: &[f64]) -> Vec<f64> {
    d_out
        .iter()
        .zip(pre)
        .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
        .collect()
}

/// 2x2 max pooling with stride 2 over `[ch][side][side]`; odd trailing
/// rows/columns are dropped. Returns the output and the flat input index of
/// each window maximum (first occurrence wins ties) for the backward pass.
pub fn maxpool2_forward(x: &[f64], side: usize, ch: usize) -> (Vec<f64>, Vec<usize>) {
    let out_side = side / 2;
    let mut out = Vec::with_capacity(ch * out_side * out_side);
    let mut argmax = Vec::with_capacity(ch * out_side * out_side);
    for c in 0..ch {
        let base = c * side * side;
        for y in 0..out_side {
            for x_i in 0..out_side {
                let i00 = base + (2 * y) * side + 2 * x_i;
                let candidates = [i00, i00 + 1, i00 + side, i00 + side + 1];
                let mut best = candidates[0];
                for &idx in &candidates[1..] {
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    (out, argmax)
}

/// Backward for max pooling: routes each gradient to its window's argmax.
pub fn maxpool2_backward(d_out: &[f64], argmax: &[usize], in_len: usize) -> Vec<f64> {
    let mut d_in = vec![0.0f64; in_len];
    for (&g, &idx) in d_out.iter().zip(argmax) {
        d_in[idx] += g;
    }
    d_in
}

/// 2x2 average pooling with stride 2; odd trailing rows/columns dropped.
pub fn avgpool2_forward(x: &[f64], side: usize, ch: usize) -> Vec<f64> {
    let out_side = side / 2;
    let mut out = Vec::with_capacity(ch * out_side * out_side);
    for c in 0..ch {
        let base = c * side * side;
        for y in 0..out_side {
            for x_i in 0..out_side {
                let i00 = base + (2 * y) * side + 2 * x_i;
                out.push(0.25 * (x[i00] + x[i00 + 1] + x[i00 + side] + x[i00 + side + 1]));
            }
        }
    }
    out
}

/// Backward for average pooling: spreads each gradient evenly over its window.
pub fn avgpool2_backward(d_out: &[f64], side: usize, ch: usize) -> Vec<f64> {
    let out_side = side / 2;
    let mut d_in = vec![0.0f64; ch * side * side];
    for c in 0..ch {
        let base = c * side * side;
        for y in 0..out_side {
            for x_i in 0..out_side {
                let g = 0.25 * d_out[(c * out_side + y) * out_side + x_i];
                let i00 = base + (2 * y) * side + 2 * x_i;
                d_in[i00] += g;
                d_in[i00 + 1] += g;
                d_in[i00 + side] += g;
                d_in[i00 + side + 1] += g;
            }
        }
    }
    d_in
}

/// Batched dense layer: `x` is `[batch][in_dim]`, `w` is `[out_dim][in_dim]`,
/// output `[batch][out_dim]`.
pub fn dense_forward(
    x: &[f64],
    batch: usize,
    in_dim: usize,
    w: &[f64],
    b: &[f64],
    out_dim: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(batch * out_dim);
    for s in 0..batch {
        let row = &x[s * in_dim..(s + 1) * in_dim];
        for o in 0..out_dim {
            let w_row = &w[o * in_dim..(o + 1) * in_dim];
            let dot: f64 = row.iter().zip(w_row).map(|(a, b)| a * b).sum();
            out.push(dot + b[o]);
        }
    }
    out
}

/// Gradients of [`dense_forward`]: returns `(d_x, d_w, d_b)`.
pub fn dense_backward(
    x: &[f64],
    batch: usize,
    in_dim: usize,
    w: &[f64],
    out_dim: usize,
    d_out: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut d_x = vec![0.0f64; batch * in_dim];
    let mut d_w = vec![0.0f64; out_dim * in_dim];
    let mut d_b = vec![0.0f64; out_dim];
    for s in 0..batch {
        let row = &x[s * in_dim..(s + 1) * in_dim];
        let d_row = &mut d_x[s * in_dim..(s + 1) * in_dim];
        for o in 0..out_dim {
            let g = d_out[s * out_dim + o];
            if g == 0.0 {
                continue;
            }
            d_b[o] += g;
            let w_row = &w[o * in_dim..(o + 1) * in_dim];
            let dw_row = &mut d_w[o * in_dim..(o + 1) * in_dim];
            for i in 0..in_dim {
                dw_row[i] += g * row[i];
                d_row[i] += g * w_row[i];
            }
        }
    }
    (d_x, d_w, d_b)
}

/// Numerical floor added to the batch variance before the square root.
pub const BN_EPSILON: f64 = 1e-5;

/// Cache of batch statistics needed by the batch-norm backward pass.
pub struct BnCache {
    pub mean: Vec<f64>,
    /// Biased (1/B) batch variance.
    pub var: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub x_hat: Vec<f64>,
}

/// Batch normalisation over `[batch][units]` using batch statistics
/// (training mode): `y = gamma * (x - mean) / sqrt(var + eps) + beta`.
pub fn batchnorm_forward_train(
    x: &[f64],
    batch: usize,
    units: usize,
    gamma: &[f64],
    beta: &[f64],
) -> (Vec<f64>, BnCache) {
    let inv_b = 1.0 / batch as f64;
    let mut mean = vec![0.0f64; units];
    for s in 0..batch {
        for u in 0..units {
            mean[u] += x[s * units + u];
        }
    }
    for m in &mut mean {
        *m *= inv_b;
    }
    let mut var = vec![0.0f64; units];
    for s in 0..batch {
        for u in 0..units {
            let d = x[s * units + u] - mean[u];
            var[u] += d * d;
        }
    }
    for v in &mut var {
        *v *= inv_b;
    }
    let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
    let mut x_hat = Vec::with_capacity(batch * units);
    let mut y = Vec::with_capacity(batch * units);
    for s in 0..batch {
        for u in 0..units {
            let xh = (x[s * units + u] - mean[u]) * inv_std[u];
            x_hat.push(xh);
            y.push(gamma[u] * xh + beta[u]);
        }
    }
    (y, BnCache { mean, var, inv_std, x_hat })
}

/// Batch normalisation with frozen running statistics (inference mode).
pub fn batchnorm_forward_infer(
    x: &[f64],
    batch: usize,
    units: usize,
    gamma: &[f64],
    beta: &[f64],
    run_mean: &[f64],
    run_var: &[f64],
) -> Vec<f64> {
    let inv_std: Vec<f64> = run_var.iter().map(|&v| 1.0 / (v + BN_EPSILON).sqrt()).collect();
    let mut y = Vec::with_capacity(batch * units);
    for s in 0..batch {
        for u in 0..units {
            y.push(gamma[u] * (x[s * units + u] - run_mean[u]) * inv_std[u] + beta[u]);
        }
    }
    y
}

/// Backward through training-mode batch normalisation.
/// Returns `(d_x, d_gamma, d_beta)`.
pub fn batchnorm_backward(
    d_out: &[f64],
    cache: &BnCache,
    batch: usize,
    units: usize,
    gamma: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let inv_b = 1.0 / batch as f64;
    let mut d_gamma = vec![0.0f64; units];
    let mut d_beta = vec![0.0f64; units];
    let mut sum_dxhat = vec![0.0f64; units];
    let mut sum_dxhat_xhat = vec![0.0f64; units];
    for s in 0..batch {
        for u in 0..units {
            let idx = s * units + u;
            let g = d_out[idx];
            d_gamma[u] += g * cache.x_hat[idx];
            d_beta[u] += g;
            let dxh = g * gamma[u];
            sum_dxhat[u] += dxh;
            sum_dxhat_xhat[u] += dxh * cache.x_hat[idx];
        }
    }
    let mut d_x = vec![0.0f64; batch * units];
    for s in 0..batch {
        for u in 0..units {
            let idx = s * units + u;
            let dxh = d_out[idx] * gamma[u];
            d_x[idx] = cache.inv_std[u]
                * inv_b
                * (batch as f64 * dxh - sum_dxhat[u] - cache.x_hat[idx] * sum_dxhat_xhat[u]);
        }
    }
    (d_x, d_gamma, d_beta)
}

/// Inverted dropout in training mode: zero with probability `rate`, scale
/// survivors by `1/(1-rate)` so the expected activation is unchanged.
/// Returns the output and the multiplicative mask for the backward pass.
pub fn dropout_forward(x: &[f64], rate: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    debug_assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 {
        return (x.to_vec(), vec![1.0; x.len()]);
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let mut mask = Vec::with_capacity(x.len());
    for _ in 0..x.len() {
        let u: f64 = rng.gen();
        mask.push(if u < keep { scale } else { 0.0 });
    }
    let y = x.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    (y, mask)
}

/// Backward through dropout: reuse the forward mask.
pub fn dropout_backward(d_out: &[f64], mask: &[f64]) -> Vec<f64> {
    d_out.iter().zip(mask).map(|(&g, &m)| g * m).collect()
}
