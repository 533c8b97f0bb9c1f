use rayon::prelude::*;

use super::Tensor3;
use crate::error::{Error, Result};
use crate::imagecore::bilinear_upsample;

pub const BN_EPSILON: f64 = 1e-5;

/// Stride-1 cross-correlation with zero padding.
///
/// `weights` is laid out `[out][in][ky][kx]` with a square kernel of side `k`.
pub fn conv2d(
    input: &Tensor3,
    weights: &[f32],
    bias: &[f32],
    k: usize,
    pad: usize,
) -> Result<Tensor3> {
    let in_c = input.channels();
    let out_c = bias.len();
    if k == 0 || weights.len() != out_c * in_c * k * k {
        return Err(Error::Shape(format!(
            "conv weights: expected {out_c}x{in_c}x{k}x{k}, got {} values",
            weights.len()
        )));
    }
    let (h, w) = (input.height(), input.width());
    if h + 2 * pad < k || w + 2 * pad < k {
        return Err(Error::Shape(format!("{h}x{w} input too small for {k}x{k} kernel")));
    }
    let oh = h + 2 * pad - k + 1;
    let ow = w + 2 * pad - k + 1;
    let plane = oh * ow;
    let mut out = vec![0.0; out_c * plane];
    out.par_chunks_mut(plane.max(1))
        .enumerate()
        .for_each(|(o, dst)| {
            dst.fill(bias[o] as f64);
            for i in 0..in_c {
                let src = input.channel(i);
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = weights[((o * in_c + i) * k + ky) * k + kx] as f64;
                        if wv == 0.0 {
                            continue;
                        }
                        for oy in 0..oh {
                            let sy = oy + ky;
                            if sy < pad || sy - pad >= h {
                                continue;
                            }
                            let row = &src[(sy - pad) * w..(sy - pad + 1) * w];
                            let drow = &mut dst[oy * ow..(oy + 1) * ow];
                            for (ox, d) in drow.iter_mut().enumerate() {
                                let sx = ox + kx;
                                if sx >= pad && sx - pad < w {
                                    *d += wv * row[sx - pad];
                                }
                            }
                        }
                    }
                }
            }
        });
    Tensor3::from_vec(out_c, oh, ow, out)
}

/// 2×2 stride-2 max pooling; an odd trailing row or column is dropped.
pub fn maxpool2(input: &Tensor3) -> Tensor3 {
    let (c, h, w) = input.shape();
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let m = input
                    .at(ch, 2 * y, 2 * x)
                    .max(input.at(ch, 2 * y, 2 * x + 1))
                    .max(input.at(ch, 2 * y + 1, 2 * x))
                    .max(input.at(ch, 2 * y + 1, 2 * x + 1));
                out.push(m);
            }
        }
    }
    Tensor3::from_vec(c, oh, ow, out).expect("pool output size")
}

/// Affine map on the flattened (channel-major, row-major) input; returns `n`×1×1.
/// `weights` is laid out `[out][in]`.
pub fn fully_connected(input: &Tensor3, weights: &[f32], bias: &[f32]) -> Result<Tensor3> {
    let n_in = input.data().len();
    let n_out = bias.len();
    if weights.len() != n_in * n_out {
        return Err(Error::Shape(format!(
            "fully connected: input has {n_in} values, weights are {} for {n_out} outputs",
            weights.len()
        )));
    }
    let x = input.data();
    let out: Vec<f64> = (0..n_out)
        .into_par_iter()
        .map(|o| {
            let row = &weights[o * n_in..(o + 1) * n_in];
            row.iter()
                .zip(x)
                .fold(bias[o] as f64, |acc, (&wv, &xv)| acc + wv as f64 * xv)
        })
        .collect();
    Tensor3::from_vec(n_out, 1, 1, out)
}

pub fn relu(input: &Tensor3) -> Tensor3 {
    let mut t = input.clone();
    t.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    t
}

#[inline]
pub(crate) fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(input: &Tensor3) -> Tensor3 {
    let mut t = input.clone();
    t.data_mut().iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
    t
}

/// Per-pixel softmax across channels.
pub fn softmax_channel(input: &Tensor3) -> Tensor3 {
    let (c, h, w) = input.shape();
    let plane = h * w;
    let mut t = input.clone();
    let d = t.data_mut();
    for p in 0..plane {
        let m = (0..c).map(|ch| d[ch * plane + p]).fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for ch in 0..c {
            let e = (d[ch * plane + p] - m).exp();
            d[ch * plane + p] = e;
            sum += e;
        }
        for ch in 0..c {
            d[ch * plane + p] /= sum;
        }
    }
    t
}

pub fn batchnorm_inference(
    input: &Tensor3,
    mean: &[f32],
    var: &[f32],
    gamma: &[f32],
    beta: &[f32],
) -> Result<Tensor3> {
    let c = input.channels();
    if [mean.len(), var.len(), gamma.len(), beta.len()] != [c; 4] {
        return Err(Error::Shape(format!(
            "batch norm parameters do not match {c} channels"
        )));
    }
    let plane = input.height() * input.width();
    let mut t = input.clone();
    for (ch, chunk) in t.data_mut().chunks_mut(plane.max(1)).enumerate().take(c) {
        let scale = gamma[ch] as f64 / (var[ch] as f64 + BN_EPSILON).sqrt();
        let shift = beta[ch] as f64 - mean[ch] as f64 * scale;
        chunk.iter_mut().for_each(|v| *v = *v * scale + shift);
    }
    Ok(t)
}

pub fn upsample_bilinear2(input: &Tensor3) -> Result<Tensor3> {
    let (c, h, w) = input.shape();
    let mut data = Vec::with_capacity(c * 4 * h * w);
    for ch in 0..c {
        let up = bilinear_upsample(&input.channel_map(ch), 2)?;
        data.extend_from_slice(up.data());
    }
    Tensor3::from_vec(c, 2 * h, 2 * w, data)
}
