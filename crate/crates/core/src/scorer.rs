//! Multi-scale skeleton scoring, heat-map fusion and scale selection.
//!
//! A scorer produces three two-channel maps `S1`, `S2`, `S3` at ½, ¼ and ⅛ of
//! the (padded) input resolution. [`fuse`] accumulates them coarse to fine
//! through the factor-2 bilinear decoder and applies a two-class softmax;
//! [`scale_map`] upsamples each map separately and picks, per pixel, the scale
//! whose skeleton channel is largest.

use crate::error::{Error, Result};
use crate::imagecore::{box_downsample2, crop, gaussian_blur, pad_edge, upsample_pow2};
use crate::inference::{sigmoid_scalar, Network, Tensor3};
use crate::{DepthImage, FloatMap, Raster};

/// Skeleton probability per pixel at input resolution.
pub type HeatMap = FloatMap;
/// Per-pixel scale index in `{1, 2, 3}`.
pub type ScaleMap = Raster<u8>;

/// Number of scales (encoders).
pub const SCALES: usize = 3;

/// Two-class score map: channel 0 non-skeleton, channel 1 skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoChannel {
    pub background: FloatMap,
    pub skeleton: FloatMap,
}

impl TwoChannel {
    pub fn dims(&self) -> (usize, usize) {
        self.skeleton.dims()
    }

    fn zip(&self, other: &TwoChannel, f: impl Fn(f64, f64) -> f64) -> TwoChannel {
        let comb = |a: &FloatMap, b: &FloatMap| {
            FloatMap::from_fn(a.width(), a.height(), |x, y| f(*a.get(x, y), *b.get(x, y)))
        };
        TwoChannel {
            background: comb(&self.background, &other.background),
            skeleton: comb(&self.skeleton, &other.skeleton),
        }
    }

    fn upsample(&self) -> Result<TwoChannel> {
        let (w, h) = self.dims();
        Ok(TwoChannel {
            background: upsample_pow2(&self.background, 1, 2 * w, 2 * h)?,
            skeleton: upsample_pow2(&self.skeleton, 1, 2 * w, 2 * h)?,
        })
    }
}

/// The three score maps together with the input size they were computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleScores {
    pub width: usize,
    pub height: usize,
    /// Index 0 holds `S1` (½ resolution) through index 2 holding `S3` (⅛).
    pub maps: [TwoChannel; SCALES],
}

impl ScaleScores {
    fn validate(&self) -> Result<()> {
        for m in &self.maps {
            if !m.background.same_dims(&m.skeleton) {
                return Err(Error::Dim("score map channels differ in size".into()));
            }
        }
        for k in 0..SCALES - 1 {
            let (fw, fh) = self.maps[k].dims();
            let (cw, ch) = self.maps[k + 1].dims();
            if (fw, fh) != (2 * cw, 2 * ch) {
                return Err(Error::Dim(format!(
                    "S{} is {fw}x{fh}, expected twice S{} ({cw}x{ch})",
                    k + 1,
                    k + 2
                )));
            }
        }
        let (w1, h1) = self.maps[0].dims();
        if 2 * w1 < self.width || 2 * h1 < self.height || self.width == 0 || self.height == 0 {
            return Err(Error::Dim(format!(
                "S1 ({w1}x{h1}) does not cover a {}x{} input at half resolution",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Side length multiple that makes all three halvings exact.
pub const PAD_MULTIPLE: usize = 1 << SCALES;

fn padded_dims(w: usize, h: usize) -> (usize, usize) {
    (w.div_ceil(PAD_MULTIPLE) * PAD_MULTIPLE, h.div_ceil(PAD_MULTIPLE) * PAD_MULTIPLE)
}

/// Parameters of the difference-of-Gaussians filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalParams {
    /// Inner Gaussian sigma per scale, in pixels; the outer one is twice as wide.
    pub sigmas: [f64; SCALES],
    /// Logit gain relative to the robust noise level of the finest response.
    pub gain: f64,
    /// Lower bound on the noise level used for normalization, in mm.
    pub noise_floor: f64,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        ClassicalParams {
            sigmas: [0.6, 1.2, 2.4],
            gain: 1.0,
            noise_floor: 1e-3,
        }
    }
}

fn kernel_size(sigma: f64) -> usize {
    2 * (3.0 * sigma).ceil() as usize + 1
}

/// Narrow-minus-wide Gaussian response; positive where the surface is locally deeper.
pub fn dog_response(map: &FloatMap, sigma: f64) -> Result<FloatMap> {
    let narrow = gaussian_blur(map, sigma, kernel_size(sigma))?;
    let wide = gaussian_blur(map, 2.0 * sigma, kernel_size(2.0 * sigma))?;
    Ok(narrow.map_with(&wide, |a, b| a - b))
}

/// `1.4826 * median(|v - median(v)|)`.
pub fn robust_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    let mut v = values.to_vec();
    let m = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - m).abs()).collect();
    1.4826 * median(&mut dev)
}

/// Filter-bank stand-in for the trained encoders. Per scale `k` the response
/// `r_k = blur(sigma_k) - blur(2 sigma_k)` is scaled by `alpha`, where
/// `alpha = gain / max(robust_std(r_1), noise_floor)`, and block-averaged down by
/// `2^k`. Channel 1 carries `alpha * r_k`, channel 0 its negation.
pub fn classical_scores(depth: &DepthImage, params: &ClassicalParams) -> Result<ScaleScores> {
    if params.sigmas.iter().any(|s| !(*s > 0.0)) || !(params.gain > 0.0) {
        return Err(Error::Param("sigmas and gain must be positive".into()));
    }
    let (w, h) = (depth.width(), depth.height());
    let (pw, ph) = padded_dims(w, h);
    let padded = pad_edge(depth.map(), pw, ph)?;
    let responses = params
        .sigmas
        .iter()
        .map(|&s| dog_response(&padded, s))
        .collect::<Result<Vec<_>>>()?;
    let fine = crop(&responses[0], w, h)?;
    let noise = robust_std(fine.data()).max(params.noise_floor);
    let alpha = params.gain / noise;

    let mut maps = Vec::with_capacity(SCALES);
    for (k, r) in responses.iter().enumerate() {
        let mut m = r.map(|v| alpha * v);
        for _ in 0..=k {
            m = box_downsample2(&m);
        }
        maps.push(TwoChannel {
            background: m.map(|v| -v),
            skeleton: m,
        });
    }
    Ok(ScaleScores {
        width: w,
        height: h,
        maps: maps.try_into().expect("three scales"),
    })
}

/// Per-image standardization; a flat image only loses its mean.
fn standardize(map: &FloatMap) -> FloatMap {
    let n = map.len() as f64;
    let mean = map.data().iter().sum::<f64>() / n;
    let var = map.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd > 0.0 {
        map.map(|v| (v - mean) / sd)
    } else {
        map.map(|v| v - mean)
    }
}

/// Runs a three-branch convnet (outputs `s1`, `s2`, `s3`, two channels each) on the
/// standardized, edge-padded depth image.
pub fn convnet_scores(depth: &DepthImage, net: &Network) -> Result<ScaleScores> {
    let (w, h) = (depth.width(), depth.height());
    let (pw, ph) = padded_dims(w, h);
    let input = Tensor3::from_map(&pad_edge(&standardize(depth.map()), pw, ph)?);
    let outputs = net.forward(&input)?;
    let mut maps = Vec::with_capacity(SCALES);
    for k in 1..=SCALES {
        let name = format!("s{k}");
        let t = outputs
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Shape(format!("network has no output {name}")))?;
        let expect = (2, ph >> k, pw >> k);
        if t.shape() != expect {
            return Err(Error::Shape(format!(
                "output {name} is {:?}, expected {expect:?}",
                t.shape()
            )));
        }
        maps.push(TwoChannel {
            background: t.channel_map(0),
            skeleton: t.channel_map(1),
        });
    }
    Ok(ScaleScores {
        width: w,
        height: h,
        maps: maps.try_into().expect("three scales"),
    })
}

/// Accumulated two-channel logits at input resolution:
/// `up(S1 + up(S2 + up(S3)))` cropped to the input size.
pub fn fused_logits(scores: &ScaleScores) -> Result<TwoChannel> {
    scores.validate()?;
    let mut acc = scores.maps[SCALES - 1].clone();
    for k in (0..SCALES - 1).rev() {
        acc = scores.maps[k].zip(&acc.upsample()?, |a, b| a + b);
    }
    let full = acc.upsample()?;
    Ok(TwoChannel {
        background: crop(&full.background, scores.width, scores.height)?,
        skeleton: crop(&full.skeleton, scores.width, scores.height)?,
    })
}

/// Softmax over the fused logits; returns the skeleton-class probability.
pub fn fuse(scores: &ScaleScores) -> Result<HeatMap> {
    let logits = fused_logits(scores)?;
    Ok(logits
        .skeleton
        .map_with(&logits.background, |s, b| sigmoid_scalar(s - b)))
}

/// Skeleton channel of `S_k` upsampled by `2^k` to input resolution.
pub fn upsampled_skeleton(scores: &ScaleScores, k: usize) -> Result<FloatMap> {
    upsample_pow2(
        &scores.maps[k - 1].skeleton,
        k as u32,
        scores.width,
        scores.height,
    )
}

/// Index of the scale with the largest upsampled skeleton score; ties go to
/// the smallest scale.
pub fn scale_map(scores: &ScaleScores) -> Result<ScaleMap> {
    scores.validate()?;
    let ups = (1..=SCALES)
        .map(|k| upsampled_skeleton(scores, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaleMap::from_fn(scores.width, scores.height, |x, y| {
        argmax_scale([*ups[0].get(x, y), *ups[1].get(x, y), *ups[2].get(x, y)])
    }))
}

/// 1-based argmax with ties resolved toward the smallest index.
pub fn argmax_scale(values: [f64; SCALES]) -> u8 {
    let mut best = 0;
    for k in 1..SCALES {
        if values[k] > values[best] {
            best = k;
        }
    }
    best as u8 + 1
}
