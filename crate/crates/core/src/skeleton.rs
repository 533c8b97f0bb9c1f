//! Skeleton extraction from the heat map, the distance-based probability map,
//! and false-positive pruning with a 45×45 patch scorer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{distance_transform, thin};
use crate::inference::zoo::PATCH_SIZE;
use crate::inference::{Network, Tensor3};
use crate::{BinaryMap, DepthImage, FloatMap};

/// Pixel skeleton with its frame size. Points are unique and in bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonSet {
    width: usize,
    height: usize,
    points: Vec<(usize, usize)>,
}

impl SkeletonSet {
    pub fn empty(width: usize, height: usize) -> Self {
        SkeletonSet {
            width,
            height,
            points: Vec::new(),
        }
    }

    /// Points in row-major order.
    pub fn from_mask(mask: &BinaryMap) -> Self {
        SkeletonSet {
            width: mask.width(),
            height: mask.height(),
            points: mask.points(),
        }
    }

    /// Rejects duplicates and out-of-bounds points.
    pub fn from_points(width: usize, height: usize, points: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BinaryMap::new(width, height);
        for &(x, y) in &points {
            if x >= width || y >= height {
                return Err(Error::Dim(format!("point ({x},{y}) outside {width}x{height}")));
            }
            if *seen.get(x, y) {
                return Err(Error::Param(format!("duplicate point ({x},{y})")));
            }
            seen.set(x, y, true);
        }
        Ok(SkeletonSet {
            width,
            height,
            points,
        })
    }

    pub fn to_mask(&self) -> BinaryMap {
        let mut m = BinaryMap::new(self.width, self.height);
        for &(x, y) in &self.points {
            m.set(x, y, true);
        }
        m
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `thin(heat >= threshold)`.
pub fn extract_skeleton(heat: &FloatMap, threshold: f64) -> Result<SkeletonSet> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Param(format!("threshold {threshold} not in (0, 1)")));
    }
    let mask = heat.map(|&v| v >= threshold);
    Ok(SkeletonSet::from_mask(&thin(&mask)))
}

/// `D = 1 / (1 + distance to the nearest skeleton pixel)`.
pub fn probability_map(gt: &SkeletonSet, dims: (usize, usize)) -> Result<FloatMap> {
    if gt.dims() != dims {
        return Err(Error::Dim(format!(
            "skeleton frame {:?} differs from requested {dims:?}",
            gt.dims()
        )));
    }
    if gt.is_empty() {
        return Err(Error::EmptySkeleton);
    }
    Ok(distance_transform(&gt.to_mask()).map(|&d| 1.0 / (1.0 + d)))
}

/// Maps a `PATCH_SIZE`-square depth window to a skeleton probability.
pub trait PatchScorer: Sync {
    fn score(&self, window: &FloatMap) -> Result<f64>;
}

impl<F: Fn(&FloatMap) -> f64 + Sync> PatchScorer for F {
    fn score(&self, window: &FloatMap) -> Result<f64> {
        Ok(self(window))
    }
}

/// Window centred on `(cx, cy)` with edge replication outside the image.
pub fn extract_window(depth: &FloatMap, cx: usize, cy: usize) -> FloatMap {
    let half = (PATCH_SIZE / 2) as isize;
    let (w, h) = (depth.width() as isize, depth.height() as isize);
    FloatMap::from_fn(PATCH_SIZE, PATCH_SIZE, |x, y| {
        let sx = (cx as isize + x as isize - half).clamp(0, w - 1);
        let sy = (cy as isize + y as isize - half).clamp(0, h - 1);
        *depth.get(sx as usize, sy as usize)
    })
}

/// Keeps the points whose window scores at least 0.5, in input order.
pub fn refine(p_hat: &SkeletonSet, depth: &DepthImage, scorer: &dyn PatchScorer) -> Result<SkeletonSet> {
    if p_hat.dims() != (depth.width(), depth.height()) {
        return Err(Error::Dim("skeleton and depth image differ in size".into()));
    }
    let keep = p_hat
        .points
        .par_iter()
        .map(|&(x, y)| scorer.score(&extract_window(depth.map(), x, y)).map(|s| s >= 0.5))
        .collect::<Result<Vec<bool>>>()?;
    Ok(SkeletonSet {
        width: p_hat.width,
        height: p_hat.height,
        points: p_hat
            .points
            .iter()
            .zip(keep)
            .filter_map(|(&p, k)| k.then_some(p))
            .collect(),
    })
}

pub const CONTRAST_EPSILON: f64 = 1e-6;
const CENTER_HALF: isize = 2;
const ANNULUS_INNER: f64 = 15.0;
const ANNULUS_OUTER: f64 = 22.0;

/// Centre-versus-annulus depth contrast squashed with `sigmoid(beta * z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastScorer {
    pub beta: f64,
}

impl Default for ContrastScorer {
    fn default() -> Self {
        ContrastScorer { beta: 3.0 }
    }
}

impl PatchScorer for ContrastScorer {
    fn score(&self, window: &FloatMap) -> Result<f64> {
        contrast_patch_score(window, self.beta)
    }
}

fn check_window(window: &FloatMap) -> Result<()> {
    if window.dims() != (PATCH_SIZE, PATCH_SIZE) {
        return Err(Error::Shape(format!(
            "patch is {}x{}, expected {PATCH_SIZE}x{PATCH_SIZE}",
            window.width(),
            window.height()
        )));
    }
    Ok(())
}

/// `z = (mean(centre 5×5) - mean(annulus r in [15, 22])) / (std + eps)`.
pub fn contrast_patch_score(window: &FloatMap, beta: f64) -> Result<f64> {
    check_window(window)?;
    let c = (PATCH_SIZE / 2) as isize;
    let (mut center, mut nc, mut ring, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for y in 0..PATCH_SIZE {
        for x in 0..PATCH_SIZE {
            let (dx, dy) = (x as isize - c, y as isize - c);
            let v = *window.get(x, y);
            if dx.abs() <= CENTER_HALF && dy.abs() <= CENTER_HALF {
                center += v;
                nc += 1;
            }
            let r = ((dx * dx + dy * dy) as f64).sqrt();
            if (ANNULUS_INNER..=ANNULUS_OUTER).contains(&r) {
                ring += v;
                nr += 1;
            }
        }
    }
    let n = window.len() as f64;
    let mean = window.data().iter().sum::<f64>() / n;
    let sd = (window.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let z = (center / nc as f64 - ring / nr as f64) / (sd + CONTRAST_EPSILON);
    Ok(crate::inference::sigmoid_scalar(beta * z))
}

/// Patch network; the window is standardized before the forward pass.
pub struct ConvnetScorer<'a> {
    pub net: &'a Network,
}

impl PatchScorer for ConvnetScorer<'_> {
    fn score(&self, window: &FloatMap) -> Result<f64> {
        convnet_patch_score(window, self.net)
    }
}

/// Channel 0 of the network output for the standardized window.
pub fn convnet_patch_score(window: &FloatMap, net: &Network) -> Result<f64> {
    check_window(window)?;
    let n = window.len() as f64;
    let mean = window.data().iter().sum::<f64>() / n;
    let sd = (window.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let norm = window.map(|&v| if sd > 0.0 { (v - mean) / sd } else { v - mean });
    let out = net.forward_output(&Tensor3::from_map(&norm), crate::inference::FINAL_OUTPUT)?;
    out.data()
        .first()
        .copied()
        .ok_or_else(|| Error::Shape("patch network produced no output".into()))
}
