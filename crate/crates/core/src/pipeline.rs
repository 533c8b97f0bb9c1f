//! Scorer → skeleton → width, with every intermediate kept.

use crate::error::Result;
use crate::inference::Network;
use crate::scorer::{classical_scores, convnet_scores, fuse, scale_map, ClassicalParams, HeatMap, ScaleMap};
use crate::skeleton::{extract_skeleton, refine, ContrastScorer, ConvnetScorer, SkeletonSet};
use crate::width::recover_width;
use crate::{BinaryMap, DepthImage};

/// Binarization threshold used unless configured otherwise. The classical
/// scorer's heat saturates quickly, so 0.5 would admit every shallow dip.
pub const DEFAULT_THRESHOLD: f64 = 0.98;

#[derive(Debug, Clone)]
pub enum ScorerBackend {
    Classical(ClassicalParams),
    Convnet(Network),
}

#[derive(Debug, Clone)]
pub enum RefinerBackend {
    Classical(ContrastScorer),
    Convnet(Network),
    None,
}

#[derive(Debug, Clone)]
pub struct SegmentConfig {
    pub scorer: ScorerBackend,
    pub refiner: RefinerBackend,
    pub threshold: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            scorer: ScorerBackend::Classical(ClassicalParams::default()),
            refiner: RefinerBackend::Classical(ContrastScorer::default()),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub heat: HeatMap,
    pub scales: ScaleMap,
    /// Thinned skeleton before refinement.
    pub p_hat: SkeletonSet,
    /// Refined skeleton.
    pub p: SkeletonSet,
    pub seg: BinaryMap,
}

pub fn segment(depth: &DepthImage, cfg: &SegmentConfig) -> Result<Segmentation> {
    let scores = match &cfg.scorer {
        ScorerBackend::Classical(p) => classical_scores(depth, p)?,
        ScorerBackend::Convnet(net) => convnet_scores(depth, net)?,
    };
    let heat = fuse(&scores)?;
    let scales = scale_map(&scores)?;
    let p_hat = extract_skeleton(&heat, cfg.threshold)?;
    let p = match &cfg.refiner {
        RefinerBackend::Classical(s) => refine(&p_hat, depth, s)?,
        RefinerBackend::Convnet(net) => refine(&p_hat, depth, &ConvnetScorer { net })?,
        RefinerBackend::None => p_hat.clone(),
    };
    let seg = recover_width(depth, &p, &scales)?;
    Ok(Segmentation {
        heat,
        scales,
        p_hat,
        p,
        seg,
    })
}
