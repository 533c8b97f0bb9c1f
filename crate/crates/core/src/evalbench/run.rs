//! Segment every corpus image, score it, and optionally rank the designs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::thin;
use crate::matching::{cmc_curve, rank_designs, PointSet, SearchParams};
use crate::pipeline::{segment, SegmentConfig};
use crate::skeleton::SkeletonSet;
use crate::BinaryMap;

use super::baselines::{dilate_ablation, dog_baseline, DILATION_RADIUS};
use super::corpus::{Corpus, CorpusItem};
use super::metrics::{average_prf, prf, PrfScore};

#[derive(Debug, Clone)]
pub enum Segmenter {
    Pipeline(SegmentConfig),
    Dog,
    /// Pipeline skeleton dilated by a fixed radius instead of width recovery.
    Dilation(SegmentConfig),
    /// Ground truth passed through; checks the evaluation plumbing.
    Oracle,
}

/// Prediction and the skeleton used for matching.
pub fn run_segmenter(item: &CorpusItem, seg: &Segmenter) -> Result<(BinaryMap, SkeletonSet)> {
    Ok(match seg {
        Segmenter::Pipeline(cfg) => {
            let s = segment(&item.depth, cfg)?;
            (s.seg, s.p)
        }
        Segmenter::Dilation(cfg) => {
            let s = segment(&item.depth, cfg)?;
            (dilate_ablation(&s.p, DILATION_RADIUS), s.p)
        }
        Segmenter::Dog => {
            let m = dog_baseline(&item.depth)?;
            let skel = SkeletonSet::from_mask(&thin(&m));
            (m, skel)
        }
        Segmenter::Oracle => (item.gt_mask.clone(), SkeletonSet::from_mask(&thin(&item.gt_mask))),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub name: String,
    pub truth: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub per_image: Vec<(String, PrfScore)>,
    pub mean: PrfScore,
    pub rankings: Vec<Ranking>,
    /// Present when designs were matched.
    pub cmc: Option<Vec<f64>>,
}

/// Scores every item; with `search` set and designs available, also ranks the
/// designs for every labelled item and builds the CMC curve.
pub fn evaluate_corpus(corpus: &Corpus, seg: &Segmenter, search: Option<&SearchParams>) -> Result<Evaluation> {
    if corpus.items.is_empty() {
        return Err(Error::Param("corpus has no images".into()));
    }
    let do_match = search.is_some() && !corpus.designs.is_empty();
    let results = corpus
        .items
        .par_iter()
        .map(|item| {
            let (pred, skel) = run_segmenter(item, seg)?;
            let score = prf(&pred, &item.gt_mask)?;
            let ranking = match (do_match, search, &item.label) {
                (true, Some(params), Some(truth)) => {
                    let u = PointSet::from_skeleton(&skel, item.depth.pitch(), item.name.clone());
                    let labels = if u.is_empty() {
                        // nothing segmented: every design ties, keep library order
                        corpus.designs.iter().map(|d| d.label().to_string()).collect()
                    } else {
                        rank_designs(&u, &corpus.designs, params)?
                            .into_iter()
                            .map(|m| m.label)
                            .collect()
                    };
                    Some(Ranking {
                        name: item.name.clone(),
                        truth: truth.clone(),
                        labels,
                    })
                }
                _ => None,
            };
            Ok((item.name.clone(), score, ranking))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_image: Vec<(String, PrfScore)> = results.iter().map(|(n, s, _)| (n.clone(), *s)).collect();
    let mean = average_prf(&per_image.iter().map(|(_, s)| *s).collect::<Vec<_>>())?;
    let rankings: Vec<Ranking> = results.into_iter().filter_map(|(_, _, r)| r).collect();
    let cmc = if rankings.is_empty() {
        None
    } else {
        let labels: Vec<Vec<String>> = rankings.iter().map(|r| r.labels.clone()).collect();
        let truths: Vec<String> = rankings.iter().map(|r| r.truth.clone()).collect();
        Some(cmc_curve(&labels, &truths)?)
    };
    Ok(Evaluation {
        per_image,
        mean,
        rankings,
        cmc,
    })
}
