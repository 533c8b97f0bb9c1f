//! Segmentation of weakly stamped curve structures from noisy depth maps,
//! and partial matching of the segmented curves against full designs.
//!
//! The segmentation pipeline runs in three stages:
//!
//! 1. [`scorer`] produces three coarse two-channel score maps, fuses them into a
//!    skeleton heat map and derives a per-pixel scale in `{1, 2, 3}`.
//! 2. [`skeleton`] binarizes and thins the heat map, then prunes false positive
//!    skeleton pixels with a 45×45 patch scorer.
//! 3. [`width`] grows each surviving skeleton pixel into a disk of radius
//!    `2^s` and keeps the pixels at least half as deep as the local contrast.
//!
//! [`matching`] ranks candidate designs by directed Chamfer distance minimized
//! over rotations and translations. [`evalbench`] holds metrics, baselines and
//! the synthetic sherd generator used for evaluation.
//!
//! Both scorers have a classical filter-bank backend, so everything runs without
//! trained weights; [`inference`] executes convnets from `CRVW1` weight files when
//! weights are available.

pub mod error;
pub mod evalbench;
pub mod imagecore;
pub mod inference;
pub mod matching;
pub mod pipeline;
pub mod scorer;
pub mod skeleton;
pub mod width;

pub use error::{Error, Result};
pub use imagecore::{BinaryMap, DepthImage, FloatMap, Raster};
