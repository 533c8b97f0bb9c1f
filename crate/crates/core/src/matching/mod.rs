//! Directed Chamfer matching of a sherd skeleton against design patterns,
//! design ranking and CMC accuracy.
//!
//! The transform search runs on a discrete grid: rotations in steps of
//! `rot_step_deg`, and positions of the sherd centroid on a `pitch` lattice over
//! the design's bounding box. A coarse pass evaluates the centre of every block
//! of `coarse_rot_steps × coarse_trans_cells²` grid transforms; the most
//! promising blocks are then searched exhaustively. With `exact` set, every
//! block whose lower bound can still beat the incumbent is searched too, which
//! makes the result the true grid minimum.

mod field;

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::skeleton::SkeletonSet;

pub use field::{DistanceField, ExactField, RasterField};

/// Labelled planar point set in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    label: String,
    points: Vec<(f64, f64)>,
}

impl PointSet {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Param("point coordinates must be finite".into()));
        }
        Ok(PointSet {
            label: label.into(),
            points,
        })
    }

    /// Pixel centres scaled by `pitch` mm.
    pub fn from_skeleton(skel: &SkeletonSet, pitch: f64, label: impl Into<String>) -> Self {
        PointSet {
            label: label.into(),
            points: skel
                .points()
                .iter()
                .map(|&(x, y)| (x as f64 * pitch, y as f64 * pitch))
                .collect(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyPattern(self.label.clone()))
        } else {
            Ok(())
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> Result<((f64, f64), (f64, f64))> {
        self.require_nonempty()?;
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.points {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        Ok((lo, hi))
    }

    pub fn centroid(&self) -> Result<(f64, f64)> {
        self.require_nonempty()?;
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        Ok((sx / n, sy / n))
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointSet {
        PointSet {
            label: self.label.clone(),
            points: self.points.iter().map(|&p| t.apply(p)).collect(),
        }
    }
}

/// `p ↦ R(rotation) p + (dx, dy)`, rotation kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: f64,
    pub dx: f64,
    pub dy: f64,
}

impl RigidTransform {
    pub fn new(rotation: f64, dx: f64, dy: f64) -> Self {
        let mut r = rotation.rem_euclid(TAU);
        if r >= TAU {
            r = 0.0;
        }
        RigidTransform { rotation: r, dx, dy }
    }

    pub fn identity() -> Self {
        RigidTransform::new(0.0, 0.0, 0.0)
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn apply(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let (s, c) = self.rotation.sin_cos();
        (c * x - s * y + self.dx, s * x + c * y + self.dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub distance: f64,
    pub transform: RigidTransform,
    pub label: String,
}

/// Mean field distance over the (already transformed) points.
pub fn chamfer_directed(u_t: &PointSet, field: &dyn DistanceField) -> Result<f64> {
    u_t.require_nonempty()?;
    let sum: f64 = u_t.points.iter().map(|&(x, y)| field.distance(x, y)).sum();
    Ok(sum / u_t.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Raster,
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    /// Raster pitch of the design distance transform and translation step, mm.
    pub pitch: f64,
    /// Fine rotation step, degrees.
    pub rot_step_deg: f64,
    /// Fine rotation steps per coarse block (6 × 1° by default).
    pub coarse_rot_steps: usize,
    /// Translation cells per coarse block side. Strokes are 1.4 to 2.4 mm apart,
    /// so blocks wider than about 1 mm alias between neighbouring strokes.
    pub coarse_trans_cells: usize,
    /// Coarse blocks searched exhaustively.
    pub beam: usize,
    /// Every n-th sherd point is used when ranking coarse blocks, keeping at
    /// least `MIN_COARSE_POINTS` of them.
    pub coarse_stride: usize,
    pub exact: bool,
    pub field: FieldKind,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            pitch: 0.5,
            rot_step_deg: 1.0,
            coarse_rot_steps: 6,
            coarse_trans_cells: 2,
            beam: 24,
            coarse_stride: 16,
            exact: false,
            field: FieldKind::Raster,
        }
    }
}

impl SearchParams {
    fn validate(&self) -> Result<()> {
        if !(self.pitch > 0.0) || !(self.rot_step_deg > 0.0) || self.rot_step_deg > 360.0 {
            return Err(Error::Param("pitch and rotation step must be positive".into()));
        }
        if self.coarse_rot_steps == 0 || self.coarse_trans_cells == 0 || self.beam == 0 || self.coarse_stride == 0 {
            return Err(Error::Param("coarse block sizes and beam must be nonzero".into()));
        }
        Ok(())
    }

    /// Number of fine rotations covering the full turn.
    pub fn rotation_count(&self) -> usize {
        ((360.0 / self.rot_step_deg).round() as usize).max(1)
    }
}

/// The discrete transform grid shared by the search and by brute-force checks.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformGrid {
    pub rotations: usize,
    pub rot_step: f64,
    /// Lowest centroid position; the lattice passes through the design centroid.
    pub origin: (f64, f64),
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl TransformGrid {
    pub fn new(v: &PointSet, params: &SearchParams) -> Result<Self> {
        params.validate()?;
        let (lo, hi) = v.bounds()?;
        let c = v.centroid()?;
        let cell = params.pitch;
        let rotations = params.rotation_count();
        // lattice through the design centroid, spanning its bounding box
        let below = |c: f64, lo: f64| ((c - lo) / cell + 1e-9).floor();
        let origin = (c.0 - below(c.0, lo.0) * cell, c.1 - below(c.1, lo.1) * cell);
        Ok(TransformGrid {
            rotations,
            rot_step: TAU / rotations as f64,
            origin,
            cell,
            nx: ((hi.0 - origin.0) / cell + 1e-9).floor() as usize + 1,
            ny: ((hi.1 - origin.1) / cell + 1e-9).floor() as usize + 1,
        })
    }

    pub fn angle(&self, i: usize) -> f64 {
        i as f64 * self.rot_step
    }

    pub fn position(&self, jx: usize, jy: usize) -> (f64, f64) {
        (
            self.origin.0 + jx as f64 * self.cell,
            self.origin.1 + jy as f64 * self.cell,
        )
    }

    /// Transform placing the centroid `c` of the sherd at grid position `(jx, jy)`
    /// after rotation `i`.
    pub fn transform(&self, c: (f64, f64), i: usize, jx: usize, jy: usize) -> RigidTransform {
        let r = RigidTransform::new(self.angle(i), 0.0, 0.0);
        let rc = r.apply(c);
        let t = self.position(jx, jy);
        RigidTransform::new(self.angle(i), t.0 - rc.0, t.1 - rc.1)
    }
}

pub fn build_field(v: &PointSet, u: &PointSet, params: &SearchParams) -> Result<Box<dyn DistanceField>> {
    Ok(match params.field {
        FieldKind::Exact => Box::new(ExactField::new(v)?),
        FieldKind::Raster => {
            let c = u.centroid()?;
            let reach = u
                .points
                .iter()
                .map(|&(x, y)| (x - c.0).hypot(y - c.1))
                .fold(0.0, f64::max);
            Box::new(RasterField::new(v, params.pitch, reach + params.pitch)?)
        }
    })
}

pub const MIN_COARSE_POINTS: usize = 64;

type Key = (usize, usize, usize);

#[derive(Debug, Clone, Copy)]
struct Best {
    sum: f64,
    key: Key,
}

const TIE: f64 = 1e-12;
const SLACK: f64 = 1e-9;

impl Best {
    fn none() -> Self {
        Best {
            sum: f64::INFINITY,
            key: (usize::MAX, usize::MAX, usize::MAX),
        }
    }

    fn better(self, other: Best) -> Best {
        if other.sum < self.sum - TIE || ((other.sum - self.sum).abs() <= TIE && other.key < self.key) {
            other
        } else {
            self
        }
    }
}

struct Search<'a> {
    rel: Vec<(f64, f64)>,
    radius: Vec<f64>,
    grid: TransformGrid,
    field: &'a dyn DistanceField,
    cr: usize,
    ct: usize,
    stride: usize,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    rb: usize,
    bx: usize,
    by: usize,
    sum: f64,
    bound: f64,
}

impl Search<'_> {
    fn rotated(&self, theta: f64) -> Vec<(f64, f64)> {
        let (s, c) = theta.sin_cos();
        self.rel.iter().map(|&(x, y)| (c * x - s * y, s * x + c * y)).collect()
    }

    /// Sum of field distances, abandoned (as +inf) once it exceeds `cutoff`.
    fn sum_at(&self, pts: &[(f64, f64)], t: (f64, f64), cutoff: f64) -> f64 {
        let mut s = 0.0;
        for &(x, y) in pts {
            s += self.field.distance(x + t.0, y + t.1);
            if s > cutoff {
                return f64::INFINITY;
            }
        }
        s
    }

    fn centre(start: usize, size: usize) -> usize {
        start + size / 2
    }

    fn half_extent(size: usize) -> usize {
        (size / 2).max(size - 1 - size / 2)
    }

    fn coarse(&self) -> Vec<Block> {
        let g = &self.grid;
        let nrb = g.rotations.div_ceil(self.cr);
        let (nbx, nby) = (g.nx.div_ceil(self.ct), g.ny.div_ceil(self.ct));
        let h_rot = Self::half_extent(self.cr) as f64 * g.rot_step;
        let h_trans = Self::half_extent(self.ct) as f64 * g.cell * std::f64::consts::SQRT_2;
        let l = self.field.lipschitz();
        let slack: Vec<f64> = self.radius.iter().map(|r| l * (r * h_rot + h_trans)).collect();
        (0..nrb)
            .into_par_iter()
            .flat_map_iter(|rb| {
                let pts = self.rotated(g.angle(Self::centre(rb * self.cr, self.cr)));
                let slack = &slack;
                (0..nbx).flat_map(move |bx| (0..nby).map(move |by| (bx, by))).map(move |(bx, by)| {
                    let t = g.position(Self::centre(bx * self.ct, self.ct), Self::centre(by * self.ct, self.ct));
                    // every term is non-negative, so a strided subset still bounds the full sum
                    let (mut sum, mut bound) = (0.0, 0.0);
                    for (&(x, y), &sl) in pts.iter().zip(slack).step_by(self.stride) {
                        let d = self.field.distance(x + t.0, y + t.1);
                        sum += d;
                        bound += (d - sl).max(0.0);
                    }
                    Block { rb, bx, by, sum, bound }
                })
            })
            .collect()
    }

    fn refine(&self, b: &Block, start: Best) -> Best {
        let g = &self.grid;
        let mut best = start;
        let rots = b.rb * self.cr..((b.rb + 1) * self.cr).min(g.rotations);
        for i in rots {
            let pts = self.rotated(g.angle(i));
            for jx in b.bx * self.ct..((b.bx + 1) * self.ct).min(g.nx) {
                for jy in b.by * self.ct..((b.by + 1) * self.ct).min(g.ny) {
                    let sum = self.sum_at(&pts, g.position(jx, jy), best.sum + SLACK);
                    best = best.better(Best { sum, key: (i, jx, jy) });
                }
            }
        }
        best
    }
}

/// Minimum directed Chamfer distance from `u` into `v` over the transform grid.
pub fn match_design(u: &PointSet, v: &PointSet, params: &SearchParams) -> Result<MatchResult> {
    u.require_nonempty()?;
    v.require_nonempty()?;
    let field = build_field(v, u, params)?;
    match_with_field(u, v, field.as_ref(), params)
}

pub fn match_with_field(
    u: &PointSet,
    v: &PointSet,
    field: &dyn DistanceField,
    params: &SearchParams,
) -> Result<MatchResult> {
    u.require_nonempty()?;
    let grid = TransformGrid::new(v, params)?;
    let c = u.centroid()?;
    let rel: Vec<(f64, f64)> = u.points.iter().map(|&(x, y)| (x - c.0, y - c.1)).collect();
    let search = Search {
        radius: rel.iter().map(|&(x, y)| x.hypot(y)).collect(),
        rel,
        grid,
        field,
        cr: params.coarse_rot_steps,
        ct: params.coarse_trans_cells,
        stride: params.coarse_stride.min(u.len().div_ceil(MIN_COARSE_POINTS)).max(1),
    };

    let mut blocks = search.coarse();
    blocks.sort_by(|a, b| a.sum.total_cmp(&b.sum).then((a.rb, a.bx, a.by).cmp(&(b.rb, b.bx, b.by))));
    let beam = params.beam.min(blocks.len());
    let mut best = blocks[..beam]
        .par_iter()
        .map(|b| search.refine(b, Best::none()))
        .reduce(Best::none, Best::better);
    if params.exact {
        let mut rest = blocks[beam..].to_vec();
        rest.sort_by(|a, b| a.bound.total_cmp(&b.bound));
        for b in &rest {
            if b.bound > best.sum + SLACK {
                break;
            }
            best = search.refine(b, best);
        }
    }
    let (i, jx, jy) = best.key;
    Ok(MatchResult {
        distance: best.sum / u.len() as f64,
        transform: search.grid.transform(c, i, jx, jy),
        label: v.label.clone(),
    })
}

/// Matches against every design; ascending distance, stable for ties.
pub fn rank_designs(u: &PointSet, designs: &[PointSet], params: &SearchParams) -> Result<Vec<MatchResult>> {
    if designs.is_empty() {
        return Err(Error::Param("no designs to rank".into()));
    }
    let mut results = designs
        .par_iter()
        .map(|v| match_design(u, v, params))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(results)
}

/// Fraction of sherds whose true label is within the top `L`, for `L = 1..=n`.
pub fn cmc_curve(rankings: &[Vec<String>], truths: &[String]) -> Result<Vec<f64>> {
    if rankings.len() != truths.len() || rankings.is_empty() {
        return Err(Error::Param(format!(
            "{} rankings for {} truths",
            rankings.len(),
            truths.len()
        )));
    }
    let n = rankings.iter().map(Vec::len).max().unwrap_or(0);
    let mut hits = vec![0usize; n];
    for (r, t) in rankings.iter().zip(truths) {
        let pos = r
            .iter()
            .position(|l| l == t)
            .ok_or_else(|| Error::Label(format!("truth {t} missing from its ranking")))?;
        hits[pos] += 1;
    }
    let total = rankings.len() as f64;
    let mut acc = 0;
    Ok(hits
        .iter()
        .map(|h| {
            acc += h;
            acc as f64 / total
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(label: &str, pts: &[(f64, f64)]) -> PointSet {
        PointSet::new(label, pts.to_vec()).unwrap()
    }

    #[test]
    fn chamfer_examples() {
        let v = ps("v", &[(3.0, 4.0)]);
        let f = ExactField::new(&v).unwrap();
        assert_eq!(chamfer_directed(&ps("u", &[(0.0, 0.0)]), &f).unwrap(), 5.0);
        let f0 = ExactField::new(&ps("v", &[(0.0, 0.0)])).unwrap();
        assert_eq!(chamfer_directed(&ps("u", &[(0.0, 0.0), (1.0, 0.0)]), &f0).unwrap(), 0.5);
        assert!(matches!(chamfer_directed(&ps("u", &[]), &f0), Err(Error::EmptyPattern(_))));
    }

    #[test]
    fn raster_field_is_zero_on_pattern() {
        let v = ps("v", &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let f = RasterField::new(&v, 0.5, 2.0).unwrap();
        for &(x, y) in v.points() {
            assert!(f.distance(x, y).abs() < 1e-12);
        }
        assert!((f.distance(3.0, 0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_normalized() {
        let t = RigidTransform::new(-0.5, 0.0, 0.0);
        assert!((t.rotation() - (TAU - 0.5)).abs() < 1e-12);
        assert_eq!(RigidTransform::new(TAU, 0.0, 0.0).rotation(), 0.0);
        let (x, y) = RigidTransform::new(std::f64::consts::FRAC_PI_2, 1.0, 0.0).apply((1.0, 0.0));
        assert!((x - 1.0).abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_match_is_zero() {
        let v = ps("v", &[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (5.0, 3.0)]);
        let r = match_design(&v, &v, &SearchParams::default()).unwrap();
        assert!(r.distance < 1e-9, "{}", r.distance);
        let moved = v.transformed(&r.transform);
        for (a, b) in moved.points().iter().zip(v.points()) {
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn ranking_is_stable() {
        let v = ps("a", &[(0.0, 0.0), (1.0, 0.0), (3.0, 2.0)]);
        let mut w = v.clone();
        w.label = "b".into();
        let far = ps("c", &[(0.0, 0.0), (0.0, 7.0)]);
        let r = rank_designs(&v, &[far, v.clone(), w], &SearchParams::default()).unwrap();
        let labels: Vec<_> = r.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, ["a", "b", "c"]);
    }

    #[test]
    fn cmc_examples() {
        let r = vec![
            vec!["a".to_string(), "b".into(), "c".into()],
            vec!["b".to_string(), "c".into(), "a".into()],
        ];
        let c = cmc_curve(&r, &["a".into(), "a".into()]).unwrap();
        assert_eq!(c, vec![0.5, 0.5, 1.0]);
        assert!(matches!(cmc_curve(&r, &["a".into(), "z".into()]), Err(Error::Label(_))));
    }
}
