//! Seeded synthetic designs and sherds.
//!
//! A design is a family of locally parallel strokes (concentric wobbly rings,
//! wavy lines or chevrons) on a square canvas. A sherd is a rigidly placed
//! square crop of that design stamped into a gently curved surface, then
//! smoothed and perturbed with Gaussian noise.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imagecore::{gaussian_blur, thin, DEFAULT_DEPTH_SCALE, DEFAULT_PITCH_MM};
use crate::matching::{PointSet, RigidTransform};
use crate::skeleton::SkeletonSet;
use crate::{BinaryMap, DepthImage, FloatMap};

/// Open or closed polyline in design pixels with its groove width.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub points: Vec<(f64, f64)>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    /// Square canvas side, pixels.
    pub canvas: usize,
    pub pitch: f64,
    /// Inclusive range for the number of strokes.
    pub strokes: (usize, usize),
    /// Groove width range, pixels.
    pub width: (f64, f64),
    /// Centre-line spacing range between neighbouring strokes, pixels.
    pub spacing: (f64, f64),
}

impl Default for DesignParams {
    fn default() -> Self {
        DesignParams {
            canvas: 256,
            pitch: DEFAULT_PITCH_MM,
            strokes: (4, 7),
            width: (3.0, 8.0),
            spacing: (14.0, 24.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDesign {
    pub label: String,
    pub canvas: usize,
    pub pitch: f64,
    pub strokes: Vec<Stroke>,
    /// Thinned centre lines.
    pub mask: BinaryMap,
    /// Centre-line pixels in mm.
    pub points: PointSet,
}

const MARGIN: f64 = 6.0;

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Concentric rings or arcs sharing one radial wobble.
fn concentric(rng: &mut ChaCha8Rng, n: usize, widths: &[f64], sp: f64, canvas: f64) -> Vec<Stroke> {
    let c = (
        canvas / 2.0 + rng.random_range(-6.0..6.0),
        canvas / 2.0 + rng.random_range(-6.0..6.0),
    );
    let room = canvas / 2.0 - 6.0 - MARGIN;
    let r0 = rng.random_range(10.0..18.0);
    let sp = sp.min((room - r0 - 6.0) / (n.max(2) - 1) as f64);
    let k = rng.random_range(3..8) as f64;
    let amp = rng.random_range(0.0..(r0 / (2.0 * k)).min(4.0));
    let phase = rng.random_range(0.0..TAU);
    (0..n)
        .map(|i| {
            let r = r0 + i as f64 * sp;
            let (start, span) = if rng.random_bool(0.5) {
                (0.0, TAU)
            } else {
                (rng.random_range(0.0..TAU), rng.random_range(PI..1.8 * PI))
            };
            let steps = ((span * r) / 0.5).ceil().max(8.0) as usize;
            let points = (0..=steps)
                .map(|s| {
                    let t = start + span * s as f64 / steps as f64;
                    let rr = r + amp * (k * t + phase).sin();
                    (c.0 + rr * t.cos(), c.1 + rr * t.sin())
                })
                .collect();
            Stroke {
                points,
                width: widths[i],
            }
        })
        .collect()
}

/// Parallel offsets of a wave (sine or triangle) clipped to a central disk and rotated.
fn parallel(rng: &mut ChaCha8Rng, n: usize, widths: &[f64], sp: f64, canvas: f64, chevron: bool) -> Vec<Stroke> {
    let c = canvas / 2.0;
    let radius = c - MARGIN - 4.0;
    let lambda = rng.random_range(60.0..160.0);
    let amp = rng.random_range(0.03..0.09) * lambda;
    let phase = rng.random_range(0.0..TAU);
    let alpha = rng.random_range(0.0..PI);
    let sp = sp.min((2.0 * (radius - amp - 20.0)) / (n.max(2) - 1) as f64);
    let (sa, ca) = alpha.sin_cos();
    let wave = |x: f64| {
        let t = x / lambda * TAU + phase;
        if chevron {
            amp * (2.0 / PI) * t.sin().asin()
        } else {
            amp * t.sin()
        }
    };
    (0..n)
        .map(|i| {
            let off = (i as f64 - (n - 1) as f64 / 2.0) * sp;
            let half = ((radius - amp).powi(2) - off * off).max(100.0).sqrt();
            let frac_a = rng.random_range(0.0..0.3);
            let frac_b = rng.random_range(0.0..0.3);
            let (xa, xb) = (-half + frac_a * half, half - frac_b * half);
            let steps = ((xb - xa) / 0.5).ceil() as usize;
            let points = (0..=steps)
                .map(|s| {
                    let x = xa + (xb - xa) * s as f64 / steps as f64;
                    let y = off + wave(x);
                    (c + ca * x - sa * y, c + sa * x + ca * y)
                })
                .collect();
            Stroke {
                points,
                width: widths[i],
            }
        })
        .collect()
}

fn rasterize_centrelines(strokes: &[Stroke], canvas: usize) -> BinaryMap {
    let mut m = BinaryMap::new(canvas, canvas);
    let mut put = |x: f64, y: f64| {
        let (px, py) = (x.round(), y.round());
        if px >= 0.0 && py >= 0.0 && (px as usize) < canvas && (py as usize) < canvas {
            m.set(px as usize, py as usize, true);
        }
    };
    for s in strokes {
        for seg in s.points.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let steps = ((b.0 - a.0).hypot(b.1 - a.1) / 0.25).ceil().max(1.0) as usize;
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                put(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
            }
        }
        if let [p] = s.points.as_slice() {
            put(p.0, p.1);
        }
    }
    m
}

/// Deterministic design for `seed`.
pub fn synth_design(seed: u64, params: &DesignParams) -> Result<SynthDesign> {
    let (lo, hi) = params.strokes;
    if lo > hi || params.width.0 < 1.0 || params.width.1 < params.width.0 {
        return Err(Error::Param("stroke count or width range is empty or below 1 px".into()));
    }
    if params.spacing.0 < params.width.1 + 4.0 || params.canvas < 64 || !(params.pitch > 0.0) {
        return Err(Error::Param("spacing must exceed the widest stroke by 4 px; canvas >= 64".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(lo..=hi);
    let widths: Vec<f64> = (0..n).map(|_| uniform(&mut rng, params.width)).collect();
    let sp = uniform(&mut rng, params.spacing);
    let canvas = params.canvas as f64;
    let strokes = if n == 0 {
        Vec::new()
    } else {
        match rng.random_range(0..3) {
            0 => concentric(&mut rng, n, &widths, sp, canvas),
            1 => parallel(&mut rng, n, &widths, sp, canvas, false),
            _ => parallel(&mut rng, n, &widths, sp, canvas, true),
        }
    };
    let mask = thin(&rasterize_centrelines(&strokes, params.canvas));
    let label = format!("D{seed:03}");
    let points = PointSet::from_skeleton(&SkeletonSet::from_mask(&mask), params.pitch, label.clone());
    Ok(SynthDesign {
        label,
        canvas: params.canvas,
        pitch: params.pitch,
        strokes,
        mask,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    /// Square crop side, pixels.
    pub crop: usize,
    /// Groove depth, mm.
    pub stamp_depth: f64,
    /// Peak amplitude of the low-frequency base surface, mm.
    pub base_amplitude: f64,
    /// Relative loss of groove depth where the paddle fits poorly, in `[0, 1]`.
    pub fit_variation: f64,
    /// Width of the linear groove wall, pixels; 0 gives vertical walls.
    pub taper: f64,
    /// Gaussian smoothing applied after stamping, pixels; 0 disables.
    pub smoothing_sigma: f64,
    /// Additive Gaussian noise, mm.
    pub noise_sigma: f64,
    /// Depth values are rounded to multiples of this, mm; 0 disables.
    pub quantum: f64,
    /// Rotation and design-frame centre of the crop; random when absent.
    pub placement: Option<(f64, (f64, f64))>,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            crop: 128,
            stamp_depth: 0.3,
            base_amplitude: 0.5,
            fit_variation: 0.3,
            taper: 1.0,
            smoothing_sigma: 1.0,
            noise_sigma: 0.03,
            quantum: DEFAULT_DEPTH_SCALE,
            placement: None,
        }
    }
}

impl SynthParams {
    /// Flat, noiseless, unsmoothed sherd with vertical groove walls.
    pub fn noiseless(seed: u64) -> Self {
        SynthParams {
            seed,
            base_amplitude: 0.0,
            fit_variation: 0.0,
            taper: 0.0,
            smoothing_sigma: 0.0,
            noise_sigma: 0.0,
            ..SynthParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSherd {
    pub depth: DepthImage,
    pub gt_mask: BinaryMap,
    pub gt_skeleton: SkeletonSet,
    /// Maps sherd coordinates (mm) onto design coordinates (mm).
    pub truth: RigidTransform,
    pub label: String,
}

const BUCKET: f64 = 8.0;

/// Segment lookup by canvas cell for signed distance to the widened strokes.
struct StrokeIndex<'a> {
    strokes: &'a [Stroke],
    cells: Vec<Vec<(usize, usize)>>,
    side: usize,
}

impl<'a> StrokeIndex<'a> {
    fn new(strokes: &'a [Stroke], canvas: usize, reach: f64) -> Self {
        let side = (canvas as f64 / BUCKET).ceil() as usize + 1;
        let mut cells = vec![Vec::new(); side * side];
        let cell = |v: f64| ((v / BUCKET).floor().max(0.0) as usize).min(side - 1);
        for (si, s) in strokes.iter().enumerate() {
            let r = s.width / 2.0 + reach;
            for (k, seg) in s.points.windows(2).enumerate() {
                let (a, b) = (seg[0], seg[1]);
                for cy in cell(a.1.min(b.1) - r)..=cell(a.1.max(b.1) + r) {
                    for cx in cell(a.0.min(b.0) - r)..=cell(a.0.max(b.0) + r) {
                        cells[cy * side + cx].push((si, k));
                    }
                }
            }
        }
        StrokeIndex { strokes, cells, side }
    }

    /// Distance to the nearest stroke edge, negative inside; +inf when out of reach.
    fn signed(&self, p: (f64, f64)) -> f64 {
        if p.0 < 0.0 || p.1 < 0.0 {
            return f64::INFINITY;
        }
        let (cx, cy) = ((p.0 / BUCKET) as usize, (p.1 / BUCKET) as usize);
        if cx >= self.side || cy >= self.side {
            return f64::INFINITY;
        }
        self.cells[cy * self.side + cx]
            .iter()
            .map(|&(si, k)| {
                let s = &self.strokes[si];
                segment_distance(p, s.points[k], s.points[k + 1]) - s.width / 2.0
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Sum of a few long-wavelength cosines scaled to peak `amp`.
fn low_frequency(rng: &mut ChaCha8Rng, amp: f64, wavelengths: (f64, f64)) -> impl Fn(f64, f64) -> f64 {
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let dir = rng.random_range(0.0..TAU);
            let lambda = rng.random_range(wavelengths.0..wavelengths.1);
            (dir.cos(), dir.sin(), TAU / lambda, rng.random_range(0.0..TAU))
        })
        .collect();
    move |x, y| {
        amp / 3.0
            * waves
                .iter()
                .map(|&(c, s, k, ph)| (k * (c * x + s * y) + ph).cos())
                .sum::<f64>()
    }
}

const PLACEMENT_TRIES: usize = 64;
/// Random placements must show at least this fraction of groove pixels.
const MIN_COVER: f64 = 0.06;

fn check_params(p: &SynthParams) -> Result<()> {
    let nonneg = [
        p.stamp_depth,
        p.base_amplitude,
        p.taper,
        p.smoothing_sigma,
        p.noise_sigma,
        p.quantum,
    ];
    if nonneg.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || !(0.0..=1.0).contains(&p.fit_variation) {
        return Err(Error::Param("synthesis parameters must be finite and non-negative".into()));
    }
    if p.crop < 8 {
        return Err(Error::Param("crop must be at least 8 px".into()));
    }
    Ok(())
}

/// Stamps a rigidly placed crop of `design` into a synthetic surface.
pub fn synth_sherd(design: &SynthDesign, params: &SynthParams) -> Result<SynthSherd> {
    check_params(params)?;
    let crop = params.crop;
    let half_diag = (crop - 1) as f64 / 2.0 * std::f64::consts::SQRT_2;
    let canvas = design.canvas as f64;
    let (lo, hi) = (half_diag, canvas - 1.0 - half_diag);
    if hi < lo {
        return Err(Error::Param(format!(
            "a {crop}px crop does not fit a {}px design at every rotation",
            design.canvas
        )));
    }
    let reach = params.taper + 1.0;
    let index = StrokeIndex::new(&design.strokes, design.canvas, reach);
    let qc = (crop - 1) as f64 / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let signed_at = |theta: f64, c: (f64, f64)| {
        let (s, co) = theta.sin_cos();
        FloatMap::from_fn(crop, crop, |x, y| {
            let (dx, dy) = (x as f64 - qc, y as f64 - qc);
            index.signed((co * dx - s * dy + c.0, s * dx + co * dy + c.1))
        })
    };

    let (theta, centre, signed) = match params.placement {
        Some((theta, c)) => {
            if c.0 < lo || c.0 > hi || c.1 < lo || c.1 > hi {
                return Err(Error::Param(format!("crop centre {c:?} leaves the design canvas")));
            }
            (theta, c, signed_at(theta, c))
        }
        None => {
            let mut chosen = None;
            for _ in 0..PLACEMENT_TRIES {
                let theta = rng.random_range(0.0..TAU);
                let c = (rng.random_range(lo..=hi), rng.random_range(lo..=hi));
                let v = signed_at(theta, c);
                let cover = v.data().iter().filter(|&&d| d <= 0.0).count() as f64 / v.len() as f64;
                if cover >= MIN_COVER {
                    chosen = Some((theta, c, v));
                    break;
                }
            }
            chosen.ok_or_else(|| Error::Param(format!("design {} too sparse for a {crop}px crop", design.label)))?
        }
    };

    let base = low_frequency(&mut rng, params.base_amplitude, (150.0, 400.0));
    let fit = low_frequency(&mut rng, 1.0, (100.0, 250.0));
    let h = params.stamp_depth;
    let surface = FloatMap::from_fn(crop, crop, |x, y| {
        let v = *signed.get(x, y);
        let profile = if params.taper > 0.0 {
            (0.5 - v / (2.0 * params.taper)).clamp(0.0, 1.0)
        } else if v <= 0.0 {
            1.0
        } else {
            0.0
        };
        let (fx, fy) = (x as f64, y as f64);
        let fit_loss = params.fit_variation * (0.5 + 0.5 * fit(fx, fy));
        base(fx, fy) + h * (1.0 - fit_loss.clamp(0.0, 1.0)) * profile
    });
    let mut depth = if params.smoothing_sigma > 0.0 {
        let k = 2 * (3.0 * params.smoothing_sigma).ceil() as usize + 1;
        gaussian_blur(&surface, params.smoothing_sigma, k)?
    } else {
        surface
    };
    if params.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma).map_err(|e| Error::Param(e.to_string()))?;
        for v in depth.data_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    if params.quantum > 0.0 {
        for v in depth.data_mut() {
            *v = (*v / params.quantum).round() * params.quantum;
        }
    }

    let gt_mask = signed.map(|&v| v <= 0.0);
    let gt_skeleton = SkeletonSet::from_mask(&thin(&gt_mask));
    let pitch = design.pitch;
    let r = RigidTransform::new(theta, 0.0, 0.0);
    let rq = r.apply((qc, qc));
    let truth = RigidTransform::new(theta, (centre.0 - rq.0) * pitch, (centre.1 - rq.1) * pitch);
    Ok(SynthSherd {
        depth: DepthImage::new(depth, pitch)?,
        gt_mask,
        gt_skeleton,
        truth,
        label: design.label.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::count_components8;

    #[test]
    fn deterministic() {
        let p = DesignParams::default();
        assert_eq!(synth_design(7, &p).unwrap(), synth_design(7, &p).unwrap());
        let d = synth_design(7, &p).unwrap();
        let s = SynthParams { seed: 3, ..SynthParams::default() };
        assert_eq!(synth_sherd(&d, &s).unwrap(), synth_sherd(&d, &s).unwrap());
    }

    #[test]
    fn stroke_count_is_component_count() {
        for seed in 0..12 {
            for n in [1, 3, 5] {
                let p = DesignParams {
                    strokes: (n, n),
                    ..DesignParams::default()
                };
                let d = synth_design(seed, &p).unwrap();
                assert_eq!(count_components8(&d.mask), n, "seed {seed} n {n}");
            }
        }
    }

    #[test]
    fn zero_strokes_is_empty() {
        let d = synth_design(1, &DesignParams { strokes: (0, 0), ..DesignParams::default() }).unwrap();
        assert!(d.points.is_empty());
    }

    #[test]
    fn noiseless_depth_is_exact_stamp() {
        let d = synth_design(4, &DesignParams::default()).unwrap();
        let s = synth_sherd(&d, &SynthParams::noiseless(9)).unwrap();
        for (v, &g) in s.depth.map().data().iter().zip(s.gt_mask.data()) {
            assert_eq!(*v, if g { 0.3 } else { 0.0 });
        }
        assert!(s.gt_mask.count() > 0);
    }

    #[test]
    fn truth_maps_sherd_skeleton_onto_design() {
        let d = synth_design(2, &DesignParams::default()).unwrap();
        let s = synth_sherd(&d, &SynthParams::noiseless(5)).unwrap();
        let u = PointSet::from_skeleton(&s.gt_skeleton, d.pitch, "u").transformed(&s.truth);
        let near = u
            .points()
            .iter()
            .filter(|&&(x, y)| d.points.points().iter().any(|&(a, b)| (a - x).hypot(b - y) < 0.3))
            .count();
        assert!(near as f64 > 0.9 * u.len() as f64, "{near} of {}", u.len());
    }

    #[test]
    fn placement_outside_is_rejected() {
        let d = synth_design(2, &DesignParams::default()).unwrap();
        let s = SynthParams {
            placement: Some((0.0, (10.0, 10.0))),
            ..SynthParams::default()
        };
        assert!(matches!(synth_sherd(&d, &s), Err(Error::Param(_))));
        let big = SynthParams { crop: 240, ..SynthParams::default() };
        assert!(matches!(synth_sherd(&d, &big), Err(Error::Param(_))));
    }
}
