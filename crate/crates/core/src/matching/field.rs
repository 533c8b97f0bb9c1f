use crate::error::{Error, Result};
use crate::imagecore::distance_transform;
use crate::{BinaryMap, FloatMap};

use super::PointSet;

/// Distance to a fixed pattern, queryable anywhere in the plane (mm).
pub trait DistanceField: Sync {
    fn distance(&self, x: f64, y: f64) -> f64;
    /// Lipschitz constant of `distance`, used for search bounds.
    fn lipschitz(&self) -> f64;
}

/// Euclidean distance transform of the pattern rasterized at `pitch`, sampled
/// bilinearly and clamped to the grid.
#[derive(Debug, Clone)]
pub struct RasterField {
    origin: (f64, f64),
    pitch: f64,
    dt: FloatMap,
}

impl RasterField {
    /// Grid covers the pattern's bounding box plus `margin` mm on each side.
    pub fn new(v: &PointSet, pitch: f64, margin: f64) -> Result<Self> {
        if !(pitch > 0.0) || !(margin >= 0.0) {
            return Err(Error::Param("pitch must be positive, margin non-negative".into()));
        }
        let (lo, hi) = v.bounds()?;
        // whole cells of margin keep the grid aligned with the pattern's corner
        let margin = (margin / pitch).ceil() * pitch;
        let origin = (lo.0 - margin, lo.1 - margin);
        let w = ((hi.0 + margin - origin.0) / pitch).ceil() as usize + 1;
        let h = ((hi.1 + margin - origin.1) / pitch).ceil() as usize + 1;
        let mut mask = BinaryMap::new(w, h);
        for &(x, y) in v.points() {
            let cx = (((x - origin.0) / pitch).round() as usize).min(w - 1);
            let cy = (((y - origin.1) / pitch).round() as usize).min(h - 1);
            mask.set(cx, cy, true);
        }
        let dt = distance_transform(&mask).map(|&d| d * pitch);
        Ok(RasterField { origin, pitch, dt })
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn grid(&self) -> &FloatMap {
        &self.dt
    }
}

impl DistanceField for RasterField {
    fn distance(&self, x: f64, y: f64) -> f64 {
        let (w, h) = self.dt.dims();
        let gx = ((x - self.origin.0) / self.pitch).clamp(0.0, (w - 1) as f64);
        let gy = ((y - self.origin.1) / self.pitch).clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
        let top = self.dt.get(x0, y0) * (1.0 - fx) + self.dt.get(x1, y0) * fx;
        let bottom = self.dt.get(x0, y1) * (1.0 - fx) + self.dt.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    fn lipschitz(&self) -> f64 {
        std::f64::consts::SQRT_2
    }
}

/// Nearest-neighbour distance by scanning every pattern point.
#[derive(Debug, Clone)]
pub struct ExactField {
    points: Vec<(f64, f64)>,
}

impl ExactField {
    pub fn new(v: &PointSet) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::EmptyPattern(v.label().to_string()));
        }
        Ok(ExactField {
            points: v.points().to_vec(),
        })
    }
}

impl DistanceField for ExactField {
    fn distance(&self, x: f64, y: f64) -> f64 {
        self.points
            .iter()
            .map(|&(a, b)| (a - x).hypot(b - y))
            .fold(f64::INFINITY, f64::min)
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }
}
