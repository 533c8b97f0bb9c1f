use crate::error::Result;
use crate::imagecore::{gaussian_blur, DEFAULT_DEPTH_SCALE};
use crate::skeleton::SkeletonSet;
use crate::{BinaryMap, DepthImage, FloatMap};

pub const DOG_KSIZE: usize = 45;
pub const DOG_SIGMA_WIDE: f64 = 11.0;
pub const DOG_SIGMA_NARROW: f64 = 5.0;
/// One depth level of the default 16-bit encoding, in mm.
pub const DOG_THRESHOLD: f64 = DEFAULT_DEPTH_SCALE;
pub const DILATION_RADIUS: usize = 15;

/// `blur(σ=5) - blur(σ=11)`, both with 45-tap kernels, so deeper curves respond positively.
pub fn dog_response(depth: &DepthImage) -> Result<FloatMap> {
    let narrow = gaussian_blur(depth.map(), DOG_SIGMA_NARROW, DOG_KSIZE)?;
    let wide = gaussian_blur(depth.map(), DOG_SIGMA_WIDE, DOG_KSIZE)?;
    Ok(narrow.map_with(&wide, |a, b| a - b))
}

/// DoG response above `threshold` (mm).
pub fn dog_baseline_with(depth: &DepthImage, threshold: f64) -> Result<BinaryMap> {
    Ok(dog_response(depth)?.map(|&v| v > threshold))
}

pub fn dog_baseline(depth: &DepthImage) -> Result<BinaryMap> {
    dog_baseline_with(depth, DOG_THRESHOLD)
}

/// Union of Euclidean disks of `radius` around every skeleton pixel.
pub fn dilate_ablation(p: &SkeletonSet, radius: usize) -> BinaryMap {
    let (w, h) = p.dims();
    let mut out = BinaryMap::new(w, h);
    let r = radius as isize;
    for &(x, y) in p.points() {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy > r * r {
                    continue;
                }
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
    }
    out
}
