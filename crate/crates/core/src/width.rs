//! Curve width recovery around refined skeleton pixels.
//!
//! Each skeleton pixel claims the part of its disk (radius `2^s`, `s` from the
//! scale map) whose depth is at least halfway between the pixel's own depth
//! and the disk minimum. Claims only ever set pixels.

use crate::error::{Error, Result};
use crate::scorer::ScaleMap;
use crate::skeleton::SkeletonSet;
use crate::{BinaryMap, DepthImage};

/// Disk radius in pixels for scale index `s`.
pub fn disk_radius(s: u8) -> usize {
    1usize << s
}

pub fn recover_width(depth: &DepthImage, p: &SkeletonSet, scales: &ScaleMap) -> Result<BinaryMap> {
    let dims = (depth.width(), depth.height());
    if p.dims() != dims || scales.dims() != dims {
        return Err(Error::Dim(format!(
            "depth {dims:?}, skeleton {:?}, scale map {:?}",
            p.dims(),
            scales.dims()
        )));
    }
    let (w, h) = dims;
    let mut out = BinaryMap::new(w, h);
    let mut disk = Vec::new();
    for &(x, y) in p.points() {
        let s = *scales.get(x, y);
        if !(1..=3).contains(&s) {
            return Err(Error::Param(format!("scale {s} at ({x},{y}) not in 1..=3")));
        }
        let r = disk_radius(s) as isize;
        disk.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy > r * r {
                    continue;
                }
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    disk.push((nx as usize, ny as usize));
                }
            }
        }
        let m = disk
            .iter()
            .map(|&(a, b)| depth.at(a, b))
            .fold(f64::INFINITY, f64::min);
        let cut = (depth.at(x, y) + m) / 2.0;
        for &(a, b) in &disk {
            if depth.at(a, b) >= cut {
                out.set(a, b, true);
            }
        }
    }
    Ok(out)
}
