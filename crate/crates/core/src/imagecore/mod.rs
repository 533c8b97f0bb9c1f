//! Raster types and the low-level kernels shared by every stage.

mod distance;
mod filter;
pub mod pnm;
mod thinning;

pub use distance::distance_transform;
pub use filter::{
    bilinear_upsample, box_downsample2, crop, gaussian_blur, gaussian_kernel, pad_edge,
    upsample_pow2,
};
pub use pnm::{
    decode_pgm, encode_pgm, encode_ppm, load_binary_pgm, load_depth_pgm, load_depth_pgm_with,
    overlay_rgb, parse_key_values, read_pgm, save_binary_pgm, save_depth_pgm, save_float_pgm,
    save_overlay_ppm, sidecar_path, write_atomic, write_pgm, DepthEncoding, Pgm, DEFAULT_DEPTH_SCALE,
};
pub use thinning::{count_components8, thin};

use crate::error::{Error, Result};

/// Row-major 2-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Real-valued raster (score maps, distance maps, heat maps).
pub type FloatMap = Raster<f64>;
/// Boolean mask.
pub type BinaryMap = Raster<bool>;

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T: Clone + Default> Raster<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::default())
    }
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dim(format!(
                "{}x{} raster needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = y * self.width + x;
        self.data[i] = value;
    }

    /// Bounds-checked access with signed coordinates.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> Option<&T> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(&self.data[y as usize * self.width + x as usize])
        }
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Pixelwise combination of two equally sized rasters.
    pub fn map_with<U: Copy, V>(&self, other: &Raster<U>, mut f: impl FnMut(T, U) -> V) -> Raster<V>
    where
        T: Copy,
    {
        assert!(self.same_dims(other), "map_with on rasters of different size");
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn ensure_same_dims<U>(&self, other: &Raster<U>, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::Dim(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

impl BinaryMap {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Coordinates of the set pixels in row-major order.
    pub fn points(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.data[y * self.width + x] {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &BinaryMap) -> bool {
        self.same_dims(other) && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

impl FloatMap {
    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Default lateral sampling of the scanned depth maps, in mm per pixel.
pub const DEFAULT_PITCH_MM: f64 = 0.1;

/// Depth map in millimetres at a fixed lateral pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pitch: f64,
    depth: FloatMap,
}

impl DepthImage {
    pub fn new(depth: FloatMap, pitch: f64) -> Result<Self> {
        if depth.width() == 0 || depth.height() == 0 {
            return Err(Error::Param("depth image must be at least 1x1".into()));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::Param(format!("pitch must be positive, got {pitch}")));
        }
        if !depth.all_finite() {
            return Err(Error::Param("depth values must be finite".into()));
        }
        Ok(DepthImage { pitch, depth })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>, pitch: f64) -> Result<Self> {
        Self::new(FloatMap::from_vec(width, height, data)?, pitch)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.depth.height()
    }

    #[inline]
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        *self.depth.get(x, y)
    }

    pub fn map(&self) -> &FloatMap {
        &self.depth
    }

    pub fn into_map(self) -> FloatMap {
        self.depth
    }
}
