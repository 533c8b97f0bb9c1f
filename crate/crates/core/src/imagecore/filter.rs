use super::FloatMap;
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian taps of odd length `ksize`.
pub fn gaussian_kernel(sigma: f64, ksize: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Param(format!("sigma must be positive, got {sigma}")));
    }
    if ksize % 2 == 0 {
        return Err(Error::Param(format!("kernel size must be odd, got {ksize}")));
    }
    let r = (ksize / 2) as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / sum).collect())
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable 1-D pass with edge replication. Each output is written as
/// `v[i] + sum(k_j * (v[i+j] - v[i]))`, which equals the plain weighted sum for a
/// normalized kernel but keeps constant inputs bit-exact.
fn convolve_axis(src: &FloatMap, taps: &[f64], horizontal: bool) -> FloatMap {
    let (w, h) = src.dims();
    let r = (taps.len() / 2) as isize;
    let data = src.data();
    FloatMap::from_fn(w, h, |x, y| {
        let center = data[y * w + x];
        let mut acc = 0.0;
        for (j, &t) in taps.iter().enumerate() {
            let off = j as isize - r;
            let v = if horizontal {
                data[y * w + clamp_index(x as isize + off, w)]
            } else {
                data[clamp_index(y as isize + off, h) * w + x]
            };
            acc += t * (v - center);
        }
        center + acc
    })
}

/// Gaussian blur with an odd `ksize`×`ksize` separable kernel and edge replication.
pub fn gaussian_blur(img: &FloatMap, sigma: f64, ksize: usize) -> Result<FloatMap> {
    let taps = gaussian_kernel(sigma, ksize)?;
    if img.is_empty() {
        return Ok(img.clone());
    }
    let tmp = convolve_axis(img, &taps, true);
    Ok(convolve_axis(&tmp, &taps, false))
}

/// One-axis factor-2 bilinear expansion. Equivalent to a stride-2 transposed
/// convolution with taps `[1/4, 3/4, 3/4, 1/4]` over the edge-replicated input,
/// cropped so output sample `2i` and `2i+1` straddle input sample `i`.
fn upsample_axis(src: &FloatMap, horizontal: bool) -> FloatMap {
    let (w, h) = src.dims();
    let data = src.data();
    let (ow, oh) = if horizontal { (2 * w, h) } else { (w, 2 * h) };
    FloatMap::from_fn(ow, oh, |x, y| {
        let (i, n, odd) = if horizontal {
            (x / 2, w, x % 2 == 1)
        } else {
            (y / 2, h, y % 2 == 1)
        };
        let j = if odd {
            clamp_index(i as isize + 1, n)
        } else {
            clamp_index(i as isize - 1, n)
        };
        let (a, b) = if horizontal {
            (data[y * w + i], data[y * w + j])
        } else {
            (data[i * w + x], data[j * w + x])
        };
        a + 0.25 * (b - a)
    })
}

/// Factor-2 bilinear upsampling (the fixed-kernel decoder). Output is `2w`×`2h`.
pub fn bilinear_upsample(map: &FloatMap, factor: usize) -> Result<FloatMap> {
    if factor != 2 {
        return Err(Error::Param(format!(
            "bilinear_upsample supports factor 2, got {factor}; compose for larger factors"
        )));
    }
    if map.is_empty() {
        return Err(Error::Param("cannot upsample an empty map".into()));
    }
    Ok(upsample_axis(&upsample_axis(map, true), false))
}

/// Applies the factor-2 decoder `levels` times and crops the top-left
/// `width`×`height` region.
pub fn upsample_pow2(map: &FloatMap, levels: u32, width: usize, height: usize) -> Result<FloatMap> {
    let mut cur = map.clone();
    for _ in 0..levels {
        cur = bilinear_upsample(&cur, 2)?;
    }
    crop(&cur, width, height)
}

/// Top-left crop.
pub fn crop(map: &FloatMap, width: usize, height: usize) -> Result<FloatMap> {
    if width > map.width() || height > map.height() {
        return Err(Error::Dim(format!(
            "cannot crop {}x{} to {}x{}",
            map.width(),
            map.height(),
            width,
            height
        )));
    }
    Ok(FloatMap::from_fn(width, height, |x, y| *map.get(x, y)))
}

/// Extends the map to `width`×`height` by replicating the last row and column.
pub fn pad_edge(map: &FloatMap, width: usize, height: usize) -> Result<FloatMap> {
    if width < map.width() || height < map.height() || map.is_empty() {
        return Err(Error::Dim(format!(
            "cannot pad {}x{} to {}x{}",
            map.width(),
            map.height(),
            width,
            height
        )));
    }
    let (w, h) = map.dims();
    Ok(FloatMap::from_fn(width, height, |x, y| {
        *map.get(x.min(w - 1), y.min(h - 1))
    }))
}

/// 2×2 block average; odd trailing rows/columns average the available samples.
pub fn box_downsample2(map: &FloatMap) -> FloatMap {
    let (w, h) = map.dims();
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    FloatMap::from_fn(ow, oh, |x, y| {
        let mut sum = 0.0;
        let mut n = 0.0;
        for dy in 0..2 {
            for dx in 0..2 {
                let (sx, sy) = (2 * x + dx, 2 * y + dy);
                if sx < w && sy < h {
                    sum += *map.get(sx, sy);
                    n += 1.0;
                }
            }
        }
        sum / n
    })
}
