//! Binary Netpbm I/O: P5 depth maps and masks, P6 overlays.
//!
//! Depth maps carry an optional sidecar next to the image (same stem,
//! extension `hdr`) with UTF-8 `key=value` lines. Recognised keys:
//!
//! - `pitch`: mm per pixel (default 0.1)
//! - `depth_scale`: mm per grey level (default 0.01)
//! - `depth_offset`: mm added after scaling (default 0)
//!
//! so that `depth_mm = depth_offset + raw * depth_scale`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{BinaryMap, DepthImage, FloatMap, DEFAULT_PITCH_MM};
use crate::error::{Error, Result};

/// Default depth quantization for grey levels, in mm per level.
pub const DEFAULT_DEPTH_SCALE: f64 = 0.01;

/// How depth values map to grey levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthEncoding {
    pub depth_scale: f64,
    pub depth_offset: f64,
    pub maxval: u16,
}

impl Default for DepthEncoding {
    fn default() -> Self {
        DepthEncoding {
            depth_scale: DEFAULT_DEPTH_SCALE,
            depth_offset: 0.0,
            maxval: u16::MAX,
        }
    }
}

/// Raw decoded P5 image.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format(format!("expected {what} in header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad {what} in header")))
    }
}

fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<(usize, usize, usize, usize)> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::Format(format!(
            "expected magic {}",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} out of range")));
    }
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => Ok((width, height, maxval, cur.pos + 1)),
        _ => Err(Error::Format("missing whitespace after maxval".into())),
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    let (width, height, maxval, offset) = parse_header(bytes, b"P5")?;
    let n = width * height;
    let wide = maxval > 255;
    let need = if wide { 2 * n } else { n };
    let payload = &bytes[offset..];
    if payload.len() < need {
        return Err(Error::Truncated(format!(
            "expected {need} sample bytes, found {}",
            payload.len()
        )));
    }
    let samples: Vec<u16> = if wide {
        payload[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        payload[..n].iter().map(|&b| b as u16).collect()
    };
    if samples.iter().any(|&s| s as usize > maxval) {
        return Err(Error::Format("sample exceeds maxval".into()));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

pub fn encode_pgm(pgm: &Pgm) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval > 255 {
        for &s in &pgm.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(pgm.samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn write_pgm(pgm: &Pgm, path: &Path) -> Result<()> {
    write_atomic(path, &encode_pgm(pgm))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = tmp_path(path);
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("hdr")
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_f64(map: &BTreeMap<String, String>, key: &str, default: f64) -> Result<f64> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Format(format!("sidecar key {key}: bad value {v:?}"))),
    }
}

/// Loads a depth map, honouring the sidecar header when present.
pub fn load_depth_pgm(path: &Path) -> Result<DepthImage> {
    load_depth_pgm_with(path, DEFAULT_DEPTH_SCALE)
}

/// Like [`load_depth_pgm`] but with an explicit fallback `depth_scale`.
pub fn load_depth_pgm_with(path: &Path, default_scale: f64) -> Result<DepthImage> {
    let pgm = read_pgm(path)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        parse_key_values(&text)?
    } else {
        BTreeMap::new()
    };
    let pitch = parse_f64(&meta, "pitch", DEFAULT_PITCH_MM)?;
    let scale = parse_f64(&meta, "depth_scale", default_scale)?;
    let offset = parse_f64(&meta, "depth_offset", 0.0)?;
    if scale <= 0.0 {
        return Err(Error::Format(format!("depth_scale must be positive, got {scale}")));
    }
    let data = pgm
        .samples
        .iter()
        .map(|&s| offset + s as f64 * scale)
        .collect();
    DepthImage::from_vec(pgm.width, pgm.height, data, pitch)
}

/// Quantizes and writes a depth map plus its sidecar header.
pub fn save_depth_pgm(depth: &DepthImage, path: &Path, enc: &DepthEncoding) -> Result<()> {
    if !(enc.depth_scale > 0.0) || enc.maxval == 0 {
        return Err(Error::Param("depth encoding needs positive scale and maxval".into()));
    }
    let samples = depth
        .map()
        .data()
        .iter()
        .map(|&d| {
            ((d - enc.depth_offset) / enc.depth_scale)
                .round()
                .clamp(0.0, enc.maxval as f64) as u16
        })
        .collect();
    let pgm = Pgm {
        width: depth.width(),
        height: depth.height(),
        maxval: enc.maxval,
        samples,
    };
    write_pgm(&pgm, path)?;
    let header = format!(
        "pitch={}\ndepth_scale={}\ndepth_offset={}\n",
        depth.pitch(),
        enc.depth_scale,
        enc.depth_offset
    );
    write_atomic(&sidecar_path(path), header.as_bytes())
}

/// Loads a mask; any non-zero sample is set.
pub fn load_binary_pgm(path: &Path) -> Result<BinaryMap> {
    let pgm = read_pgm(path)?;
    BinaryMap::from_vec(
        pgm.width,
        pgm.height,
        pgm.samples.iter().map(|&s| s != 0).collect(),
    )
}

/// Writes a mask as 8-bit 0/255.
pub fn save_binary_pgm(mask: &BinaryMap, path: &Path) -> Result<()> {
    let pgm = Pgm {
        width: mask.width(),
        height: mask.height(),
        maxval: 255,
        samples: mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect(),
    };
    write_pgm(&pgm, path)
}

/// Writes a map linearly rescaled from `[lo, hi]` to 8 bits.
pub fn save_float_pgm(map: &FloatMap, lo: f64, hi: f64, path: &Path) -> Result<()> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pgm = Pgm {
        width: map.width(),
        height: map.height(),
        maxval: 255,
        samples: map
            .data()
            .iter()
            .map(|&v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u16)
            .collect(),
    };
    write_pgm(&pgm, path)
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

/// Renders depth as normalized grey with mask pixels painted pure red.
pub fn overlay_rgb(depth: &DepthImage, mask: &BinaryMap) -> Result<Vec<[u8; 3]>> {
    depth.map().ensure_same_dims(mask, "overlay")?;
    let (lo, hi) = depth.map().min_max();
    let span = hi - lo;
    Ok(depth
        .map()
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&d, &m)| {
            if m {
                [255, 0, 0]
            } else {
                let g = if span > 0.0 {
                    ((d - lo) / span * 255.0).round() as u8
                } else {
                    0
                };
                [g, g, g]
            }
        })
        .collect())
}

pub fn save_overlay_ppm(depth: &DepthImage, mask: &BinaryMap, path: &Path) -> Result<()> {
    let rgb = overlay_rgb(depth, mask)?;
    write_atomic(path, &encode_ppm(depth.width(), depth.height(), &rgb))
}
