//! Synthetic corpora and their on-disk layout:
//!
//! ```text
//! <dir>/config.txt                 generation parameters
//! <dir>/depth_XXXX.pgm (+ .hdr)    16-bit depth with scale/offset sidecar
//! <dir>/gt_XXXX.pgm                ground-truth curve mask
//! <dir>/meta_XXXX.txt              label and placement (key=value)
//! <dir>/designs/labels.txt         "<file> <label>" per line
//! <dir>/designs/<label>.txt        "x y" per line, mm
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{
    load_binary_pgm, load_depth_pgm, parse_key_values, save_binary_pgm, save_depth_pgm, write_atomic, DepthEncoding,
};
use crate::matching::{PointSet, RigidTransform};
use crate::{BinaryMap, DepthImage};

use super::synth::{synth_design, synth_sherd, DesignParams, SynthDesign, SynthParams};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub n_designs: usize,
    /// Sherds cut from each design.
    pub n_sherds: usize,
    pub seed: u64,
    pub design: DesignParams,
    /// Template for every sherd; its seed and placement are overridden.
    pub sherd: SynthParams,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_designs: 20,
            n_sherds: 3,
            seed: 0,
            design: DesignParams::default(),
            sherd: SynthParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    /// Four-digit index used in the file names.
    pub name: String,
    pub depth: DepthImage,
    pub gt_mask: BinaryMap,
    pub label: Option<String>,
    pub truth: Option<RigidTransform>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub items: Vec<CorpusItem>,
    pub designs: Vec<PointSet>,
}

pub fn design_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1000).wrapping_add(i as u64)
}

pub fn sherd_seed(seed: u64, i: usize, j: usize) -> u64 {
    seed.wrapping_mul(1_000_000).wrapping_add(i as u64 * 1000 + j as u64)
}

pub fn generate_designs(cfg: &CorpusConfig) -> Result<Vec<SynthDesign>> {
    (0..cfg.n_designs)
        .into_par_iter()
        .map(|i| synth_design(design_seed(cfg.seed, i), &cfg.design))
        .collect()
}

pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    if cfg.n_designs == 0 {
        return Err(Error::Param("corpus needs at least one design".into()));
    }
    let designs = generate_designs(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_designs)
        .flat_map(|i| (0..cfg.n_sherds).map(move |j| (i, j)))
        .collect();
    let items = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let params = SynthParams {
                seed: sherd_seed(cfg.seed, i, j),
                placement: None,
                ..cfg.sherd.clone()
            };
            let s = synth_sherd(&designs[i], &params)?;
            Ok(CorpusItem {
                name: format!("{k:04}"),
                depth: s.depth,
                gt_mask: s.gt_mask,
                label: Some(s.label),
                truth: Some(s.truth),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus {
        items,
        designs: designs.into_iter().map(|d| d.points).collect(),
    })
}

/// `key=value` lines describing the generator settings.
pub fn config_text(cfg: &CorpusConfig) -> String {
    let d = &cfg.design;
    let s = &cfg.sherd;
    let mut t = String::new();
    let mut kv = |k: &str, v: String| writeln!(t, "{k}={v}").expect("write to string");
    kv("n_designs", cfg.n_designs.to_string());
    kv("n_sherds", cfg.n_sherds.to_string());
    kv("seed", cfg.seed.to_string());
    kv("canvas", d.canvas.to_string());
    kv("pitch", d.pitch.to_string());
    kv("strokes", format!("{},{}", d.strokes.0, d.strokes.1));
    kv("stroke_width", format!("{},{}", d.width.0, d.width.1));
    kv("spacing", format!("{},{}", d.spacing.0, d.spacing.1));
    kv("crop", s.crop.to_string());
    kv("stamp_depth", s.stamp_depth.to_string());
    kv("base_amplitude", s.base_amplitude.to_string());
    kv("fit_variation", s.fit_variation.to_string());
    kv("taper", s.taper.to_string());
    kv("smoothing_sigma", s.smoothing_sigma.to_string());
    kv("noise_sigma", s.noise_sigma.to_string());
    kv("quantum", s.quantum.to_string());
    t
}

fn depth_encoding(depth: &DepthImage, quantum: f64) -> DepthEncoding {
    let scale = if quantum > 0.0 { quantum } else { DepthEncoding::default().depth_scale };
    let (lo, _) = depth.map().min_max();
    DepthEncoding {
        depth_scale: scale,
        depth_offset: (lo / scale).floor() * scale,
        ..DepthEncoding::default()
    }
}

pub fn item_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("depth_{name}.pgm")),
        dir.join(format!("gt_{name}.pgm")),
        dir.join(format!("meta_{name}.txt")),
    )
}

pub fn write_corpus(corpus: &Corpus, dir: &Path, quantum: f64, config: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join("config.txt"), config.as_bytes())?;
    for item in &corpus.items {
        let (depth, gt, meta) = item_paths(dir, &item.name);
        save_depth_pgm(&item.depth, &depth, &depth_encoding(&item.depth, quantum))?;
        save_binary_pgm(&item.gt_mask, &gt)?;
        let mut m = String::new();
        if let Some(l) = &item.label {
            writeln!(m, "label={l}").expect("write to string");
        }
        if let Some(t) = &item.truth {
            writeln!(m, "rotation_rad={}\ndx_mm={}\ndy_mm={}", t.rotation(), t.dx, t.dy).expect("write to string");
        }
        write_atomic(&meta, m.as_bytes())?;
    }
    if !corpus.designs.is_empty() {
        write_designs(&corpus.designs, &dir.join("designs"))?;
    }
    Ok(())
}

pub fn write_designs(designs: &[PointSet], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut labels = String::new();
    for d in designs {
        let file = format!("{}.txt", d.label());
        let mut body = String::new();
        for (x, y) in d.points() {
            writeln!(body, "{x} {y}").expect("write to string");
        }
        write_atomic(&dir.join(&file), body.as_bytes())?;
        writeln!(labels, "{file} {}", d.label()).expect("write to string");
    }
    write_atomic(&dir.join("labels.txt"), labels.as_bytes())
}

/// Point list with one `x y` pair (mm) per line; blank and `#` lines skipped.
pub fn parse_points(text: &str, label: &str) -> Result<PointSet> {
    let mut pts = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => pts.push((x, y)),
            _ => return Err(Error::Format(format!("{label}: line {} is not an `x y` pair", n + 1))),
        }
    }
    PointSet::new(label, pts)
}

/// Reads `labels.txt` and every point file it names, in listed order.
pub fn read_designs(dir: &Path) -> Result<Vec<PointSet>> {
    let labels_path = dir.join("labels.txt");
    let text = fs::read_to_string(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(file), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Format(format!("labels.txt line {} is not `<file> <label>`", n + 1)));
        };
        let path = dir.join(file);
        let body = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        out.push(parse_points(&body, label)?);
    }
    if out.is_empty() {
        return Err(Error::Format(format!("{} lists no designs", labels_path.display())));
    }
    Ok(out)
}

fn read_meta(path: &Path) -> Result<(Option<String>, Option<RigidTransform>)> {
    if !path.exists() {
        return Ok((None, None));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let kv = parse_key_values(&text)?;
    let num = |k: &str| -> Result<Option<f64>> {
        kv.get(k)
            .map(|v| v.parse::<f64>().map_err(|_| Error::Format(format!("{}: bad {k}", path.display()))))
            .transpose()
    };
    let truth = match (num("rotation_rad")?, num("dx_mm")?, num("dy_mm")?) {
        (Some(r), Some(x), Some(y)) => Some(RigidTransform::new(r, x, y)),
        _ => None,
    };
    Ok((kv.get("label").cloned(), truth))
}

/// Loads every `depth_XXXX.pgm` with its `gt_XXXX.pgm`; all offending files
/// are listed in one error.
pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let f = e.file_name().to_string_lossy().into_owned();
            f.strip_prefix("depth_")
                .and_then(|r| r.strip_suffix(".pgm"))
                .map(str::to_string)
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Format(format!("{}: no depth_XXXX.pgm files", dir.display())));
    }
    let loaded: Vec<std::result::Result<CorpusItem, String>> = names
        .par_iter()
        .map(|name| {
            let (dp, gp, mp) = item_paths(dir, name);
            let load = || -> Result<CorpusItem> {
                let depth = load_depth_pgm(&dp)?;
                let gt_mask = load_binary_pgm(&gp)?;
                if gt_mask.dims() != (depth.width(), depth.height()) {
                    return Err(Error::Dim(format!("{} and {} differ in size", dp.display(), gp.display())));
                }
                let (label, truth) = read_meta(&mp)?;
                Ok(CorpusItem {
                    name: name.to_string(),
                    depth,
                    gt_mask,
                    label,
                    truth,
                })
            };
            load().map_err(|e| format!("{name}: {e}"))
        })
        .collect();
    let mut items = Vec::new();
    let mut bad = Vec::new();
    for r in loaded {
        match r {
            Ok(i) => items.push(i),
            Err(e) => bad.push(e),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Format(format!("malformed corpus entries:\n  {}", bad.join("\n  "))));
    }
    let ddir = dir.join("designs");
    let designs = if ddir.is_dir() { read_designs(&ddir)? } else { Vec::new() };
    Ok(Corpus { items, designs })
}
