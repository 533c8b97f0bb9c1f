//! Run settings: defaults, then a `key=value` config file, then flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use curvseg::evalbench::CorpusConfig;
use curvseg::imagecore::{parse_key_values, DEFAULT_PITCH_MM};
use curvseg::inference::load_weights;
use curvseg::matching::SearchParams;
use curvseg::pipeline::{RefinerBackend, ScorerBackend, SegmentConfig, DEFAULT_THRESHOLD};
use curvseg::scorer::ClassicalParams;
use curvseg::skeleton::ContrastScorer;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    Classical,
    Convnet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefinerKind {
    Classical,
    Convnet,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmenterKind {
    Pipeline,
    Dog,
    Dilation,
    Oracle,
}

impl SegmenterKind {
    pub fn name(self) -> &'static str {
        match self {
            SegmenterKind::Pipeline => "pipeline",
            SegmenterKind::Dog => "dog",
            SegmenterKind::Dilation => "dilation",
            SegmenterKind::Oracle => "oracle",
        }
    }
}

/// Flags shared by every command. Each has a config-file twin with `-` replaced by `_`.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    /// `key=value` settings file; flags win over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub scorer: Option<ScorerKind>,
    /// Weight file for the convnet scorer.
    #[arg(long, global = true)]
    pub weights: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub refiner: Option<RefinerKind>,
    /// Weight file for the convnet refiner.
    #[arg(long, global = true)]
    pub refiner_weights: Option<PathBuf>,
    /// Heat-map binarization threshold in (0, 1).
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Design raster pitch and translation step for matching, mm.
    #[arg(long, global = true)]
    pub pitch: Option<f64>,
    /// Rotation step for matching, degrees.
    #[arg(long, global = true)]
    pub rot_step: Option<f64>,
    /// Pixel size of masks given to `match`, mm.
    #[arg(long, global = true)]
    pub pixel_mm: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub n_designs: Option<usize>,
    #[arg(long, global = true)]
    pub n_sherds: Option<usize>,
    /// Noise added to synthetic depth, mm.
    #[arg(long, global = true)]
    pub noise_sigma: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub segmenter: Option<SegmenterKind>,
    /// Overwrite an existing output directory.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub scorer: ScorerKind,
    pub weights: Option<PathBuf>,
    pub refiner: RefinerKind,
    pub refiner_weights: Option<PathBuf>,
    pub threshold: f64,
    pub pitch: f64,
    pub rot_step: f64,
    pub pixel_mm: f64,
    pub seed: u64,
    pub n_designs: usize,
    pub n_sherds: usize,
    pub noise_sigma: f64,
    pub segmenter: SegmenterKind,
    pub force: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let corpus = CorpusConfig::default();
        let search = SearchParams::default();
        Settings {
            scorer: ScorerKind::Classical,
            weights: None,
            refiner: RefinerKind::Classical,
            refiner_weights: None,
            threshold: DEFAULT_THRESHOLD,
            pitch: search.pitch,
            rot_step: search.rot_step_deg,
            pixel_mm: DEFAULT_PITCH_MM,
            seed: corpus.seed,
            n_designs: corpus.n_designs,
            n_sherds: corpus.n_sherds,
            noise_sigma: corpus.sherd.noise_sigma,
            segmenter: SegmenterKind::Pipeline,
            force: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value
        .parse()
        .map_err(|_| Failure::config(format!("config key {key}: cannot parse `{value}`")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, Failure> {
    T::from_str(value, true).map_err(|_| Failure::config(format!("config key {key}: unknown value `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Failure> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Failure::config(format!("config key {key}: expected true or false, got `{value}`"))),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

impl Settings {
    pub fn resolve(o: &Overrides) -> Result<Self, Failure> {
        let mut s = Settings::default();
        if let Some(path) = &o.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
            s.apply_text(&text)?;
        }
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &o.$f {
                    s.$f = v.clone();
                }
            )*};
        }
        take!(scorer, refiner, threshold, pitch, rot_step, pixel_mm, seed, n_designs, n_sherds, noise_sigma, segmenter);
        if o.weights.is_some() {
            s.weights = o.weights.clone();
        }
        if o.refiner_weights.is_some() {
            s.refiner_weights = o.refiner_weights.clone();
        }
        s.force |= o.force;
        s.validate()?;
        Ok(s)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), Failure> {
        let kv = parse_key_values(text).map_err(|e| Failure::config(e.to_string()))?;
        for (k, v) in &kv {
            match k.as_str() {
                "scorer" => self.scorer = parse_enum(k, v)?,
                "weights" => self.weights = optional_path(v),
                "refiner" => self.refiner = parse_enum(k, v)?,
                "refiner_weights" => self.refiner_weights = optional_path(v),
                "threshold" => self.threshold = parse(k, v)?,
                "pitch" => self.pitch = parse(k, v)?,
                "rot_step" => self.rot_step = parse(k, v)?,
                "pixel_mm" => self.pixel_mm = parse(k, v)?,
                "seed" => self.seed = parse(k, v)?,
                "n_designs" => self.n_designs = parse(k, v)?,
                "n_sherds" => self.n_sherds = parse(k, v)?,
                "noise_sigma" => self.noise_sigma = parse(k, v)?,
                "segmenter" => self.segmenter = parse_enum(k, v)?,
                "force" => self.force = parse_bool(k, v)?,
                _ => return Err(Failure::config(format!("unknown config key `{k}`"))),
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), Failure> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Failure::config(format!("threshold {} not in (0, 1)", self.threshold)));
        }
        for (name, v) in [("pitch", self.pitch), ("rot_step", self.rot_step), ("pixel_mm", self.pixel_mm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rot_step > 360.0 {
            return Err(Failure::config("rot_step must not exceed 360 degrees"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Failure::config("noise_sigma must be non-negative"));
        }
        Ok(())
    }

    /// The resolved settings in config-file syntax.
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut kv = |k: &str, v: String| writeln!(t, "{k}={v}").expect("write to string");
        kv("scorer", enum_name(&self.scorer));
        kv("weights", path(&self.weights));
        kv("refiner", enum_name(&self.refiner));
        kv("refiner_weights", path(&self.refiner_weights));
        kv("threshold", self.threshold.to_string());
        kv("pitch", self.pitch.to_string());
        kv("rot_step", self.rot_step.to_string());
        kv("pixel_mm", self.pixel_mm.to_string());
        kv("seed", self.seed.to_string());
        kv("n_designs", self.n_designs.to_string());
        kv("n_sherds", self.n_sherds.to_string());
        kv("noise_sigma", self.noise_sigma.to_string());
        kv("segmenter", enum_name(&self.segmenter));
        kv("force", self.force.to_string());
        t
    }

    pub fn segment_config(&self) -> Result<SegmentConfig, Failure> {
        let scorer = match self.scorer {
            ScorerKind::Classical => ScorerBackend::Classical(ClassicalParams::default()),
            ScorerKind::Convnet => ScorerBackend::Convnet(weights_file(self.weights.as_deref(), "weights")?),
        };
        let refiner = match self.refiner {
            RefinerKind::Classical => RefinerBackend::Classical(ContrastScorer::default()),
            RefinerKind::Convnet => {
                RefinerBackend::Convnet(weights_file(self.refiner_weights.as_deref(), "refiner_weights")?)
            }
            RefinerKind::None => RefinerBackend::None,
        };
        Ok(SegmentConfig {
            scorer,
            refiner,
            threshold: self.threshold,
        })
    }

    pub fn search_params(&self) -> SearchParams {
        SearchParams {
            pitch: self.pitch,
            rot_step_deg: self.rot_step,
            ..SearchParams::default()
        }
    }

    pub fn corpus_config(&self) -> Result<CorpusConfig, Failure> {
        if self.n_designs == 0 {
            return Err(Failure::config("n_designs must be at least 1"));
        }
        let mut cfg = CorpusConfig {
            n_designs: self.n_designs,
            n_sherds: self.n_sherds,
            seed: self.seed,
            ..CorpusConfig::default()
        };
        cfg.sherd.noise_sigma = self.noise_sigma;
        Ok(cfg)
    }
}

fn weights_file(path: Option<&Path>, key: &str) -> Result<curvseg::inference::Network, Failure> {
    let path = path.ok_or_else(|| Failure::config(format!("convnet backend needs `{key}`")))?;
    if !path.is_file() {
        return Err(Failure::config(format!("{key} file {} does not exist", path.display())));
    }
    Ok(load_weights(path)?)
}
