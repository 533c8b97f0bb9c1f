//! `curvseg` command line: segment depth maps, match against designs, generate
//! synthetic corpora and evaluate segmenters on them.
//!
//! Exit codes: 1 bad input, 2 bad configuration, 3 internal error.

mod settings;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curvseg::evalbench::{
    config_text, evaluate_corpus, formula_on_averages, generate_corpus, read_corpus, read_designs, write_corpus,
    Segmenter,
};
use curvseg::imagecore::{
    load_binary_pgm, load_depth_pgm, save_binary_pgm, save_float_pgm, save_overlay_ppm, thin, write_atomic,
    write_pgm, Pgm,
};
use curvseg::matching::{rank_designs, PointSet};
use curvseg::pipeline::segment;
use curvseg::skeleton::SkeletonSet;
use curvseg::Error;

use settings::{Overrides, SegmenterKind, Settings};

#[derive(Parser, Debug)]
#[command(name = "curvseg", version, about = "Curve-structure segmentation and design matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Segment one depth map and write every intermediate.
    Segment {
        /// 16-bit depth PGM (with optional `.hdr` sidecar).
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank the designs in a directory against a segmentation or skeleton mask.
    Match {
        /// Binary PGM mask; thinned before matching.
        input: PathBuf,
        /// Directory with `labels.txt` and point files.
        designs: PathBuf,
        /// Directory for `ranking.csv`; the ranking goes to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a segmenter on a corpus directory and, when it has designs, rank them.
    Evaluate {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skip design matching even if the corpus has designs.
        #[arg(long)]
        no_match: bool,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Param(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let settings = Settings::resolve(&cli.overrides)?;
    match cli.command {
        Command::Segment { input, out } => cmd_segment(&settings, &input, &out),
        Command::Match { input, designs, out } => cmd_match(&settings, &input, &designs, out.as_deref()),
        Command::Synth { out } => cmd_synth(&settings, &out),
        Command::Evaluate { corpus, out, no_match } => cmd_evaluate(&settings, &corpus, &out, no_match),
    }
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 1,
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn echo_config(settings: &Settings, dir: &Path) -> CmdResult {
    Ok(write_atomic(&dir.join("config.txt"), settings.to_text().as_bytes())?)
}

fn cmd_segment(settings: &Settings, input: &Path, out: &Path) -> CmdResult {
    let depth = load_depth_pgm(input)?;
    let cfg = settings.segment_config()?;
    let s = segment(&depth, &cfg)?;
    create_dir(out)?;
    save_float_pgm(&s.heat, 0.0, 1.0, &out.join("heat.pgm"))?;
    save_binary_pgm(&s.p.to_mask(), &out.join("skeleton.pgm"))?;
    let scale = Pgm {
        width: s.scales.width(),
        height: s.scales.height(),
        maxval: 3,
        samples: s.scales.data().iter().map(|&v| v as u16).collect(),
    };
    write_pgm(&scale, &out.join("scale.pgm"))?;
    save_binary_pgm(&s.seg, &out.join("seg.pgm"))?;
    save_overlay_ppm(&depth, &s.seg, &out.join("overlay.ppm"))?;
    echo_config(settings, out)
}

fn cmd_match(settings: &Settings, input: &Path, designs: &Path, out: Option<&Path>) -> CmdResult {
    if !designs.join("labels.txt").is_file() {
        return Err(Failure::config(format!("{} has no labels.txt", designs.display())));
    }
    let mask = load_binary_pgm(input)?;
    let library = read_designs(designs)?;
    let skel = SkeletonSet::from_mask(&thin(&mask));
    let u = PointSet::from_skeleton(&skel, settings.pixel_mm, input.display().to_string());
    if u.is_empty() {
        return Err(Error::EmptyPattern(format!("{} has no curve pixels", input.display())).into());
    }
    let ranked = rank_designs(&u, &library, &settings.search_params())?;
    let mut csv = String::from("rank,label,distance,rot_deg,dx_mm,dy_mm\n");
    for (i, m) in ranked.iter().enumerate() {
        let t = &m.transform;
        writeln!(
            csv,
            "{},{},{:.6},{:.3},{:.4},{:.4}",
            i + 1,
            m.label,
            m.distance,
            t.rotation().to_degrees(),
            t.dx,
            t.dy
        )
        .expect("write to string");
    }
    match out {
        Some(dir) => {
            create_dir(dir)?;
            write_atomic(&dir.join("ranking.csv"), csv.as_bytes())?;
            echo_config(settings, dir)
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_synth(settings: &Settings, out: &Path) -> CmdResult {
    let cfg = settings.corpus_config()?;
    let occupied = out.exists() && fs::read_dir(out).map(|mut d| d.next().is_some()).unwrap_or(true);
    if occupied && !settings.force {
        return Err(Failure::config(format!(
            "{} already exists; pass --force to overwrite",
            out.display()
        )));
    }
    let corpus = generate_corpus(&cfg)?;
    write_corpus(&corpus, out, cfg.sherd.quantum, &config_text(&cfg))?;
    eprintln!(
        "wrote {} sherds from {} designs to {}",
        corpus.items.len(),
        corpus.designs.len(),
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(settings: &Settings, corpus_dir: &Path, out: &Path, no_match: bool) -> CmdResult {
    let corpus = read_corpus(corpus_dir)?;
    let segmenter = match settings.segmenter {
        SegmenterKind::Pipeline => Segmenter::Pipeline(settings.segment_config()?),
        SegmenterKind::Dilation => Segmenter::Dilation(settings.segment_config()?),
        SegmenterKind::Dog => Segmenter::Dog,
        SegmenterKind::Oracle => Segmenter::Oracle,
    };
    let search = settings.search_params();
    let eval = evaluate_corpus(&corpus, &segmenter, (!no_match).then_some(&search))?;
    create_dir(out)?;

    let mut metrics = String::from("name,precision,recall,f_measure\n");
    for (name, s) in &eval.per_image {
        writeln!(metrics, "{name},{:.6},{:.6},{:.6}", s.precision, s.recall, s.f_measure).expect("write to string");
    }
    let m = eval.mean;
    writeln!(metrics, "mean,{:.6},{:.6},{:.6}", m.precision, m.recall, m.f_measure).expect("write to string");
    write_atomic(&out.join("metrics.csv"), metrics.as_bytes())?;

    let scores: Vec<_> = eval.per_image.iter().map(|(_, s)| *s).collect();
    let on_avg = formula_on_averages(&scores)?;
    let mut summary = format!(
        "segmenter={}\nimages={}\nprecision={:.6}\nrecall={:.6}\nf_measure={:.6}\nf_of_mean_pr={:.6}\n",
        settings.segmenter.name(),
        eval.per_image.len(),
        m.precision,
        m.recall,
        m.f_measure,
        on_avg.f_measure
    );

    if let Some(cmc) = &eval.cmc {
        let mut table = String::from("L,accuracy\n");
        for (l, a) in cmc.iter().enumerate() {
            writeln!(table, "{},{a:.6}", l + 1).expect("write to string");
        }
        write_atomic(&out.join("cmc.csv"), table.as_bytes())?;
        let mut ranks = String::from("name,truth,truth_rank,top1\n");
        for r in &eval.rankings {
            let pos = r.labels.iter().position(|l| *l == r.truth).map_or(0, |p| p + 1);
            writeln!(ranks, "{},{},{pos},{}", r.name, r.truth, r.labels[0]).expect("write to string");
        }
        write_atomic(&out.join("rankings.csv"), ranks.as_bytes())?;
        writeln!(summary, "cmc_rank1={:.6}", cmc[0]).expect("write to string");
    }
    write_atomic(&out.join("summary.txt"), summary.as_bytes())?;
    echo_config(settings, out)?;
    print!("{summary}");
    Ok(())
}
