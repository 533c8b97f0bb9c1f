//! Metrics, baselines and the synthetic stand-in for the sherd dataset.

mod baselines;
mod corpus;
mod metrics;
mod run;
mod synth;

pub use baselines::{
    dilate_ablation, dog_baseline, dog_baseline_with, dog_response, DILATION_RADIUS, DOG_KSIZE, DOG_SIGMA_NARROW,
    DOG_SIGMA_WIDE, DOG_THRESHOLD,
};
pub use metrics::{average_prf, formula_on_averages, pooled_prf, prf, Confusion, PrfScore};
pub use synth::{synth_design, synth_sherd, DesignParams, Stroke, SynthDesign, SynthParams, SynthSherd};
pub use corpus::{
    config_text, design_seed, generate_corpus, generate_designs, item_paths, parse_points, read_corpus,
    read_designs, sherd_seed, write_corpus, write_designs, Corpus, CorpusConfig, CorpusItem,
};
pub use run::{evaluate_corpus, run_segmenter, Evaluation, Ranking, Segmenter};
