//! `morphseg`: corpus preparation, CRF training and decoding, unsupervised
//! baselines and evaluation.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numerical
//! failure. Every subcommand prints a one-line JSON summary on stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "morphseg", version, about = "Morphological segmentation toolkit")]
struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Free-form language tag echoed in summaries.
    #[arg(long, global = true)]
    lang: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean raw annotated corpora and split train into train and dev.
    Preprocess(PreprocessArgs),
    /// Project canonical analyses onto words as surface segmentations.
    DeriveSurface(DeriveArgs),
    /// Alignment statistics for one or more canonical corpora.
    Stats(StatsArgs),
    /// Train the CRF segmenter.
    TrainCrf(TrainCrfArgs),
    /// Segment words with a trained CRF.
    Segment(SegmentArgs),
    /// Train a character language model.
    TrainLm(TrainLmArgs),
    /// Segment words with an unsupervised method.
    UnsupSegment(UnsupArgs),
    /// Grid-search the constant-entropy threshold on a gold set.
    TuneTheta(TuneThetaArgs),
    /// Score predicted segmentations against gold.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic segmented corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Directory receiving train.canon, dev.canon and test.canon.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    dev_fraction: f64,
    /// Shuffle train (with --seed) before carving off dev.
    #[arg(long)]
    shuffle: bool,
    /// Zero-based column holding the word.
    #[arg(long, default_value_t = 0)]
    word_col: usize,
    /// Zero-based column holding the annotation.
    #[arg(long, default_value_t = 1)]
    annotation_col: usize,
}

#[derive(Debug, Args)]
struct DeriveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainCrfArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    l2: f64,
    #[arg(long, default_value_t = 1e-7)]
    epsilon: f64,
    #[arg(long = "max-iter", default_value_t = 160)]
    max_iter: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Fwd,
    Bwd,
}

#[derive(Debug, Args)]
struct TrainLmArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long, value_enum)]
    direction: DirectionArg,
    /// `addk:K` or `wb`.
    #[arg(long, default_value = "addk:0.1")]
    smoothing: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    EntropyConst,
    EntropyInc,
    EntropyRel,
    Random,
    Mdl,
}

#[derive(Debug, Args)]
struct UnsupArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    fwd_lm: Option<PathBuf>,
    #[arg(long)]
    bwd_lm: Option<PathBuf>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Boundary probability for the random baseline.
    #[arg(long, default_value_t = 0.25)]
    p: f64,
    /// Load a trained MDL lexicon instead of training one.
    #[arg(long)]
    mdl_model: Option<PathBuf>,
    /// Words to train the MDL lexicon on (default: --in).
    #[arg(long)]
    mdl_train: Option<PathBuf>,
    /// Save the trained MDL lexicon here.
    #[arg(long)]
    mdl_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneThetaArgs {
    #[arg(long)]
    fwd_lm: PathBuf,
    #[arg(long)]
    bwd_lm: PathBuf,
    /// Gold segmentations to tune on.
    #[arg(long)]
    dev: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    min: f64,
    #[arg(long, default_value_t = 16.0)]
    max: f64,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    Morpheme,
    Boundary,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OverlapArg {
    Multiset,
    Set,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum, default_value = "morpheme")]
    metric: Metric,
    #[arg(long, value_enum, default_value = "multiset")]
    overlap: OverlapArg,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory receiving train.surf, dev.surf and test.surf.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    prefixes: usize,
    #[arg(long, default_value_t = 50)]
    stems: usize,
    #[arg(long, default_value_t = 20)]
    suffixes: usize,
    #[arg(long, default_value_t = 2)]
    min_morphs: usize,
    #[arg(long, default_value_t = 5)]
    max_morphs: usize,
    /// Let suffixes repeat their predecessor.
    #[arg(long)]
    repeat_suffixes: bool,
    #[arg(long, default_value_t = 2000)]
    train: usize,
    #[arg(long, default_value_t = 200)]
    dev: usize,
    #[arg(long, default_value_t = 500)]
    test: usize,
}

/// Bad invocation: exit 1.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        1
    } else if err
        .chain()
        .any(|e| matches!(e.downcast_ref(), Some(morphseg::crf::CrfError::NonFinite { .. })))
    {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let one_line = format!("{err:#}").replace('\n', " ");
            eprintln!("morphseg: error: {one_line}");
            ExitCode::from(exit_code(&err))
        }
    }
}
