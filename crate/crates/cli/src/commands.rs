use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use morphseg::align::{alignment_stats, derive_surface, AlignmentStats};
use morphseg::charlm::{entropy_profile, CharLm, Direction, Smoothing};
use morphseg::corpus::{load_corpus_with, preprocess, write_corpus, ColumnLayout, Dataset, PreprocessConfig, Split};
use morphseg::crf::{self, load_model, save_model, TrainConfig};
use morphseg::eval::{boundary_prf, micro_prf, Overlap};
use morphseg::format::{read_segmentations, read_words, write_segmentations};
use morphseg::synth::{synthesize, SynthConfig};
use morphseg::unsup::{mdl_segment, mdl_train, segment_random, EntropyConfig, EntropyObjective, MdlConfig, MdlModel};
use morphseg::SurfaceSegmentation;

use crate::{
    Cli, Command, DeriveArgs, DirectionArg, EvaluateArgs, Method, Metric, OverlapArg, PreprocessArgs, SegmentArgs,
    StatsArgs, SynthArgs, TrainCrfArgs, TrainLmArgs, TuneThetaArgs, UnsupArgs, UsageError,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn check_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(usage(format!("input file not found: {}", p.display())));
        }
    }
    Ok(())
}

fn check_outputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty());
        if parent.is_some_and(|d| !d.is_dir()) {
            return Err(usage(format!("output directory does not exist: {}", p.display())));
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn words_from(path: &Path) -> Result<Vec<String>> {
    read_words(open(path)?).with_context(|| format!("reading words from {}", path.display()))
}

fn segs_from(path: &Path) -> Result<Vec<SurfaceSegmentation>> {
    read_segmentations(open(path)?).with_context(|| format!("reading segmentations from {}", path.display()))
}

fn write_segs(path: &Path, segs: &[SurfaceSegmentation]) -> Result<()> {
    write_segmentations(create(path)?, segs).with_context(|| format!("writing {}", path.display()))
}

fn load_lm(path: &Path) -> Result<CharLm> {
    CharLm::load(open(path)?).with_context(|| format!("loading language model {}", path.display()))
}

struct Ctx {
    seed: u64,
    lang: Option<String>,
}

impl Ctx {
    fn emit(&self, command: &str, mut summary: Value) {
        let obj = summary.as_object_mut().expect("summaries are objects");
        obj.insert("command".into(), json!(command));
        obj.insert("seed".into(), json!(self.seed));
        if let Some(lang) = &self.lang {
            obj.insert("lang".into(), json!(lang));
        }
        println!("{summary}");
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        seed: cli.seed,
        lang: cli.lang,
    };
    match cli.command {
        Command::Preprocess(a) => cmd_preprocess(&ctx, a),
        Command::DeriveSurface(a) => cmd_derive(&ctx, a),
        Command::Stats(a) => cmd_stats(&ctx, a),
        Command::TrainCrf(a) => cmd_train_crf(&ctx, a),
        Command::Segment(a) => cmd_segment(&ctx, a),
        Command::TrainLm(a) => cmd_train_lm(&ctx, a),
        Command::UnsupSegment(a) => cmd_unsup(&ctx, a),
        Command::TuneTheta(a) => cmd_tune_theta(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
    }
}

fn cmd_preprocess(ctx: &Ctx, a: PreprocessArgs) -> Result<()> {
    check_inputs([a.train.as_path(), a.test.as_path()])?;
    let config = PreprocessConfig {
        dev_fraction: a.dev_fraction,
        shuffle_seed: a.shuffle.then_some(ctx.seed),
    };
    if a.word_col == a.annotation_col {
        return Err(usage("--word-col and --annotation-col must differ"));
    }
    let layout = ColumnLayout {
        word: a.word_col,
        annotation: a.annotation_col,
    };
    let train = load_corpus_with(open(&a.train)?, layout).context("reading training corpus")?;
    let test = load_corpus_with(open(&a.test)?, layout).context("reading test corpus")?;
    let (train_set, dev_set, test_set, report) =
        preprocess(&train.words, &test.words, config).map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for set in [&train_set, &dev_set, &test_set] {
        let name = match set.split {
            Split::Train => "train.canon",
            Split::Dev => "dev.canon",
            Split::Test => "test.canon",
        };
        let path = a.out_dir.join(name);
        write_corpus(create(&path)?, &set.items).with_context(|| format!("writing {}", path.display()))?;
    }
    ctx.emit(
        "preprocess",
        json!({
            "report": report,
            "skipped_lines": { "train": train.skipped, "test": test.skipped },
        }),
    );
    Ok(())
}

fn cmd_derive(ctx: &Ctx, a: DeriveArgs) -> Result<()> {
    check_inputs([a.input.as_path()])?;
    check_outputs([a.out.as_path()])?;
    let corpus = load_corpus_with(open(&a.input)?, ColumnLayout::default()).context("reading canonical corpus")?;
    let mut segs = Vec::with_capacity(corpus.words.len());
    let mut unalignable = Vec::new();
    for item in &corpus.words {
        match derive_surface(&item.analysis, &item.word) {
            Ok(seg) => segs.push(seg),
            Err(e) => unalignable.push(e.to_string()),
        }
    }
    write_segs(&a.out, &segs)?;
    let stats = alignment_stats(&Dataset::new(Split::Train, corpus.words));
    ctx.emit(
        "derive-surface",
        json!({
            "written": segs.len(),
            "unalignable": unalignable,
            "skipped_lines": corpus.skipped,
            "stats": stats,
        }),
    );
    Ok(())
}

fn cmd_stats(ctx: &Ctx, a: StatsArgs) -> Result<()> {
    check_inputs(a.inputs.iter().map(PathBuf::as_path))?;
    let mut per_file = Vec::new();
    let mut parts = Vec::new();
    for path in &a.inputs {
        let corpus = load_corpus_with(open(path)?, ColumnLayout::default())
            .with_context(|| format!("reading {}", path.display()))?;
        let stats = alignment_stats(&Dataset::new(Split::Train, corpus.words));
        per_file.push(json!({ "file": path.display().to_string(), "stats": stats }));
        parts.push(stats);
    }
    ctx.emit(
        "stats",
        json!({
            "files": per_file,
            "micro": AlignmentStats::merge(&parts),
            "macro": AlignmentStats::macro_average(&parts),
        }),
    );
    Ok(())
}

fn cmd_train_crf(ctx: &Ctx, a: TrainCrfArgs) -> Result<()> {
    check_inputs(std::iter::once(a.train.as_path()).chain(a.dev.as_deref()))?;
    check_outputs([a.out.as_path()])?;
    let config = TrainConfig {
        l2: a.l2,
        epsilon: a.epsilon,
        max_iterations: a.max_iter,
        ..TrainConfig::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let train = segs_from(&a.train)?;
    let dev = a.dev.as_deref().map(segs_from).transpose()?;
    if train.is_empty() {
        bail!("training file {} holds no segmentations", a.train.display());
    }
    let (model, report) = crf::train(&train, dev.as_deref(), &config)?;
    save_model(&model, create(&a.out)?).with_context(|| format!("writing {}", a.out.display()))?;
    let last = report.log.last().expect("log holds the initial objective");
    ctx.emit(
        "train-crf",
        json!({
            "train_words": train.len(),
            "dev_words": dev.as_ref().map(Vec::len),
            "features": report.num_features,
            "iterations": report.iterations,
            "stop": format!("{:?}", report.stop),
            "selected_iteration": report.selected_iteration,
            "final_objective": last.objective,
            "selected_dev_f1": report.log.get(report.selected_iteration).and_then(|l| l.dev_f1),
            "log": report.log,
        }),
    );
    Ok(())
}

fn cmd_segment(ctx: &Ctx, a: SegmentArgs) -> Result<()> {
    check_inputs([a.model.as_path(), a.input.as_path()])?;
    check_outputs([a.out.as_path()])?;
    let model = load_model(open(&a.model)?).with_context(|| format!("loading model {}", a.model.display()))?;
    let words = words_from(&a.input)?;
    let segs: Vec<SurfaceSegmentation> = words.iter().map(|w| crf::segment(&model, w)).collect();
    write_segs(&a.out, &segs)?;
    let boundaries: usize = segs.iter().map(|s| s.boundaries().len()).sum();
    ctx.emit("segment", json!({ "words": segs.len(), "boundaries": boundaries }));
    Ok(())
}

fn cmd_train_lm(ctx: &Ctx, a: TrainLmArgs) -> Result<()> {
    check_inputs([a.input.as_path()])?;
    check_outputs([a.out.as_path()])?;
    let smoothing: Smoothing = a.smoothing.parse().map_err(usage)?;
    if a.order == 0 {
        return Err(usage("--order must be at least 1"));
    }
    let direction = match a.direction {
        DirectionArg::Fwd => Direction::Forward,
        DirectionArg::Bwd => Direction::Backward,
    };
    let words = words_from(&a.input)?;
    let lm = CharLm::train(&words, a.order, direction, smoothing)?;
    lm.save(create(&a.out)?)
        .with_context(|| format!("writing {}", a.out.display()))?;
    ctx.emit(
        "train-lm",
        json!({
            "words": words.len(),
            "order": a.order,
            "direction": direction,
            "smoothing": smoothing.to_string(),
            "alphabet": lm.alphabet().len(),
        }),
    );
    Ok(())
}

fn cmd_unsup(ctx: &Ctx, a: UnsupArgs) -> Result<()> {
    let entropy = matches!(a.method, Method::EntropyConst | Method::EntropyInc | Method::EntropyRel);
    let mut inputs = vec![a.input.as_path()];
    if entropy {
        let (Some(f), Some(b)) = (a.fwd_lm.as_deref(), a.bwd_lm.as_deref()) else {
            return Err(usage("entropy methods need --fwd-lm and --bwd-lm"));
        };
        inputs.extend([f, b]);
    }
    if a.method == Method::Mdl {
        if a.mdl_model.is_some() && a.mdl_train.is_some() {
            return Err(usage("--mdl-model and --mdl-train are mutually exclusive"));
        }
        inputs.extend(a.mdl_model.as_deref());
        inputs.extend(a.mdl_train.as_deref());
    }
    check_inputs(inputs)?;
    check_outputs(std::iter::once(a.out.as_path()).chain(a.mdl_out.as_deref()))?;

    let words = words_from(&a.input)?;
    let mut extra = json!({});
    let segs: Vec<SurfaceSegmentation> = match a.method {
        Method::EntropyConst | Method::EntropyInc | Method::EntropyRel => {
            let objective = match a.method {
                Method::EntropyConst => EntropyObjective::Constant,
                Method::EntropyInc => EntropyObjective::Increase,
                _ => EntropyObjective::Relative,
            };
            let theta = match (objective, a.theta) {
                (EntropyObjective::Constant, None) => return Err(usage("entropy-const needs --theta")),
                (_, theta) => theta.unwrap_or(f64::INFINITY),
            };
            let config = EntropyConfig {
                objective,
                theta,
                alpha: a.alpha,
            };
            config.validate().map_err(usage)?;
            let fwd = load_lm(a.fwd_lm.as_deref().unwrap())?;
            let bwd = load_lm(a.bwd_lm.as_deref().unwrap())?;
            words
                .iter()
                .map(|w| config.segment(&entropy_profile(&fwd, &bwd, w)))
                .collect()
        }
        Method::Random => {
            if !(0.0..=1.0).contains(&a.p) {
                return Err(usage(format!("--p must lie in [0, 1], got {}", a.p)));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            words.iter().map(|w| segment_random(w, a.p, &mut rng)).collect()
        }
        Method::Mdl => {
            let model = match &a.mdl_model {
                Some(path) => MdlModel::load(open(path)?).with_context(|| format!("loading {}", path.display()))?,
                None => {
                    let train_words = match &a.mdl_train {
                        Some(path) => words_from(path)?,
                        None => words.clone(),
                    };
                    let config = MdlConfig {
                        seed: ctx.seed,
                        ..MdlConfig::default()
                    };
                    let (model, report) = mdl_train(&train_words, &config)?;
                    extra = json!({ "mdl_passes": report.passes, "mdl_pass_costs": report.pass_costs });
                    model
                }
            };
            if let Some(path) = &a.mdl_out {
                model
                    .save(create(path)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            words.iter().map(|w| mdl_segment(&model, w)).collect()
        }
    };
    write_segs(&a.out, &segs)?;
    let boundaries: usize = segs.iter().map(|s| s.boundaries().len()).sum();
    let mut summary = json!({
        "method": format!("{:?}", a.method),
        "words": segs.len(),
        "boundaries": boundaries,
    });
    summary
        .as_object_mut()
        .unwrap()
        .extend(extra.as_object().cloned().unwrap_or_default());
    ctx.emit("unsup-segment", summary);
    Ok(())
}

fn cmd_tune_theta(ctx: &Ctx, a: TuneThetaArgs) -> Result<()> {
    check_inputs([a.fwd_lm.as_path(), a.bwd_lm.as_path(), a.dev.as_path()])?;
    if !(a.step > 0.0 && a.min.is_finite() && a.max.is_finite() && a.min <= a.max) {
        return Err(usage("need finite --min <= --max and --step > 0"));
    }
    let fwd = load_lm(&a.fwd_lm)?;
    let bwd = load_lm(&a.bwd_lm)?;
    let gold = segs_from(&a.dev)?;
    if gold.is_empty() {
        bail!("{} holds no segmentations", a.dev.display());
    }
    let profiles: Vec<_> = gold.iter().map(|g| entropy_profile(&fwd, &bwd, g.word())).collect();
    let steps = ((a.max - a.min) / a.step + 1e-9).floor() as usize;
    let mut grid = Vec::with_capacity(steps + 1);
    let mut best: Option<(f64, f64)> = None;
    for k in 0..=steps {
        let theta = a.min + k as f64 * a.step;
        let pairs: Vec<_> = profiles
            .iter()
            .zip(&gold)
            .map(|(p, g)| (morphseg::unsup::segment_constant_entropy(p, theta), g.clone()))
            .collect();
        let boundaries: usize = pairs.iter().map(|(p, _)| p.boundaries().len()).sum();
        let f1 = micro_prf(&pairs, Overlap::Multiset)?.prf.f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((theta, f1));
        }
        grid.push(json!({ "theta": theta, "f1": f1, "boundaries": boundaries }));
    }
    let (theta, f1) = best.expect("grid has at least one point");
    ctx.emit(
        "tune-theta",
        json!({ "best_theta": theta, "best_f1": f1, "grid": grid }),
    );
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<()> {
    check_inputs([a.pred.as_path(), a.gold.as_path()])?;
    let pred = segs_from(&a.pred)?;
    let gold = segs_from(&a.gold)?;
    if pred.len() != gold.len() {
        bail!(
            "{} has {} entries but {} has {}",
            a.pred.display(),
            pred.len(),
            a.gold.display(),
            gold.len()
        );
    }
    let pairs: Vec<_> = pred.into_iter().zip(gold).collect();
    let overlap = match a.overlap {
        OverlapArg::Multiset => Overlap::Multiset,
        OverlapArg::Set => Overlap::Set,
    };
    let (metric, report) = match a.metric {
        Metric::Morpheme => ("morpheme", micro_prf(&pairs, overlap)?),
        Metric::Boundary => ("boundary", boundary_prf(&pairs)?),
    };
    ctx.emit(
        "evaluate",
        json!({ "metric": metric, "overlap": overlap, "report": report }),
    );
    Ok(())
}

fn cmd_synth(ctx: &Ctx, a: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        num_prefixes: a.prefixes,
        num_stems: a.stems,
        num_suffixes: a.suffixes,
        min_morphs: a.min_morphs,
        max_morphs: a.max_morphs,
        repeat_suffixes: a.repeat_suffixes,
        train: a.train,
        dev: a.dev,
        test: a.test,
    };
    let (grammar, corpus) = synthesize(&config, ctx.seed).map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_segs(&a.out_dir.join("train.surf"), &corpus.train)?;
    write_segs(&a.out_dir.join("dev.surf"), &corpus.dev)?;
    write_segs(&a.out_dir.join("test.surf"), &corpus.test)?;
    ctx.emit(
        "synth",
        json!({
            "train": corpus.train.len(),
            "dev": corpus.dev.len(),
            "test": corpus.test.len(),
            "prefixes": grammar.prefixes,
            "stems": grammar.stems,
            "suffixes": grammar.suffixes,
        }),
    );
    Ok(())
}
