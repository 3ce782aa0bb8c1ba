//! Shared fixtures for the benchmarks.

use morphseg::crf::{train, CrfModel, TrainConfig};
use morphseg::synth::{synthesize, SynthConfig};
use morphseg::{CanonicalAnalysis, SurfaceSegmentation};

/// A small synthetic corpus: (train, test).
pub fn corpus(seed: u64) -> (Vec<SurfaceSegmentation>, Vec<SurfaceSegmentation>) {
    let config = SynthConfig {
        train: 400,
        dev: 0,
        test: 200,
        ..SynthConfig::default()
    };
    let (_, corpus) = synthesize(&config, seed).expect("default grammar is valid");
    (corpus.train, corpus.test)
}

/// A CRF trained briefly on [`corpus`], plus the held-out words.
pub fn trained_model(seed: u64) -> (CrfModel, Vec<String>) {
    let (train_set, test) = corpus(seed);
    let config = TrainConfig {
        max_iterations: 30,
        ..TrainConfig::default()
    };
    let (model, _) = train(&train_set, None, &config).expect("training succeeds");
    (model, test.iter().map(|s| s.word().to_string()).collect())
}

/// Canonical analyses paired with their surface words, taken from the
/// synthetic segmentations with an edit injected at each morph boundary.
pub fn alignment_pairs(seed: u64) -> Vec<(CanonicalAnalysis, String)> {
    let (train_set, _) = corpus(seed);
    train_set
        .iter()
        .map(|seg| {
            let canonical: Vec<String> = seg
                .segments()
                .iter()
                .enumerate()
                .map(|(i, m)| if i % 2 == 1 { format!("{m}a") } else { m.to_string() })
                .collect();
            (CanonicalAnalysis::from_texts(&canonical), seg.word().to_string())
        })
        .collect()
}
