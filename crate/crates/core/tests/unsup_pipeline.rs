use morphseg::charlm::{entropy_profile, CharLm, Direction, Smoothing};
use morphseg::eval::{micro_prf, Overlap};
use morphseg::synth::{synthesize, SynthConfig};
use morphseg::unsup::{
    mdl_segment, mdl_train, segment_constant_entropy, segment_random, EntropyConfig, EntropyObjective, MdlConfig,
};
use morphseg::SurfaceSegmentation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_corpus() -> (Vec<SurfaceSegmentation>, Vec<SurfaceSegmentation>) {
    let config = SynthConfig {
        train: 600,
        dev: 0,
        test: 150,
        ..SynthConfig::default()
    };
    let (_, corpus) = synthesize(&config, 42).unwrap();
    (corpus.train, corpus.test)
}

fn f1(pred: Vec<SurfaceSegmentation>, gold: &[SurfaceSegmentation]) -> f64 {
    let pairs: Vec<_> = pred.into_iter().zip(gold.iter().cloned()).collect();
    micro_prf(&pairs, Overlap::Multiset).unwrap().prf.f1
}

#[test]
fn every_segmenter_yields_valid_segmentations() {
    let (train, test) = small_corpus();
    let words: Vec<&str> = train.iter().map(|s| s.word()).collect();
    let fwd = CharLm::train(&words, 4, Direction::Forward, Smoothing::default()).unwrap();
    let bwd = CharLm::train(&words, 4, Direction::Backward, Smoothing::WittenBell).unwrap();
    let (mdl, _) = mdl_train(&words, &MdlConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for gold in &test {
        let w = gold.word();
        let profile = entropy_profile(&fwd, &bwd, w);
        assert!(profile
            .left
            .iter()
            .chain(&profile.right)
            .all(|h| h.is_finite() && *h >= 0.0));
        let mut outputs = vec![mdl_segment(&mdl, w), segment_random(w, 0.25, &mut rng)];
        for objective in [
            EntropyObjective::Constant,
            EntropyObjective::Increase,
            EntropyObjective::Relative,
        ] {
            let config = EntropyConfig {
                objective,
                theta: 5.0,
                alpha: 1.0,
            };
            outputs.push(config.segment(&profile));
        }
        for seg in outputs {
            assert_eq!(seg.word(), w);
            assert_eq!(seg.segments().concat(), w);
        }
    }
}

#[test]
fn mdl_beats_random_on_synthetic_data() {
    let (train, test) = small_corpus();
    let words: Vec<&str> = train.iter().map(|s| s.word()).collect();
    let (mdl, _) = mdl_train(&words, &MdlConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mdl_f1 = f1(test.iter().map(|g| mdl_segment(&mdl, g.word())).collect(), &test);
    let random_f1 = f1(
        test.iter().map(|g| segment_random(g.word(), 0.25, &mut rng)).collect(),
        &test,
    );
    assert!(mdl_f1 > random_f1 + 0.10, "mdl {mdl_f1} random {random_f1}");
}

#[test]
fn theta_sweep_is_monotone() {
    let (train, test) = small_corpus();
    let words: Vec<&str> = train.iter().map(|s| s.word()).collect();
    let fwd = CharLm::train(&words, 4, Direction::Forward, Smoothing::default()).unwrap();
    let bwd = CharLm::train(&words, 4, Direction::Backward, Smoothing::default()).unwrap();
    let profiles: Vec<_> = test.iter().map(|g| entropy_profile(&fwd, &bwd, g.word())).collect();
    let mut prev = usize::MAX;
    for k in 0..=40 {
        let theta = k as f64 * 0.25;
        let count: usize = profiles
            .iter()
            .map(|p| segment_constant_entropy(p, theta).boundaries().len())
            .sum();
        assert!(count <= prev);
        prev = count;
    }
}
