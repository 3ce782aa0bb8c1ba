//! CRF inference and gradients checked against brute-force enumeration.

use morphseg::crf::{
    extract_features, log_partition, marginals, nll_and_gradient, sequence_score, viterbi_decode, CrfModel,
    FeatureVocab, ModelMeta, Transitions, Weights,
};
use morphseg::labels::encode_bmes;
use morphseg::{Label, LabelSeq, SurfaceSegmentation};
use proptest::prelude::*;

fn all_sequences(n: usize) -> impl Iterator<Item = LabelSeq> {
    (0..4usize.pow(n as u32)).map(move |mut code| {
        let mut labels = vec![Label::B; n];
        for slot in labels.iter_mut().rev() {
            *slot = Label::from_index(code % 4).unwrap();
            code /= 4;
        }
        LabelSeq(labels)
    })
}

fn build_model(words: &[String], emission: &[f64], transitions: &[f64]) -> CrfModel {
    let mut vocab = FeatureVocab::new();
    for w in words {
        for i in 0..w.chars().count() {
            for f in extract_features(w, i) {
                vocab.intern(&f);
            }
        }
    }
    let mut weights = Weights::zeros(vocab.len());
    for (w, &v) in weights.emission.iter_mut().zip(emission.iter().cycle()) {
        *w = v;
    }
    for (slot, &v) in Transitions::legal_slots().zip(transitions) {
        *weights.transitions.slot_mut(slot) = v;
    }
    CrfModel::new(vocab, weights, ModelMeta::default()).unwrap()
}

fn logsumexp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn model_strategy(integer: bool) -> impl Strategy<Value = (Vec<String>, CrfModel)> {
    let weight = if integer {
        (-1i32..=1).prop_map(f64::from).boxed()
    } else {
        (-2.0f64..2.0).boxed()
    };
    (
        proptest::collection::vec("[abAi]{1,6}", 1..4),
        proptest::collection::vec(weight.clone(), 1..64),
        proptest::collection::vec(weight, 12),
    )
        .prop_map(|(words, e, t)| {
            let model = build_model(&words, &e, &t);
            (words, model)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_matches_enumeration((words, model) in model_strategy(false)) {
        for w in &words {
            let n = w.chars().count();
            let brute = logsumexp(all_sequences(n).map(|s| sequence_score(&model, w, &s)));
            prop_assert!((log_partition(&model, w) - brute).abs() < 1e-8);
        }
    }

    #[test]
    fn viterbi_is_smallest_argmax((words, model) in model_strategy(true)) {
        for w in &words {
            let n = w.chars().count();
            let mut best: Option<(f64, LabelSeq)> = None;
            for s in all_sequences(n) {
                let score = sequence_score(&model, w, &s);
                if best.as_ref().is_none_or(|(b, _)| score > *b) {
                    best = Some((score, s));
                }
            }
            prop_assert_eq!(viterbi_decode(&model, w), best.unwrap().1);
        }
    }

    #[test]
    fn node_marginals_match_enumeration((words, model) in model_strategy(false)) {
        let w = &words[0];
        let n = w.chars().count();
        let z = log_partition(&model, w);
        let m = marginals(&model, w);
        let mut expected = vec![[0.0f64; 4]; n];
        for s in all_sequences(n) {
            let p = (sequence_score(&model, w, &s) - z).exp();
            for (i, l) in s.0.iter().enumerate() {
                expected[i][l.index()] += p;
            }
        }
        for i in 0..n {
            for y in 0..4 {
                prop_assert!((m.node[i][y] - expected[i][y]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences(
        (words, model) in model_strategy(false),
        cuts in proptest::collection::vec(any::<u8>(), 3),
        l2 in 0.0f64..1.0,
    ) {
        let batch: Vec<(String, LabelSeq)> = words
            .iter()
            .zip(cuts.iter().cycle())
            .map(|(w, &mask)| {
                let n = w.chars().count();
                let b: Vec<usize> = (1..n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
                (w.clone(), encode_bmes(&SurfaceSegmentation::new(w.as_str(), b).unwrap()))
            })
            .collect();
        let (_, grad) = nll_and_gradient(&model, &batch, l2).unwrap();
        let analytic = grad.flatten();
        let x = model.weights().flatten();
        let h = 1e-5;
        let n_feat = model.vocab().len();
        for k in 0..x.len() {
            let eval = |delta: f64| {
                let mut xp = x.clone();
                xp[k] += delta;
                let m = model.with_weights(Weights::unflatten(n_feat, &xp)).unwrap();
                nll_and_gradient(&m, &batch, l2).unwrap().0
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
            prop_assert!(rel < 1e-4, "coordinate {}: analytic {} numeric {}", k, analytic[k], numeric);
        }
    }
}
