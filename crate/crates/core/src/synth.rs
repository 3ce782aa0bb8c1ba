//! Synthetic concatenative corpora with gold segmentations.
//!
//! Words are prefix* stem suffix*, with exactly one stem. Prefixes are
//! consonant-vowel syllables, stems end in a consonant, and suffixes are
//! vowel-initial, loosely mimicking Nguni agglutination.

use std::collections::{BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::align::SurfaceSegmentation;

const CONSONANTS: &[&str] = &[
    "b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "s", "t", "v", "w", "y", "z", "ng", "ph", "th", "hl",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Generation attempts allowed per requested word before giving up on
/// finding more distinct words.
const ATTEMPTS_PER_WORD: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    pub prefixes: Vec<String>,
    pub stems: Vec<String>,
    pub suffixes: Vec<String>,
    /// Inclusive range of morphs per word, clamped to what the inventories
    /// allow (a grammar without affixes only yields bare stems).
    pub min_morphs: usize,
    pub max_morphs: usize,
    /// Chance that a suffix after the first copies its predecessor.
    pub repeat_suffix_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_prefixes: usize,
    pub num_stems: usize,
    pub num_suffixes: usize,
    pub min_morphs: usize,
    pub max_morphs: usize,
    pub repeat_suffixes: bool,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_prefixes: 20,
            num_stems: 50,
            num_suffixes: 20,
            min_morphs: 2,
            max_morphs: 5,
            repeat_suffixes: false,
            train: 2000,
            dev: 200,
            test: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("grammar has no stems")]
    NoStems,
    #[error("morphs per word must satisfy 1 <= min <= max, got {min}..={max}")]
    BadLengths { min: usize, max: usize },
    #[error("repeat probability must lie in [0, 1], got {0}")]
    BadProbability(String),
    #[error("inventory contains an empty morph")]
    EmptyMorph,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub train: Vec<SurfaceSegmentation>,
    pub dev: Vec<SurfaceSegmentation>,
    pub test: Vec<SurfaceSegmentation>,
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty symbol set")
}

fn inventory<R: Rng>(rng: &mut R, n: usize, mut shape: impl FnMut(&mut R) -> String) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < n * 1000 {
        attempts += 1;
        let m = shape(rng);
        if seen.insert(m.clone()) {
            out.push(m);
        }
    }
    out
}

impl Grammar {
    /// Random inventories of the requested sizes.
    pub fn random<R: Rng>(rng: &mut R, config: &SynthConfig) -> Self {
        let cv = |rng: &mut R| format!("{}{}", pick(rng, CONSONANTS), pick(rng, VOWELS));
        let prefixes = inventory(rng, config.num_prefixes, |rng| {
            if rng.random_bool(0.5) {
                cv(rng)
            } else {
                cv(rng) + &cv(rng)
            }
        });
        let stems = inventory(rng, config.num_stems, |rng| {
            let body = if rng.random_bool(0.5) {
                cv(rng)
            } else {
                cv(rng) + &cv(rng)
            };
            body + pick(rng, CONSONANTS)
        });
        let suffixes = inventory(rng, config.num_suffixes, |rng| {
            let v = pick(rng, VOWELS).to_string();
            if rng.random_bool(0.7) {
                v + pick(rng, CONSONANTS)
            } else {
                v
            }
        });
        Self {
            prefixes,
            stems,
            suffixes,
            min_morphs: config.min_morphs,
            max_morphs: config.max_morphs,
            repeat_suffix_prob: if config.repeat_suffixes { 0.25 } else { 0.0 },
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.stems.is_empty() {
            return Err(SynthError::NoStems);
        }
        if self.min_morphs == 0 || self.min_morphs > self.max_morphs {
            return Err(SynthError::BadLengths {
                min: self.min_morphs,
                max: self.max_morphs,
            });
        }
        if !(0.0..=1.0).contains(&self.repeat_suffix_prob) {
            return Err(SynthError::BadProbability(self.repeat_suffix_prob.to_string()));
        }
        let all = self.prefixes.iter().chain(&self.stems).chain(&self.suffixes);
        if all.clone().any(String::is_empty) {
            return Err(SynthError::EmptyMorph);
        }
        Ok(())
    }

    /// One word's morphs.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<String> {
        let has_affixes = !(self.prefixes.is_empty() && self.suffixes.is_empty());
        let k = if has_affixes {
            rng.random_range(self.min_morphs..=self.max_morphs)
        } else {
            1
        };
        let affixes = k - 1;
        let n_pre = match (self.prefixes.is_empty(), self.suffixes.is_empty()) {
            (true, _) => 0,
            (false, true) => affixes,
            (false, false) => rng.random_range(0..=affixes),
        };
        let mut morphs: Vec<String> = (0..n_pre).map(|_| self.prefixes.choose(rng).unwrap().clone()).collect();
        morphs.push(self.stems.choose(rng).unwrap().clone());
        for j in 0..affixes - n_pre {
            let repeat = j > 0 && self.repeat_suffix_prob > 0.0 && rng.random_bool(self.repeat_suffix_prob);
            let next = if repeat {
                morphs.last().unwrap().clone()
            } else {
                self.suffixes.choose(rng).unwrap().clone()
            };
            morphs.push(next);
        }
        morphs
    }
}

/// Samples distinct words and deals them into word-disjoint splits in the
/// configured proportions. If the grammar cannot produce enough distinct
/// words, the splits shrink proportionally.
pub fn generate(grammar: &Grammar, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<SynthCorpus, SynthError> {
    grammar.validate()?;
    let wanted = config.train + config.dev + config.test;
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(wanted);
    let mut attempts = 0;
    while words.len() < wanted && attempts < wanted.max(1) * ATTEMPTS_PER_WORD {
        attempts += 1;
        let morphs = grammar.sample(rng);
        let seg = SurfaceSegmentation::from_segments(&morphs).expect("morphs are non-empty");
        if seen.insert(seg.word().to_string()) {
            words.push(seg);
        }
    }
    let got = words.len();
    let (n_dev, n_test) = if got == wanted {
        (config.dev, config.test)
    } else {
        (got * config.dev / wanted.max(1), got * config.test / wanted.max(1))
    };
    let test = words.split_off(got - n_test);
    let dev = words.split_off(words.len() - n_dev);
    Ok(SynthCorpus {
        train: words,
        dev,
        test,
    })
}

/// Random grammar plus corpus, all driven by `seed`.
pub fn synthesize(config: &SynthConfig, seed: u64) -> Result<(Grammar, SynthCorpus), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grammar = Grammar::random(&mut rng, config);
    let corpus = generate(&grammar, config, &mut rng)?;
    Ok((grammar, corpus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes_and_disjointness() {
        let (grammar, corpus) = synthesize(&SynthConfig::default(), 42).unwrap();
        assert_eq!(
            (grammar.prefixes.len(), grammar.stems.len(), grammar.suffixes.len()),
            (20, 50, 20)
        );
        assert_eq!(
            (corpus.train.len(), corpus.dev.len(), corpus.test.len()),
            (2000, 200, 500)
        );
        let mut all = HashSet::new();
        for s in corpus.train.iter().chain(&corpus.dev).chain(&corpus.test) {
            assert!(all.insert(s.word().to_string()));
            assert!((2..=5).contains(&s.num_segments()));
        }
    }

    #[test]
    fn reproducible() {
        assert_eq!(
            synthesize(&SynthConfig::default(), 42).unwrap(),
            synthesize(&SynthConfig::default(), 42).unwrap()
        );
        assert_ne!(
            synthesize(&SynthConfig::default(), 42).unwrap().1,
            synthesize(&SynthConfig::default(), 43).unwrap().1
        );
    }

    #[test]
    fn repeated_suffixes_appear() {
        let config = SynthConfig {
            repeat_suffixes: true,
            ..SynthConfig::default()
        };
        let (grammar, corpus) = synthesize(&config, 42).unwrap();
        let repeats = corpus.train.iter().any(|s| {
            let segs = s.segments();
            segs.windows(2)
                .any(|w| w[0] == w[1] && grammar.suffixes.iter().any(|x| x == w[0]))
        });
        assert!(repeats);
    }

    #[test]
    fn degenerate_grammar() {
        let grammar = Grammar {
            prefixes: vec![],
            stems: vec!["hamb".into()],
            suffixes: vec![],
            min_morphs: 2,
            max_morphs: 5,
            repeat_suffix_prob: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let corpus = generate(&grammar, &SynthConfig::default(), &mut rng).unwrap();
        assert_eq!(corpus.train.len() + corpus.dev.len() + corpus.test.len(), 1);
        assert_eq!(corpus.train[0].to_string(), "hamb");

        let empty = Grammar {
            stems: vec![],
            ..grammar
        };
        assert_eq!(
            generate(&empty, &SynthConfig::default(), &mut rng),
            Err(SynthError::NoStems)
        );
    }
}
