//! Morph lexicon learning under a two-part code.
//!
//! Total cost = corpus cost + lexicon cost, where the corpus cost is
//! `-sum over morph tokens of log2(c(m) / N)` and the lexicon cost charges
//! `(len(m) + 1) * char_cost` bits per morph type, with
//! `char_cost = log2(|alphabet| + 1)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::align::SurfaceSegmentation;

const MAGIC: &str = "morphseg-mdl";
const FORMAT_VERSION: u32 = 1;
/// Splits must beat the current analysis by more than this many bits.
const MIN_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MdlConfig {
    /// Seeds the per-pass shuffle of the word order.
    pub seed: u64,
    pub max_passes: usize,
    /// Stop once a pass improves the total cost by less than this fraction.
    pub min_relative_improvement: f64,
}

impl Default for MdlConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            max_passes: 10,
            min_relative_improvement: 1e-4,
        }
    }
}

#[derive(Debug, Error)]
pub enum MdlError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdlModel {
    morphs: BTreeMap<String, u64>,
    tokens: u64,
    char_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdlReport {
    /// Entry 0 is the cost with every word unsplit; one entry per pass after.
    pub pass_costs: Vec<f64>,
    pub passes: usize,
    /// Final analysis of each distinct training word.
    pub analyses: BTreeMap<String, Vec<String>>,
}

fn clogc(c: u64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * (c as f64).log2()
    }
}

fn lexicon_entry(morph: &str, char_cost: f64) -> f64 {
    (morph.chars().count() + 1) as f64 * char_cost
}

/// Incrementally maintained two-part cost.
struct Ledger {
    counts: HashMap<String, u64>,
    tokens: u64,
    sum_clogc: f64,
    lexicon: f64,
    char_cost: f64,
}

impl Ledger {
    fn new(char_cost: f64) -> Self {
        Self {
            counts: HashMap::new(),
            tokens: 0,
            sum_clogc: 0.0,
            lexicon: 0.0,
            char_cost,
        }
    }

    fn add(&mut self, morph: &str, f: u64) {
        let c = match self.counts.get_mut(morph) {
            Some(c) => c,
            None => {
                self.lexicon += lexicon_entry(morph, self.char_cost);
                self.counts.entry(morph.to_string()).or_insert(0)
            }
        };
        self.sum_clogc += clogc(*c + f) - clogc(*c);
        *c += f;
        self.tokens += f;
    }

    fn remove(&mut self, morph: &str, f: u64) {
        let c = self.counts.get_mut(morph).expect("removing a morph that is present");
        debug_assert!(*c >= f);
        self.sum_clogc += clogc(*c - f) - clogc(*c);
        *c -= f;
        self.tokens -= f;
        if *c == 0 {
            self.counts.remove(morph);
            self.lexicon -= lexicon_entry(morph, self.char_cost);
        }
    }

    fn total(&self) -> f64 {
        clogc(self.tokens) - self.sum_clogc + self.lexicon
    }

    /// Exact recomputation, free of incremental rounding.
    fn exact_total(&self) -> f64 {
        let mut morphs: Vec<(&String, &u64)> = self.counts.iter().collect();
        morphs.sort();
        let sum: f64 = morphs.iter().map(|(_, &c)| clogc(c)).sum();
        let lexicon: f64 = morphs.iter().map(|(m, _)| lexicon_entry(m, self.char_cost)).sum();
        clogc(self.tokens) - sum + lexicon
    }

    /// Best analysis of `morph` (frequency `f`, not currently counted) by
    /// recursive binary splitting. Leaves the chosen parts counted.
    fn resplit(&mut self, morph: &str, f: u64) -> Vec<String> {
        let chars: Vec<(usize, char)> = morph.char_indices().collect();
        self.add(morph, f);
        let mut best_cost = self.total();
        self.remove(morph, f);
        let mut best_split = None;
        for &(at, _) in &chars[1..] {
            let (a, b) = morph.split_at(at);
            self.add(a, f);
            self.add(b, f);
            let cost = self.total();
            self.remove(b, f);
            self.remove(a, f);
            if cost < best_cost - MIN_GAIN {
                best_cost = cost;
                best_split = Some(at);
            }
        }
        match best_split {
            None => {
                self.add(morph, f);
                vec![morph.to_string()]
            }
            Some(at) => {
                let (a, b) = morph.split_at(at);
                self.add(b, f);
                let mut parts = self.resplit(a, f);
                self.remove(b, f);
                parts.extend(self.resplit(b, f));
                parts
            }
        }
    }
}

fn char_cost_for<'a>(words: impl Iterator<Item = &'a str>) -> f64 {
    let alphabet: BTreeSet<char> = words.flat_map(str::chars).collect();
    ((alphabet.len() + 1) as f64).log2()
}

/// Two-part description length of a corpus analysis. Each entry is a word's
/// morph sequence and that word's frequency.
pub fn description_length<S: AsRef<str>>(analyses: &[(Vec<S>, u64)], char_cost: f64) -> f64 {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for (morphs, f) in analyses {
        for m in morphs {
            *counts.entry(m.as_ref()).or_insert(0) += f;
        }
    }
    let tokens: u64 = counts.values().sum();
    let sum: f64 = counts.values().map(|&c| clogc(c)).sum();
    let lexicon: f64 = counts.keys().map(|m| lexicon_entry(m, char_cost)).sum();
    clogc(tokens) - sum + lexicon
}

/// Learns a morph lexicon by greedy recursive splitting, one seeded-shuffle
/// pass over the distinct words at a time. A word's new analysis is kept only
/// if it lowers the total cost, so costs never increase.
pub fn mdl_train<S: AsRef<str>>(words: &[S], config: &MdlConfig) -> Result<(MdlModel, MdlReport), MdlError> {
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for w in words.iter().map(AsRef::as_ref).filter(|w| !w.is_empty()) {
        *freq.entry(w).or_insert(0) += 1;
    }
    if freq.is_empty() {
        return Err(MdlError::EmptyCorpus);
    }
    let char_cost = char_cost_for(freq.keys().copied());
    let mut ledger = Ledger::new(char_cost);
    let mut analyses: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (&w, &f) in &freq {
        ledger.add(w, f);
        analyses.insert(w.to_string(), vec![w.to_string()]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<(&str, u64)> = freq.iter().map(|(&w, &f)| (w, f)).collect();
    let mut pass_costs = vec![ledger.exact_total()];
    let mut passes = 0;
    while passes < config.max_passes {
        order.shuffle(&mut rng);
        for &(w, f) in &order {
            let before = ledger.total();
            let old = analyses.remove(w).expect("every word has an analysis");
            for m in &old {
                ledger.remove(m, f);
            }
            let new = ledger.resplit(w, f);
            if ledger.total() < before - MIN_GAIN {
                analyses.insert(w.to_string(), new);
            } else {
                for m in &new {
                    ledger.remove(m, f);
                }
                for m in &old {
                    ledger.add(m, f);
                }
                analyses.insert(w.to_string(), old);
            }
        }
        passes += 1;
        let prev = *pass_costs.last().unwrap();
        let cost = ledger.exact_total();
        pass_costs.push(cost);
        if (prev - cost) / prev.abs().max(f64::MIN_POSITIVE) < config.min_relative_improvement {
            break;
        }
    }

    let morphs: BTreeMap<String, u64> = ledger.counts.into_iter().collect();
    let model = MdlModel {
        tokens: morphs.values().sum(),
        morphs,
        char_cost,
    };
    Ok((
        model,
        MdlReport {
            pass_costs,
            passes,
            analyses,
        },
    ))
}

impl MdlModel {
    pub fn morphs(&self) -> &BTreeMap<String, u64> {
        &self.morphs
    }

    pub fn count(&self, morph: &str) -> u64 {
        self.morphs.get(morph).copied().unwrap_or(0)
    }

    pub fn tokens(&self) -> u64 {
        self.tokens
    }

    pub fn char_cost(&self) -> f64 {
        self.char_cost
    }

    /// Total two-part cost of the lexicon and the training corpus counts.
    pub fn total_cost(&self) -> f64 {
        let sum: f64 = self.morphs.values().map(|&c| clogc(c)).sum();
        let lexicon: f64 = self.morphs.keys().map(|m| lexicon_entry(m, self.char_cost)).sum();
        clogc(self.tokens) - sum + lexicon
    }

    fn morph_cost(&self, morph: &str) -> Option<f64> {
        self.morphs
            .get(morph)
            .map(|&c| (self.tokens as f64).log2() - (c as f64).log2())
    }

    /// Cost of a single character that is not a lexicon morph: one unseen
    /// token plus spelling it out.
    fn fallback_cost(&self) -> f64 {
        ((self.tokens + 1) as f64).log2() + 2.0 * self.char_cost
    }

    pub fn save<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{MAGIC}\t{FORMAT_VERSION}")?;
        writeln!(sink, "char_cost\t{}", self.char_cost)?;
        writeln!(sink, "[morphs]")?;
        for (m, c) in &self.morphs {
            writeln!(sink, "{m}\t{c}")?;
        }
        writeln!(sink, "[end]")?;
        sink.flush()
    }

    pub fn load<R: BufRead>(source: R) -> Result<Self, MdlError> {
        let mut lines = source.lines();
        let mut n = 0;
        let mut next = |n: &mut usize| -> Result<String, MdlError> {
            *n += 1;
            match lines.next() {
                Some(l) => Ok(l?),
                None => Err(MdlError::Malformed {
                    line: *n,
                    message: "unexpected end of file".into(),
                }),
            }
        };
        let bad = |line: usize, message: &str| MdlError::Malformed {
            line,
            message: message.into(),
        };
        if next(&mut n)? != format!("{MAGIC}\t{FORMAT_VERSION}") {
            return Err(bad(n, "not a version 1 MDL model"));
        }
        let char_cost = next(&mut n)?
            .strip_prefix("char_cost\t")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|c| c.is_finite() && *c > 0.0)
            .ok_or_else(|| bad(n, "expected positive `char_cost`"))?;
        if next(&mut n)? != "[morphs]" {
            return Err(bad(n, "expected [morphs]"));
        }
        let mut morphs = BTreeMap::new();
        loop {
            let line = next(&mut n)?;
            if line == "[end]" {
                break;
            }
            let (m, c) = line
                .split_once('\t')
                .ok_or_else(|| bad(n, "expected morph<TAB>count"))?;
            let c: u64 = c
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| bad(n, "count must be a positive integer"))?;
            if m.is_empty() || morphs.insert(m.to_string(), c).is_some() {
                return Err(bad(n, "empty or duplicate morph"));
            }
        }
        Ok(Self {
            tokens: morphs.values().sum(),
            morphs,
            char_cost,
        })
    }
}

/// Cheapest decomposition of `word` into lexicon morphs, with single
/// characters as a costly fallback so every word can be segmented. Ties go
/// to fewer segments, then to the earliest-ending first segment.
pub fn mdl_segment(model: &MdlModel, word: &str) -> SurfaceSegmentation {
    let offsets: Vec<usize> = word
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(word.len()))
        .collect();
    let n = offsets.len() - 1;
    let max_len = model.morphs.keys().map(|m| m.chars().count()).max().unwrap_or(1);
    // best[j] = (cost, segments, start of last segment) for the first j chars.
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; n + 1];
    best[0] = Some((0.0, 0, 0));
    for j in 1..=n {
        for i in j.saturating_sub(max_len.max(1))..j {
            let Some((prefix_cost, prefix_segs, _)) = best[i] else {
                continue;
            };
            let piece = &word[offsets[i]..offsets[j]];
            let cost = match model.morph_cost(piece) {
                Some(c) => c,
                None if j - i == 1 => model.fallback_cost(),
                None => continue,
            };
            let cand = (prefix_cost + cost, prefix_segs + 1, i);
            let better = match best[j] {
                None => true,
                Some((c, s, _)) => cand.0 < c - MIN_GAIN || (cand.0 <= c + MIN_GAIN && cand.1 < s),
            };
            if better {
                best[j] = Some(cand);
            }
        }
    }
    let mut boundaries = Vec::new();
    let mut j = n;
    while j > 0 {
        let (_, _, i) = best[j].expect("single-character fallback reaches every position");
        if i > 0 {
            boundaries.push(i);
        }
        j = i;
    }
    boundaries.reverse();
    SurfaceSegmentation::new(word, boundaries).expect("mdl_segment needs a non-empty word")
}
