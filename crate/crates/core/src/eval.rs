//! Morpheme-overlap micro P/R/F1 and boundary P/R/F1.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::align::SurfaceSegmentation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// From true positives and predicted / gold totals. Empty denominators
    /// give 0.
    pub fn from_counts(counts: Counts) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(counts.tp, counts.n_pred);
        let recall = ratio(counts.tp, counts.n_gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub n_pred: usize,
    pub n_gold: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.n_pred += rhs.n_pred;
        self.n_gold += rhs.n_gold;
    }
}

/// How repeated morphemes within a word are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Overlap {
    /// Each occurrence counts; true positives are the multiset intersection.
    #[default]
    Multiset,
    /// Duplicates within a word collapse to one.
    Set,
}

impl std::str::FromStr for Overlap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiset" => Ok(Self::Multiset),
            "set" => Ok(Self::Set),
            _ => Err(format!("unknown overlap mode {s:?} (expected multiset or set)")),
        }
    }
}

fn bag<T: Hash + Eq>(items: impl IntoIterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

pub fn word_overlap<A: AsRef<str>, B: AsRef<str>>(pred: &[A], gold: &[B], overlap: Overlap) -> Counts {
    let mut p = bag(pred.iter().map(AsRef::as_ref));
    let mut g = bag(gold.iter().map(AsRef::as_ref));
    if overlap == Overlap::Set {
        p.values_mut().for_each(|c| *c = 1);
        g.values_mut().for_each(|c| *c = 1);
    }
    let tp = p.iter().map(|(m, &c)| c.min(g.get(m).copied().unwrap_or(0))).sum();
    Counts {
        tp,
        n_pred: p.values().sum(),
        n_gold: g.values().sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("pair {index}: prediction is for {pred:?} but gold is {gold:?}")]
    WordMismatch { index: usize, pred: String, gold: String },
    #[error("no evaluation pairs")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub words: usize,
    pub counts: Counts,
    #[serde(flatten)]
    pub prf: Prf,
}

fn check_pairs(pairs: &[(SurfaceSegmentation, SurfaceSegmentation)]) -> Result<(), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    for (index, (pred, gold)) in pairs.iter().enumerate() {
        if pred.word() != gold.word() {
            return Err(EvalError::WordMismatch {
                index,
                pred: pred.word().to_string(),
                gold: gold.word().to_string(),
            });
        }
    }
    Ok(())
}

/// Micro-averaged morpheme P/R/F1 over (prediction, gold) pairs.
pub fn micro_prf(
    pairs: &[(SurfaceSegmentation, SurfaceSegmentation)],
    overlap: Overlap,
) -> Result<EvalReport, EvalError> {
    check_pairs(pairs)?;
    let mut counts = Counts::default();
    for (pred, gold) in pairs {
        counts += word_overlap(&pred.segments(), &gold.segments(), overlap);
    }
    Ok(EvalReport {
        words: pairs.len(),
        counts,
        prf: Prf::from_counts(counts),
    })
}

/// Micro P/R/F1 over arbitrary morpheme lists, e.g. canonical analyses
/// whose morphemes need not concatenate to the word.
pub fn micro_prf_morphemes<A: AsRef<str>, B: AsRef<str>>(
    pairs: &[(Vec<A>, Vec<B>)],
    overlap: Overlap,
) -> Result<EvalReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut counts = Counts::default();
    for (pred, gold) in pairs {
        counts += word_overlap(pred, gold, overlap);
    }
    Ok(EvalReport {
        words: pairs.len(),
        counts,
        prf: Prf::from_counts(counts),
    })
}

/// Micro P/R/F1 over internal cut positions.
pub fn boundary_prf(pairs: &[(SurfaceSegmentation, SurfaceSegmentation)]) -> Result<EvalReport, EvalError> {
    check_pairs(pairs)?;
    let mut counts = Counts::default();
    for (pred, gold) in pairs {
        let p: BTreeSet<usize> = pred.boundaries().iter().copied().collect();
        let g: BTreeSet<usize> = gold.boundaries().iter().copied().collect();
        counts += Counts {
            tp: p.intersection(&g).count(),
            n_pred: p.len(),
            n_gold: g.len(),
        };
    }
    Ok(EvalReport {
        words: pairs.len(),
        counts,
        prf: Prf::from_counts(counts),
    })
}
