//! Feature-based linear-chain CRF over BMES labels.
//!
//! The score of a labelling is the sum of per-position emission scores
//! (feature weights for the position's label) and transition scores between
//! adjacent labels, including transitions out of START and into END.
//! Transitions that break the BMES grammar are fixed at `-inf`, so decoding
//! always yields a valid segmentation.

mod features;
pub mod inference;
mod io;
mod lbfgs;
mod train;

use thiserror::Error;

use crate::align::SurfaceSegmentation;
use crate::labels::{decode_bmes, Label, LabelSeq};

pub use features::{extract_features, is_vowel, FeatureVocab, MAX_NGRAM, TEMPLATE_VERSION};
pub use inference::{Lattice, Marginals, TransitionSlot, Transitions, NUM_TRANSITION_PARAMS};
pub use io::{load_model, save_model, ModelFormatError, FORMAT_VERSION};
pub use train::{train, IterationLog, StopReason, TrainConfig, TrainReport};

const L: usize = Label::COUNT;

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("gold labels {labels} for {word:?} are not a legal BMES sequence")]
    IllegalGold { word: String, labels: String },
    #[error("gold labels for {word:?} have length {labels}, word has {len}")]
    LengthMismatch { word: String, labels: usize, len: usize },
    #[error("objective became non-finite ({value}) at iteration {iteration}")]
    NonFinite { iteration: usize, value: f64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("weight table has {got} emission entries, vocabulary needs {expected}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite weight in model")]
    NonFiniteWeight,
}

/// Emission weights indexed `feature * 4 + label`, plus transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub emission: Vec<f64>,
    pub transitions: Transitions,
}

impl Weights {
    pub fn zeros(num_features: usize) -> Self {
        Self {
            emission: vec![0.0; num_features * L],
            transitions: Transitions::zeros(),
        }
    }

    /// Same layout with every entry zero, illegal transitions included. Used
    /// for gradients.
    fn zero_gradient(num_features: usize) -> Self {
        Self {
            emission: vec![0.0; num_features * L],
            transitions: Transitions {
                start: [0.0; L],
                pair: [[0.0; L]; L],
                end: [0.0; L],
            },
        }
    }

    pub fn num_features(&self) -> usize {
        self.emission.len() / L
    }

    pub fn emission(&self, feature: u32, label: Label) -> f64 {
        self.emission[feature as usize * L + label.index()]
    }

    pub fn emission_mut(&mut self, feature: u32, label: Label) -> &mut f64 {
        &mut self.emission[feature as usize * L + label.index()]
    }

    pub fn num_params(&self) -> usize {
        self.emission.len() + NUM_TRANSITION_PARAMS
    }

    /// Free parameters: emissions, then the legal transitions in
    /// [`Transitions::legal_slots`] order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.emission.clone();
        out.extend(Transitions::legal_slots().map(|s| self.transitions.slot(s)));
        out
    }

    pub fn unflatten(num_features: usize, params: &[f64]) -> Self {
        let mut w = Self::zeros(num_features);
        w.assign(params);
        w
    }

    fn assign(&mut self, params: &[f64]) {
        let n = self.emission.len();
        assert_eq!(params.len(), n + NUM_TRANSITION_PARAMS);
        self.emission.copy_from_slice(&params[..n]);
        for (slot, &v) in Transitions::legal_slots().zip(&params[n..]) {
            *self.transitions.slot_mut(slot) = v;
        }
    }

    fn is_finite(&self) -> bool {
        self.emission.iter().all(|w| w.is_finite())
            && Transitions::legal_slots().all(|s| self.transitions.slot(s).is_finite())
    }

    fn squared_norm(&self) -> f64 {
        self.emission.iter().map(|w| w * w).sum::<f64>()
            + Transitions::legal_slots()
                .map(|s| self.transitions.slot(s).powi(2))
                .sum::<f64>()
    }

    fn lattice(&self, ids: &[Vec<u32>]) -> Lattice {
        Lattice {
            emit: ids
                .iter()
                .map(|feats| {
                    let mut row = [0.0; L];
                    for &f in feats {
                        let base = f as usize * L;
                        for (y, r) in row.iter_mut().enumerate() {
                            *r += self.emission[base + y];
                        }
                    }
                    row
                })
                .collect(),
        }
    }
}

/// Training settings echoed into the model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub template_version: u32,
    pub l2: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub iterations_run: usize,
}

impl Default for ModelMeta {
    fn default() -> Self {
        let config = TrainConfig::default();
        Self {
            template_version: TEMPLATE_VERSION,
            l2: config.l2,
            epsilon: config.epsilon,
            max_iterations: config.max_iterations,
            iterations_run: 0,
        }
    }
}

/// A trained (or hand-built) CRF. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    vocab: FeatureVocab,
    weights: Weights,
    meta: ModelMeta,
}

impl CrfModel {
    pub fn new(vocab: FeatureVocab, weights: Weights, meta: ModelMeta) -> Result<Self, CrfError> {
        if weights.emission.len() != vocab.len() * L {
            return Err(CrfError::Shape {
                expected: vocab.len() * L,
                got: weights.emission.len(),
            });
        }
        if !weights.is_finite() {
            return Err(CrfError::NonFiniteWeight);
        }
        let mut weights = weights;
        for y in Label::ALL {
            if !y.can_start() {
                weights.transitions.start[y.index()] = f64::NEG_INFINITY;
            }
            if !y.can_end() {
                weights.transitions.end[y.index()] = f64::NEG_INFINITY;
            }
            for z in Label::ALL {
                if !y.can_precede(z) {
                    weights.transitions.pair[y.index()][z.index()] = f64::NEG_INFINITY;
                }
            }
        }
        Ok(Self { vocab, weights, meta })
    }

    /// All-zero weights over the given vocabulary.
    pub fn zeros(vocab: FeatureVocab) -> Self {
        let weights = Weights::zeros(vocab.len());
        Self {
            vocab,
            weights,
            meta: ModelMeta::default(),
        }
    }

    pub fn vocab(&self) -> &FeatureVocab {
        &self.vocab
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    /// A copy of this model with different weights.
    pub fn with_weights(&self, weights: Weights) -> Result<Self, CrfError> {
        Self::new(self.vocab.clone(), weights, self.meta.clone())
    }

    /// Emission scores of `word`. Features absent from the vocabulary score 0.
    pub fn lattice(&self, word: &str) -> Lattice {
        let chars: Vec<char> = word.chars().collect();
        self.weights.lattice(&self.vocab.lookup_word(&chars))
    }
}

/// Unnormalized score; `-inf` for illegal or mis-sized label sequences.
pub fn sequence_score(model: &CrfModel, word: &str, labels: &LabelSeq) -> f64 {
    inference::score(&model.lattice(word), &model.weights.transitions, labels.as_slice())
}

/// Log of the sum of exponentiated scores over all labellings of `word`.
pub fn log_partition(model: &CrfModel, word: &str) -> f64 {
    inference::log_partition(&model.lattice(word), &model.weights.transitions)
}

pub fn marginals(model: &CrfModel, word: &str) -> Marginals {
    inference::marginals(&model.lattice(word), &model.weights.transitions)
}

pub fn viterbi_decode(model: &CrfModel, word: &str) -> LabelSeq {
    inference::viterbi(&model.lattice(word), &model.weights.transitions).0
}

pub fn segment(model: &CrfModel, word: &str) -> SurfaceSegmentation {
    decode_bmes(&viterbi_decode(model, word), word).expect("constrained decoding yields legal labels")
}

/// A training example with features already interned.
#[derive(Debug, Clone)]
pub(crate) struct Instance {
    pub ids: Vec<Vec<u32>>,
    pub gold: Vec<Label>,
}

/// Adds the gradient of `log Z - score(gold)` to `grad` and returns that value.
fn accumulate(weights: &Weights, inst: &Instance, grad: &mut Weights) -> f64 {
    let lattice = weights.lattice(&inst.ids);
    let trans = &weights.transitions;
    let m = inference::marginals(&lattice, trans);
    let gold_score = inference::score(&lattice, trans, &inst.gold);

    for (i, feats) in inst.ids.iter().enumerate() {
        let gold = inst.gold[i].index();
        for &f in feats {
            let base = f as usize * L;
            for y in 0..L {
                grad.emission[base + y] += m.node[i][y];
            }
            grad.emission[base + gold] -= 1.0;
        }
    }
    let g = &mut grad.transitions;
    let n = inst.gold.len();
    for y in 0..L {
        g.start[y] += m.node[0][y];
        g.end[y] += m.node[n - 1][y];
    }
    g.start[inst.gold[0].index()] -= 1.0;
    g.end[inst.gold[n - 1].index()] -= 1.0;
    for (i, edge) in m.edge.iter().enumerate() {
        for x in 0..L {
            for y in 0..L {
                g.pair[x][y] += edge[x][y];
            }
        }
        g.pair[inst.gold[i].index()][inst.gold[i + 1].index()] -= 1.0;
    }
    m.log_partition - gold_score
}

/// Regularized negative log-likelihood of `batch` and its gradient.
///
/// `NLL = sum(log Z - score(gold)) + l2/2 * |w|^2`. Gradient entries for
/// illegal transitions are zero. Features not in the model's vocabulary are
/// ignored.
pub fn nll_and_gradient<S: AsRef<str>>(
    model: &CrfModel,
    batch: &[(S, LabelSeq)],
    l2: f64,
) -> Result<(f64, Weights), CrfError> {
    let instances = batch
        .iter()
        .map(|(word, labels)| {
            let word = word.as_ref();
            let chars: Vec<char> = word.chars().collect();
            check_gold(word, chars.len(), labels)?;
            Ok(Instance {
                ids: model.vocab.lookup_word(&chars),
                gold: labels.0.clone(),
            })
        })
        .collect::<Result<Vec<_>, CrfError>>()?;
    let mut grad = Weights::zero_gradient(model.vocab.len());
    let nll = batch_objective(&model.weights, &instances, l2, &mut grad);
    Ok((nll, grad))
}

fn check_gold(word: &str, len: usize, labels: &LabelSeq) -> Result<(), CrfError> {
    if labels.len() != len {
        return Err(CrfError::LengthMismatch {
            word: word.to_string(),
            labels: labels.len(),
            len,
        });
    }
    if !labels.is_valid() {
        return Err(CrfError::IllegalGold {
            word: word.to_string(),
            labels: labels.to_string(),
        });
    }
    Ok(())
}

/// Objective over pre-interned instances; `grad` must be zeroed.
pub(crate) fn batch_objective(weights: &Weights, instances: &[Instance], l2: f64, grad: &mut Weights) -> f64 {
    let mut total = 0.0;
    for inst in instances {
        total += accumulate(weights, inst, grad);
    }
    if l2 > 0.0 {
        total += 0.5 * l2 * weights.squared_norm();
        for (g, w) in grad.emission.iter_mut().zip(&weights.emission) {
            *g += l2 * w;
        }
        for slot in Transitions::legal_slots() {
            *grad.transitions.slot_mut(slot) += l2 * weights.transitions.slot(slot);
        }
    }
    total
}
