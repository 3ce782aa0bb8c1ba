use serde::Serialize;

pub use super::lbfgs::StopReason;
use super::lbfgs::{self, Failure, LbfgsConfig};
use super::{batch_objective, inference, CrfError, CrfModel, FeatureVocab, Instance, ModelMeta, Transitions, Weights};
use crate::align::SurfaceSegmentation;
use crate::eval::{self, Overlap};
use crate::labels::{decode_bmes, encode_bmes, Label};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// L2 penalty strength; the objective carries `l2/2 * |w|^2`.
    pub l2: f64,
    /// Relative objective change below which training stops.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// L-BFGS history size.
    pub memory: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2: 0.1,
            epsilon: 1e-7,
            max_iterations: 160,
            memory: 6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CrfError> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(CrfError::Config(format!(
                "l2 must be a nonnegative number, got {}",
                self.l2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(CrfError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(CrfError::Config("max_iterations must be at least 1".into()));
        }
        if self.memory == 0 {
            return Err(CrfError::Config("memory must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Entry 0 is the objective at the all-zero starting point.
    pub log: Vec<IterationLog>,
    pub iterations: usize,
    pub stop: StopReason,
    /// Iteration whose weights were returned.
    pub selected_iteration: usize,
    pub num_features: usize,
}

/// Fits a CRF to gold segmentations by L-BFGS on the regularized NLL.
///
/// With a dev set, the iterate with the best dev morpheme F1 is returned
/// (latest wins ties); otherwise the final iterate.
pub fn train(
    train_set: &[SurfaceSegmentation],
    dev: Option<&[SurfaceSegmentation]>,
    config: &TrainConfig,
) -> Result<(CrfModel, TrainReport), CrfError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(CrfError::EmptyTrainingSet);
    }

    let mut vocab = FeatureVocab::new();
    let instances: Vec<Instance> = train_set
        .iter()
        .map(|seg| {
            let chars: Vec<char> = seg.word().chars().collect();
            Instance {
                ids: vocab.intern_word(&chars),
                gold: encode_bmes(seg).0,
            }
        })
        .collect();
    let num_features = vocab.len();
    let dev_ids: Vec<Vec<Vec<u32>>> = dev
        .unwrap_or_default()
        .iter()
        .map(|seg| vocab.lookup_word(&seg.word().chars().collect::<Vec<_>>()))
        .collect();

    let n_emission = num_features * Label::COUNT;
    let mut weights = Weights::zeros(num_features);
    let mut grad = Weights::zero_gradient(num_features);
    let objective = |x: &[f64], g: &mut [f64]| -> Result<f64, ()> {
        weights.assign(x);
        grad.emission.iter_mut().for_each(|v| *v = 0.0);
        grad.transitions = Weights::zero_gradient(0).transitions;
        let value = batch_objective(&weights, &instances, config.l2, &mut grad);
        g[..n_emission].copy_from_slice(&grad.emission);
        for (slot, gi) in Transitions::legal_slots().zip(&mut g[n_emission..]) {
            *gi = grad.transitions.slot(slot);
        }
        Ok(value)
    };

    let x0 = Weights::zeros(num_features).flatten();
    let f0 = batch_objective(
        &Weights::zeros(num_features),
        &instances,
        config.l2,
        &mut Weights::zero_gradient(num_features),
    );
    let mut log = vec![IterationLog {
        iteration: 0,
        objective: f0,
        dev_f1: None,
    }];
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    let lbfgs_config = LbfgsConfig {
        memory: config.memory,
        max_iterations: config.max_iterations,
        epsilon: config.epsilon,
    };
    let result = lbfgs::minimize(x0, lbfgs_config, objective, |k, x, fx| {
        let dev_f1 = dev.map(|dev| {
            let w = Weights::unflatten(num_features, x);
            dev_f1(&w, dev, &dev_ids)
        });
        if let Some(f1) = dev_f1 {
            if best.as_ref().is_none_or(|(b, _, _)| f1 >= *b) {
                best = Some((f1, k, x.to_vec()));
            }
        }
        log.push(IterationLog {
            iteration: k,
            objective: fx,
            dev_f1,
        });
        true
    });
    let (x_final, iterations, stop) = match result {
        Ok(r) => r,
        Err(Failure::NonFinite { iteration, value }) => return Err(CrfError::NonFinite { iteration, value }),
        Err(Failure::Objective(())) => unreachable!("objective is infallible"),
    };

    let (params, selected_iteration) = match best {
        Some((_, k, x)) => (x, k),
        None => (x_final, iterations),
    };
    let meta = ModelMeta {
        template_version: super::TEMPLATE_VERSION,
        l2: config.l2,
        epsilon: config.epsilon,
        max_iterations: config.max_iterations,
        iterations_run: iterations,
    };
    let model = CrfModel::new(vocab, Weights::unflatten(num_features, &params), meta)?;
    Ok((
        model,
        TrainReport {
            log,
            iterations,
            stop,
            selected_iteration,
            num_features,
        },
    ))
}

fn dev_f1(weights: &Weights, dev: &[SurfaceSegmentation], dev_ids: &[Vec<Vec<u32>>]) -> f64 {
    let pairs: Vec<(SurfaceSegmentation, SurfaceSegmentation)> = dev
        .iter()
        .zip(dev_ids)
        .map(|(gold, ids)| {
            let (labels, _) = inference::viterbi(&weights.lattice(ids), &weights.transitions);
            let pred = decode_bmes(&labels, gold.word()).expect("constrained decoding yields legal labels");
            (pred, gold.clone())
        })
        .collect();
    eval::micro_prf(&pairs, Overlap::Multiset)
        .map(|r| r.prf.f1)
        .unwrap_or(0.0)
}
