//! Unsupervised segmenters: branching-entropy rules, a seeded random
//! baseline, and a two-part-code MDL lexicon learner.

mod entropy;
mod mdl;
mod random;

pub use entropy::{
    segment_constant_entropy, segment_entropy_increase, segment_relative_entropy, EntropyConfig, EntropyObjective,
};
pub use mdl::{description_length, mdl_segment, mdl_train, MdlConfig, MdlError, MdlModel, MdlReport};
pub use random::{segment_random, DEFAULT_BOUNDARY_PROBABILITY};

use crate::align::SurfaceSegmentation;

/// Segmentation of `word` with a boundary at every gap where `cut` holds.
/// Gap `g` (1-based) sits before character `g`.
fn from_gaps(word: &str, num_gaps: usize, mut cut: impl FnMut(usize) -> bool) -> SurfaceSegmentation {
    let boundaries = (1..=num_gaps).filter(|&g| cut(g)).collect();
    SurfaceSegmentation::new(word, boundaries).expect("segmenters need a non-empty word")
}
