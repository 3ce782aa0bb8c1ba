//! Surface morphological segmentation for conjunctively written languages.
//!
//! The pipeline runs from canonical morpheme annotations to surface
//! segmentations ([`align`]), through BMES character labels ([`labels`]) to a
//! feature-based linear-chain CRF ([`crf`]). Unsupervised baselines live in
//! [`unsup`] and use the character language models in [`charlm`]. Every
//! segmenter is scored with the morpheme-overlap metrics in [`eval`].

pub mod align;
pub mod charlm;
pub mod corpus;
pub mod crf;
pub mod eval;
pub mod format;
pub mod labels;
pub mod synth;
pub mod unsup;

pub use align::{AlignError, AlignmentStats, EditOp, EditScript, SurfaceSegmentation};
pub use charlm::{CharLm, Direction, EntropyProfile, Smoothing};
pub use corpus::{AnnotatedWord, CanonicalAnalysis, Dataset, Morpheme, Split};
pub use crf::{CrfModel, TrainConfig};
pub use eval::{Overlap, Prf};
pub use labels::{Label, LabelSeq};
