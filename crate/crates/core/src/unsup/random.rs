use rand::Rng;

use super::from_gaps;
use crate::align::SurfaceSegmentation;

pub const DEFAULT_BOUNDARY_PROBABILITY: f64 = 0.25;

/// Cuts each internal gap independently with probability `p` (clamped to
/// `[0, 1]`), drawing one uniform per gap from `rng`.
pub fn segment_random<R: Rng + ?Sized>(word: &str, p: f64, rng: &mut R) -> SurfaceSegmentation {
    let gaps = word.chars().count().saturating_sub(1);
    from_gaps(word, gaps, |_| rng.random::<f64>() < p)
}
