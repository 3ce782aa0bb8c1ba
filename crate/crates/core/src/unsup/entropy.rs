use std::str::FromStr;

use super::from_gaps;
use crate::align::SurfaceSegmentation;
use crate::charlm::EntropyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyObjective {
    Constant,
    Increase,
    Relative,
}

impl FromStr for EntropyObjective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" | "const" => Ok(Self::Constant),
            "increase" | "inc" => Ok(Self::Increase),
            "relative" | "rel" => Ok(Self::Relative),
            _ => Err(format!("unknown entropy objective {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConfig {
    pub objective: EntropyObjective,
    /// Threshold for [`EntropyObjective::Constant`].
    pub theta: f64,
    /// Multiplier on the mean for [`EntropyObjective::Relative`].
    pub alpha: f64,
}

impl EntropyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.objective == EntropyObjective::Constant && self.theta.is_nan() {
            return Err("theta must be a number".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(format!("alpha must be positive, got {}", self.alpha));
        }
        Ok(())
    }

    pub fn segment(&self, profile: &EntropyProfile) -> SurfaceSegmentation {
        match self.objective {
            EntropyObjective::Constant => segment_constant_entropy(profile, self.theta),
            EntropyObjective::Increase => segment_entropy_increase(profile),
            EntropyObjective::Relative => segment_relative_entropy(profile, self.alpha),
        }
    }
}

/// Boundary wherever `left + right > theta`.
pub fn segment_constant_entropy(profile: &EntropyProfile, theta: f64) -> SurfaceSegmentation {
    let sums = profile.sums();
    from_gaps(&profile.word, sums.len(), |g| sums[g - 1] > theta)
}

/// Boundary at gap `g` when the left entropy rises from gap `g - 1` to `g`,
/// or the right entropy rises from gap `g + 1` to `g` (reading right to
/// left). Both comparisons are strict; the first gap can only be cut by the
/// right test and the last only by the left test.
pub fn segment_entropy_increase(profile: &EntropyProfile) -> SurfaceSegmentation {
    let n = profile.num_gaps();
    let (left, right) = (&profile.left, &profile.right);
    from_gaps(&profile.word, n, |g| {
        let i = g - 1;
        (i >= 1 && left[i] > left[i - 1]) || (i + 1 < n && right[i] > right[i + 1])
    })
}

/// Boundary wherever `left + right > alpha * mean(left + right)`.
pub fn segment_relative_entropy(profile: &EntropyProfile, alpha: f64) -> SurfaceSegmentation {
    let sums = profile.sums();
    let mean = if sums.is_empty() {
        0.0
    } else {
        sums.iter().sum::<f64>() / sums.len() as f64
    };
    from_gaps(&profile.word, sums.len(), |g| sums[g - 1] > alpha * mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(word: &str, left: &[f64], right: &[f64]) -> EntropyProfile {
        assert_eq!(left.len(), word.chars().count() - 1);
        EntropyProfile {
            word: word.into(),
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    #[test]
    fn constant_threshold() {
        let p = profile("abc", &[1.0, 3.0], &[1.5, 2.0]);
        assert_eq!(segment_constant_entropy(&p, 4.0).to_string(), "ab-c");
        assert_eq!(segment_constant_entropy(&p, f64::INFINITY).to_string(), "abc");
        assert_eq!(segment_constant_entropy(&p, -1.0).to_string(), "a-b-c");
    }

    #[test]
    fn increase_rule() {
        let p = profile("abcd", &[1.0, 2.0, 1.0], &[0.5, 0.5, 0.5]);
        assert_eq!(segment_entropy_increase(&p).boundaries(), &[2]);
        let p = profile("abcd", &[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0]);
        assert_eq!(segment_entropy_increase(&p).boundaries(), &[] as &[usize]);
        let p = profile("abcd", &[1.0; 3], &[1.0; 3]);
        assert_eq!(segment_entropy_increase(&p).boundaries(), &[] as &[usize]);
        // Right entropy rising toward the start of the word.
        let p = profile("abcd", &[1.0; 3], &[1.0, 2.0, 1.0]);
        assert_eq!(segment_entropy_increase(&p).boundaries(), &[2]);
    }

    #[test]
    fn relative_rule() {
        let p = profile("abc", &[1.0, 3.0], &[1.0, 3.0]);
        assert_eq!(segment_relative_entropy(&p, 1.0).boundaries(), &[2]);
        let p = profile("abcd", &[1.0; 3], &[1.0; 3]);
        assert!(segment_relative_entropy(&p, 1.0).boundaries().is_empty());
        assert!(segment_relative_entropy(&p, 1.5).boundaries().is_empty());
        let p = profile("abcd", &[0.0, 0.5, 2.0], &[0.0, 0.0, 1.0]);
        assert_eq!(segment_relative_entropy(&p, 1e-9).boundaries(), &[2, 3]);
    }

    #[test]
    fn single_character_word() {
        let p = profile("a", &[], &[]);
        for seg in [
            segment_constant_entropy(&p, 0.0),
            segment_entropy_increase(&p),
            segment_relative_entropy(&p, 1.0),
        ] {
            assert_eq!(seg.to_string(), "a");
        }
    }

    fn arb_profile() -> impl Strategy<Value = EntropyProfile> {
        (2usize..10).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.0f64..5.0, n - 1),
                proptest::collection::vec(0.0f64..5.0, n - 1),
            )
                .prop_map(move |(left, right)| EntropyProfile {
                    word: "x".repeat(n),
                    left,
                    right,
                })
        })
    }

    proptest! {
        #[test]
        fn raising_theta_never_adds_boundaries(p in arb_profile(), a in -1.0f64..11.0, b in -1.0f64..11.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let low: Vec<usize> = segment_constant_entropy(&p, lo).boundaries().to_vec();
            let high = segment_constant_entropy(&p, hi);
            prop_assert!(high.boundaries().iter().all(|g| low.contains(g)));
        }

        #[test]
        fn outputs_are_valid(p in arb_profile(), alpha in 0.01f64..3.0) {
            for seg in [segment_entropy_increase(&p), segment_relative_entropy(&p, alpha)] {
                prop_assert_eq!(seg.segments().concat(), p.word.clone());
            }
        }
    }
}
