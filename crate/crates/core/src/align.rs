//! Surface segmentations derived from canonical analyses.
//!
//! The de-segmented canonical form is aligned to the orthographic word with an
//! insert-free edit distance (copy 0, substitute 1, delete 1). Canonical
//! morpheme boundaries are then projected through the alignment; morphemes
//! whose characters were all deleted vanish from the surface segmentation.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{CanonicalAnalysis, Dataset, SEGMENT_DELIMITER};

/// A word cut into non-empty contiguous segments.
///
/// Boundaries are character (not byte) offsets in `(0, len)`, strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SurfaceSegmentation {
    word: String,
    boundaries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationError {
    #[error("segmentation of empty word")]
    EmptyWord,
    #[error("boundaries {boundaries:?} invalid for word {word:?} of length {len}")]
    BadBoundaries {
        word: String,
        len: usize,
        boundaries: Vec<usize>,
    },
    #[error("empty segment in {0:?}")]
    EmptySegment(String),
}

impl SurfaceSegmentation {
    pub fn new(word: impl Into<String>, boundaries: Vec<usize>) -> Result<Self, SegmentationError> {
        let word = word.into();
        let len = word.chars().count();
        if len == 0 {
            return Err(SegmentationError::EmptyWord);
        }
        let increasing = boundaries.windows(2).all(|w| w[0] < w[1]);
        let in_range = boundaries.iter().all(|&b| b > 0 && b < len);
        if !increasing || !in_range {
            return Err(SegmentationError::BadBoundaries { word, len, boundaries });
        }
        Ok(Self { word, boundaries })
    }

    /// The word as a single segment.
    pub fn whole(word: impl Into<String>) -> Result<Self, SegmentationError> {
        Self::new(word, Vec::new())
    }

    /// Builds a segmentation from its segments; the word is their concatenation.
    pub fn from_segments<S: AsRef<str>>(segments: &[S]) -> Result<Self, SegmentationError> {
        let mut word = String::new();
        let mut boundaries = Vec::with_capacity(segments.len().saturating_sub(1));
        let mut pos = 0;
        for (i, s) in segments.iter().enumerate() {
            let s = s.as_ref();
            if s.is_empty() {
                return Err(SegmentationError::EmptySegment(
                    segments.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("-"),
                ));
            }
            if i > 0 {
                boundaries.push(pos);
            }
            pos += s.chars().count();
            word.push_str(s);
        }
        Self::new(word, boundaries)
    }

    /// Parses `seg1-seg2-...`.
    pub fn parse(field: &str) -> Result<Self, SegmentationError> {
        let segs: Vec<&str> = field.split(SEGMENT_DELIMITER).collect();
        Self::from_segments(&segs)
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.word.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn num_segments(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn segments(&self) -> Vec<&str> {
        let mut offsets: Vec<usize> = self.word.char_indices().map(|(b, _)| b).collect();
        offsets.push(self.word.len());
        let mut out = Vec::with_capacity(self.num_segments());
        let mut start = 0;
        for &b in self.boundaries.iter().chain(std::iter::once(&(offsets.len() - 1))) {
            out.push(&self.word[offsets[start]..offsets[b]]);
            start = b;
        }
        out
    }
}

/// Formats as `seg1-seg2-...`.
impl fmt::Display for SurfaceSegmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut delim = String::new();
        delim.push(SEGMENT_DELIMITER);
        f.write_str(&self.segments().join(&delim))
    }
}

/// Concatenation of the morpheme texts.
pub fn desegment(analysis: &CanonicalAnalysis) -> String {
    analysis.texts().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditKind {
    Copy,
    Substitute,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EditOp {
    pub kind: EditKind,
    pub canonical: usize,
    /// `None` for deletions.
    pub word: Option<usize>,
}

/// One operation per canonical character, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn cost(&self) -> usize {
        self.ops.iter().filter(|o| o.kind != EditKind::Copy).count()
    }

    pub fn count(&self, kind: EditKind) -> usize {
        self.ops.iter().filter(|o| o.kind == kind).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("word {word:?} is longer than its canonical form {canonical:?}")]
    Unalignable { canonical: String, word: String },
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
}

/// Minimal insert-free alignment of `canonical` onto `word`.
///
/// Among equal-cost scripts, the one preferring a diagonal move (copy, else
/// substitute) over a deletion at the leftmost point of difference is chosen.
pub fn align(canonical: &str, word: &str) -> Result<EditScript, AlignError> {
    let c: Vec<char> = canonical.chars().collect();
    let w: Vec<char> = word.chars().collect();
    let (m, n) = (c.len(), w.len());
    if n > m {
        return Err(AlignError::Unalignable {
            canonical: canonical.to_string(),
            word: word.to_string(),
        });
    }

    // rest[i][j]: cost of aligning c[i..] onto w[j..]; infinite when
    // w[j..] is longer than c[i..].
    const INF: usize = usize::MAX / 2;
    let width = n + 1;
    let mut rest = vec![INF; (m + 1) * width];
    rest[m * width + n] = 0;
    for i in (0..m).rev() {
        for j in (0..=n).rev() {
            if n - j > m - i {
                continue;
            }
            let delete = 1 + rest[(i + 1) * width + j];
            let diag = if j < n {
                usize::from(c[i] != w[j]) + rest[(i + 1) * width + j + 1]
            } else {
                INF
            };
            rest[i * width + j] = delete.min(diag);
        }
    }

    let mut ops = Vec::with_capacity(m);
    let mut j = 0;
    for i in 0..m {
        let here = rest[i * width + j];
        if j < n && usize::from(c[i] != w[j]) + rest[(i + 1) * width + j + 1] == here {
            let kind = if c[i] == w[j] {
                EditKind::Copy
            } else {
                EditKind::Substitute
            };
            ops.push(EditOp {
                kind,
                canonical: i,
                word: Some(j),
            });
            j += 1;
        } else {
            ops.push(EditOp {
                kind: EditKind::Delete,
                canonical: i,
                word: None,
            });
        }
    }
    debug_assert_eq!(j, n);
    Ok(EditScript { ops })
}

/// Surface segmentation of `word` implied by the canonical analysis.
pub fn derive_surface(analysis: &CanonicalAnalysis, word: &str) -> Result<SurfaceSegmentation, AlignError> {
    derive_surface_with_script(analysis, word).map(|(seg, _)| seg)
}

/// Like [`derive_surface`], also returning the alignment (`None` when the
/// de-segmented form already equals the word).
pub fn derive_surface_with_script(
    analysis: &CanonicalAnalysis,
    word: &str,
) -> Result<(SurfaceSegmentation, Option<EditScript>), AlignError> {
    derive(analysis, word).map(|d| (d.segmentation, d.script))
}

struct Derivation {
    segmentation: SurfaceSegmentation,
    script: Option<EditScript>,
    /// Index of the canonical morpheme each surface segment came from.
    sources: Vec<usize>,
}

fn derive(analysis: &CanonicalAnalysis, word: &str) -> Result<Derivation, AlignError> {
    let canonical = desegment(analysis);
    let lengths: Vec<usize> = analysis.texts().map(|t| t.chars().count()).collect();
    let (script, differs) = if canonical == word {
        let ops = (0..lengths.iter().sum())
            .map(|i| EditOp {
                kind: EditKind::Copy,
                canonical: i,
                word: Some(i),
            })
            .collect();
        (EditScript { ops }, false)
    } else {
        (align(&canonical, word)?, true)
    };
    let (segmentation, sources) = project(&lengths, &script, word)?;
    Ok(Derivation {
        segmentation,
        script: differs.then_some(script),
        sources,
    })
}

/// Maps morpheme extents through the script; a boundary is placed at the
/// first surviving word character of every non-empty morpheme but the first.
fn project(
    morph_lengths: &[usize],
    script: &EditScript,
    word: &str,
) -> Result<(SurfaceSegmentation, Vec<usize>), AlignError> {
    let mut boundaries = Vec::new();
    let mut sources = Vec::new();
    let mut op = 0;
    for (k, &len) in morph_lengths.iter().enumerate() {
        let start = script.ops[op..op + len].iter().find_map(|o| o.word);
        op += len;
        if let Some(start) = start {
            if !sources.is_empty() {
                boundaries.push(start);
            }
            sources.push(k);
        }
    }
    Ok((SurfaceSegmentation::new(word, boundaries)?, sources))
}

/// Aggregate alignment statistics over a dataset.
///
/// Ratios are over aligned words only. `pct_replacements` and
/// `pct_deletions` are shares of all non-copy operations.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AlignmentStats {
    pub words: usize,
    pub differing_words: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub surface_segments: usize,
    pub equal_segments: usize,
    pub unalignable_count: usize,
    pub pct_differing: f64,
    pub pct_replacements: f64,
    pub pct_deletions: f64,
    pub pct_segments_equal: f64,
}

impl AlignmentStats {
    fn from_counts(
        words: usize,
        differing_words: usize,
        substitutions: usize,
        deletions: usize,
        surface_segments: usize,
        equal_segments: usize,
        unalignable_count: usize,
    ) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let edits = substitutions + deletions;
        Self {
            words,
            differing_words,
            substitutions,
            deletions,
            surface_segments,
            equal_segments,
            unalignable_count,
            pct_differing: ratio(differing_words, words),
            pct_replacements: ratio(substitutions, edits),
            pct_deletions: ratio(deletions, edits),
            pct_segments_equal: ratio(equal_segments, surface_segments),
        }
    }

    /// Pools the counts of several datasets (micro average).
    pub fn merge(parts: &[AlignmentStats]) -> Self {
        let sum = |f: fn(&AlignmentStats) -> usize| parts.iter().map(f).sum::<usize>();
        Self::from_counts(
            sum(|s| s.words),
            sum(|s| s.differing_words),
            sum(|s| s.substitutions),
            sum(|s| s.deletions),
            sum(|s| s.surface_segments),
            sum(|s| s.equal_segments),
            sum(|s| s.unalignable_count),
        )
    }

    /// Unweighted mean of each ratio across datasets (macro average). Counts
    /// are summed.
    pub fn macro_average(parts: &[AlignmentStats]) -> Self {
        let mut out = Self::merge(parts);
        if parts.is_empty() {
            return out;
        }
        let mean = |f: fn(&AlignmentStats) -> f64| parts.iter().map(f).sum::<f64>() / parts.len() as f64;
        out.pct_differing = mean(|s| s.pct_differing);
        out.pct_replacements = mean(|s| s.pct_replacements);
        out.pct_deletions = mean(|s| s.pct_deletions);
        out.pct_segments_equal = mean(|s| s.pct_segments_equal);
        out
    }
}

/// Computes [`AlignmentStats`] over every word of a dataset.
pub fn alignment_stats(dataset: &Dataset) -> AlignmentStats {
    let (mut words, mut differing, mut subs, mut dels, mut segs, mut equal, mut unalignable) = (0, 0, 0, 0, 0, 0, 0);
    for item in &dataset.items {
        let Ok(d) = derive(&item.analysis, &item.word) else {
            unalignable += 1;
            continue;
        };
        words += 1;
        if let Some(script) = &d.script {
            differing += 1;
            subs += script.count(EditKind::Substitute);
            dels += script.count(EditKind::Delete);
        }
        let surface = d.segmentation.segments();
        segs += surface.len();
        equal += surface
            .iter()
            .zip(&d.sources)
            .filter(|(s, &k)| **s == item.analysis.morphemes[k].text)
            .count();
    }
    AlignmentStats::from_counts(words, differing, subs, dels, segs, equal, unalignable)
}
