//! BMES character labels and their bijection with surface segmentations.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::align::SurfaceSegmentation;

/// Per-character segmentation label.
///
/// The derived ordering `B < E < M < S` is the tie-break order used by the
/// decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// First character of a multi-character segment.
    B,
    /// Last character of a multi-character segment.
    E,
    /// Interior character.
    M,
    /// Single-character segment.
    S,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::B, Label::E, Label::M, Label::S];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn as_char(self) -> char {
        match self {
            Label::B => 'B',
            Label::E => 'E',
            Label::M => 'M',
            Label::S => 'S',
        }
    }

    pub fn from_char(c: char) -> Option<Label> {
        match c {
            'B' => Some(Label::B),
            'E' => Some(Label::E),
            'M' => Some(Label::M),
            'S' => Some(Label::S),
            _ => None,
        }
    }

    pub fn can_start(self) -> bool {
        matches!(self, Label::B | Label::S)
    }

    pub fn can_end(self) -> bool {
        matches!(self, Label::E | Label::S)
    }

    /// Whether `next` may follow `self`.
    pub fn can_precede(self, next: Label) -> bool {
        match self {
            Label::B | Label::M => matches!(next, Label::M | Label::E),
            Label::E | Label::S => matches!(next, Label::B | Label::S),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("unknown label character {0:?}")]
    UnknownLabel(char),
    #[error("illegal label sequence {seq}: {reason}")]
    InvalidLabelSeq { seq: String, reason: String },
    #[error("{labels} labels for word {word:?} of length {len}")]
    LengthMismatch { word: String, len: usize, labels: usize },
}

/// A label per character, written unseparated (`"BMEBMEBMMME"`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LabelSeq(pub Vec<Label>);

impl LabelSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    /// Checks start, adjacency and end constraints.
    pub fn validate(&self) -> Result<(), LabelError> {
        let invalid = |reason: String| LabelError::InvalidLabelSeq {
            seq: self.to_string(),
            reason,
        };
        let (Some(first), Some(last)) = (self.0.first(), self.0.last()) else {
            return Err(invalid("empty".into()));
        };
        if !first.can_start() {
            return Err(invalid(format!("cannot start with {first}")));
        }
        for (i, w) in self.0.windows(2).enumerate() {
            if !w[0].can_precede(w[1]) {
                return Err(invalid(format!("{} -> {} at position {}", w[0], w[1], i + 1)));
            }
        }
        if !last.can_end() {
            return Err(invalid(format!("cannot end with {last}")));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }
}

impl fmt::Display for LabelSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|l| write!(f, "{l}"))
    }
}

impl FromStr for LabelSeq {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| Label::from_char(c).ok_or(LabelError::UnknownLabel(c)))
            .collect::<Result<Vec<_>, _>>()
            .map(LabelSeq)
    }
}

pub fn encode_bmes(seg: &SurfaceSegmentation) -> LabelSeq {
    let mut labels = Vec::with_capacity(seg.len());
    let mut start = 0;
    for &end in seg.boundaries().iter().chain(std::iter::once(&seg.len())) {
        match end - start {
            1 => labels.push(Label::S),
            n => {
                labels.push(Label::B);
                labels.extend(std::iter::repeat_n(Label::M, n - 2));
                labels.push(Label::E);
            }
        }
        start = end;
    }
    LabelSeq(labels)
}

/// Inverse of [`encode_bmes`]: a boundary follows every `E` and `S` except
/// the last.
pub fn decode_bmes(labels: &LabelSeq, word: &str) -> Result<SurfaceSegmentation, LabelError> {
    let len = word.chars().count();
    if labels.len() != len {
        return Err(LabelError::LengthMismatch {
            word: word.to_string(),
            len,
            labels: labels.len(),
        });
    }
    labels.validate()?;
    let boundaries = labels.0[..len - 1]
        .iter()
        .enumerate()
        .filter(|(_, l)| l.can_end())
        .map(|(i, _)| i + 1)
        .collect();
    Ok(SurfaceSegmentation::new(word, boundaries).expect("validated labels give valid cuts"))
}
