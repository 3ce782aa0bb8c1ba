//! Annotated corpus ingestion and train/dev/test preprocessing.
//!
//! Annotations are sequences of `text[TAG]` units joined by `-`, e.g.
//! `[RelConc]-nga[NPre]-i[NPrePre]-zin[BPre]-konzo[NStem]`. The text of a unit
//! may be empty (a zero morph); the tag is kept verbatim as metadata.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Delimiter between annotation units and between segments in output files.
pub const SEGMENT_DELIMITER: char = '-';

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morpheme {
    pub text: String,
    pub tag: String,
}

impl Morpheme {
    pub fn new(text: impl Into<String>, tag: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            tag: tag.into(),
        }
    }
}

/// The underlying morphemes of a word, in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalAnalysis {
    pub morphemes: Vec<Morpheme>,
}

impl CanonicalAnalysis {
    pub fn new(morphemes: Vec<Morpheme>) -> Self {
        Self { morphemes }
    }

    /// Builds an untagged analysis from morph strings. Handy for tests and
    /// for gold data that carries no tags.
    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Self {
        Self {
            morphemes: texts.iter().map(|t| Morpheme::new(t.as_ref(), "")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.morphemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.morphemes.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.morphemes.iter().map(|m| m.text.as_str())
    }
}

/// Re-serializes in annotation syntax: `text[TAG]-text[TAG]...`.
impl fmt::Display for CanonicalAnalysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.morphemes.iter().enumerate() {
            if i > 0 {
                write!(f, "{SEGMENT_DELIMITER}")?;
            }
            write!(f, "{}[{}]", m.text, m.tag)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedWord {
    pub word: String,
    pub analysis: CanonicalAnalysis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub items: Vec<AnnotatedWord>,
}

impl Dataset {
    pub fn new(split: Split, items: Vec<AnnotatedWord>) -> Self {
        Self { split, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|w| w.word.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unit {unit} ({text:?}): missing tag")]
    MissingTag { unit: usize, text: String },
    #[error("unit {unit} ({text:?}): unbalanced brackets")]
    Unbalanced { unit: usize, text: String },
    #[error("unit {unit} ({text:?}): unexpected text after tag")]
    TrailingText { unit: usize, text: String },
    #[error("empty annotation")]
    Empty,
}

/// Parses an annotation string into its morphemes.
///
/// Units are split on `-` outside brackets. Each unit must be exactly
/// `text[TAG]` with a non-empty tag; `text` may be empty.
pub fn parse_annotation(raw: &str) -> Result<CanonicalAnalysis, ParseError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(ParseError::Empty);
    }

    let mut units = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in raw.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            SEGMENT_DELIMITER if depth == 0 => {
                units.push(&raw[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    units.push(&raw[start..]);

    let morphemes = units
        .into_iter()
        .enumerate()
        .map(|(i, unit)| parse_unit(i, unit))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CanonicalAnalysis::new(morphemes))
}

fn parse_unit(index: usize, unit: &str) -> Result<Morpheme, ParseError> {
    let unbalanced = || ParseError::Unbalanced {
        unit: index,
        text: unit.to_string(),
    };
    let open = match unit.find('[') {
        Some(p) => p,
        None if unit.contains(']') => return Err(unbalanced()),
        None => {
            return Err(ParseError::MissingTag {
                unit: index,
                text: unit.to_string(),
            })
        }
    };
    let text = &unit[..open];
    if text.contains(']') {
        return Err(unbalanced());
    }
    let rest = &unit[open + 1..];
    let close = rest.find(']').ok_or_else(unbalanced)?;
    let tag = &rest[..close];
    if tag.contains('[') {
        return Err(unbalanced());
    }
    if tag.is_empty() {
        return Err(ParseError::MissingTag {
            unit: index,
            text: unit.to_string(),
        });
    }
    if !rest[close + 1..].is_empty() {
        return Err(ParseError::TrailingText {
            unit: index,
            text: unit.to_string(),
        });
    }
    Ok(Morpheme::new(text, tag))
}

/// A line that failed to parse while loading a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

/// Column layout of a corpus file. The interchange format is word in column
/// 0 and annotation in column 1; other layouts adapt upstream releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnLayout {
    pub word: usize,
    pub annotation: usize,
}

impl Default for ColumnLayout {
    fn default() -> Self {
        Self { word: 0, annotation: 1 }
    }
}

#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub words: Vec<AnnotatedWord>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads `word<TAB>annotation` records. Blank lines and `#` comments are
/// ignored. Lines without tabs fall back to whitespace splitting. Bad lines
/// are reported by (1-based) line number and skipped.
pub fn load_corpus<R: BufRead>(source: R) -> std::io::Result<LoadedCorpus> {
    load_corpus_with(source, ColumnLayout::default())
}

pub fn load_corpus_with<R: BufRead>(source: R, layout: ColumnLayout) -> std::io::Result<LoadedCorpus> {
    let mut out = LoadedCorpus::default();
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        let (Some(word), Some(annotation)) = (fields.get(layout.word), fields.get(layout.annotation)) else {
            out.skipped.push(SkippedLine {
                line: lineno,
                reason: format!("expected at least {} columns", layout.word.max(layout.annotation) + 1),
            });
            continue;
        };
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            out.skipped.push(SkippedLine {
                line: lineno,
                reason: "empty word".into(),
            });
            continue;
        }
        match parse_annotation(annotation) {
            Ok(analysis) => out.words.push(AnnotatedWord {
                word: (*word).to_string(),
                analysis,
            }),
            Err(e) => out.skipped.push(SkippedLine {
                line: lineno,
                reason: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Writes words in the interchange format.
pub fn write_corpus<W: std::io::Write>(mut sink: W, words: &[AnnotatedWord]) -> std::io::Result<()> {
    for w in words {
        writeln!(sink, "{}\t{}", w.word, w.analysis)?;
    }
    Ok(())
}

/// Why a token was dropped during preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// Contains a digit or no letters at all.
    PunctuationOrNumber,
    /// Contains the segment delimiter, which the output formats cannot carry.
    Delimiter,
}

/// Applies the token-level exclusion rules.
pub fn exclusion(word: &str) -> Option<Exclusion> {
    if word.chars().any(|c| c.is_ascii_digit() || c.is_numeric()) || !word.chars().any(char::is_alphabetic) {
        Some(Exclusion::PunctuationOrNumber)
    } else if word.contains(SEGMENT_DELIMITER) {
        Some(Exclusion::Delimiter)
    } else {
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub input: usize,
    pub excluded_punct_or_number: usize,
    pub excluded_delimiter: usize,
    pub excluded_unsegmented: usize,
    pub zero_morphs_dropped: usize,
    pub deduplicated: usize,
    pub removed_test_overlap: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessReport {
    pub train: SplitCounts,
    pub test: SplitCounts,
    pub train_size: usize,
    pub dev_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    /// Fraction of (overlap-free) training words moved to dev, in (0, 0.5).
    pub dev_fraction: f64,
    /// When set, training words are shuffled with this seed before the dev
    /// split. Otherwise dev is the tail of the training words in corpus order.
    pub shuffle_seed: Option<u64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            dev_fraction: 0.1,
            shuffle_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("dev fraction must lie in (0, 0.5), got {0}")]
pub struct InvalidDevFraction(pub f64);

/// Cleans and splits raw annotated words into train, dev and test.
///
/// Exclusion rules run first, then zero morphs are dropped, then words left
/// with a single morpheme are excluded. Words are deduplicated within each
/// split (first occurrence wins), every test word is removed from train, and
/// dev is carved off the end of what remains.
pub fn preprocess(
    raw_train: &[AnnotatedWord],
    raw_test: &[AnnotatedWord],
    config: PreprocessConfig,
) -> Result<(Dataset, Dataset, Dataset, PreprocessReport), InvalidDevFraction> {
    if !(config.dev_fraction > 0.0 && config.dev_fraction < 0.5) {
        return Err(InvalidDevFraction(config.dev_fraction));
    }
    let mut report = PreprocessReport::default();
    let test = clean_split(raw_test, &mut report.test);
    let test_words: HashSet<&str> = test.iter().map(|w| w.word.as_str()).collect();

    let mut train = clean_split(raw_train, &mut report.train);
    let before = train.len();
    train.retain(|w| !test_words.contains(w.word.as_str()));
    report.train.removed_test_overlap = before - train.len();

    if let Some(seed) = config.shuffle_seed {
        train.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let n_dev = (config.dev_fraction * train.len() as f64).ceil() as usize;
    let dev = train.split_off(train.len() - n_dev.min(train.len()));

    report.train_size = train.len();
    report.dev_size = dev.len();
    report.test_size = test.len();
    Ok((
        Dataset::new(Split::Train, train),
        Dataset::new(Split::Dev, dev),
        Dataset::new(Split::Test, test),
        report,
    ))
}

fn clean_split(raw: &[AnnotatedWord], counts: &mut SplitCounts) -> Vec<AnnotatedWord> {
    counts.input = raw.len();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in raw {
        match exclusion(&item.word) {
            Some(Exclusion::PunctuationOrNumber) => {
                counts.excluded_punct_or_number += 1;
                continue;
            }
            Some(Exclusion::Delimiter) => {
                counts.excluded_delimiter += 1;
                continue;
            }
            None => {}
        }
        let morphemes: Vec<Morpheme> = item
            .analysis
            .morphemes
            .iter()
            .filter(|m| !m.text.is_empty())
            .cloned()
            .collect();
        let dropped = item.analysis.len() - morphemes.len();
        if morphemes.len() < 2 {
            counts.excluded_unsegmented += 1;
            continue;
        }
        if !seen.insert(item.word.clone()) {
            counts.deduplicated += 1;
            continue;
        }
        counts.zero_morphs_dropped += dropped;
        out.push(AnnotatedWord {
            word: item.word.clone(),
            analysis: CanonicalAnalysis::new(morphemes),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn aw(word: &str, raw: &str) -> AnnotatedWord {
        AnnotatedWord {
            word: word.into(),
            analysis: parse_annotation(raw).unwrap(),
        }
    }

    #[test]
    fn parses_zulu_example() {
        let a = parse_annotation("[RelConc]-nga[NPre]-i[NPrePre]-zin[BPre]-konzo[NStem]").unwrap();
        let got: Vec<(&str, &str)> = a.morphemes.iter().map(|m| (m.text.as_str(), m.tag.as_str())).collect();
        assert_eq!(
            got,
            [
                ("", "RelConc"),
                ("nga", "NPre"),
                ("i", "NPrePre"),
                ("zin", "BPre"),
                ("konzo", "NStem")
            ]
        );
    }

    #[test]
    fn parses_single_unit() {
        let a = parse_annotation("konzo[NStem]").unwrap();
        assert_eq!(a.morphemes, vec![Morpheme::new("konzo", "NStem")]);
    }

    #[test]
    fn rejects_malformed_units() {
        assert!(matches!(
            parse_annotation("nga[NPre-konzo"),
            Err(ParseError::Unbalanced { unit: 0, .. })
        ));
        assert!(matches!(
            parse_annotation("nga[NPre]-konzo"),
            Err(ParseError::MissingTag { unit: 1, .. })
        ));
        assert!(matches!(parse_annotation("nga[]"), Err(ParseError::MissingTag { .. })));
        assert!(matches!(
            parse_annotation("nga[NPre]x"),
            Err(ParseError::TrailingText { .. })
        ));
        assert!(matches!(
            parse_annotation("ng]a[NPre]"),
            Err(ParseError::Unbalanced { .. })
        ));
        assert_eq!(parse_annotation("  "), Err(ParseError::Empty));
    }

    #[test]
    fn loads_lines_and_reports_skips() {
        let text = "# header\n\
                    ngezinkonzo\t[RelConc]-nga[NPre]-i[NPrePre]-zin[BPre]-konzo[NStem]\n\
                    \n\
                    bad\tnga[NPre-konzo\n\
                    abantu ba[NPrePre]-ntu[NStem]\n";
        let loaded = load_corpus(text.as_bytes()).unwrap();
        assert_eq!(loaded.words.len(), 2);
        assert_eq!(loaded.words[0].word, "ngezinkonzo");
        assert_eq!(loaded.words[0].analysis.len(), 5);
        assert_eq!(loaded.words[1].word, "abantu");
        assert_eq!(loaded.skipped.len(), 1);
        assert_eq!(loaded.skipped[0].line, 4);
    }

    #[test]
    fn empty_stream_loads_nothing() {
        let loaded = load_corpus(&b""[..]).unwrap();
        assert!(loaded.words.is_empty());
        assert!(loaded.skipped.is_empty());
    }

    #[test]
    fn custom_column_layout() {
        let text = "1\tabantu\tNOUN\tba[NPrePre]-ntu[NStem]\n";
        let loaded = load_corpus_with(text.as_bytes(), ColumnLayout { word: 1, annotation: 3 }).unwrap();
        assert_eq!(loaded.words.len(), 1);
        assert_eq!(loaded.words[0].word, "abantu");
    }

    #[test]
    fn exclusion_rules() {
        assert_eq!(exclusion("2021"), Some(Exclusion::PunctuationOrNumber));
        assert_eq!(exclusion("abc1"), Some(Exclusion::PunctuationOrNumber));
        assert_eq!(exclusion("..."), Some(Exclusion::PunctuationOrNumber));
        assert_eq!(exclusion("u-"), Some(Exclusion::Delimiter));
        assert_eq!(exclusion("Abantu"), None);
    }

    #[test]
    fn preprocess_filters_and_splits() {
        let train = vec![
            aw("2021", "2021[Num]-x[Y]"),
            aw("konzo", "konzo[NStem]"),
            aw("ubaba", "[RelConc]-ubaba[NStem]"),
            aw("abantu", "a[NPrePre]-ba[BPre]-ntu[NStem]"),
            aw("abantu", "a[NPrePre]-ba[BPre]-ntu[NStem]"),
            aw("inkonzo", "i[NPrePre]-n[BPre]-konzo[NStem]"),
            aw("izinto", "i[NPrePre]-zin[BPre]-to[NStem]"),
            aw("ngezinkonzo", "[RelConc]-nga[NPre]-i[NPrePre]-zin[BPre]-konzo[NStem]"),
        ];
        let test = vec![aw("inkonzo", "i[NPrePre]-n[BPre]-konzo[NStem]")];
        let (tr, dev, te, report) = preprocess(&train, &test, PreprocessConfig::default()).unwrap();
        assert_eq!(te.words().collect::<Vec<_>>(), ["inkonzo"]);
        // abantu, izinto, ngezinkonzo survive; ceil(0.1 * 3) = 1 goes to dev
        assert_eq!(tr.words().collect::<Vec<_>>(), ["abantu", "izinto"]);
        assert_eq!(dev.words().collect::<Vec<_>>(), ["ngezinkonzo"]);
        assert_eq!(report.train.excluded_punct_or_number, 1);
        assert_eq!(report.train.excluded_unsegmented, 2);
        assert_eq!(report.train.deduplicated, 1);
        assert_eq!(report.train.removed_test_overlap, 1);
        assert_eq!(report.train.zero_morphs_dropped, 1);
        assert!(dev.items[0].analysis.texts().all(|t| !t.is_empty()));
        assert_eq!(dev.items[0].analysis.len(), 4);
    }

    #[test]
    fn preprocess_rejects_bad_fraction() {
        assert!(preprocess(
            &[],
            &[],
            PreprocessConfig {
                dev_fraction: 0.5,
                shuffle_seed: None
            }
        )
        .is_err());
        assert!(preprocess(
            &[],
            &[],
            PreprocessConfig {
                dev_fraction: 0.0,
                shuffle_seed: None
            }
        )
        .is_err());
    }

    fn unit_strategy() -> impl Strategy<Value = (String, String)> {
        ("[a-z]{0,5}", "[A-Za-z0-9]{1,6}")
    }

    fn word_strategy() -> impl Strategy<Value = AnnotatedWord> {
        ("[a-f]{1,4}", proptest::collection::vec("[a-z]{0,3}", 1..5)).prop_map(|(w, ms)| AnnotatedWord {
            word: w,
            analysis: CanonicalAnalysis::from_texts(&ms),
        })
    }

    proptest! {
        #[test]
        fn annotation_round_trips(units in proptest::collection::vec(unit_strategy(), 1..6)) {
            let raw = units
                .iter()
                .map(|(t, g)| format!("{t}[{g}]"))
                .collect::<Vec<_>>()
                .join("-");
            let parsed = parse_annotation(&raw).unwrap();
            prop_assert_eq!(parsed.len(), units.len());
            prop_assert_eq!(parsed.to_string(), raw);
        }

        #[test]
        fn splits_are_disjoint_and_deterministic(
            train in proptest::collection::vec(word_strategy(), 0..40),
            test in proptest::collection::vec(word_strategy(), 0..20),
            seed in proptest::option::of(any::<u64>()),
        ) {
            let config = PreprocessConfig { dev_fraction: 0.2, shuffle_seed: seed };
            let (tr, dev, te, _) = preprocess(&train, &test, config).unwrap();
            let tr_words: HashSet<&str> = tr.words().collect();
            prop_assert_eq!(tr_words.len(), tr.len());
            for w in te.words().chain(dev.words()) {
                prop_assert!(!tr_words.contains(w));
            }
            for d in [&tr, &dev, &te] {
                for item in &d.items {
                    prop_assert!(item.analysis.len() >= 2);
                    prop_assert!(item.analysis.texts().all(|t| !t.is_empty()));
                }
            }
            let again = preprocess(&train, &test, config).unwrap();
            prop_assert_eq!((tr, dev, te), (again.0, again.1, again.2));
        }
    }
}
