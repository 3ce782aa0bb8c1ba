//! Interchange files.
//!
//! Words file: one word per line; anything after a tab is ignored.
//! Segmentation file: `word<TAB>seg1-seg2-...` per line. A line holding only
//! a segmentation is accepted and its concatenation taken as the word.
//! Blank lines and lines starting with `#` are skipped in both.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::align::SurfaceSegmentation;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

fn content_lines<R: BufRead>(source: R) -> impl Iterator<Item = std::io::Result<(usize, String)>> {
    source.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e)),
        Ok(l) => {
            let t = l.trim_end_matches('\r');
            (!t.trim().is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
        }
    })
}

pub fn read_words<R: BufRead>(source: R) -> Result<Vec<String>, FormatError> {
    let mut out = Vec::new();
    for item in content_lines(source) {
        let (_, line) = item?;
        let word = line.split('\t').next().unwrap_or_default().trim();
        out.push(word.to_string());
    }
    Ok(out)
}

pub fn write_words<W: Write, S: AsRef<str>>(mut sink: W, words: &[S]) -> std::io::Result<()> {
    for w in words {
        writeln!(sink, "{}", w.as_ref())?;
    }
    sink.flush()
}

pub fn read_segmentations<R: BufRead>(source: R) -> Result<Vec<SurfaceSegmentation>, FormatError> {
    let mut out = Vec::new();
    for item in content_lines(source) {
        let (line, text) = item?;
        let err = |message: String| FormatError::Line { line, message };
        let (word, field) = match text.split('\t').collect::<Vec<_>>()[..] {
            [field] => (None, field.trim()),
            [word, field] => (Some(word.trim()), field.trim()),
            _ => return Err(err("expected word<TAB>segmentation".into())),
        };
        let seg = SurfaceSegmentation::parse(field).map_err(|e| err(e.to_string()))?;
        if let Some(word) = word {
            if word != seg.word() {
                return Err(err(format!("segments of {field:?} do not concatenate to {word:?}")));
            }
        }
        out.push(seg);
    }
    Ok(out)
}

pub fn write_segmentations<W: Write>(mut sink: W, segs: &[SurfaceSegmentation]) -> std::io::Result<()> {
    for s in segs {
        writeln!(sink, "{}\t{s}", s.word())?;
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_ignore_comments_and_extra_columns() {
        let words = read_words(&b"# header\nngezinkonzo\tnge-zin-konzo\n\nabantu\n"[..]).unwrap();
        assert_eq!(words, ["ngezinkonzo", "abantu"]);
    }

    #[test]
    fn segmentation_round_trip() {
        let segs: Vec<_> = ["nge-zin-konzo", "aba-ntu", "a"]
            .iter()
            .map(|s| SurfaceSegmentation::parse(s).unwrap())
            .collect();
        let mut buf = Vec::new();
        write_segmentations(&mut buf, &segs).unwrap();
        assert_eq!(read_segmentations(&buf[..]).unwrap(), segs);
    }

    #[test]
    fn bare_segmentation_lines() {
        let segs = read_segmentations(&b"aba-ntu\n"[..]).unwrap();
        assert_eq!(segs[0].word(), "abantu");
    }

    #[test]
    fn rejects_mismatch_and_empty_segments() {
        let e = read_segmentations(&b"ok\to-k\nabantu\taba-nt\n"[..]).unwrap_err();
        assert!(matches!(e, FormatError::Line { line: 2, .. }));
        assert!(read_segmentations(&b"ab\ta--b\n"[..]).is_err());
        assert!(read_segmentations(&b"a\tb\tc\n"[..]).is_err());
    }
}
