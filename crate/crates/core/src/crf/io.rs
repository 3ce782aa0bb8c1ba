//! Text model format.
//!
//! ```text
//! morphseg-crf<TAB>1
//! template<TAB>1
//! labels<TAB>B,E,M,S
//! l2<TAB>0.1
//! epsilon<TAB>0.0000001
//! max_iterations<TAB>160
//! iterations_run<TAB>160
//! features<TAB>N
//! [emission]
//! key<TAB>label<TAB>weight      (N * 4 lines, sorted by key then label)
//! [transitions]
//! from<TAB>to<TAB>weight        (12 legal moves; START and END as names)
//! [end]
//! ```
//!
//! Weights are printed with Rust's shortest round-trip float formatting, so a
//! saved model reloads bit-identically.

use std::io::{BufRead, Write};

use thiserror::Error;

use super::{CrfModel, FeatureVocab, ModelMeta, TransitionSlot, Transitions, Weights};
use crate::labels::Label;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "morphseg-crf";

#[derive(Debug, Error)]
pub enum ModelFormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported {what} version {found} (expected {expected})")]
    Version {
        what: &'static str,
        found: String,
        expected: u32,
    },
    #[error("model file truncated: {0}")]
    Truncated(String),
    #[error("line {line}: non-finite weight")]
    NonFinite { line: usize },
}

pub fn save_model<W: Write>(model: &CrfModel, mut sink: W) -> std::io::Result<()> {
    let meta = model.meta();
    writeln!(sink, "{MAGIC}\t{FORMAT_VERSION}")?;
    writeln!(sink, "template\t{}", meta.template_version)?;
    writeln!(sink, "labels\tB,E,M,S")?;
    writeln!(sink, "l2\t{}", meta.l2)?;
    writeln!(sink, "epsilon\t{}", meta.epsilon)?;
    writeln!(sink, "max_iterations\t{}", meta.max_iterations)?;
    writeln!(sink, "iterations_run\t{}", meta.iterations_run)?;
    let vocab = model.vocab();
    writeln!(sink, "features\t{}", vocab.len())?;
    writeln!(sink, "[emission]")?;
    let mut order: Vec<u32> = (0..vocab.len() as u32).collect();
    order.sort_by(|&a, &b| vocab.key(a).cmp(vocab.key(b)));
    for id in order {
        for label in Label::ALL {
            writeln!(
                sink,
                "{}\t{}\t{}",
                vocab.key(id),
                label,
                model.weights().emission(id, label)
            )?;
        }
    }
    writeln!(sink, "[transitions]")?;
    for slot in Transitions::legal_slots() {
        let (from, to) = slot_names(slot);
        writeln!(sink, "{from}\t{to}\t{}", model.weights().transitions.slot(slot))?;
    }
    writeln!(sink, "[end]")?;
    sink.flush()
}

fn slot_names(slot: TransitionSlot) -> (String, String) {
    match slot {
        TransitionSlot::Start(b) => ("START".into(), b.to_string()),
        TransitionSlot::Pair(a, b) => (a.to_string(), b.to_string()),
        TransitionSlot::End(a) => (a.to_string(), "END".into()),
    }
}

fn parse_slot(from: &str, to: &str) -> Option<TransitionSlot> {
    let label = |s: &str| {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Label::from_char(c),
            _ => None,
        }
    };
    let slot = match (from, to) {
        ("START", to) => TransitionSlot::Start(label(to)?),
        (from, "END") => TransitionSlot::End(label(from)?),
        (from, to) => TransitionSlot::Pair(label(from)?, label(to)?),
    };
    slot.is_legal().then_some(slot)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self, expecting: &str) -> Result<String, ModelFormatError> {
        self.line += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(ModelFormatError::Truncated(format!("expected {expecting}"))),
        }
    }

    fn malformed(&self, message: impl Into<String>) -> ModelFormatError {
        ModelFormatError::Malformed {
            line: self.line,
            message: message.into(),
        }
    }

    fn header(&mut self, key: &str) -> Result<String, ModelFormatError> {
        let line = self.next(key)?;
        match line.split_once('\t') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.malformed(format!("expected `{key}` header"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ModelFormatError> {
        let v = self.header(key)?;
        v.parse()
            .map_err(|_| self.malformed(format!("bad value for `{key}`: {v:?}")))
    }

    fn expect(&mut self, marker: &str) -> Result<(), ModelFormatError> {
        if self.next(marker)? != marker {
            return Err(self.malformed(format!("expected `{marker}`")));
        }
        Ok(())
    }

    fn weight(&self, field: &str) -> Result<f64, ModelFormatError> {
        let w: f64 = field
            .parse()
            .map_err(|_| self.malformed(format!("bad weight {field:?}")))?;
        if !w.is_finite() {
            return Err(ModelFormatError::NonFinite { line: self.line });
        }
        Ok(w)
    }
}

pub fn load_model<R: BufRead>(source: R) -> Result<CrfModel, ModelFormatError> {
    let mut lines = Lines {
        inner: source.lines(),
        line: 0,
    };
    let version = lines.header(MAGIC)?;
    if version != FORMAT_VERSION.to_string() {
        return Err(ModelFormatError::Version {
            what: "format",
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let template = lines.header("template")?;
    if template != super::TEMPLATE_VERSION.to_string() {
        return Err(ModelFormatError::Version {
            what: "feature template",
            found: template,
            expected: super::TEMPLATE_VERSION,
        });
    }
    if lines.header("labels")? != "B,E,M,S" {
        return Err(lines.malformed("unsupported label order"));
    }
    let meta = ModelMeta {
        template_version: super::TEMPLATE_VERSION,
        l2: lines.parsed("l2")?,
        epsilon: lines.parsed("epsilon")?,
        max_iterations: lines.parsed("max_iterations")?,
        iterations_run: lines.parsed("iterations_run")?,
    };
    let num_features: usize = lines.parsed("features")?;

    lines.expect("[emission]")?;
    let mut vocab = FeatureVocab::new();
    let mut emission = Vec::with_capacity(num_features * Label::COUNT);
    for _ in 0..num_features {
        let mut key: Option<String> = None;
        for label in Label::ALL {
            let line = lines.next("emission entry")?;
            let fields: Vec<&str> = line.split('\t').collect();
            let [k, l, w] = fields[..] else {
                return Err(lines.malformed("expected key, label, weight"));
            };
            if l != label.to_string() || key.as_deref().is_some_and(|prev| prev != k) {
                return Err(lines.malformed(format!("expected label {label} for {k:?}")));
            }
            key = Some(k.to_string());
            emission.push(lines.weight(w)?);
        }
        let key = key.expect("four labels read");
        if vocab.get(&key).is_some() {
            return Err(lines.malformed(format!("duplicate feature {key:?}")));
        }
        vocab.intern(&key);
    }

    lines.expect("[transitions]")?;
    let mut transitions = Transitions::zeros();
    let mut seen = 0;
    for _ in 0..super::NUM_TRANSITION_PARAMS {
        let line = lines.next("transition entry")?;
        let fields: Vec<&str> = line.split('\t').collect();
        let [from, to, w] = fields[..] else {
            return Err(lines.malformed("expected from, to, weight"));
        };
        let slot = parse_slot(from, to).ok_or_else(|| lines.malformed(format!("illegal transition {from}->{to}")))?;
        *transitions.slot_mut(slot) = lines.weight(w)?;
        seen += 1;
    }
    debug_assert_eq!(seen, super::NUM_TRANSITION_PARAMS);
    lines.expect("[end]")?;

    let weights = Weights { emission, transitions };
    CrfModel::new(vocab, weights, meta).map_err(|e| ModelFormatError::Malformed {
        line: lines.line,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::{train, viterbi_decode, TrainConfig};
    use crate::SurfaceSegmentation;

    fn small_model() -> CrfModel {
        let data: Vec<_> = ["nge-zin-konzo", "aba-ntu", "ku-hamb-a"]
            .iter()
            .map(|s| SurfaceSegmentation::parse(s).unwrap())
            .collect();
        let config = TrainConfig {
            max_iterations: 20,
            ..TrainConfig::default()
        };
        train(&data, None, &config).unwrap().0
    }

    fn bytes(model: &CrfModel) -> Vec<u8> {
        let mut out = Vec::new();
        save_model(model, &mut out).unwrap();
        out
    }

    #[test]
    fn round_trip_is_exact() {
        let model = small_model();
        let saved = bytes(&model);
        let loaded = load_model(&saved[..]).unwrap();
        assert_eq!(loaded.weights().transitions, model.weights().transitions);
        for w in ["ngezinkonzo", "abantu", "kuhamba", "xyz"] {
            assert_eq!(viterbi_decode(&loaded, w), viterbi_decode(&model, w));
        }
        assert_eq!(bytes(&loaded), saved);
    }

    #[test]
    fn empty_model_round_trips() {
        let model = CrfModel::zeros(FeatureVocab::new());
        let loaded = load_model(&bytes(&model)[..]).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn rejects_corruption() {
        let saved = String::from_utf8(bytes(&small_model())).unwrap();

        let truncated = &saved[..saved.len() / 2];
        assert!(load_model(truncated.as_bytes()).is_err());

        let no_end = saved.replace("[end]\n", "");
        assert!(matches!(
            load_model(no_end.as_bytes()),
            Err(ModelFormatError::Truncated(_))
        ));

        let wrong_version = saved.replacen("morphseg-crf\t1", "morphseg-crf\t9", 1);
        assert!(matches!(
            load_model(wrong_version.as_bytes()),
            Err(ModelFormatError::Version { .. })
        ));

        let mut lines: Vec<&str> = saved.lines().collect();
        let idx = lines.iter().position(|l| *l == "[emission]").unwrap() + 1;
        let bad = lines[idx].rsplit_once('\t').unwrap().0.to_string() + "\tinf";
        lines[idx] = &bad;
        let non_finite = lines.join("\n");
        assert!(matches!(
            load_model(non_finite.as_bytes()),
            Err(ModelFormatError::NonFinite { .. })
        ));

        assert!(load_model(&b"garbage\n"[..]).is_err());
    }
}
