//! Smoothed character n-gram language models and branching-entropy profiles.
//!
//! A model of order `n` conditions each symbol on the previous `n - 1`
//! symbols, with words padded by beginning-of-word markers on the left and
//! terminated by an end-of-word symbol. The backward model is the same model
//! trained on reversed words. The predicted alphabet is every character seen
//! in training plus end-of-word; characters never seen in training map to an
//! unknown symbol when they appear in a context.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

const BOW: u32 = 0;
const EOW: u32 = 1;
const UNK: u32 = 2;
const FIRST_CHAR: u32 = 3;

const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "morphseg-charlm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fwd" | "forward" => Ok(Self::Forward),
            "bwd" | "backward" => Ok(Self::Backward),
            _ => Err(format!("unknown direction {s:?} (expected fwd or bwd)")),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Add `k` to every count in the full-order context.
    AddK(f64),
    /// Interpolated Witten-Bell down to a uniform distribution.
    WittenBell,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::AddK(0.1)
    }
}

impl FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "wb" || s == "witten-bell" {
            return Ok(Smoothing::WittenBell);
        }
        let k = s
            .strip_prefix("addk:")
            .ok_or_else(|| format!("unknown smoothing {s:?} (expected addk:K or wb)"))?;
        match k.parse::<f64>() {
            Ok(k) if k > 0.0 && k.is_finite() => Ok(Smoothing::AddK(k)),
            _ => Err(format!("add-k constant must be positive, got {k:?}")),
        }
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::AddK(k) => write!(f, "addk:{k}"),
            Smoothing::WittenBell => f.write_str("wb"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LmError {
    #[error("cannot train a language model on an empty corpus")]
    EmptyCorpus,
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("unsupported model format version {0}")]
    Version(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct ContextCounts {
    total: u64,
    next: BTreeMap<u32, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharLm {
    direction: Direction,
    order: usize,
    smoothing: Smoothing,
    /// Seen characters, sorted; character `chars[i]` has id `FIRST_CHAR + i`.
    chars: Vec<char>,
    char_ids: HashMap<char, u32>,
    counts: HashMap<Vec<u32>, ContextCounts>,
}

/// Left and right branching entropies (bits) at every gap of a word.
///
/// Index `g - 1` holds gap `g`, which sits between characters `g - 1` and `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyProfile {
    pub word: String,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl EntropyProfile {
    pub fn num_gaps(&self) -> usize {
        self.left.len()
    }

    /// `left + right` per gap.
    pub fn sums(&self) -> Vec<f64> {
        self.left.iter().zip(&self.right).map(|(l, r)| l + r).collect()
    }
}

/// Shannon entropy in bits; zero-probability entries contribute nothing.
pub fn entropy_bits(distribution: &[f64]) -> f64 {
    distribution
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

impl CharLm {
    pub fn train<S: AsRef<str>>(
        words: &[S],
        order: usize,
        direction: Direction,
        smoothing: Smoothing,
    ) -> Result<Self, LmError> {
        if order == 0 {
            return Err(LmError::ZeroOrder);
        }
        if words.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let alphabet: BTreeSet<char> = words.iter().flat_map(|w| w.as_ref().chars()).collect();
        let mut lm = Self::empty(direction, order, smoothing, alphabet.into_iter().collect());
        for w in words {
            let ids = lm.encode_word(w.as_ref());
            let padded: Vec<u32> = std::iter::repeat_n(BOW, order - 1)
                .chain(ids)
                .chain(std::iter::once(EOW))
                .collect();
            for t in order - 1..padded.len() {
                for len in 0..order {
                    let entry = lm.counts.entry(padded[t - len..t].to_vec()).or_default();
                    entry.total += 1;
                    *entry.next.entry(padded[t]).or_insert(0) += 1;
                }
            }
        }
        Ok(lm)
    }

    fn empty(direction: Direction, order: usize, smoothing: Smoothing, chars: Vec<char>) -> Self {
        let char_ids = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, FIRST_CHAR + i as u32))
            .collect();
        Self {
            direction,
            order,
            smoothing,
            chars,
            char_ids,
            counts: HashMap::new(),
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Characters seen in training.
    pub fn alphabet(&self) -> &[char] {
        &self.chars
    }

    /// Number of predictable symbols: seen characters plus end-of-word.
    pub fn num_outcomes(&self) -> usize {
        self.chars.len() + 1
    }

    /// Word symbols in this model's reading direction.
    fn encode_word(&self, word: &str) -> Vec<u32> {
        let ids = word.chars().map(|c| self.char_ids.get(&c).copied().unwrap_or(UNK));
        match self.direction {
            Direction::Forward => ids.collect(),
            Direction::Backward => {
                let mut v: Vec<u32> = ids.collect();
                v.reverse();
                v
            }
        }
    }

    /// Full-order context from the tail of `history` (already in reading
    /// order), BOW-padded on the left.
    fn context_ids(&self, history: &str) -> Vec<u32> {
        let want = self.order - 1;
        let ids: Vec<u32> = history
            .chars()
            .map(|c| self.char_ids.get(&c).copied().unwrap_or(UNK))
            .collect();
        let take = ids.len().min(want);
        std::iter::repeat_n(BOW, want - take)
            .chain(ids[ids.len() - take..].iter().copied())
            .collect()
    }

    fn outcomes(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.chars.len() as u32)
            .map(|i| FIRST_CHAR + i)
            .chain(std::iter::once(EOW))
    }

    fn distribution_for(&self, context: &[u32]) -> Vec<f64> {
        let v = self.num_outcomes() as f64;
        match self.smoothing {
            Smoothing::AddK(k) => {
                let cc = self.counts.get(context);
                let total = cc.map_or(0, |c| c.total) as f64;
                self.outcomes()
                    .map(|s| {
                        let c = cc.and_then(|c| c.next.get(&s)).copied().unwrap_or(0) as f64;
                        (c + k) / (total + k * v)
                    })
                    .collect()
            }
            Smoothing::WittenBell => {
                let mut probs = vec![1.0 / v; self.num_outcomes()];
                for len in 0..=context.len() {
                    let Some(cc) = self.counts.get(&context[context.len() - len..]) else {
                        continue;
                    };
                    let types = cc.next.len() as f64;
                    let total = cc.total as f64;
                    for (p, s) in probs.iter_mut().zip(self.outcomes()) {
                        let c = cc.next.get(&s).copied().unwrap_or(0) as f64;
                        *p = (c + types * *p) / (total + types);
                    }
                }
                probs
            }
        }
    }

    /// Next-symbol distribution after `history`, in [`Self::alphabet`] order
    /// followed by end-of-word.
    pub fn distribution(&self, history: &str) -> Vec<f64> {
        self.distribution_for(&self.context_ids(history))
    }

    /// Probability of `next` (`None` for end-of-word) after `history`.
    /// Unseen characters have probability 0.
    pub fn prob(&self, history: &str, next: Option<char>) -> f64 {
        let dist = self.distribution(history);
        match next {
            None => dist[self.chars.len()],
            Some(c) => match self.char_ids.get(&c) {
                Some(&id) => dist[(id - FIRST_CHAR) as usize],
                None => 0.0,
            },
        }
    }

    /// Entropy (bits) of the next symbol after `history`.
    pub fn entropy(&self, history: &str) -> f64 {
        entropy_bits(&self.distribution(history))
    }

    pub fn save<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{MAGIC}\t{FORMAT_VERSION}")?;
        writeln!(sink, "direction\t{}", self.direction)?;
        writeln!(sink, "order\t{}", self.order)?;
        writeln!(sink, "smoothing\t{}", self.smoothing)?;
        writeln!(
            sink,
            "alphabet\t{}",
            self.chars.iter().map(char::to_string).collect::<Vec<_>>().join(" ")
        )?;
        writeln!(sink, "[counts]")?;
        let mut lines: Vec<String> = Vec::new();
        for (ctx, cc) in &self.counts {
            let ctx = ctx.iter().map(|&s| self.symbol_name(s)).collect::<Vec<_>>().join(" ");
            for (&s, &c) in &cc.next {
                lines.push(format!("{ctx}\t{}\t{c}", self.symbol_name(s)));
            }
        }
        lines.sort();
        for l in lines {
            writeln!(sink, "{l}")?;
        }
        writeln!(sink, "[end]")?;
        sink.flush()
    }

    fn symbol_name(&self, id: u32) -> String {
        match id {
            BOW => "<s>".into(),
            EOW => "</s>".into(),
            UNK => "<unk>".into(),
            _ => self.chars[(id - FIRST_CHAR) as usize].to_string(),
        }
    }

    fn symbol_id(&self, name: &str) -> Option<u32> {
        match name {
            "<s>" => Some(BOW),
            "</s>" => Some(EOW),
            "<unk>" => Some(UNK),
            _ => {
                let mut chars = name.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => self.char_ids.get(&c).copied(),
                    _ => None,
                }
            }
        }
    }

    pub fn load<R: BufRead>(source: R) -> Result<Self, LmError> {
        let mut lines = source.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String), LmError> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(LmError::Malformed {
                    line: 0,
                    message: format!("truncated: expected {what}"),
                }),
            }
        };
        let malformed = |line: usize, message: String| LmError::Malformed { line, message };
        let mut header = |key: &str| -> Result<(usize, String), LmError> {
            let (n, l) = next(key)?;
            match l.split_once('\t') {
                Some((k, v)) if k == key => Ok((n, v.to_string())),
                _ => Err(malformed(n, format!("expected `{key}` header"))),
            }
        };
        let (_, version) = header(MAGIC)?;
        if version != FORMAT_VERSION.to_string() {
            return Err(LmError::Version(version));
        }
        let (n, direction) = header("direction")?;
        let direction: Direction = direction.parse().map_err(|e| malformed(n, e))?;
        let (n, order) = header("order")?;
        let order: usize = order
            .parse()
            .ok()
            .filter(|&o| o >= 1)
            .ok_or_else(|| malformed(n, format!("bad order {order:?}")))?;
        let (n, smoothing) = header("smoothing")?;
        let smoothing: Smoothing = smoothing.parse().map_err(|e| malformed(n, e))?;
        let (n, alphabet) = header("alphabet")?;
        let mut chars = Vec::new();
        for tok in alphabet.split(' ').filter(|t| !t.is_empty()) {
            let mut it = tok.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(malformed(n, format!("bad alphabet symbol {tok:?}"))),
            }
        }
        let mut lm = Self::empty(direction, order, smoothing, chars);

        let (n, marker) = next("[counts]")?;
        if marker != "[counts]" {
            return Err(malformed(n, "expected [counts]".into()));
        }
        loop {
            let (n, line) = next("[end]")?;
            if line == "[end]" {
                break;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [ctx, sym, count] = fields[..] else {
                return Err(malformed(n, "expected context, symbol, count".into()));
            };
            let ctx: Vec<u32> = ctx
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| lm.symbol_id(t))
                .collect::<Option<_>>()
                .ok_or_else(|| malformed(n, format!("bad context {ctx:?}")))?;
            if ctx.len() >= order {
                return Err(malformed(n, "context longer than order - 1".into()));
            }
            let sym = lm
                .symbol_id(sym)
                .filter(|&s| s != BOW && s != UNK)
                .ok_or_else(|| malformed(n, format!("bad symbol {sym:?}")))?;
            let count: u64 = count
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| malformed(n, format!("bad count {count:?}")))?;
            let entry = lm.counts.entry(ctx).or_default();
            entry.total += count;
            entry.next.insert(sym, count);
        }
        Ok(lm)
    }
}

/// Left entropies from the forward model and right entropies from the
/// backward model at every gap of `word`.
pub fn entropy_profile(fwd: &CharLm, bwd: &CharLm, word: &str) -> EntropyProfile {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let mut left = Vec::with_capacity(n.saturating_sub(1));
    let mut right = Vec::with_capacity(n.saturating_sub(1));
    for g in 1..n {
        let prefix: String = chars[..g].iter().collect();
        let reversed_suffix: String = chars[g..].iter().rev().collect();
        left.push(fwd.entropy(&prefix));
        right.push(bwd.entropy(&reversed_suffix));
    }
    EntropyProfile {
        word: word.to_string(),
        left,
        right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn add_k_hand_count() {
        // Alphabet {a, b} plus end-of-word gives 3 outcomes; "a" is seen once,
        // followed by "b".
        let lm = CharLm::train(&["ab"], 2, Direction::Forward, Smoothing::AddK(1.0)).unwrap();
        assert_eq!(lm.num_outcomes(), 3);
        assert!((lm.prob("a", Some('b')) - 2.0 / 4.0).abs() < 1e-15);
        assert!((lm.prob("a", Some('a')) - 1.0 / 4.0).abs() < 1e-15);
        assert!((lm.prob("", Some('a')) - 2.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn order_one_is_context_free() {
        let lm = CharLm::train(&["aab", "b"], 1, Direction::Forward, Smoothing::AddK(0.5)).unwrap();
        assert_eq!(lm.distribution(""), lm.distribution("ab"));
        // counts: a 2, b 2, </s> 2, total 6
        assert!((lm.prob("xyz", Some('a')) - 2.5 / 7.5).abs() < 1e-15);
    }

    #[test]
    fn backward_is_forward_on_reversed() {
        let words = ["abc", "abd", "bcd"];
        let reversed: Vec<String> = words.iter().map(|w| w.chars().rev().collect()).collect();
        for smoothing in [Smoothing::AddK(0.1), Smoothing::WittenBell] {
            let bwd = CharLm::train(&words, 3, Direction::Backward, smoothing).unwrap();
            let fwd = CharLm::train(&reversed, 3, Direction::Forward, smoothing).unwrap();
            assert_eq!(bwd.counts, fwd.counts);
            for ctx in ["", "d", "dc", "cba", "zz"] {
                assert_eq!(bwd.distribution(ctx), fwd.distribution(ctx));
            }
        }
    }

    #[test]
    fn entropy_cases() {
        assert!((entropy_bits(&[0.25; 4]) - 2.0).abs() < 1e-15);
        assert_eq!(entropy_bits(&[0.0, 1.0, 0.0]), 0.0);
        assert!((entropy_bits(&[0.5, 0.25, 0.25]) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn unseen_context_is_uniform_under_add_k() {
        let lm = CharLm::train(&["abc"], 2, Direction::Forward, Smoothing::AddK(0.1)).unwrap();
        assert!((lm.entropy("q") - (4f64).log2()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let empty: [&str; 0] = [];
        assert!(matches!(
            CharLm::train(&empty, 2, Direction::Forward, Smoothing::default()),
            Err(LmError::EmptyCorpus)
        ));
        assert!(matches!(
            CharLm::train(&["a"], 0, Direction::Forward, Smoothing::default()),
            Err(LmError::ZeroOrder)
        ));
        assert!("addk:0".parse::<Smoothing>().is_err());
        assert!("kn".parse::<Smoothing>().is_err());
        assert_eq!("addk:0.25".parse::<Smoothing>(), Ok(Smoothing::AddK(0.25)));
        assert_eq!("wb".parse::<Smoothing>(), Ok(Smoothing::WittenBell));
    }

    #[test]
    fn profile_shape_and_values() {
        let words = ["ngezinkonzo", "abantu", "izinto", "konzo"];
        let fwd = CharLm::train(&words, 3, Direction::Forward, Smoothing::default()).unwrap();
        let bwd = CharLm::train(&words, 3, Direction::Backward, Smoothing::default()).unwrap();
        let p = entropy_profile(&fwd, &bwd, "ab");
        assert_eq!((p.left.len(), p.right.len()), (1, 1));
        let p = entropy_profile(&fwd, &bwd, "izinkonzo");
        assert_eq!(p.num_gaps(), 8);
        assert_eq!(p.left[2], fwd.entropy("izi"));
        assert_eq!(p.right[2], bwd.entropy("oznokn"));
    }

    #[test]
    fn constant_word_gives_constant_profile() {
        let fwd = CharLm::train(&["aaaa", "ab"], 2, Direction::Forward, Smoothing::default()).unwrap();
        let bwd = CharLm::train(&["aaaa", "ab"], 2, Direction::Backward, Smoothing::default()).unwrap();
        let p = entropy_profile(&fwd, &bwd, "aaaaa");
        assert!(p.left.windows(2).all(|w| w[0] == w[1]));
        assert!(p.right.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn save_load_round_trip() {
        for smoothing in [Smoothing::AddK(0.1), Smoothing::WittenBell] {
            let lm = CharLm::train(&["ngezinkonzo", "abantu"], 4, Direction::Backward, smoothing).unwrap();
            let mut buf = Vec::new();
            lm.save(&mut buf).unwrap();
            let loaded = CharLm::load(&buf[..]).unwrap();
            assert_eq!(loaded, lm);
            let mut again = Vec::new();
            loaded.save(&mut again).unwrap();
            assert_eq!(again, buf);
        }
        assert!(CharLm::load(&b"morphseg-charlm\t2\n"[..]).is_err());
        assert!(CharLm::load(&b"morphseg-charlm\t1\ndirection\tforward\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn distributions_normalize(
            words in proptest::collection::vec("[abcde]{1,7}", 1..15),
            ctx in "[abcdefz]{0,6}",
            order in 1usize..5,
            wb in any::<bool>(),
        ) {
            let smoothing = if wb { Smoothing::WittenBell } else { Smoothing::AddK(0.1) };
            for dir in [Direction::Forward, Direction::Backward] {
                let lm = CharLm::train(&words, order, dir, smoothing).unwrap();
                let d = lm.distribution(&ctx);
                prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(d.iter().all(|&p| p > 0.0));
                let h = lm.entropy(&ctx);
                prop_assert!(h >= 0.0 && h <= (lm.num_outcomes() as f64).log2() + 1e-12);
            }
        }
    }
}
