//! Log-space forward, forward-backward and Viterbi over the 4-label chain.

use crate::labels::{Label, LabelSeq};

const L: usize = Label::COUNT;

/// Transition scores. Structurally illegal moves hold `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transitions {
    pub start: [f64; L],
    pub pair: [[f64; L]; L],
    pub end: [f64; L],
}

impl Transitions {
    /// Zero on every legal move.
    pub fn zeros() -> Self {
        let mut t = Self {
            start: [f64::NEG_INFINITY; L],
            pair: [[f64::NEG_INFINITY; L]; L],
            end: [f64::NEG_INFINITY; L],
        };
        for slot in Self::legal_slots() {
            *t.slot_mut(slot) = 0.0;
        }
        t
    }

    /// Fixed enumeration of the 12 legal moves, used for parameter layout and
    /// serialization.
    pub fn legal_slots() -> impl Iterator<Item = TransitionSlot> {
        let start = Label::ALL
            .into_iter()
            .filter(|l| l.can_start())
            .map(TransitionSlot::Start);
        let pair = Label::ALL.into_iter().flat_map(|a| {
            Label::ALL
                .into_iter()
                .filter(move |&b| a.can_precede(b))
                .map(move |b| TransitionSlot::Pair(a, b))
        });
        let end = Label::ALL.into_iter().filter(|l| l.can_end()).map(TransitionSlot::End);
        start.chain(pair).chain(end)
    }

    pub fn slot(&self, slot: TransitionSlot) -> f64 {
        match slot {
            TransitionSlot::Start(b) => self.start[b.index()],
            TransitionSlot::Pair(a, b) => self.pair[a.index()][b.index()],
            TransitionSlot::End(a) => self.end[a.index()],
        }
    }

    pub fn slot_mut(&mut self, slot: TransitionSlot) -> &mut f64 {
        match slot {
            TransitionSlot::Start(b) => &mut self.start[b.index()],
            TransitionSlot::Pair(a, b) => &mut self.pair[a.index()][b.index()],
            TransitionSlot::End(a) => &mut self.end[a.index()],
        }
    }
}

pub const NUM_TRANSITION_PARAMS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionSlot {
    Start(Label),
    Pair(Label, Label),
    End(Label),
}

impl TransitionSlot {
    pub fn is_legal(self) -> bool {
        match self {
            TransitionSlot::Start(b) => b.can_start(),
            TransitionSlot::Pair(a, b) => a.can_precede(b),
            TransitionSlot::End(a) => a.can_end(),
        }
    }
}

/// Emission scores for one word: `emit[i][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub emit: Vec<[f64; L]>,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.emit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emit.is_empty()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn log_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, log_add)
}

pub fn score(lattice: &Lattice, trans: &Transitions, labels: &[Label]) -> f64 {
    if labels.len() != lattice.len() || labels.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mut s = trans.start[labels[0].index()];
    for (i, &y) in labels.iter().enumerate() {
        s += lattice.emit[i][y.index()];
        if i > 0 {
            s += trans.pair[labels[i - 1].index()][y.index()];
        }
    }
    s + trans.end[labels[labels.len() - 1].index()]
}

/// `alpha[i][y]`: log-sum of scores of all prefixes ending with label `y` at
/// position `i`, emission at `i` included.
fn forward(lattice: &Lattice, trans: &Transitions) -> Vec<[f64; L]> {
    let n = lattice.len();
    let mut alpha = vec![[f64::NEG_INFINITY; L]; n];
    for y in 0..L {
        alpha[0][y] = trans.start[y] + lattice.emit[0][y];
    }
    for i in 1..n {
        for y in 0..L {
            let incoming = log_sum((0..L).map(|x| alpha[i - 1][x] + trans.pair[x][y]));
            alpha[i][y] = incoming + lattice.emit[i][y];
        }
    }
    alpha
}

/// `beta[i][y]`: log-sum of scores of all suffixes after position `i` given
/// label `y` at `i`, END transition included, emission at `i` excluded.
fn backward(lattice: &Lattice, trans: &Transitions) -> Vec<[f64; L]> {
    let n = lattice.len();
    let mut beta = vec![[f64::NEG_INFINITY; L]; n];
    beta[n - 1] = trans.end;
    for i in (0..n - 1).rev() {
        for x in 0..L {
            beta[i][x] = log_sum((0..L).map(|y| trans.pair[x][y] + lattice.emit[i + 1][y] + beta[i + 1][y]));
        }
    }
    beta
}

pub fn log_partition(lattice: &Lattice, trans: &Transitions) -> f64 {
    if lattice.is_empty() {
        return 0.0;
    }
    let alpha = forward(lattice, trans);
    log_sum((0..L).map(|y| alpha[lattice.len() - 1][y] + trans.end[y]))
}

/// Posterior label and adjacent-pair probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub log_partition: f64,
    /// `node[i][y] = P(y_i = y)`.
    pub node: Vec<[f64; L]>,
    /// `edge[i][x][y] = P(y_i = x, y_{i+1} = y)`, length `n - 1`.
    pub edge: Vec<[[f64; L]; L]>,
}

pub fn marginals(lattice: &Lattice, trans: &Transitions) -> Marginals {
    let n = lattice.len();
    assert!(n > 0, "marginals of an empty lattice");
    let alpha = forward(lattice, trans);
    let beta = backward(lattice, trans);
    let log_z = log_sum((0..L).map(|y| alpha[n - 1][y] + trans.end[y]));
    let node = (0..n)
        .map(|i| {
            let mut row = [0.0; L];
            for y in 0..L {
                row[y] = (alpha[i][y] + beta[i][y] - log_z).exp();
            }
            row
        })
        .collect();
    let edge = (0..n - 1)
        .map(|i| {
            let mut m = [[0.0; L]; L];
            for x in 0..L {
                for y in 0..L {
                    m[x][y] = (alpha[i][x] + trans.pair[x][y] + lattice.emit[i + 1][y] + beta[i + 1][y] - log_z).exp();
                }
            }
            m
        })
        .collect();
    Marginals {
        log_partition: log_z,
        node,
        edge,
    }
}

/// Highest-scoring label sequence and its score.
///
/// Ties are broken toward the lexicographically smallest sequence under
/// `B < E < M < S`: best suffix scores are computed right to left, then the
/// path is chosen left to right taking the smallest label that attains the
/// maximum at each step.
pub fn viterbi(lattice: &Lattice, trans: &Transitions) -> (LabelSeq, f64) {
    let n = lattice.len();
    assert!(n > 0, "viterbi on an empty lattice");
    // best[i][y]: max score of positions i.. given y at i, emission at i
    // and END included.
    let mut best = vec![[f64::NEG_INFINITY; L]; n];
    for y in 0..L {
        best[n - 1][y] = lattice.emit[n - 1][y] + trans.end[y];
    }
    for i in (0..n - 1).rev() {
        for x in 0..L {
            let tail = (0..L)
                .map(|y| trans.pair[x][y] + best[i + 1][y])
                .fold(f64::NEG_INFINITY, f64::max);
            best[i][x] = lattice.emit[i][x] + tail;
        }
    }

    let mut labels = Vec::with_capacity(n);
    let pick = |options: [f64; L]| {
        let max = options.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y = options.iter().position(|&v| v == max).expect("non-empty");
        (y, max)
    };
    let first: [f64; L] = std::array::from_fn(|y| trans.start[y] + best[0][y]);
    let (mut prev, total) = pick(first);
    labels.push(Label::ALL[prev]);
    for i in 1..n {
        let options: [f64; L] = std::array::from_fn(|y| trans.pair[prev][y] + best[i][y]);
        prev = pick(options).0;
        labels.push(Label::ALL[prev]);
    }
    (LabelSeq(labels), total)
}
