//! Per-position feature templates.
//!
//! Template version 1 emits, for position `i`:
//! - `bias`
//! - `L{n}:{gram}` for every n-gram (n = 1..=6) ending at `i`
//! - `R{n}:{gram}` for every n-gram (n = 1..=6) starting at `i`
//! - `vowel` or `consonant` for alphabetic characters
//! - `upper` or `lower` for cased characters
//!
//! Grams may run one position past either end of the word, where the
//! sentinels `^` and `$` stand in; longer overhangs are not emitted.

use std::collections::HashMap;

pub const TEMPLATE_VERSION: u32 = 1;
pub const MAX_NGRAM: usize = 6;
pub const BEGIN_SENTINEL: char = '^';
pub const END_SENTINEL: char = '$';

pub fn is_vowel(c: char) -> bool {
    matches!(c.to_lowercase().next(), Some('a' | 'e' | 'i' | 'o' | 'u'))
}

/// Feature keys for position `i` of `word` (character offset).
pub fn extract_features(word: &str, i: usize) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    features_at(&chars, i)
}

pub(crate) fn features_at(chars: &[char], i: usize) -> Vec<String> {
    assert!(i < chars.len(), "position {i} out of range for length {}", chars.len());
    let n_chars = chars.len();
    let mut keys = Vec::with_capacity(2 + 2 * MAX_NGRAM + 2);
    keys.push("bias".to_string());

    for n in 1..=MAX_NGRAM {
        // chars[i + 1 - n ..= i], allowing one begin sentinel
        if n > i + 2 {
            break;
        }
        let mut key = format!("L{n}:");
        if n == i + 2 {
            key.push(BEGIN_SENTINEL);
            key.extend(&chars[..=i]);
        } else {
            key.extend(&chars[i + 1 - n..=i]);
        }
        keys.push(key);
    }
    for n in 1..=MAX_NGRAM {
        // chars[i .. i + n], allowing one end sentinel
        if i + n > n_chars + 1 {
            break;
        }
        let mut key = format!("R{n}:");
        if i + n == n_chars + 1 {
            key.extend(&chars[i..]);
            key.push(END_SENTINEL);
        } else {
            key.extend(&chars[i..i + n]);
        }
        keys.push(key);
    }

    let c = chars[i];
    if c.is_alphabetic() {
        keys.push(if is_vowel(c) { "vowel" } else { "consonant" }.to_string());
    }
    if c.is_uppercase() {
        keys.push("upper".to_string());
    } else if c.is_lowercase() {
        keys.push("lower".to_string());
    }
    keys
}

/// Interned feature keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVocab {
    keys: Vec<String>,
    ids: HashMap<String, u32>,
}

impl FeatureVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn intern(&mut self, key: &str) -> u32 {
        if let Some(&id) = self.ids.get(key) {
            return id;
        }
        let id = u32::try_from(self.keys.len()).expect("feature vocabulary exceeds u32");
        self.keys.push(key.to_string());
        self.ids.insert(key.to_string(), id);
        id
    }

    pub fn get(&self, key: &str) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: u32) -> &str {
        &self.keys[id as usize]
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    /// Known feature ids at every position of `word`, in template order.
    pub fn lookup_word(&self, chars: &[char]) -> Vec<Vec<u32>> {
        (0..chars.len())
            .map(|i| features_at(chars, i).iter().filter_map(|k| self.get(k)).collect())
            .collect()
    }

    pub(crate) fn intern_word(&mut self, chars: &[char]) -> Vec<Vec<u32>> {
        (0..chars.len())
            .map(|i| features_at(chars, i).iter().map(|k| self.intern(k)).collect())
            .collect()
    }
}

impl FromIterator<String> for FeatureVocab {
    fn from_iter<T: IntoIterator<Item = String>>(iter: T) -> Self {
        let mut vocab = Self::new();
        for key in iter {
            vocab.intern(&key);
        }
        vocab
    }
}
